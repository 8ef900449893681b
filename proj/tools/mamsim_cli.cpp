// Command-line front end: run, combine, summary, plot-data, export, validate.
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mamsim/config.hpp"
#include "mamsim/montecarlo.hpp"
#include "mamsim/report.hpp"
#include "mamsim/shard.hpp"

using namespace mamsim;

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("failed to write '" + path + "'");
}

std::string default_shard_name(const std::string& spec_path) {
  auto slash = spec_path.find_last_of('/');
  std::string base = slash == std::string::npos ? spec_path : spec_path.substr(slash + 1);
  auto dot = base.rfind('.');
  if (dot != std::string::npos && dot > 0) base = base.substr(0, dot);
  return base + ".shard";
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo simulator for Bayesian adaptive multi-arm multi-stage trials"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "simulate a design and write a shard");
  std::string spec_path, run_out, seed_text;
  std::optional<std::uint64_t> replicates;
  std::optional<int> workers, extended;
  bool quiet = false;
  run->add_option("spec", spec_path, "design JSON")->required();
  auto* seeds_opt = run->add_option("--seeds", seed_text, "seed range a..b or list a,b,c");
  run->add_option("--replicates", replicates, "use seeds 1..R")->excludes(seeds_opt);
  run->add_option("--workers", workers, "worker threads (overrides MAMSIM_WORKERS)");
  run->add_option("--out", run_out, "output shard (default <spec>.shard)");
  run->add_option("--extended", extended, "storage depth 0, 1 or 2")->check(CLI::Range(0, 2));
  run->add_flag("--quiet", quiet, "no progress line on stderr");

  // combine
  auto* combine = app.add_subcommand("combine", "merge disjoint shards of one design");
  std::vector<std::string> shard_paths;
  std::string combine_out;
  combine->add_option("shards", shard_paths, "input shards")->required();
  combine->add_option("--out", combine_out, "combined shard")->required();

  // summary
  auto* summary = app.add_subcommand("summary", "print operating characteristics");
  std::string summary_in;
  bool full = false;
  summary->add_option("shard", summary_in)->required();
  summary->add_flag("--full", full, "early/last split, sample sizes, decision table");

  // plot-data
  auto* plot = app.add_subcommand("plot-data", "write plot-ready CSV");
  std::string plot_in, plot_out, plot_kind;
  plot->add_option("shard", plot_in)->required();
  plot->add_option("--kind", plot_kind)->required()->check(CLI::IsMember({"estimates", "size"}));
  plot->add_option("--out", plot_out)->required();

  // export
  auto* exp = app.add_subcommand("export", "write a shard as JSON");
  std::string export_in, export_out;
  exp->add_option("shard", export_in)->required();
  exp->add_option("--out", export_out, "JSON file (default stdout)");

  // validate
  auto* val = app.add_subcommand("validate", "check a design and print its canonical form");
  std::string validate_in;
  val->add_option("spec", validate_in)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      TrialSpec spec = load_spec_file(spec_path);
      if (!seed_text.empty()) spec.seeds = parse_seed_list(seed_text);
      if (replicates) spec.seeds = seeds_from_count(*replicates);
      if (extended) spec.extended = *extended;
      const ValidatedSpec validated = validate_spec(std::move(spec));
      const int k = resolve_workers(workers);
      if (!quiet) {
        std::cerr << "running " << validated.spec().seeds.size() << " replicates on " << k
                  << " workers\n";
      }
      BatchResult batch = run_batch(validated, validated.spec().seeds, k);
      batch.created_unix = std::chrono::duration_cast<std::chrono::seconds>(
                               std::chrono::system_clock::now().time_since_epoch())
                               .count();
      const std::string out = run_out.empty() ? default_shard_name(spec_path) : run_out;
      write_shard_file(out, batch);
      if (!quiet) std::cerr << "wrote " << out << " (fingerprint " << hex(batch.fingerprint) << ")\n";
    } else if (*combine) {
      std::vector<BatchResult> shards;
      for (const auto& p : shard_paths) shards.push_back(read_shard_file(p));
      BatchResult merged = combine_shards(shards);
      write_shard_file(combine_out, merged);
      std::cerr << "combined " << merged.seeds.size() << " replicates into " << combine_out << "\n";
    } else if (*summary) {
      std::cout << summarize(read_shard_file(summary_in), full).text;
    } else if (*plot) {
      const PlotKind kind = plot_kind == "size" ? PlotKind::size : PlotKind::estimates;
      write_text(plot_out, emit_plot_data(read_shard_file(plot_in), kind));
    } else if (*exp) {
      const std::string text = shard_to_json(read_shard_file(export_in)).dump(1) + "\n";
      if (export_out.empty()) {
        std::cout << text;
      } else {
        write_text(export_out, text);
      }
    } else if (*val) {
      const ValidatedSpec v = validate_spec(load_spec_file(validate_in));
      std::cout << "fingerprint " << hex(v.fingerprint()) << "\n" << v.canonical() << "\n";
    }
  } catch (const SpecError& e) {
    std::cerr << "error: invalid design\n";
    for (const auto& p : e.problems()) std::cerr << "  - " << p << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
