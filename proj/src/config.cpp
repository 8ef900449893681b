#include "mamsim/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "mamsim/datagen.hpp"
#include "mamsim/family.hpp"
#include "mamsim/rng.hpp"
#include "mamsim/rules.hpp"

namespace mamsim {

using nlohmann::json;

std::string to_string(Family f) {
  switch (f) {
    case Family::gaussian: return "gaussian";
    case Family::binomial: return "binomial";
    case Family::poisson: return "poisson";
    default: return "nbinomial";
  }
}

std::string to_string(Link l) {
  switch (l) {
    case Link::identity: return "identity";
    case Link::logit: return "logit";
    default: return "log";
  }
}

std::string to_string(Direction d) { return d == Direction::greater ? "greater" : "less"; }

std::string to_string(AllocationMethod a) {
  return a == AllocationMethod::balanced ? "balanced" : "simple";
}

std::string to_string(NuisanceMode n) { return n == NuisanceMode::fixed ? "fixed" : "moments"; }

std::vector<std::string> ModelSpec::covariate_columns() const {
  std::vector<std::string> cols;
  for (const auto& c : covariates) cols.insert(cols.end(), c.names.begin(), c.names.end());
  return cols;
}

std::vector<int> TrialSpec::schedule() const {
  std::vector<int> s = interim_recruited;
  s.push_back(n_max);
  return s;
}

namespace {

std::string join_lines(const std::vector<std::string>& problems) {
  std::string msg = "invalid trial specification:";
  for (const auto& p : problems) msg += "\n  - " + p;
  return msg;
}

}  // namespace

SpecError::SpecError(std::vector<std::string> problems)
    : std::runtime_error(join_lines(problems)), problems_(std::move(problems)) {}

namespace {

// Collects problems while walking a document so that all of them are
// reported together.
class Reader {
 public:
  std::vector<std::string> problems;

  void allow_only(const json& obj, const std::string& where,
                  std::initializer_list<const char*> keys) {
    for (const auto& [key, _] : obj.items()) {
      bool known = false;
      for (const char* k : keys) known = known || key == k;
      if (!known) problems.push_back("unknown field " + where + key);
    }
  }

  const json* require(const json& obj, const std::string& where, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) {
      problems.push_back("missing required key " + where + key);
      return nullptr;
    }
    return &*it;
  }

  template <class T>
  std::optional<T> get(const json& value, const std::string& path) {
    try {
      return value.get<T>();
    } catch (const json::exception&) {
      problems.push_back(path + ": wrong type (" + std::string(value.type_name()) + ")");
      return std::nullopt;
    }
  }

  ParamMap params(const json& value, const std::string& path) {
    ParamMap out;
    if (!value.is_object()) {
      problems.push_back(path + ": expected an object of numbers");
      return out;
    }
    for (const auto& [k, v] : value.items()) {
      if (!v.is_number()) {
        problems.push_back(path + "/" + k + ": expected a number");
      } else {
        out[k] = v.get<double>();
      }
    }
    return out;
  }

  template <class E>
  std::optional<E> enumeration(const json& value, const std::string& path,
                               std::initializer_list<std::pair<const char*, E>> options) {
    auto s = get<std::string>(value, path);
    if (!s) return std::nullopt;
    for (const auto& [name, e] : options) {
      if (*s == name) return e;
    }
    problems.push_back(path + ": unknown value '" + *s + "'");
    return std::nullopt;
  }
};

std::optional<Direction> parse_direction(Reader& r, const json& v, const std::string& path) {
  return r.enumeration<Direction>(v, path,
                                  {{"greater", Direction::greater}, {"less", Direction::less}});
}

ModelSpec parse_model(Reader& r, const json& m) {
  ModelSpec model;
  if (!m.is_object()) {
    r.problems.push_back("/model: expected an object");
    return model;
  }
  r.allow_only(m, "/model/",
               {"response", "treatment", "arms", "covariates", "family", "link", "nuisance",
                "allocation"});
  if (auto it = m.find("response"); it != m.end()) {
    if (auto s = r.get<std::string>(*it, "/model/response")) model.response_name = *s;
  }
  if (auto it = m.find("treatment"); it != m.end()) {
    if (auto s = r.get<std::string>(*it, "/model/treatment")) model.treatment_name = *s;
  }
  if (auto v = r.require(m, "/model/", "arms")) {
    if (auto a = r.get<std::vector<std::string>>(*v, "/model/arms")) model.arm_names = *a;
  }
  if (auto v = r.require(m, "/model/", "family")) {
    if (auto f = r.enumeration<Family>(*v, "/model/family",
                                       {{"gaussian", Family::gaussian},
                                        {"binomial", Family::binomial},
                                        {"poisson", Family::poisson},
                                        {"nbinomial", Family::nbinomial}})) {
      model.family = *f;
    }
  }
  if (auto v = r.require(m, "/model/", "link")) {
    if (auto l = r.enumeration<Link>(
            *v, "/model/link",
            {{"identity", Link::identity}, {"logit", Link::logit}, {"log", Link::log}})) {
      model.link = *l;
    }
  }
  if (auto it = m.find("nuisance"); it != m.end()) model.nuisance = r.params(*it, "/model/nuisance");
  if (auto it = m.find("allocation"); it != m.end()) {
    if (auto a = r.enumeration<AllocationMethod>(
            *it, "/model/allocation",
            {{"balanced", AllocationMethod::balanced}, {"simple", AllocationMethod::simple}})) {
      model.allocation = *a;
    }
  }
  if (auto it = m.find("covariates"); it != m.end()) {
    if (!it->is_array()) {
      r.problems.push_back("/model/covariates: expected an array");
    } else {
      for (std::size_t i = 0; i < it->size(); ++i) {
        const json& c = (*it)[i];
        const std::string path = "/model/covariates/" + std::to_string(i);
        if (!c.is_object()) {
          r.problems.push_back(path + ": expected an object");
          continue;
        }
        r.allow_only(c, path + "/", {"name", "names", "generator", "params"});
        CovariateSpec cov;
        if (auto n = c.find("name"); n != c.end()) {
          if (auto s = r.get<std::string>(*n, path + "/name")) cov.names = {*s};
        } else if (auto ns = c.find("names"); ns != c.end()) {
          if (auto s = r.get<std::vector<std::string>>(*ns, path + "/names")) cov.names = *s;
        } else {
          r.problems.push_back("missing required key " + path + "/name");
        }
        if (auto g = r.require(c, path + "/", "generator")) {
          if (auto s = r.get<std::string>(*g, path + "/generator")) cov.generator = *s;
        }
        if (auto p = c.find("params"); p != c.end()) cov.params = r.params(*p, path + "/params");
        model.covariates.push_back(std::move(cov));
      }
    }
  }
  return model;
}

std::optional<RuleSpec> parse_rule(Reader& r, const json& v, const std::string& key,
                                   RuleKind kind) {
  const std::string path = "/" + key;
  if (!v.is_object()) {
    r.problems.push_back(path + ": expected an object");
    return std::nullopt;
  }
  r.allow_only(v, path + "/", {"rule", "params"});
  RuleSpec rule;
  if (auto f = r.require(v, path + "/", "rule")) {
    if (auto s = r.get<std::string>(*f, path + "/rule")) rule.family = *s;
  }
  if (auto p = v.find("params"); p != v.end()) rule.params = r.params(*p, path + "/params");
  if (!rule.family.empty()) {
    for (auto& p : RuleRegistry::builtin().check(kind, rule)) r.problems.push_back(p);
  }
  return rule;
}

std::optional<double> delta_entry(Reader& r, const json& v, const std::string& path) {
  if (v.is_null()) return std::nullopt;
  if (!v.is_number()) {
    r.problems.push_back(path + ": expected a number or null");
    return std::nullopt;
  }
  return v.get<double>();
}

// Accepted shapes: scalar/null (all targets, all looks); array over looks
// (shared by all targets); array over targets of arrays over looks.
DeltaTable parse_delta(Reader& r, const json* v, const std::string& key, std::size_t targets,
                       std::size_t looks, double fallback) {
  DeltaTable table(targets, std::vector<std::optional<double>>(looks, fallback));
  if (!v) return table;
  const std::string path = "/" + key;
  if (!v->is_array()) {
    auto d = delta_entry(r, *v, path);
    for (auto& row : table) std::fill(row.begin(), row.end(), d);
    return table;
  }
  const bool nested = !v->empty() && (*v)[0].is_array();
  if (!nested) {
    if (v->size() != looks) {
      r.problems.push_back(path + ": expected " + std::to_string(looks) +
                           " entries (one per look), got " + std::to_string(v->size()));
      return table;
    }
    for (std::size_t j = 0; j < looks; ++j) {
      auto d = delta_entry(r, (*v)[j], path + "/" + std::to_string(j));
      for (auto& row : table) row[j] = d;
    }
    return table;
  }
  if (v->size() != targets) {
    r.problems.push_back(path + ": expected " + std::to_string(targets) +
                         " rows (one per target), got " + std::to_string(v->size()));
    return table;
  }
  for (std::size_t t = 0; t < targets; ++t) {
    const json& row = (*v)[t];
    const std::string rp = path + "/" + std::to_string(t);
    if (!row.is_array() || row.size() != looks) {
      r.problems.push_back(rp + ": expected " + std::to_string(looks) + " entries (one per look)");
      continue;
    }
    for (std::size_t j = 0; j < looks; ++j) {
      table[t][j] = delta_entry(r, row[j], rp + "/" + std::to_string(j));
    }
  }
  return table;
}

std::vector<double> scalar_or_vector(Reader& r, const json& v, const std::string& path,
                                     std::size_t n) {
  if (v.is_number()) return std::vector<double>(n, v.get<double>());
  auto vec = r.get<std::vector<double>>(v, path);
  if (!vec) return {};
  if (vec->size() != n) {
    r.problems.push_back(path + ": expected " + std::to_string(n) + " entries");
    return {};
  }
  return *vec;
}

}  // namespace

TrialSpec parse_spec(const json& doc) {
  Reader r;
  TrialSpec spec;
  if (!doc.is_object()) throw SpecError({"document root must be a JSON object"});

  r.allow_only(doc, "/",
               {"model", "beta", "targets", "alternative", "n_max", "interim", "prob0",
                "delta_eff", "delta_fut", "delta_rar", "eff_arm", "fut_arm", "eff_trial",
                "fut_trial", "rar", "h0", "replicates", "seeds", "extended", "prior",
                "nuisance_estimation"});

  if (auto v = r.require(doc, "/", "model")) spec.model = parse_model(r, *v);
  if (auto v = r.require(doc, "/", "beta")) {
    if (auto b = r.get<std::vector<double>>(*v, "/beta")) spec.beta_true = *b;
  }
  if (auto v = r.require(doc, "/", "targets")) {
    if (auto t = r.get<std::vector<std::size_t>>(*v, "/targets")) spec.targets = *t;
  }
  if (auto it = doc.find("alternative"); it != doc.end()) {
    if (it->is_array()) {
      for (std::size_t i = 0; i < it->size(); ++i) {
        if (auto d = parse_direction(r, (*it)[i], "/alternative/" + std::to_string(i))) {
          spec.alternative.push_back(*d);
        }
      }
    } else if (auto d = parse_direction(r, *it, "/alternative")) {
      spec.alternative.assign(spec.targets.size(), *d);
    }
  } else {
    spec.alternative.assign(spec.targets.size(), Direction::greater);
  }
  if (auto v = r.require(doc, "/", "n_max")) {
    if (auto n = r.get<int>(*v, "/n_max")) spec.n_max = *n;
  }
  if (auto v = r.require(doc, "/", "interim")) {
    if (!v->is_object()) {
      r.problems.push_back("/interim: expected an object");
    } else {
      r.allow_only(*v, "/interim/", {"recruited"});
      if (auto rec = r.require(*v, "/interim/", "recruited")) {
        if (auto n = r.get<std::vector<int>>(*rec, "/interim/recruited")) {
          spec.interim_recruited = *n;
        }
      }
    }
  }
  if (auto v = r.require(doc, "/", "prob0")) {
    if (!v->is_object()) {
      r.problems.push_back("/prob0: expected an object keyed by arm name");
    } else {
      spec.prob0.assign(spec.model.arm_names.size(), 0.0);
      for (const auto& [arm, w] : v->items()) {
        const auto pos = std::find(spec.model.arm_names.begin(), spec.model.arm_names.end(), arm);
        if (pos == spec.model.arm_names.end()) {
          r.problems.push_back("/prob0/" + arm + ": not one of /model/arms");
        } else if (!w.is_number()) {
          r.problems.push_back("/prob0/" + arm + ": expected a number");
        } else {
          spec.prob0[static_cast<std::size_t>(pos - spec.model.arm_names.begin())] = w.get<double>();
        }
      }
      if (v->size() != spec.model.arm_names.size()) {
        r.problems.push_back("/prob0: needs one weight per arm in /model/arms");
      }
    }
  }

  const std::size_t looks = spec.interim_recruited.size() + 1;
  auto find = [&](const char* key) -> const json* {
    auto it = doc.find(key);
    return it == doc.end() ? nullptr : &*it;
  };
  spec.delta_eff = parse_delta(r, find("delta_eff"), "delta_eff", spec.targets.size(), looks, 0.0);
  spec.delta_fut = parse_delta(r, find("delta_fut"), "delta_fut", spec.targets.size(), looks, 0.0);
  spec.delta_rar = parse_delta(r, find("delta_rar"), "delta_rar", spec.targets.size(), looks, 0.0);

  if (auto v = r.require(doc, "/", "eff_arm")) {
    if (auto rule = parse_rule(r, *v, "eff_arm", RuleKind::eff_arm)) spec.eff_arm = *rule;
  }
  if (auto v = r.require(doc, "/", "fut_arm")) {
    if (auto rule = parse_rule(r, *v, "fut_arm", RuleKind::fut_arm)) spec.fut_arm = *rule;
  }
  if (auto v = find("eff_trial")) {
    if (auto rule = parse_rule(r, *v, "eff_trial", RuleKind::eff_trial)) spec.eff_trial = *rule;
  }
  if (auto v = find("fut_trial")) {
    if (auto rule = parse_rule(r, *v, "fut_trial", RuleKind::fut_trial)) spec.fut_trial = *rule;
  }
  if (auto v = find("rar"); v && !v->is_null()) spec.rar = parse_rule(r, *v, "rar", RuleKind::rar);

  if (auto v = find("h0")) {
    if (auto b = r.get<bool>(*v, "/h0")) spec.h0 = *b;
  }
  if (auto v = find("extended")) {
    if (auto e = r.get<int>(*v, "/extended")) spec.extended = *e;
  }
  if (auto v = find("nuisance_estimation")) {
    if (auto n = r.enumeration<NuisanceMode>(
            *v, "/nuisance_estimation",
            {{"fixed", NuisanceMode::fixed}, {"moments", NuisanceMode::moments}})) {
      spec.nuisance_mode = *n;
    }
  }

  const json* seeds = find("seeds");
  const json* replicates = find("replicates");
  if (seeds && replicates) {
    r.problems.push_back("/seeds and /replicates are mutually exclusive");
  } else if (seeds) {
    if (auto s = r.get<std::vector<std::uint64_t>>(*seeds, "/seeds")) spec.seeds = *s;
  } else {
    std::uint64_t count = 10000;
    if (replicates) {
      if (auto c = r.get<std::uint64_t>(*replicates, "/replicates")) count = *c;
    }
    spec.seeds.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) spec.seeds[i] = i + 1;
  }

  const std::size_t p = spec.model.arm_names.size() + spec.model.covariate_columns().size();
  spec.prior = PriorSpec::weak(p);
  if (auto v = find("prior")) {
    if (!v->is_object()) {
      r.problems.push_back("/prior: expected an object");
    } else {
      r.allow_only(*v, "/prior/", {"mean", "precision"});
      if (auto it = v->find("mean"); it != v->end()) {
        spec.prior.mean = scalar_or_vector(r, *it, "/prior/mean", p);
      }
      if (auto it = v->find("precision"); it != v->end()) {
        spec.prior.precision = scalar_or_vector(r, *it, "/prior/precision", p);
      }
    }
  }

  if (!r.problems.empty()) throw SpecError(r.problems);
  return spec;
}

TrialSpec parse_spec(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw SpecError({"syntax error at byte " + std::to_string(e.byte) + ": " + e.what()});
  }
  return parse_spec(doc);
}

TrialSpec load_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError({"cannot open spec file " + path});
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  return parse_spec(std::string_view(text));
}

namespace {

json delta_json(const DeltaTable& table) {
  json rows = json::array();
  for (const auto& row : table) {
    json r = json::array();
    for (const auto& d : row) r.push_back(d ? json(*d) : json(nullptr));
    rows.push_back(std::move(r));
  }
  return rows;
}

json rule_json(const RuleSpec& rule) {
  return json{{"rule", rule.family}, {"params", json(rule.params)}};
}

bool is_one_to_r(const std::vector<std::uint64_t>& seeds) {
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (seeds[i] != i + 1) return false;
  }
  return true;
}

}  // namespace

json spec_to_json(const TrialSpec& spec) {
  json covs = json::array();
  for (const auto& c : spec.model.covariates) {
    covs.push_back({{"names", c.names}, {"generator", c.generator}, {"params", json(c.params)}});
  }
  json model = {{"response", spec.model.response_name},
                {"treatment", spec.model.treatment_name},
                {"arms", spec.model.arm_names},
                {"covariates", covs},
                {"family", to_string(spec.model.family)},
                {"link", to_string(spec.model.link)},
                {"nuisance", json(spec.model.nuisance)},
                {"allocation", to_string(spec.model.allocation)}};
  json prob0 = json::object();
  for (std::size_t a = 0; a < spec.model.arm_names.size() && a < spec.prob0.size(); ++a) {
    prob0[spec.model.arm_names[a]] = spec.prob0[a];
  }
  json alternative = json::array();
  for (auto d : spec.alternative) alternative.push_back(to_string(d));

  json doc = {{"model", model},
              {"beta", spec.beta_true},
              {"targets", spec.targets},
              {"alternative", alternative},
              {"n_max", spec.n_max},
              {"interim", {{"recruited", spec.interim_recruited}}},
              {"prob0", prob0},
              {"delta_eff", delta_json(spec.delta_eff)},
              {"delta_fut", delta_json(spec.delta_fut)},
              {"delta_rar", delta_json(spec.delta_rar)},
              {"eff_arm", rule_json(spec.eff_arm)},
              {"fut_arm", rule_json(spec.fut_arm)},
              {"eff_trial", rule_json(spec.eff_trial)},
              {"fut_trial", rule_json(spec.fut_trial)},
              {"rar", spec.rar ? rule_json(*spec.rar) : json(nullptr)},
              {"h0", spec.h0},
              {"extended", spec.extended},
              {"prior", {{"mean", spec.prior.mean}, {"precision", spec.prior.precision}}},
              {"nuisance_estimation", to_string(spec.nuisance_mode)}};
  if (is_one_to_r(spec.seeds)) {
    doc["replicates"] = spec.seeds.size();
  } else {
    doc["seeds"] = spec.seeds;
  }
  return doc;
}

std::string serialize_spec(const TrialSpec& spec) { return spec_to_json(spec).dump(2); }

ValidatedSpec validate_spec(TrialSpec spec) {
  std::vector<std::string> problems;
  auto add = [&](std::vector<std::string> more) {
    problems.insert(problems.end(), more.begin(), more.end());
  };
  const ModelSpec& model = spec.model;

  // model
  if (model.arm_names.size() < 2) problems.push_back("model needs at least 2 arms");
  {
    std::set<std::string> names(model.arm_names.begin(), model.arm_names.end());
    if (names.size() != model.arm_names.size()) problems.push_back("arm names must be distinct");
  }
  if (!supported_pair(model.family, model.link)) {
    problems.push_back("unsupported family/link pair " + to_string(model.family) + "+" +
                       to_string(model.link));
  }
  add(nuisance_problems(model.family, model.nuisance));
  for (const auto& c : model.covariates) add(covariate_problems(c));
  {
    auto cols = model.covariate_columns();
    std::set<std::string> names(cols.begin(), cols.end());
    for (const auto& a : model.arm_names) names.insert(a);
    if (names.size() != cols.size() + model.arm_names.size()) {
      problems.push_back("covariate names must be distinct from each other and from arm names");
    }
  }

  const std::size_t p = model.n_coefficients();
  if (spec.beta_true.size() != p) {
    problems.push_back("beta has " + std::to_string(spec.beta_true.size()) +
                       " entries; the model has " + std::to_string(p) + " coefficients");
  }
  for (double b : spec.beta_true) {
    if (!std::isfinite(b)) problems.push_back("beta entries must be finite");
  }

  // targets
  if (spec.targets.empty()) problems.push_back("at least one target is required");
  {
    std::set<std::size_t> seen;
    for (auto t : spec.targets) {
      if (t == 0) {
        problems.push_back("target index 0 is the intercept");
      } else if (t >= model.n_arms()) {
        problems.push_back("target index " + std::to_string(t) +
                           " is not a treatment coefficient (valid: 1.." +
                           std::to_string(model.n_arms() - 1) + ")");
      }
      if (!seen.insert(t).second) problems.push_back("target indices must be distinct");
    }
  }
  if (spec.alternative.size() != spec.targets.size()) {
    problems.push_back("alternative needs one direction per target");
  }

  // schedule
  if (spec.n_max <= 0) problems.push_back("n_max must be positive");
  if (spec.interim_recruited.empty()) {
    problems.push_back("interim.recruited needs at least the burn-in size");
  }
  for (std::size_t i = 0; i < spec.interim_recruited.size(); ++i) {
    const int v = spec.interim_recruited[i];
    if (v <= 0) problems.push_back("interim counts must be positive");
    if (i > 0 && v <= spec.interim_recruited[i - 1]) {
      problems.push_back("interim counts are not strictly increasing");
    }
  }
  if (!spec.interim_recruited.empty() && spec.interim_recruited.back() >= spec.n_max) {
    problems.push_back("interim counts must all be < n_max");
  }

  // allocation
  if (spec.prob0.size() != model.n_arms()) {
    problems.push_back("prob0 needs one weight per arm");
  } else {
    double total = 0.0;
    bool ok = true;
    for (double w : spec.prob0) {
      if (!(std::isfinite(w) && w >= 0.0)) ok = false;
      total += w;
    }
    if (!ok) problems.push_back("prob0 weights must be finite and >= 0");
    if (!(total > 0.0)) {
      problems.push_back("prob0 weights must have a positive sum");
    } else if (ok && std::abs(total - 1.0) > 1e-12) {
      // Weights already summing to one are kept so the canonical form is a fixed point.
      for (double& w : spec.prob0) w /= total;
    }
  }

  // margins
  const std::size_t looks = spec.n_looks();
  for (const auto* table : {&spec.delta_eff, &spec.delta_fut, &spec.delta_rar}) {
    bool shape_ok = table->size() == spec.targets.size();
    for (const auto& row : *table) {
      shape_ok = shape_ok && row.size() == looks;
      for (const auto& d : row) {
        if (d && !std::isfinite(*d)) problems.push_back("delta values must be finite");
      }
    }
    if (!shape_ok) problems.push_back("delta tables need one entry per target and look");
  }

  // rules
  const auto& reg = RuleRegistry::builtin();
  add(reg.check(RuleKind::eff_arm, spec.eff_arm));
  add(reg.check(RuleKind::fut_arm, spec.fut_arm));
  add(reg.check(RuleKind::eff_trial, spec.eff_trial));
  add(reg.check(RuleKind::fut_trial, spec.fut_trial));
  if (spec.rar) add(reg.check(RuleKind::rar, *spec.rar));

  // Monte Carlo controls
  if (spec.seeds.empty()) problems.push_back("at least one seed is required");
  {
    std::set<std::uint64_t> unique(spec.seeds.begin(), spec.seeds.end());
    if (unique.size() != spec.seeds.size()) problems.push_back("seed list contains duplicates");
  }
  if (spec.extended < 0 || spec.extended > 2) problems.push_back("extended must be 0, 1 or 2");

  if (spec.prior.mean.size() != p || spec.prior.precision.size() != p) {
    problems.push_back("prior needs one mean and precision per coefficient");
  }
  for (double prec : spec.prior.precision) {
    if (!(std::isfinite(prec) && prec > 0.0)) problems.push_back("prior precisions must be > 0");
  }
  for (double mean : spec.prior.mean) {
    if (!std::isfinite(mean)) problems.push_back("prior means must be finite");
  }

  if (!problems.empty()) {
    std::vector<std::string> unique;
    for (auto& msg : problems) {
      if (std::find(unique.begin(), unique.end(), msg) == unique.end()) unique.push_back(msg);
    }
    throw SpecError(std::move(unique));
  }

  ValidatedSpec out;
  json doc = spec_to_json(spec);
  doc.erase("seeds");
  doc.erase("replicates");
  out.canonical_ = doc.dump();
  out.fingerprint_ = fnv1a64(out.canonical_);
  out.spec_ = std::move(spec);
  return out;
}

std::vector<std::string> spec_diff(const std::string& canonical_a,
                                   const std::string& canonical_b) {
  std::vector<std::string> paths;
  const json patch = json::diff(json::parse(canonical_a), json::parse(canonical_b));
  for (const auto& op : patch) paths.push_back(op.at("path").get<std::string>());
  return paths;
}

}  // namespace mamsim
