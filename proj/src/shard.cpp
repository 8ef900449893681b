#include "mamsim/shard.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "mamsim/rng.hpp"

namespace mamsim {
namespace {

constexpr char kMagic[8] = {'M', 'A', 'M', 'S', 'S', 'H', 'R', 'D'};
constexpr std::uint64_t kMaxSection = std::uint64_t{1} << 40;

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u64(s.size());
    buf_ += s;
  }
  void doubles(const std::vector<double>& v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  void ints(const std::vector<int>& v) {
    u64(v.size());
    for (int x : v) u32(static_cast<std::uint32_t>(x));
  }
  void bools(const std::vector<bool>& v) {
    u64(v.size());
    for (bool b : v) u8(b ? 1 : 0);
  }
  void decision(const ArmDecision& d) {
    u8(static_cast<std::uint8_t>((d.efficacy_met ? 1 : 0) | (d.futility_met ? 2 : 0)));
    u8(static_cast<std::uint8_t>(d.timing));
  }
  void decisions(const std::vector<ArmDecision>& v) {
    u64(v.size());
    for (const auto& d : v) decision(d);
  }
  std::string& buffer() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(const std::string& data) : data_(data) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{u8()} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{u8()} << (8 * i);
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::size_t count(std::size_t min_elem_bytes) {
    const std::uint64_t n = u64();
    if (n > (data_.size() - pos_) / std::max<std::size_t>(min_elem_bytes, 1)) {
      throw ShardError("corrupt shard: length field exceeds section size");
    }
    return static_cast<std::size_t>(n);
  }
  std::string str() {
    const std::size_t n = count(1);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<double> doubles() {
    std::vector<double> v(count(8));
    for (auto& x : v) x = f64();
    return v;
  }
  std::vector<int> ints() {
    std::vector<int> v(count(4));
    for (auto& x : v) x = static_cast<int>(u32());
    return v;
  }
  std::vector<bool> bools() {
    std::vector<bool> v(count(1));
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = u8() != 0;
    return v;
  }
  ArmDecision decision() {
    const std::uint8_t flags = u8();
    const std::uint8_t timing = u8();
    if (flags > 3 || timing > 2) throw ShardError("corrupt shard: bad decision code");
    return ArmDecision{(flags & 1) != 0, (flags & 2) != 0, static_cast<Timing>(timing)};
  }
  std::vector<ArmDecision> decisions() {
    std::vector<ArmDecision> v(count(2));
    for (auto& d : v) d = decision();
    return v;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) {
    if (data_.size() - pos_ < n) throw ShardError("corrupt shard: truncated section");
  }
  const std::string& data_;
  std::size_t pos_ = 0;
};

void encode_result(Writer& w, const TrialResult& r) {
  w.u64(r.seed);
  w.decisions(r.arms);
  w.ints(r.n);
  w.u32(static_cast<std::uint32_t>(r.total));
  w.u8(static_cast<std::uint8_t>(r.stop));
  w.u32(r.looks);
  w.u32(r.n_looks_planned);
  w.u32(r.nonconverged);
  w.u32(r.rar_fallbacks);
  w.u64(r.decision_look.size());
  for (auto l : r.decision_look) w.u32(l);
  w.u64(r.history.size());
  for (const auto& h : r.history) {
    w.u32(static_cast<std::uint32_t>(h.n_total));
    w.u8(h.converged ? 1 : 0);
    w.ints(h.n);
    w.bools(h.active);
    w.doubles(h.prob);
    w.doubles(h.post_eff);
    w.doubles(h.post_fut);
    w.doubles(h.post_rar);
    w.doubles(h.est_mean);
    w.doubles(h.est_sd);
    w.decisions(h.decisions);
  }
  w.u8(r.data ? 1 : 0);
  if (r.data) {
    const Cohort& c = *r.data;
    w.u64(c.arm.size());
    for (auto a : c.arm) w.u32(static_cast<std::uint32_t>(a));
    w.doubles(c.response);
    w.u64(static_cast<std::uint64_t>(c.covariates.cols()));
    for (Eigen::Index i = 0; i < c.covariates.rows(); ++i) {
      for (Eigen::Index k = 0; k < c.covariates.cols(); ++k) w.f64(c.covariates(i, k));
    }
  }
}

TrialResult decode_result(Reader& r) {
  TrialResult t;
  t.seed = r.u64();
  t.arms = r.decisions();
  t.n = r.ints();
  t.total = static_cast<int>(r.u32());
  const std::uint8_t stop = r.u8();
  if (stop > 3) throw ShardError("corrupt shard: bad stop reason");
  t.stop = static_cast<StopReason>(stop);
  t.looks = r.u32();
  t.n_looks_planned = r.u32();
  t.nonconverged = r.u32();
  t.rar_fallbacks = r.u32();
  t.decision_look.resize(r.count(4));
  for (auto& l : t.decision_look) l = r.u32();
  t.history.resize(r.count(8));
  for (auto& h : t.history) {
    h.n_total = static_cast<int>(r.u32());
    h.converged = r.u8() != 0;
    h.n = r.ints();
    h.active = r.bools();
    h.prob = r.doubles();
    h.post_eff = r.doubles();
    h.post_fut = r.doubles();
    h.post_rar = r.doubles();
    h.est_mean = r.doubles();
    h.est_sd = r.doubles();
    h.decisions = r.decisions();
  }
  if (r.u8() != 0) {
    Cohort c;
    c.arm.resize(r.count(4));
    for (auto& a : c.arm) a = r.u32();
    c.response = r.doubles();
    const auto cols = static_cast<Eigen::Index>(r.count(0));
    const auto rows = static_cast<Eigen::Index>(c.arm.size());
    if (c.response.size() != c.arm.size()) throw ShardError("corrupt shard: dataset shape");
    c.covariates.resize(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index k = 0; k < cols; ++k) c.covariates(i, k) = r.f64();
    }
    t.data = std::move(c);
  }
  return t;
}

std::string encode_header(const BatchResult& b) {
  Writer w;
  w.u64(b.fingerprint);
  w.u64(b.seeds.size());
  w.u64(b.seeds.empty() ? 0 : b.seeds.front());
  w.u64(b.seeds.empty() ? 0 : b.seeds.back());
  w.i64(b.created_unix);
  w.u8(static_cast<std::uint8_t>(b.extended));
  w.u8(b.has_null() ? 1 : 0);
  w.str(b.engine_version);
  w.str(b.spec_canonical);
  return std::move(w.buffer());
}

std::string read_section(std::istream& in, const char* what) {
  unsigned char len_bytes[8];
  if (!in.read(reinterpret_cast<char*>(len_bytes), 8)) {
    throw ShardError(std::string("corrupt shard: missing ") + what);
  }
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i) len |= std::uint64_t{len_bytes[i]} << (8 * i);
  if (len > kMaxSection) throw ShardError(std::string("corrupt shard: oversized ") + what);
  std::string s(static_cast<std::size_t>(len), '\0');
  if (!in.read(s.data(), static_cast<std::streamsize>(len))) {
    throw ShardError(std::string("corrupt shard: truncated ") + what);
  }
  return s;
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>(v >> (8 * i));
  out.write(b, 8);
}

nlohmann::json nan_safe(const std::vector<double>& v) {
  nlohmann::json a = nlohmann::json::array();
  for (double x : v) {
    if (std::isfinite(x)) {
      a.push_back(x);
    } else {
      a.push_back(nullptr);
    }
  }
  return a;
}

nlohmann::json decisions_json(const std::vector<ArmDecision>& v) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& d : v) {
    a.push_back({{"efficacy", d.efficacy_met}, {"futility", d.futility_met},
                 {"timing", to_string(d.timing)}});
  }
  return a;
}

nlohmann::json result_json(const TrialResult& r) {
  nlohmann::json j;
  j["seed"] = r.seed;
  j["decisions"] = decisions_json(r.arms);
  j["n"] = r.n;
  j["total"] = r.total;
  j["stop"] = to_string(r.stop);
  j["looks"] = r.looks;
  j["looks_planned"] = r.n_looks_planned;
  j["nonconverged"] = r.nonconverged;
  j["rar_fallbacks"] = r.rar_fallbacks;
  j["decision_look"] = r.decision_look;
  if (!r.history.empty()) {
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& h : r.history) {
      std::vector<int> active(h.active.begin(), h.active.end());
      hist.push_back({{"n_total", h.n_total},
                      {"converged", h.converged},
                      {"n", h.n},
                      {"active", active},
                      {"prob", nan_safe(h.prob)},
                      {"post_eff", nan_safe(h.post_eff)},
                      {"post_fut", nan_safe(h.post_fut)},
                      {"post_rar", nan_safe(h.post_rar)},
                      {"est_mean", nan_safe(h.est_mean)},
                      {"est_sd", nan_safe(h.est_sd)},
                      {"decisions", decisions_json(h.decisions)}});
    }
    j["history"] = std::move(hist);
  }
  if (r.data) {
    nlohmann::json cov = nlohmann::json::array();
    for (Eigen::Index i = 0; i < r.data->covariates.rows(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(r.data->covariates.cols()));
      for (Eigen::Index k = 0; k < r.data->covariates.cols(); ++k) {
        row[static_cast<std::size_t>(k)] = r.data->covariates(i, k);
      }
      cov.push_back(row);
    }
    j["data"] = {{"arm", r.data->arm}, {"response", r.data->response}, {"covariates", cov}};
  }
  return j;
}

}  // namespace

std::string encode_payload(const BatchResult& batch) {
  Writer w;
  w.u64(batch.seeds.size());
  for (auto s : batch.seeds) w.u64(s);
  for (const auto& r : batch.results) encode_result(w, r);
  for (const auto& r : batch.null_results) encode_result(w, r);
  return std::move(w.buffer());
}

void write_shard(std::ostream& out, const BatchResult& batch) {
  const std::string header = encode_header(batch);
  const std::string payload = encode_payload(batch);
  out.write(kMagic, sizeof kMagic);
  char version[4];
  for (int i = 0; i < 4; ++i) version[i] = static_cast<char>(kShardVersion >> (8 * i));
  out.write(version, 4);
  put_u64(out, header.size());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  put_u64(out, payload.size());
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  put_u64(out, fnv1a64(header + payload));
  if (!out) throw ShardError("failed to write shard");
}

void write_shard_file(const std::string& path, const BatchResult& batch) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ShardError("cannot open '" + path + "' for writing");
  write_shard(out, batch);
}

BatchResult read_shard(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw ShardError("not a shard file (bad magic)");
  }
  unsigned char vb[4];
  if (!in.read(reinterpret_cast<char*>(vb), 4)) throw ShardError("corrupt shard: missing version");
  const std::uint32_t version = std::uint32_t{vb[0]} | std::uint32_t{vb[1]} << 8 |
                                std::uint32_t{vb[2]} << 16 | std::uint32_t{vb[3]} << 24;
  if (version != kShardVersion) {
    throw ShardError("unsupported shard version " + std::to_string(version));
  }
  const std::string header = read_section(in, "header");
  const std::string payload = read_section(in, "payload");
  unsigned char cb[8];
  if (!in.read(reinterpret_cast<char*>(cb), 8)) throw ShardError("corrupt shard: missing checksum");
  std::uint64_t checksum = 0;
  for (int i = 0; i < 8; ++i) checksum |= std::uint64_t{cb[i]} << (8 * i);
  if (checksum != fnv1a64(header + payload)) throw ShardError("corrupt shard: checksum mismatch");

  BatchResult b;
  Reader h(header);
  b.fingerprint = h.u64();
  const std::uint64_t count = h.u64();
  const std::uint64_t first = h.u64();
  const std::uint64_t last = h.u64();
  b.created_unix = h.i64();
  b.extended = h.u8();
  const bool has_null = h.u8() != 0;
  b.engine_version = h.str();
  b.spec_canonical = h.str();
  if (!h.done()) throw ShardError("corrupt shard: trailing header bytes");
  if (fnv1a64(b.spec_canonical) != b.fingerprint) {
    throw ShardError("corrupt shard: fingerprint does not match the stored spec");
  }

  Reader p(payload);
  b.seeds.resize(p.count(8));
  for (auto& s : b.seeds) s = p.u64();
  if (b.seeds.size() != count || (count > 0 && (b.seeds.front() != first || b.seeds.back() != last))) {
    throw ShardError("corrupt shard: seed range disagrees with header");
  }
  b.results.reserve(b.seeds.size());
  for (std::size_t i = 0; i < b.seeds.size(); ++i) b.results.push_back(decode_result(p));
  if (has_null) {
    b.null_results.reserve(b.seeds.size());
    for (std::size_t i = 0; i < b.seeds.size(); ++i) b.null_results.push_back(decode_result(p));
  }
  if (!p.done()) throw ShardError("corrupt shard: trailing payload bytes");
  for (std::size_t i = 0; i < b.seeds.size(); ++i) {
    if (i > 0 && b.seeds[i] <= b.seeds[i - 1]) throw ShardError("corrupt shard: seeds not ascending");
    if (b.results[i].seed != b.seeds[i] || (has_null && b.null_results[i].seed != b.seeds[i])) {
      throw ShardError("corrupt shard: result seed outside the seed set");
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) throw ShardError("corrupt shard: trailing bytes");
  return b;
}

BatchResult read_shard_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ShardError("cannot open shard '" + path + "'");
  try {
    return read_shard(in);
  } catch (const ShardError& e) {
    throw ShardError(path + ": " + e.what());
  }
}

nlohmann::json shard_to_json(const BatchResult& batch) {
  nlohmann::json j;
  j["format"] = "mamsim-shard";
  j["version"] = kShardVersion;
  char fp[17];
  std::snprintf(fp, sizeof fp, "%016llx", static_cast<unsigned long long>(batch.fingerprint));
  j["fingerprint"] = fp;
  j["created_unix"] = batch.created_unix;
  j["engine_version"] = batch.engine_version;
  j["extended"] = batch.extended;
  j["spec"] = nlohmann::json::parse(batch.spec_canonical);
  j["seeds"] = batch.seeds;
  nlohmann::json alt = nlohmann::json::array();
  for (const auto& r : batch.results) alt.push_back(result_json(r));
  j["results"] = std::move(alt);
  if (batch.has_null()) {
    nlohmann::json nul = nlohmann::json::array();
    for (const auto& r : batch.null_results) nul.push_back(result_json(r));
    j["null_results"] = std::move(nul);
  }
  return j;
}

}  // namespace mamsim
