#include "ibmvar/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include "ibmvar/errors.hpp"
#include "ibmvar/hermite.hpp"
#include "ibmvar/limits.hpp"
#include "ibmvar/parallel.hpp"
#include "ibmvar/stats.hpp"

namespace ibmvar {

namespace {

struct TheoremEntry {
  TheoremId id;
  std::string_view name;
};

constexpr TheoremEntry kTheorems[] = {
    {TheoremId::thm1_even, "thm1_even"},       {TheoremId::thm1_odd, "thm1_odd"},
    {TheoremId::thm2_even, "thm2_even"},       {TheoremId::thm2_odd, "thm2_odd"},
    {TheoremId::kl_quadratic, "kl_quadratic"}, {TheoremId::kl_cubic, "kl_cubic"},
    {TheoremId::kl_quartic, "kl_quartic"},     {TheoremId::cor9, "cor9"},
    {TheoremId::cor10, "cor10"},               {TheoremId::cor11, "cor11"},
    {TheoremId::cor_odd, "cor_odd"},           {TheoremId::cor13, "cor13"},
    {TheoremId::cor_last, "cor_last"},         {TheoremId::prop_incr, "prop_incr"},
};

bool is_kl(TheoremId id) {
  return id == TheoremId::kl_quadratic || id == TheoremId::kl_cubic ||
         id == TheoremId::kl_quartic;
}

bool uses_s(TheoremId id) {
  return id == TheoremId::thm2_even || id == TheoremId::thm2_odd;
}

bool is_gaussian_preset(TheoremId id) {
  switch (id) {
    case TheoremId::cor9: case TheoremId::cor10: case TheoremId::cor11:
    case TheoremId::cor_odd: case TheoremId::cor13: case TheoremId::cor_last:
      return true;
    default:
      return false;
  }
}

const PresetInfo& info(TheoremId id) {
  for (const auto& p : presets()) {
    if (p.id == id) return p;
  }
  throw ArgumentError("unknown theorem id");
}

double mu(int q) { return gaussian_moment(q); }

GaussianPreset preset_kind(TheoremId id) {
  switch (id) {
    case TheoremId::cor9: case TheoremId::cor_odd: return GaussianPreset::TrapezoidPower;
    case TheoremId::cor10: case TheoremId::cor_last: return GaussianPreset::AlternatingPower;
    case TheoremId::cor11: return GaussianPreset::PairDifference;
    case TheoremId::cor13: return GaussianPreset::PairSum;
    default: throw ArgumentError("not a Gaussian-functional preset");
  }
}

// Multiplier turning V_n (or S_n) into the normalized functional.
double normalization(const ExperimentConfig& c, const DyadicLevel& level) {
  const int k = c.kappa;
  switch (c.theorem) {
    case TheoremId::thm1_even: return level.pow_quarter(k - 3);
    case TheoremId::thm1_odd:
    case TheoremId::thm2_even:
    case TheoremId::thm2_odd: return level.pow_quarter(k - 1);
    case TheoremId::kl_quadratic:
    case TheoremId::kl_quartic:
      return level.pow_quarter(k - 3) / std::sqrt(mu(2 * k) - mu(k) * mu(k));
    case TheoremId::kl_cubic: return level.pow_quarter(k - 1) / std::sqrt(mu(2 * k));
    default: return 1.0;
  }
}

std::vector<double> marginal_times(const ExperimentConfig& c) {
  if (c.theorem == TheoremId::prop_incr) {
    std::vector<double> t;
    for (int j = 1; j <= 2 * c.blocks; ++j) t.push_back(j);
    return t;
  }
  return c.times;
}

std::vector<double> joint_sites(const ExperimentConfig& c) {
  if (is_kl(c.theorem) || c.theorem == TheoremId::prop_incr) return {};
  if (is_gaussian_preset(c.theorem)) return c.times;
  return c.x_sites;
}

std::size_t std_column(const ExperimentConfig& c) {
  if (c.theorem == TheoremId::prop_incr) return 0;
  return static_cast<std::size_t>(
      std::max_element(c.times.begin(), c.times.end()) - c.times.begin());
}

GaussianSumSpec block_spec(const ExperimentConfig& c, int level) {
  return GaussianSumSpec(c.phi_even, c.phi_odd, 0.0, Poly(c.poly), registry_get("one"),
                      DyadicLevel(level), {});
}

void append(std::vector<double>& row, const std::vector<double>& more) {
  row.insert(row.end(), more.begin(), more.end());
}

double elapsed(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace

std::string_view to_string(TheoremId id) {
  for (const auto& e : kTheorems) {
    if (e.id == id) return e.name;
  }
  return "unknown";
}

TheoremId parse_theorem(std::string_view name) {
  for (const auto& e : kTheorems) {
    if (e.name == name) return e.id;
  }
  std::string known;
  for (const auto& e : kTheorems) known += (known.empty() ? "" : ", ") + std::string(e.name);
  throw ArgumentError("unknown theorem id '" + std::string(name) + "' (known: " + known + ")");
}

const std::vector<PresetInfo>& presets() {
  static const std::vector<PresetInfo> p = {
      {TheoremId::thm1_even, "even", 2, "2^{(k-3)n/4} V_n(f,t) jointly with X at x_sites",
       "sqrt(mu_2k - mu_k^2) int f(X_z) L_t^z(Y) dB_z (weighted scenery)"},
      {TheoremId::thm1_odd, "odd", 3, "2^{(k-1)n/4} V_n(f,t) jointly with X at x_sites",
       "int_0^{Y_t} f(X)(mu_{k+1} dX (Stratonovich) + sqrt(mu_2k - mu_{k+1}^2) dB)"},
      {TheoremId::thm2_even, "even", 2, "2^{(k-1)n/4} S_n(f,t) jointly with X at x_sites",
       "sqrt(mu_2k - mu_k^2) int_0^{Y_t} f(X_z) dB_z"},
      {TheoremId::thm2_odd, "odd", 3, "2^{(k-1)n/4} S_n(f,t) jointly with X at x_sites",
       "int_0^{Y_t} f(X)(mu_{k+1} dX (Stratonovich) + sqrt(mu_2k - mu_{k+1}^2) dB)"},
      {TheoremId::kl_quadratic, "even", 2, "2^{-n/4} V_n^(2)(1,t) / sqrt(2)",
       "Brownian motion in random scenery"},
      {TheoremId::kl_cubic, "odd", 3, "2^{n/2} V_n^(3)(1,t) / sqrt(15)",
       "iterated Brownian motion X(Y_t)"},
      {TheoremId::kl_quartic, "even", 4, "2^{n/4} V_n^(4)(1,t) / sqrt(96)",
       "Brownian motion in random scenery"},
      {TheoremId::cor9, "even", 2, "2^{-n/4} 1/2 sum (f+f)(g_j^k - mu_k), with X_t",
       "sqrt(mu_2k - mu_k^2) int_0^t f(X_s) dB_s"},
      {TheoremId::cor10, "even", 2, "2^{(k-1)n/4} 1/2 sum (f+f)(-1)^j (dX_j)^k, with X_t",
       "sqrt(mu_2k - mu_k^2) int_0^t f(X_s) dB_s"},
      {TheoremId::cor11, "even", 2,
       "2^{(k-1)n/4} sum f(X_{2j+1})[(dX_{2j+2})^k - (dX_{2j+1})^k], with X_t",
       "sqrt(mu_2k - mu_k^2) int_0^t f(X_s) dB_s"},
      {TheoremId::cor_odd, "odd", 3, "2^{-n/4} 1/2 sum (f+f) g_j^k, with X_t",
       "mu_{k+1} F(X_t) + sqrt(mu_2k - mu_{k+1}^2) int_0^t f(X_s) dB_s"},
      {TheoremId::cor13, "odd", 3,
       "2^{(k-1)n/4} sum f(X_{2j+1})[(dX_{2j+2})^k + (dX_{2j+1})^k], with X_t",
       "mu_{k+1} F(X_t) + sqrt(mu_2k - mu_{k+1}^2) int_0^t f(X_s) dB_s"},
      {TheoremId::cor_last, "odd", 3, "2^{(k-1)n/4} 1/2 sum (f+f)(-1)^j (dX_j)^k, with X_t",
       "sqrt(mu_2k) int_0^t f(X_s) dB_s"},
      {TheoremId::prop_incr, "any", 2,
       "block sums M_1..M_N of phi(i)(P(g_i) - E P(G)) and M_{N+1}..M_{2N} of (-1)^i g_i",
       "sqrt((a^2+b^2)/2 Var P(G)) (dB_1..dB_N), (dB_{N+1}..dB_{2N})"},
  };
  return p;
}

void ExperimentConfig::validate() const {
  const PresetInfo& p = info(theorem);
  if (replicates < 100) throw ArgumentError("replicates must be >= 100");
  if (levels.empty()) throw ArgumentError("levels must be nonempty");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] < 2 || levels[i] > 24) throw ArgumentError("levels must lie in [2, 24]");
    if (i > 0 && levels[i] <= levels[i - 1]) throw ArgumentError("levels must be increasing");
  }
  if (times.empty()) throw ArgumentError("times must be nonempty");
  for (double t : times) {
    if (!(t > 0.0 && t <= 1.0)) throw ArgumentError("times must lie in (0, 1]");
  }
  for (double x : x_sites) {
    if (!std::isfinite(x)) throw ArgumentError("x_sites must be finite");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("alpha must lie in (0, 1)");
  if (permutations < 0) throw ArgumentError("permutations must be >= 0");
  if (energy_rows < 2) throw ArgumentError("energy_rows must be >= 2");
  if (limit_level < 2 || limit_level > 24) throw ArgumentError("limit_level must lie in [2, 24]");
  if (retries < 0) throw ArgumentError("retries must be >= 0");
  if (kappa < 2 || kappa > kMaxMomentOrder / 2) throw ArgumentError("kappa out of range");
  if (p.parity == "even" && kappa % 2 != 0) {
    throw ArgumentError(std::string(to_string(theorem)) + " needs an even kappa");
  }
  if (p.parity == "odd" && kappa % 2 == 0) {
    throw ArgumentError(std::string(to_string(theorem)) + " needs an odd kappa");
  }
  if (is_kl(theorem)) {
    if (kappa != p.default_kappa) {
      throw ArgumentError(std::string(to_string(theorem)) + " is defined for kappa = " +
                          std::to_string(p.default_kappa));
    }
    if (weight_name != "one") {
      throw ArgumentError(std::string(to_string(theorem)) + " is unweighted (weight 'one')");
    }
  }
  registry_get(weight_name);
  if (theorem == TheoremId::prop_incr) {
    if (blocks < 1) throw ArgumentError("blocks must be >= 1");
    if (!decompose(Poly(poly)).centered_rank_ge2) {
      throw ArgumentError("block polynomial must have centered Hermite rank >= 2");
    }
  }
}

ExperimentConfig default_config(TheoremId id) {
  ExperimentConfig c;
  c.theorem = id;
  c.kappa = info(id).default_kappa;
  if (is_kl(id) || id == TheoremId::prop_incr) {
    c.weight_name = "one";
  } else {
    c.weight_name = "cos";
  }
  if (!is_kl(id) && !is_gaussian_preset(id) && id != TheoremId::prop_incr) {
    c.x_sites = {-1.0, 0.5};
    c.replicates = 2000;
  } else if (id == TheoremId::prop_incr) {
    c.replicates = 10000;
    c.times = {1.0};
  } else {
    c.replicates = 4000;
  }
  return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"theorem_id", std::string(to_string(c.theorem))},
          {"kappa", c.kappa},
          {"weight", c.weight_name},
          {"levels", c.levels},
          {"times", c.times},
          {"x_sites", c.x_sites},
          {"replicates", c.replicates},
          {"seed", c.master_seed},
          {"alpha", c.alpha},
          {"permutations", c.permutations},
          {"energy_rows", c.energy_rows},
          {"limit_level", c.limit_level},
          {"retries", c.retries},
          {"workers", c.workers},
          {"phi_even", c.phi_even},
          {"phi_odd", c.phi_odd},
          {"poly", c.poly},
          {"blocks", c.blocks},
          {"null_mode", c.null_mode}};
}

ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig c) {
  if (!j.is_object()) throw ArgumentError("config must be a JSON object");
  static const std::vector<std::string> known = {
      "theorem_id", "kappa",    "weight",   "levels",      "times",   "x_sites",
      "replicates", "seed",     "alpha",    "permutations", "energy_rows", "limit_level",
      "retries",    "workers",  "phi_even", "phi_odd",     "poly",    "blocks",
      "null_mode"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ArgumentError("unknown config field '" + key + "'");
    }
  }
  try {
    if (j.contains("theorem_id")) {
      const TheoremId id = parse_theorem(j.at("theorem_id").get<std::string>());
      if (id != c.theorem) c = default_config(id);
    }
    auto take = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    take("kappa", c.kappa);
    take("weight", c.weight_name);
    take("levels", c.levels);
    take("times", c.times);
    take("x_sites", c.x_sites);
    take("replicates", c.replicates);
    take("seed", c.master_seed);
    take("alpha", c.alpha);
    take("permutations", c.permutations);
    take("energy_rows", c.energy_rows);
    take("limit_level", c.limit_level);
    take("retries", c.retries);
    take("workers", c.workers);
    take("phi_even", c.phi_even);
    take("phi_odd", c.phi_odd);
    take("poly", c.poly);
    take("blocks", c.blocks);
    take("null_mode", c.null_mode);
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("malformed config: ") + e.what());
  }
  return c;
}

std::vector<double> LevelSamples::column(bool finite_side, std::size_t k) const {
  const auto& src = finite_side ? finite : limit;
  std::vector<double> out;
  if (dim == 0) return out;
  out.reserve(src.size() / dim);
  for (std::size_t i = k; i < src.size(); i += dim) out.push_back(src[i]);
  return out;
}

std::uint64_t replicate_stream_id(int level, int role, std::uint64_t replicate) {
  return (static_cast<std::uint64_t>(level) << 48) |
         (static_cast<std::uint64_t>(role) << 40) | (replicate & ((1ULL << 40) - 1));
}

std::vector<double> finite_row(const ExperimentConfig& c, int level_n,
                               std::uint64_t seed, std::uint64_t replicate) {
  if (c.null_mode) return limit_row(c, level_n, seed, replicate, 2);
  const DyadicLevel level(level_n);
  const std::uint64_t sid = replicate_stream_id(level_n, 0, replicate);
  const RngStream xs(seed, sid, Substream::X);
  const RngStream ys(seed, sid, Substream::Y);
  SpatialField field(xs, level);
  std::vector<double> row;

  if (c.theorem == TheoremId::prop_incr) {
    return m_blocks(block_spec(c, level_n), c.blocks, field);
  }
  if (is_gaussian_preset(c.theorem)) {
    row = gaussian_preset(preset_kind(c.theorem), c.kappa, registry_get(c.weight_name),
                          level, c.times, field);
  } else {
    const double tmax = *std::max_element(c.times.begin(), c.times.end());
    const EmbeddedWalk walk = simulate_walk(ys, level, tmax);
    VariationSpec spec{c.kappa, level, registry_get(c.weight_name), c.times, false};
    std::sort(spec.times.begin(), spec.times.end());
    std::vector<double> sorted = uses_s(c.theorem) ? s_sum(spec, walk, field)
                                                   : v_time_sum(spec, walk, field);
    // back to configured order
    row.resize(c.times.size());
    for (std::size_t i = 0; i < c.times.size(); ++i) {
      const auto pos = std::lower_bound(spec.times.begin(), spec.times.end(), c.times[i]) -
                       spec.times.begin();
      row[i] = sorted[static_cast<std::size_t>(pos)] * normalization(c, level);
    }
  }
  const auto sites = joint_sites(c);
  if (!sites.empty()) append(row, sample_field_at(field, sites));
  return row;
}

std::vector<double> limit_row(const ExperimentConfig& c, int level_n,
                              std::uint64_t seed, std::uint64_t replicate, int role) {
  const LimitStreams streams(seed, replicate_stream_id(level_n, role, replicate));
  LimitOptions opt;
  opt.level = c.limit_level;
  opt.x_sites = joint_sites(c);
  const WeightFunction& w = registry_get(c.weight_name);
  const int k = c.kappa;
  LimitSample s;
  switch (c.theorem) {
    case TheoremId::thm1_even: s = sample_wbmrs(w, k, streams, c.times, opt); break;
    case TheoremId::thm1_odd:
    case TheoremId::thm2_odd: s = sample_mixed_odd(w, k, streams, c.times, opt); break;
    case TheoremId::thm2_even: s = sample_wiener_at_yt(w, k, streams, c.times, opt); break;
    case TheoremId::kl_quadratic:
    case TheoremId::kl_quartic: s = sample_bmrs(streams, c.times, opt); break;
    case TheoremId::kl_cubic: s = sample_ibm(streams, c.times, opt); break;
    case TheoremId::cor9:
    case TheoremId::cor10:
    case TheoremId::cor11:
      s = sample_gaussian_j_limit(std::sqrt(mu(2 * k) - mu(k) * mu(k)), 0.0, w, streams,
                                  c.times, opt);
      break;
    case TheoremId::cor_odd:
    case TheoremId::cor13:
      s = sample_gaussian_j_limit(std::sqrt(mu(2 * k) - mu(k + 1) * mu(k + 1)), mu(k + 1),
                                  w, streams, c.times, opt);
      break;
    case TheoremId::cor_last:
      s = sample_gaussian_j_limit(std::sqrt(mu(2 * k)), 0.0, w, streams, c.times, opt);
      break;
    case TheoremId::prop_incr: {
      const double sigma = block_spec(c, level_n).limit_scale();
      std::vector<double> row(static_cast<std::size_t>(2 * c.blocks));
      for (int j = 0; j < c.blocks; ++j) {
        row[static_cast<std::size_t>(j)] = sigma * streams.b.normal_at(40, j);
        row[static_cast<std::size_t>(j + c.blocks)] = streams.b2.normal_at(40, j);
      }
      return row;
    }
  }
  std::vector<double> row = s.values;
  append(row, s.x_values);
  return row;
}

LevelSamples draw_ensembles(const ExperimentConfig& c, int level, std::uint64_t seed) {
  LevelSamples s;
  s.n = level;
  s.marginal_times = marginal_times(c);
  s.dim = s.marginal_times.size() + joint_sites(c).size();
  const auto n = static_cast<std::size_t>(c.replicates);
  s.finite.assign(n * s.dim, 0.0);
  s.limit.assign(n * s.dim, 0.0);
  parallel_for(2 * n, c.workers, [&](std::size_t i) {
    const bool fin = i < n;
    const std::size_t r = fin ? i : i - n;
    const std::vector<double> row =
        fin ? finite_row(c, level, seed, r) : limit_row(c, level, seed, r);
    if (row.size() != s.dim) throw InvariantViolation("sample row has the wrong width");
    std::copy(row.begin(), row.end(),
              (fin ? s.finite : s.limit).begin() + static_cast<std::ptrdiff_t>(r * s.dim));
  });
  return s;
}

std::vector<MarginalStat> marginal_tests(const LevelSamples& s) {
  std::vector<MarginalStat> out;
  for (std::size_t k = 0; k < s.marginal_times.size(); ++k) {
    const auto a = s.column(true, k);
    const auto b = s.column(false, k);
    MarginalStat m;
    m.t = s.marginal_times[k];
    if (!a.empty() && !b.empty()) {
      const auto r = stats::ks_two_sample(a, b);
      m.ks_stat = r.statistic;
      m.ks_p = r.p_value;
    }
    out.push_back(m);
  }
  return out;
}

LevelReport level_report(const ExperimentConfig& c, const LevelSamples& s,
                         std::uint64_t seed) {
  LevelReport r;
  r.n = s.n;
  r.replicates = static_cast<int>(s.rows_finite());
  r.marginals = marginal_tests(s);
  const std::size_t rows =
      std::min<std::size_t>({static_cast<std::size_t>(c.energy_rows), s.rows_finite(),
                             s.rows_limit()});
  r.energy_rows = static_cast<int>(rows);
  const auto e = stats::energy_test(
      std::span<const double>(s.finite.data(), rows * s.dim),
      std::span<const double>(s.limit.data(), rows * s.dim), s.dim, c.permutations,
      mix64(seed ^ static_cast<std::uint64_t>(s.n)));
  r.energy_stat = e.statistic;
  r.perm_p = e.p_value;
  const std::size_t col = std_column(c);
  r.finite_std = std::sqrt(stats::moments(s.column(true, col)).variance);
  r.limit_std = std::sqrt(stats::moments(s.column(false, col)).variance);
  r.std_ratio = r.limit_std > 0.0 ? r.finite_std / r.limit_std : 0.0;
  return r;
}

std::uint64_t attempt_seed(std::uint64_t master, int attempt) {
  if (attempt == 0) return master;
  return mix64(master ^ (0xA5A5A5A5ULL * static_cast<std::uint64_t>(attempt)));
}

ExperimentResult run_experiment(const ExperimentConfig& c) {
  c.validate();
  const auto start = std::chrono::steady_clock::now();
  ExperimentResult result;
  result.report.config = c;
  for (int attempt = 0; attempt <= c.retries; ++attempt) {
    AttemptReport a;
    a.seed = attempt_seed(c.master_seed, attempt);
    std::vector<LevelSamples> samples;
    for (int n : c.levels) {
      samples.push_back(draw_ensembles(c, n, a.seed));
      a.levels.push_back(level_report(c, samples.back(), a.seed));
    }
    for (std::size_t i = 1; i < a.levels.size(); ++i) {
      if (a.levels[i].energy_stat > a.levels[i - 1].energy_stat) ++a.energy_inversions;
    }
    const LevelReport& finest = a.levels.back();
    bool ok = finest.perm_p >= c.alpha && a.energy_inversions <= 1;
    for (const auto& m : finest.marginals) ok = ok && m.ks_p >= c.alpha;
    a.passed = ok;
    result.report.attempts.push_back(std::move(a));
    result.samples = std::move(samples);
    if (ok) break;
  }
  result.report.passed = result.report.attempts.back().passed;
  result.report.runtime_seconds = elapsed(start);
  return result;
}

nlohmann::json report_to_json(const StatReport& r, bool include_timing) {
  nlohmann::json j;
  j["config"] = to_json(r.config);
  j["seeds"] = nlohmann::json::array();
  j["attempts"] = nlohmann::json::array();
  for (const auto& a : r.attempts) {
    j["seeds"].push_back(a.seed);
    j["attempts"].push_back({{"seed", a.seed},
                             {"verdict", a.passed ? "pass" : "fail"},
                             {"energy_inversions", a.energy_inversions}});
  }
  j["per_level"] = nlohmann::json::array();
  int inversions = 0;
  if (!r.attempts.empty()) {
    inversions = r.final_attempt().energy_inversions;
    for (const auto& l : r.final_attempt().levels) {
      nlohmann::json m = nlohmann::json::array();
      for (const auto& s : l.marginals) {
        m.push_back({{"t", s.t}, {"ks_stat", s.ks_stat}, {"ks_p", s.ks_p}});
      }
      j["per_level"].push_back({{"n", l.n},
                                {"replicates", l.replicates},
                                {"marginals", m},
                                {"joint",
                                 {{"energy_stat", l.energy_stat},
                                  {"perm_p", l.perm_p},
                                  {"rows", l.energy_rows}}},
                                {"std_ratio", l.std_ratio},
                                {"finite_std", l.finite_std},
                                {"limit_std", l.limit_std}});
    }
  }
  j["energy_inversions"] = inversions;
  j["verdict"] = r.passed ? "pass" : "fail";
  if (include_timing) j["timing"] = {{"runtime_seconds", r.runtime_seconds}};
  return j;
}

void export_report(const StatReport& r, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report to " + path.string());
  out << report_to_json(r).dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing report to " + path.string());
}

void export_samples(const ExperimentConfig& c, const std::vector<LevelSamples>& s,
                    const std::filesystem::path& path, std::string_view label) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write samples to " + path.string());
  out << "theorem_id,level,replicate,time,kind,value\n";
  out << std::setprecision(17);
  const std::string id(label.empty() ? to_string(c.theorem) : label);
  for (const auto& level : s) {
    for (int side = 0; side < 2; ++side) {
      const bool fin = side == 0;
      const std::size_t rows = fin ? level.rows_finite() : level.rows_limit();
      const auto& data = fin ? level.finite : level.limit;
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t k = 0; k < level.marginal_times.size(); ++k) {
          out << id << ',' << level.n << ',' << r << ',' << level.marginal_times[k] << ','
              << (fin ? "finite_n" : "limit") << ',' << data[r * level.dim + k] << '\n';
        }
      }
    }
  }
  if (!out) throw std::runtime_error("failed writing samples to " + path.string());
}

std::vector<LevelSamples> read_samples_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read samples from " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "theorem_id,level,replicate,time,kind,value") {
    throw ArgumentError("unexpected sample header in " + path.string());
  }
  struct Raw {
    std::vector<double> times;
    std::map<std::pair<bool, std::size_t>, std::vector<double>> rows;
  };
  std::map<int, Raw> by_level;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 6) {
      throw ArgumentError(path.string() + ":" + std::to_string(lineno) + ": expected 6 fields");
    }
    Raw& raw = by_level[std::stoi(f[1])];
    const double t = std::stod(f[3]);
    auto it = std::find(raw.times.begin(), raw.times.end(), t);
    if (it == raw.times.end()) raw.times.push_back(t);
    raw.rows[{f[4] == "finite_n", std::stoul(f[2])}].push_back(std::stod(f[5]));
  }
  std::vector<LevelSamples> out;
  for (auto& [n, raw] : by_level) {
    LevelSamples s;
    s.n = n;
    s.marginal_times = raw.times;
    s.dim = raw.times.size();
    for (auto& [key, values] : raw.rows) {
      auto& dst = key.first ? s.finite : s.limit;
      dst.insert(dst.end(), values.begin(), values.end());
    }
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------- identities

double identity_error(double a, double b, double magnitude) {
  const double denom = std::max({std::abs(a), std::abs(b), 1e-6 * magnitude});
  return denom == 0.0 ? 0.0 : std::abs(a - b) / denom;
}

namespace {

struct Check {
  std::string name;
  double lhs;
  double rhs;
  double magnitude;
};

double v_magnitude(const VariationSpec& spec, const EmbeddedWalk& walk, SpatialField& field,
                   double t) {
  const std::int64_t k = spec.level.steps_until(t);
  const double c = spec.centering();
  double m = 0.0;
  for (std::int64_t i = 1; i <= k; ++i) {
    const double a = field.value(walk.positions[static_cast<std::size_t>(i - 1)]);
    const double b = field.value(walk.positions[static_cast<std::size_t>(i)]);
    m += 0.5 * std::abs(spec.weight.f(a) + spec.weight.f(b)) *
         (std::pow(std::abs(b - a), spec.kappa) + c);
  }
  return m;
}

double s_magnitude(const VariationSpec& spec, const EmbeddedWalk& walk, SpatialField& field,
                   double t) {
  const std::int64_t p = spec.level.pairs_until(t);
  double m = 0.0;
  for (std::int64_t k = 0; k < p; ++k) {
    const double a = field.value(walk.positions[static_cast<std::size_t>(2 * k)]);
    const double b = field.value(walk.positions[static_cast<std::size_t>(2 * k + 1)]);
    const double c = field.value(walk.positions[static_cast<std::size_t>(2 * k + 2)]);
    m += std::abs(spec.weight.f(b)) *
         (std::pow(std::abs(c - b), spec.kappa) + std::pow(std::abs(b - a), spec.kappa));
  }
  return m;
}

std::vector<Check> evaluate_checks(VariationSpec spec, const EmbeddedWalk& walk,
                                   SpatialField& field, const SpaceSumFn& space, double t) {
  spec.times = {t};
  std::vector<Check> out;
  const double v = v_time_sum(spec, walk, field)[0];
  const double vm = v_magnitude(spec, walk, field, t);
  out.push_back({"time_sum=space_sum", v, space(spec, tally_crossings(walk, t), field), vm});
  const double s = s_sum(spec, walk, field)[0];
  const double sm = s_magnitude(spec, walk, field, t);
  out.push_back({"s_sum=s_space_sum", s, s_space_sum(spec, tally_doubled(walk, t), field), sm});
  const TerminalIndices ti = terminal_indices(walk, spec.level, t);
  const double scale = spec.level.pow_quarter(spec.kappa - 1);
  if (spec.kappa % 2 == 1) {
    out.push_back({"scaled_V=J(Y_n)", scale * v, j_one_sided(spec, field, ti.y_n_t), scale * vm});
  }
  const double y_tilde = static_cast<double>(2 * ti.j_tilde) * spec.level.spatial_mesh();
  out.push_back(
      {"scaled_S=J~(Y~_n)", scale * s, j_tilde_one_sided(spec, field, y_tilde), scale * sm});
  return out;
}

}  // namespace

IdentityReport identity_suite(std::uint64_t seed, int trials, const IdentityOptions& options) {
  if (trials < 1) throw ArgumentError("identity suite needs trials >= 1");
  if (options.kappas.empty() || options.levels.empty()) {
    throw ArgumentError("identity suite needs kappas and levels");
  }
  const auto start = std::chrono::steady_clock::now();
  const std::vector<std::string> weights =
      options.weights.empty() ? registry_names() : options.weights;
  const SpaceSumFn space = options.space_sum
                               ? options.space_sum
                               : SpaceSumFn([](const VariationSpec& s, const CrossingTally& t,
                                               SpatialField& f) { return v_space_sum(s, t, f); });
  IdentityReport report;
  const std::size_t nk = options.kappas.size(), nl = options.levels.size();
  for (int i = 0; i < trials && report.passed; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const int kappa = options.kappas[ui % nk];
    const int n = options.levels[(ui / nk) % nl];
    const std::string& wname = weights[(ui / (nk * nl)) % weights.size()];
    const DyadicLevel level(n);
    const RngStream ys(seed, static_cast<std::uint64_t>(i), Substream::Y);
    const RngStream xs(seed, static_cast<std::uint64_t>(i), Substream::X);
    CounterEngine pick = ys.engine(99);
    const bool coupled = options.coupled_every > 0 && (i % options.coupled_every) ==
                                                          options.coupled_every - 1;
    const EmbeddedWalk walk = coupled ? sample_coupled_walk(ys, level, 1.0).walk
                                      : simulate_walk(ys, level, 1.0);
    SpatialField field(xs, level);
    VariationSpec spec{kappa, level, registry_get(wname), {1.0}, false};
    ++report.instances;
    for (double t : {uniform01(pick), 1.0}) {
      for (const Check& c : evaluate_checks(spec, walk, field, space, t)) {
        ++report.checks;
        const double err = identity_error(c.lhs, c.rhs, c.magnitude);
        report.max_rel_error = std::max(report.max_rel_error, err);
        if (err <= options.tolerance) continue;
        // Shrink: the shortest walk prefix on which the same identity fails.
        IdentityFailure fail{c.name, kappa, n, wname, t, c.lhs, c.rhs, err, {}, 0, {}};
        const std::int64_t kmax = level.steps_until(t);
        for (std::int64_t k = 1; k <= kmax; ++k) {
          const double tk = std::ldexp(static_cast<double>(k), -n);
          for (const Check& ck : evaluate_checks(spec, walk, field, space, tk)) {
            if (ck.name != c.name) continue;
            const double e = identity_error(ck.lhs, ck.rhs, ck.magnitude);
            if (e > options.tolerance) {
              fail = {c.name, kappa, n, wname, tk, ck.lhs, ck.rhs, e, {}, 0, {}};
              k = kmax;
            }
          }
          if (fail.t == tk) break;
        }
        const std::int64_t steps = level.steps_until(fail.t);
        fail.walk.assign(walk.positions.begin(), walk.positions.begin() + steps + 1);
        const auto [mn, mx] = std::minmax_element(fail.walk.begin(), fail.walk.end());
        fail.field_lo = *mn - 1;
        fail.field_values = field.window(*mn - 1, *mx + 2);
        report.failure = std::move(fail);
        report.passed = false;
        break;
      }
      if (!report.passed) break;
    }
  }
  report.runtime_seconds = elapsed(start);
  return report;
}

nlohmann::json identity_to_json(const IdentityReport& r) {
  nlohmann::json j{{"instances", r.instances},
                   {"checks", r.checks},
                   {"max_rel_error", r.max_rel_error},
                   {"verdict", r.passed ? "pass" : "fail"},
                   {"timing", {{"runtime_seconds", r.runtime_seconds}}}};
  if (r.failure) {
    const auto& f = *r.failure;
    j["counterexample"] = {{"identity", f.identity}, {"kappa", f.kappa},
                           {"n", f.n},               {"weight", f.weight},
                           {"t", f.t},               {"lhs", f.lhs},
                           {"rhs", f.rhs},           {"rel_error", f.rel_error},
                           {"walk", f.walk},         {"field_lo", f.field_lo},
                           {"field_values", f.field_values}};
  }
  return j;
}

}  // namespace ibmvar
