#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ibmvar/skeleton.hpp"
#include "ibmvar/variations.hpp"

namespace ibmvar {

enum class TheoremId {
  thm1_even,
  thm1_odd,
  thm2_even,
  thm2_odd,
  kl_quadratic,
  kl_cubic,
  kl_quartic,
  cor9,
  cor10,
  cor11,
  cor_odd,
  cor13,
  cor_last,
  prop_incr
};

std::string_view to_string(TheoremId id);
TheoremId parse_theorem(std::string_view name);

struct PresetInfo {
  TheoremId id;
  std::string parity;  // "even", "odd" or "any"
  int default_kappa;
  std::string functional;
  std::string limit;
};
const std::vector<PresetInfo>& presets();

struct ExperimentConfig {
  TheoremId theorem = TheoremId::kl_quadratic;
  int kappa = 2;
  std::string weight_name = "one";
  std::vector<int> levels{8, 12, 16};
  std::vector<double> times{0.5, 1.0};
  std::vector<double> x_sites;
  int replicates = 2000;
  std::uint64_t master_seed = 1;
  double alpha = 0.005;
  int permutations = 499;
  int energy_rows = 2000;  // rows per side entering the energy test
  int limit_level = 16;
  int retries = 2;
  unsigned workers = 0;    // 0: all cores
  // Block functional parameters (prop_incr).
  double phi_even = 1.4142135623730951;
  double phi_odd = 0.0;
  std::vector<double> poly{-1.0, 0.0, 1.0};  // x^2 - 1
  int blocks = 2;
  // Replace the finite-n side by an independent limit ensemble.
  bool null_mode = false;

  void validate() const;
};

ExperimentConfig default_config(TheoremId id);
nlohmann::json to_json(const ExperimentConfig& c);
// Fields present in `j` override `base`.
ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base);

// One replicate ensemble at one level: rows of `dim` values, the first
// `marginal_count` of which are the functional (at `marginal_times`), the
// rest X at the configured sites.
struct LevelSamples {
  int n = 0;
  std::size_t dim = 0;
  std::vector<double> marginal_times;
  std::vector<double> finite;
  std::vector<double> limit;

  std::size_t rows_finite() const { return dim ? finite.size() / dim : 0; }
  std::size_t rows_limit() const { return dim ? limit.size() / dim : 0; }
  std::vector<double> column(bool finite_side, std::size_t k) const;
};

// Stream ids: level in bits 48.., role (0 finite, 1 limit, 2 null twin) in
// bits 40..47, replicate below.
std::uint64_t replicate_stream_id(int level, int role, std::uint64_t replicate);

// Normalized finite-n row for one replicate.
std::vector<double> finite_row(const ExperimentConfig& c, int level,
                               std::uint64_t seed, std::uint64_t replicate);
// Limit row for one replicate (fresh draw per level).
std::vector<double> limit_row(const ExperimentConfig& c, int level,
                              std::uint64_t seed, std::uint64_t replicate,
                              int role = 1);

LevelSamples draw_ensembles(const ExperimentConfig& c, int level, std::uint64_t seed);

struct MarginalStat {
  double t = 0.0;
  double ks_stat = 0.0;
  double ks_p = 1.0;
};

struct LevelReport {
  int n = 0;
  int replicates = 0;
  std::vector<MarginalStat> marginals;
  double energy_stat = 0.0;
  double perm_p = 1.0;
  int energy_rows = 0;
  double std_ratio = 0.0;
  double finite_std = 0.0;
  double limit_std = 0.0;
};

struct AttemptReport {
  std::uint64_t seed = 0;
  std::vector<LevelReport> levels;
  int energy_inversions = 0;
  bool passed = false;
};

struct StatReport {
  ExperimentConfig config;
  std::vector<AttemptReport> attempts;
  bool passed = false;
  double runtime_seconds = 0.0;

  const AttemptReport& final_attempt() const { return attempts.back(); }
};

struct ExperimentResult {
  StatReport report;
  std::vector<LevelSamples> samples;  // of the final attempt
};

std::vector<MarginalStat> marginal_tests(const LevelSamples& s);
LevelReport level_report(const ExperimentConfig& c, const LevelSamples& s,
                         std::uint64_t seed);

// Runs every level, retrying with fresh seeds (up to c.retries times) when
// the finest level fails or the energy statistic increases more than once.
ExperimentResult run_experiment(const ExperimentConfig& c);

// Seed of retry `attempt` (attempt 0 is the master seed).
std::uint64_t attempt_seed(std::uint64_t master, int attempt);

nlohmann::json report_to_json(const StatReport& r, bool include_timing = true);
void export_report(const StatReport& r, const std::filesystem::path& path);
// `label` replaces the theorem id in the first column when nonempty.
void export_samples(const ExperimentConfig& c, const std::vector<LevelSamples>& s,
                    const std::filesystem::path& path, std::string_view label = {});
// Reads back the marginal columns written by export_samples.
std::vector<LevelSamples> read_samples_csv(const std::filesystem::path& path);

// ---------------------------------------------------------------- identities

using SpaceSumFn =
    std::function<double(const VariationSpec&, const CrossingTally&, SpatialField&)>;

struct IdentityOptions {
  std::vector<int> kappas{2, 3, 4, 5, 6};
  std::vector<int> levels{4, 8, 12};
  std::vector<std::string> weights;  // empty: whole registry
  double tolerance = 1e-9;
  // Every `coupled_every`-th instance takes its walk from a fine path.
  int coupled_every = 4;
  SpaceSumFn space_sum;  // empty: v_space_sum; overridable for negative controls
};

struct IdentityFailure {
  std::string identity;
  int kappa = 0;
  int n = 0;
  std::string weight;
  double t = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double rel_error = 0.0;
  std::vector<std::int64_t> walk;     // shortest failing prefix
  std::int64_t field_lo = 0;
  std::vector<double> field_values;   // X on [field_lo, ...]
};

struct IdentityReport {
  int instances = 0;
  int checks = 0;
  double max_rel_error = 0.0;
  bool passed = true;
  std::optional<IdentityFailure> failure;
  double runtime_seconds = 0.0;
};

// |a - b| / max(|a|, |b|, 1e-6 * magnitude): magnitude is the sum of the
// absolute terms, so exact cancellations are judged against rounding scale.
double identity_error(double a, double b, double magnitude);

IdentityReport identity_suite(std::uint64_t seed, int trials,
                              const IdentityOptions& options = {});
nlohmann::json identity_to_json(const IdentityReport& r);

}  // namespace ibmvar
