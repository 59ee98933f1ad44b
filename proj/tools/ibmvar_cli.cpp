// ibmvar: identity suites, convergence experiments and raw simulations.
//
// Exit codes: 0 pass, 1 statistical failure, 2 usage or configuration error.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ibmvar/errors.hpp"
#include "ibmvar/harness.hpp"
#include "ibmvar/parallel.hpp"
#include "ibmvar/stats.hpp"

namespace fs = std::filesystem;
using namespace ibmvar;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

struct Flags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::vector<int> levels;
  std::optional<int> kappa;
  std::optional<std::string> weight;
  std::vector<double> times;
  std::optional<int> replicates;
  std::optional<double> alpha;
  std::optional<unsigned> workers;
  std::optional<int> limit_level;
  std::string out;
};

void add_common(CLI::App& app, Flags& f) {
  app.add_option("--config", f.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", f.seed, "master seed");
  app.add_option("--n", f.levels, "levels, comma separated")->delimiter(',');
  app.add_option("--kappa", f.kappa, "power");
  app.add_option("--weight", f.weight, "weight function name");
  app.add_option("--t", f.times, "times, comma separated")->delimiter(',');
  app.add_option("--replicates", f.replicates, "replicates per level and side");
  app.add_option("--alpha", f.alpha, "significance level");
  app.add_option("--workers", f.workers, "worker threads (0: all cores)");
  app.add_option("--limit-n", f.limit_level, "resolution of the limit samplers");
  app.add_option("--out", f.out, "output directory");
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot read config " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError("config " + path + ": " + e.what());
  }
}

// Defaults of the preset, then the config file, then flags.
ExperimentConfig effective_config(TheoremId id, const Flags& f) {
  ExperimentConfig c = default_config(id);
  if (!f.config_path.empty()) {
    const nlohmann::json j = read_json(f.config_path);
    if (j.is_object() && j.contains("theorem_id") && j["theorem_id"].is_string() &&
        j["theorem_id"].get<std::string>() != to_string(id)) {
      throw ArgumentError("config theorem_id '" + j["theorem_id"].get<std::string>() +
                          "' conflicts with '" + std::string(to_string(id)) + "'");
    }
    c = config_from_json(j, c);
  }
  if (f.seed) c.master_seed = *f.seed;
  if (!f.levels.empty()) c.levels = f.levels;
  if (f.kappa) c.kappa = *f.kappa;
  if (f.weight) c.weight_name = *f.weight;
  if (!f.times.empty()) c.times = f.times;
  if (f.replicates) c.replicates = *f.replicates;
  if (f.alpha) c.alpha = *f.alpha;
  if (f.workers) c.workers = *f.workers;
  if (f.limit_level) c.limit_level = *f.limit_level;
  return c;
}

fs::path prepare_out(const std::string& out) {
  const fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ArgumentError("cannot create output directory " + out + ": " + ec.message());
  return dir;
}

void write_json(const nlohmann::json& j, const fs::path& path) {
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

int run_presets() {
  std::cout << std::left << std::setw(14) << "theorem_id" << std::setw(10) << "kappa"
            << "functional  =>  limit\n";
  for (const auto& p : presets()) {
    const std::string parity =
        p.parity == "any" ? "any" : p.parity + " (" + std::to_string(p.default_kappa) + ")";
    std::cout << std::setw(14) << to_string(p.id) << std::setw(10) << parity << p.functional
              << "\n" << std::setw(24) << "" << "=> " << p.limit << "\n";
  }
  return kExitPass;
}

int run_identities(std::uint64_t seed, int trials, const std::string& out) {
  const IdentityReport r = identity_suite(seed, trials);
  std::cout << "identities: " << r.instances << " instances, " << r.checks
            << " checks, max relative error " << r.max_rel_error << " -> "
            << (r.passed ? "pass" : "fail") << "\n";
  if (r.failure) {
    const auto& f = *r.failure;
    std::cout << "  first failure: " << f.identity << " kappa=" << f.kappa << " n=" << f.n
              << " weight=" << f.weight << " t=" << f.t << " lhs=" << f.lhs
              << " rhs=" << f.rhs << " (prefix of " << f.walk.size() - 1 << " steps)\n";
  }
  if (!out.empty()) {
    nlohmann::json j = identity_to_json(r);
    j["config"] = {{"seed", seed}, {"trials", trials}};
    write_json(j, prepare_out(out) / "identities.json");
  }
  return r.passed ? kExitPass : kExitFail;
}

void print_report(const StatReport& r) {
  const auto& a = r.final_attempt();
  std::cout << to_string(r.config.theorem) << " kappa=" << r.config.kappa
            << " weight=" << r.config.weight_name << " replicates=" << r.config.replicates
            << " seed=" << a.seed << " (attempt " << r.attempts.size() << " of "
            << r.config.retries + 1 << ")\n";
  for (const auto& l : a.levels) {
    std::cout << "  n=" << std::setw(2) << l.n << "  ks_p";
    for (const auto& m : l.marginals) std::cout << " t=" << m.t << ":" << m.ks_p;
    std::cout << "  energy=" << l.energy_stat << " perm_p=" << l.perm_p
              << "  std_ratio=" << l.std_ratio << "\n";
  }
  std::cout << "  energy inversions: " << a.energy_inversions << "\n";
  std::cout << "verdict: " << (r.passed ? "pass" : "fail") << " (" << r.runtime_seconds
            << " s)\n";
}

int run_verify(const std::string& id, const Flags& f) {
  const ExperimentConfig c = effective_config(parse_theorem(id), f);
  c.validate();
  const ExperimentResult result = run_experiment(c);
  print_report(result.report);
  if (!f.out.empty()) {
    const fs::path dir = prepare_out(f.out);
    export_report(result.report, dir / "report.json");
    export_samples(c, result.samples, dir / "samples.csv");
  }
  return result.report.passed ? kExitPass : kExitFail;
}

// Limit sampler names map onto the preset whose limit they draw.
std::optional<TheoremId> limit_preset(const std::string& kind, int kappa) {
  static const std::map<std::string, TheoremId> kinds = {
      {"bmrs", TheoremId::kl_quadratic}, {"wbmrs", TheoremId::thm1_even},
      {"mixed_odd", TheoremId::thm1_odd}, {"wiener_at_yt", TheoremId::thm2_even},
      {"gaussian_j", TheoremId::cor9},    {"ibm", TheoremId::kl_cubic}};
  const auto it = kinds.find(kind);
  if (it == kinds.end()) return std::nullopt;
  if (kind == "gaussian_j" && kappa % 2 == 1) return TheoremId::cor_odd;
  return it->second;
}

void print_summary(const LevelSamples& s, bool finite_side) {
  for (std::size_t k = 0; k < s.marginal_times.size(); ++k) {
    const auto m = stats::moments(s.column(finite_side, k));
    std::cout << "  n=" << s.n << " t=" << s.marginal_times[k] << "  mean=" << m.mean
              << " std=" << std::sqrt(m.variance) << "\n";
  }
}

int run_simulate(const std::string& kind, const Flags& f) {
  const std::optional<TheoremId> as_limit = limit_preset(kind, f.kappa.value_or(2));
  const TheoremId id = as_limit ? *as_limit : parse_theorem(kind);
  ExperimentConfig c = effective_config(id, f);
  if (as_limit) {
    c.x_sites.clear();
    if (kind == "wbmrs" || kind == "wiener_at_yt" || kind == "mixed_odd") {
      const bool odd = kind == "mixed_odd";
      if ((c.kappa % 2 == 1) != odd) {
        throw ArgumentError(kind + " needs an " + (odd ? "odd" : "even") + " kappa");
      }
    }
    if (c.replicates < 1) throw ArgumentError("replicates must be >= 1");
    if (c.limit_level < 2 || c.limit_level > 24) {
      throw ArgumentError("limit level must lie in [2, 24]");
    }
    for (double t : c.times) {
      if (!(t > 0.0 && t <= 1.0)) throw ArgumentError("times must lie in (0, 1]");
    }
    registry_get(c.weight_name);
  } else {
    c.validate();
  }

  std::vector<LevelSamples> all;
  const auto reps = static_cast<std::size_t>(c.replicates);
  const std::vector<int> levels = as_limit ? std::vector<int>{c.limit_level} : c.levels;
  for (int n : levels) {
    LevelSamples s;
    s.n = n;
    s.marginal_times = c.theorem == TheoremId::prop_incr
                           ? std::vector<double>(static_cast<std::size_t>(2 * c.blocks))
                           : c.times;
    if (c.theorem == TheoremId::prop_incr) {
      for (int j = 0; j < 2 * c.blocks; ++j) s.marginal_times[static_cast<std::size_t>(j)] = j + 1;
    }
    std::vector<std::vector<double>> rows(reps);
    parallel_for(reps, c.workers, [&](std::size_t r) {
      rows[r] = as_limit ? limit_row(c, n, c.master_seed, r) : finite_row(c, n, c.master_seed, r);
    });
    s.dim = rows.empty() ? s.marginal_times.size() : rows[0].size();
    auto& dst = as_limit ? s.limit : s.finite;
    for (const auto& row : rows) dst.insert(dst.end(), row.begin(), row.end());
    all.push_back(std::move(s));
  }
  std::cout << "simulate " << kind << " kappa=" << c.kappa << " weight=" << c.weight_name
            << " replicates=" << c.replicates << " seed=" << c.master_seed << "\n";
  for (const auto& s : all) print_summary(s, !as_limit);
  if (!f.out.empty()) {
    const fs::path dir = prepare_out(f.out);
    export_samples(c, all, dir / "samples.csv", as_limit ? kind : std::string_view{});
    nlohmann::json j{{"kind", kind}, {"config", to_json(c)}};
    write_json(j, dir / "simulate.json");
  }
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted power variations of iterated Brownian motion"};
  app.require_subcommand(1);

  app.add_subcommand("presets", "list theorem ids with their functionals and limits");

  auto* ident = app.add_subcommand("identities", "run the exact identity suite");
  std::uint64_t ident_seed = 1;
  int trials = 200;
  std::string ident_out;
  ident->add_option("--seed", ident_seed, "seed");
  ident->add_option("--trials", trials, "randomized instances")->check(CLI::PositiveNumber);
  ident->add_option("--out", ident_out, "output directory");

  Flags verify_flags;
  std::string theorem;
  auto* verify = app.add_subcommand("verify", "run a convergence experiment");
  verify->add_option("theorem_id", theorem, "theorem id (see presets)")->required();
  add_common(*verify, verify_flags);

  Flags sim_flags;
  std::string kind;
  auto* simulate = app.add_subcommand(
      "simulate", "raw samples: a limit sampler (bmrs, wbmrs, mixed_odd, wiener_at_yt, "
                  "gaussian_j, ibm) or the finite-n functional of a theorem id");
  simulate->add_option("kind", kind, "sampler or theorem id")->required();
  add_common(*simulate, sim_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  try {
    if (app.got_subcommand("presets")) return run_presets();
    if (app.got_subcommand(ident)) return run_identities(ident_seed, trials, ident_out);
    if (app.got_subcommand(verify)) return run_verify(theorem, verify_flags);
    if (app.got_subcommand(simulate)) return run_simulate(kind, sim_flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
