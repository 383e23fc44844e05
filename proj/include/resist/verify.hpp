#pragma once

// Property checks for the smoothing lemmas, the lower-bound theorems and the
// matching upper rate. Every check is a pure function of its arguments and seed.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "resist/adversary.hpp"
#include "resist/io.hpp"
#include "resist/solvers.hpp"

namespace resist {

/// Worst observed value of one sub-check next to the tolerance it is held to.
struct Component {
  double worst = -std::numeric_limits<double>::infinity();
  double tolerance = 0.0;
};

/// Outcome of one check. `worst_violation` is the largest excess of a
/// component over its tolerance, so the check passes iff it is <= `tolerance`
/// (always 0 for aggregated checks).
struct CheckReport {
  std::string check_id;
  std::size_t trials = 0;
  double worst_violation = -std::numeric_limits<double>::infinity();
  double tolerance = 0.0;
  bool pass = false;
  Json witness;  // inputs of the worst trial; null when there were no trials
  std::map<std::string, Component> components;
};

Json report_to_json(const CheckReport& report);

/// Random chains of t pieces in R^n and random point pairs; evaluates the
/// sandwich, Lipschitz value, Lipschitz gradient, locality, optimality and
/// dual-feasibility properties of the exact envelope.
CheckReport check_smoothing_lemmas(Index n, Index t, double mu, std::size_t trials, std::uint64_t seed);

/// Everything produced by one adversary-vs-method run.
struct LowerBoundRun {
  CheckReport report;
  std::optional<Instance> instance;
  BoundReport bounds;
  RunRecord run;
  std::vector<LogEntry> log;
};

/// Runs `method_id` against the adversary for exactly T calls and certifies
/// the value floor, the residual bound, trajectory replay and sampled
/// indistinguishability. Throws ConfigError if the method cannot handle q.
LowerBoundRun run_lower_bound(const AdversaryConfig& config, const std::string& method_id,
                              std::uint64_t seed = 0, std::size_t ball_samples = 100);
CheckReport check_lower_bound(const AdversaryConfig& config, const std::string& method_id,
                              std::uint64_t seed = 0);

/// Finalizes an instance against "fgm", solves it, and compares |x*| with the
/// closed-form solution size bound. Throws ConvergenceError if the solve fails.
CheckReport check_solution_bound(const AdversaryConfig& config, std::uint64_t seed = 0);

/// Holder self-consistency, delta * mu = 4, and the agreement of the theorem
/// constant with its parameter form, over a list of configurations.
CheckReport check_parameter_identities(const std::vector<AdversaryConfig>& configs);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t points = 0;
};

/// Least-squares fit of log r_k against log k for k in [k_lo, k_hi], where
/// curve[k - 1] is the residual after k calls.
RateFit estimate_rate(std::span<const double> curve, std::size_t k_lo, std::size_t k_hi);

struct UpperRateOptions {
  double power = 3.0;
  double holder = 1.0;
  double sigma = 1.0;
  int budget = 64;                 // adversary T (n = T)
  std::size_t run_calls = 10'000;  // calls on the frozen instance
  std::size_t reference_factor = 100;
  std::size_t k_lo = 16;
  std::size_t k_hi = 512;
  double max_slope = -5.0;
};

/// Freezes an adversarial instance after T calls of fgm_restart, reruns
/// fgm_restart on it, and fits the slope of the best-so-far residual against a
/// reference value from a longer run.
CheckReport check_upper_rate(const UpperRateOptions& options);

enum class Scale { kSmall, kFull };

struct VerifySummary {
  std::vector<CheckReport> reports;
  bool all_pass() const;
  /// Fixed-width table, one line per report.
  std::string table() const;
};

/// The full property grid. Cells run concurrently on up to `workers` threads
/// (0 selects the hardware concurrency); results are in a fixed order.
VerifySummary run_verify(Scale scale, std::uint64_t seed, unsigned workers = 0);

/// Grid used by the lower-bound certification: p in {2.5, 3, 4}, nu in {0, 0.5, 1}
/// with nu < p - 1, the given budgets with n = T, q = 2.
std::vector<AdversaryConfig> euclidean_grid(const std::vector<int>& budgets);

}  // namespace resist
