#pragma once

// Deterministic first-order methods in the black-box oracle model.
//
// Every method starts from x = 0, reads the smooth part only through
// `CompositeProblem::smooth_oracle` plus the declared regularizer and Hölder
// metadata, and stops after exactly `budget` oracle calls (or earlier only on
// error). Each call, including line-search probes, is one query.

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "resist/adversary.hpp"
#include "resist/regularizer.hpp"

namespace resist {

using SmoothOracle = std::function<OracleAnswer(const VectorXd&)>;

struct CompositeProblem {
  SmoothOracle smooth_oracle;
  Regularizer reg;
  Index dim = 0;
  double nu = 1.0;
  double holder = 1.0;
};

/// Problem view of a finalized instance (oracle answers from the instance).
CompositeProblem make_problem(const Instance& instance);

struct RunRecord {
  std::string method_id;
  std::vector<VectorXd> queries;
  std::vector<double> value_curve;  // F at each query, in call order
  std::vector<std::size_t> iterate_calls;  // zero-based calls holding accepted iterates
  std::size_t oracle_calls = 0;
  double best_value = 0.0;
  double lipschitz_estimate = 0.0;  // largest accepted L (line-search methods)
  std::optional<std::vector<double>> residual_curve;

  /// Index of the call with the smallest F; ties go to the earliest call.
  std::size_t best_call() const;
  const VectorXd& best_point() const { return queries.at(best_call()); }
};

/// Step size gamma_k for the k-th (1-based) subgradient step.
using StepRule = std::function<double(std::size_t k)>;

/// gamma_k = c / sqrt(k) with c = 1 / (H + sigma + 1).
StepRule default_step_rule(const CompositeProblem& problem);

RunRecord subgradient_method(const CompositeProblem& problem, std::size_t budget,
                             const StepRule& step_rule = {});
RunRecord prox_gradient(const CompositeProblem& problem, std::size_t budget);
RunRecord fgm_composite(const CompositeProblem& problem, std::size_t budget);
RunRecord fgm_restart(const CompositeProblem& problem, std::size_t budget);

/// First round length of `fgm_restart`; round i has 8 * 2^i calls.
inline constexpr std::size_t kRestartFirstRound = 8;

struct ReferenceSolution {
  VectorXd x;
  double value = 0.0;
  std::size_t calls = 0;  // total over all escalation runs
  double last_gap = 0.0;  // |difference| of the last two best values
};

/// Escalates the budget of fgm_restart until two successive best values agree to
/// tol * (1 + |best|). The returned value is an upper bound on F*.
ReferenceSolution reference_solve(const CompositeProblem& problem, double tol,
                                  std::size_t call_cap = 10'000'000);

/// Fills `residual_curve` with F(x_k) - f_star.
void attach_residuals(RunRecord& record, double f_star);

using Method = std::function<RunRecord(const CompositeProblem&, std::size_t)>;

/// "subgradient" | "prox_grad" | "fgm" | "fgm_restart", plus anything registered.
/// Throws ConfigError for unknown identifiers.
Method method_by_id(const std::string& id);
std::vector<std::string> method_ids();
/// Whether the method can run on a regularizer with the given norm q.
bool method_supports(const std::string& id, double norm_q);

/// Adds (or replaces) a method under `id`; `needs_euclidean` marks prox-based methods.
void register_method(const std::string& id, Method method, bool needs_euclidean);

}  // namespace resist
