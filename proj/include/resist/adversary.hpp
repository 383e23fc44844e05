#pragma once

// Resisting oracle that builds the worst-case composite instance
//
//   F(x) = beta * S_mu[g_T](x) + (sigma / p) |x|_q^p
//
// against any deterministic first-order method, together with the closed-form
// bound quantities certified by the verification harness.

#include <cstddef>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "resist/envelope.hpp"
#include "resist/regularizer.hpp"

namespace resist {

using Eigen::VectorXd;

struct AdversaryConfig {
  double power = 3.0;   // p
  double nu = 1.0;      // Hölder degree of the smooth part
  double holder = 1.0;  // H_nu
  double sigma = 1.0;
  double norm_q = 2.0;  // 2 selects the Euclidean construction
  int budget = 4;       // T
  int dim = 4;          // n

  /// Throws ConfigError naming the violated constraint.
  void validate() const;
  bool euclidean() const noexcept { return norm_q == 2.0; }
  Regularizer regularizer() const { return {sigma, power, norm_q}; }
};

struct InstanceParams {
  double delta = 0.0;
  double mu = 0.0;
  double beta = 0.0;
};

/// f(x) and grad f(x) as returned by a first-order oracle.
struct OracleAnswer {
  double value = 0.0;
  VectorXd gradient;
};

struct LogEntry {
  VectorXd query;
  double value = 0.0;
  VectorXd gradient;
};

struct BoundReport {
  double h_star = 0.0;
  double lower_bound = 0.0;
  double value_floor = 0.0;
  std::optional<double> solution_bound;
};

/// Exponent of T in the smoothing-parameter choice: (3p - 2)/2 for q = 2,
/// (p + qp - q)/q in general.
double smoothing_T_exponent(double power, double norm_q);

InstanceParams derive_params(const AdversaryConfig& config);

/// Closed-form upper bound on F*: the minimum of
/// max_k beta * xi_k x[alpha(k)] + (sigma/p)|x|_q^p.
double hstar(const AdversaryConfig& config, const InstanceParams& params);

/// The theorem's right-hand side, computed from (p, nu, H, sigma, T, q) alone.
double lower_bound(const AdversaryConfig& config);

/// The same bound expressed through the instance parameters:
/// ((p-1)/(2p)) (beta^p / (sigma T^(p/q)))^(1/(p-1)).
double residual_bound(const AdversaryConfig& config, const InstanceParams& params);

/// Bound on |x*| for the Euclidean construction. Throws UnsupportedError for q != 2.
double solution_size_bound(const AdversaryConfig& config);

/// -4 beta T / mu, a lower bound on F at every point the method queried.
double value_floor(const AdversaryConfig& config, const InstanceParams& params);

/// A finalized worst-case instance.
class Instance {
 public:
  Instance(AdversaryConfig config, InstanceParams params, Chain chain);

  const AdversaryConfig& config() const noexcept { return config_; }
  const InstanceParams& params() const noexcept { return params_; }
  const Chain& chain() const noexcept { return chain_; }
  Regularizer regularizer() const { return config_.regularizer(); }

  /// beta * S_mu[g_T] and its gradient.
  OracleAnswer smooth(const VectorXd& x) const;
  double objective(const VectorXd& x) const;

 private:
  AdversaryConfig config_;
  InstanceParams params_;
  Chain chain_;
};

/// Single-owner mutable state of one adversary run.
class Adversary {
 public:
  explicit Adversary(const AdversaryConfig& config);

  /// Extends the chain from the query and answers with the oracle of the
  /// extended chain. Throws BudgetError once T queries have been answered.
  OracleAnswer respond(const VectorXd& x);

  const AdversaryConfig& config() const noexcept { return config_; }
  const InstanceParams& params() const noexcept { return params_; }
  int step() const noexcept { return static_cast<int>(chain_.size()); }
  bool exhausted() const noexcept { return step() >= config_.budget; }
  const Chain& chain() const noexcept { return chain_; }
  const std::set<Index>& used_coords() const noexcept { return used_; }
  const std::vector<LogEntry>& log() const noexcept { return log_; }

  /// Throws StateError unless exactly T queries were answered.
  std::pair<Instance, BoundReport> finalize() const;

 private:
  AdversaryConfig config_;
  InstanceParams params_;
  Chain chain_;
  std::set<Index> used_;
  std::vector<LogEntry> log_;
};

BoundReport bound_report(const AdversaryConfig& config, const InstanceParams& params);

}  // namespace resist
