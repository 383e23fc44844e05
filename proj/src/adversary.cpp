#include "resist/adversary.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace resist {

namespace {

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

void AdversaryConfig::validate() const {
  std::ostringstream why;
  if (!(std::isfinite(power) && power >= 2.0)) {
    why << "power p = " << power << " must satisfy p >= 2";
  } else if (!(std::isfinite(nu) && nu >= 0.0 && nu <= 1.0)) {
    why << "Hölder degree nu = " << nu << " must lie in [0, 1]";
  } else if (!(nu < power - 1.0)) {
    why << "Hölder degree must satisfy nu < p - 1 (got nu = " << nu << ", p = " << power << ")";
  } else if (!finite_positive(holder)) {
    why << "Hölder constant H = " << holder << " must be positive";
  } else if (!finite_positive(sigma)) {
    why << "regularization sigma = " << sigma << " must be positive";
  } else if (!(std::isfinite(norm_q) && norm_q >= 1.0)) {
    why << "norm q = " << norm_q << " must satisfy q >= 1";
  } else if (budget < 1) {
    why << "budget T = " << budget << " must be positive";
  } else if (dim < 1) {
    why << "dimension n = " << dim << " must be positive";
  } else if (budget > dim) {
    why << "budget T = " << budget << " must not exceed the dimension n = " << dim;
  }
  const std::string msg = why.str();
  if (!msg.empty()) throw ConfigError(msg);
}

double smoothing_T_exponent(double power, double norm_q) {
  return (power + norm_q * power - norm_q) / norm_q;
}

InstanceParams derive_params(const AdversaryConfig& config) {
  config.validate();
  const double p = config.power;
  const double nu = config.nu;
  const double gap = p - 1.0 - nu;
  // log(sigma * T^e) where e is the smoothing exponent
  const double log_st =
      std::log(config.sigma) + smoothing_T_exponent(p, config.norm_q) * std::log(double(config.budget));

  const double log_beta =
      (p - 1.0) / gap * (std::log(0.5) + nu * std::log((p - 1.0) / (4.0 * p)) + std::log(config.holder)) -
      nu / gap * log_st;
  const double log_mu = std::log(8.0 * p / (p - 1.0)) + (log_st - log_beta) / (p - 1.0);

  InstanceParams out;
  out.beta = std::exp(log_beta);
  out.mu = std::exp(log_mu);
  out.delta = 4.0 / out.mu;
  if (!finite_positive(out.beta) || !finite_positive(out.mu) || !finite_positive(out.delta)) {
    throw NumericalError("instance parameters leave the double range (log beta = " +
                         std::to_string(log_beta) + ", log mu = " + std::to_string(log_mu) + ")");
  }
  return out;
}

double hstar(const AdversaryConfig& config, const InstanceParams& params) {
  const double p = config.power;
  const double log_inner = p * std::log(params.beta) - std::log(config.sigma) -
                           p / config.norm_q * std::log(double(config.budget));
  return -(p - 1.0) / p * std::exp(log_inner / (p - 1.0));
}

double residual_bound(const AdversaryConfig& config, const InstanceParams& params) {
  return -0.5 * hstar(config, params);
}

double lower_bound(const AdversaryConfig& config) {
  config.validate();
  const double p = config.power;
  const double nu = config.nu;
  const double q = config.norm_q;
  const double gap = p - 1.0 - nu;
  const double log_const =
      (p - 1.0) * (1.0 + nu) / gap * std::log((p - 1.0) / p) + (2.0 * p - 1.0) * (1.0 + nu) / gap * std::log(0.5);
  const double log_ratio = std::log(config.holder) - (1.0 + nu) / p * std::log(config.sigma) -
                           (1.0 + nu + nu * q) / q * std::log(double(config.budget));
  return std::exp(log_const + p / gap * log_ratio);
}

double solution_size_bound(const AdversaryConfig& config) {
  config.validate();
  if (!config.euclidean()) {
    throw UnsupportedError("solution size bound is only available for the Euclidean norm (q = 2)");
  }
  const double p = config.power;
  const double nu = config.nu;
  const double gap = p - 1.0 - nu;
  const double log_bound =
      std::log(3.0 * (p - 1.0) * std::pow(2.0, p - 3.0)) / p +
      (std::log(0.5) + nu * std::log((p - 1.0) / (4.0 * p))) / gap +
      (std::log(config.holder) - std::log(config.sigma) - (1.0 + 3.0 * nu) / 2.0 * std::log(double(config.budget))) /
          gap;
  return std::exp(log_bound);
}

double value_floor(const AdversaryConfig& config, const InstanceParams& params) {
  return -4.0 * params.beta * double(config.budget) / params.mu;
}

BoundReport bound_report(const AdversaryConfig& config, const InstanceParams& params) {
  BoundReport out;
  out.h_star = hstar(config, params);
  out.lower_bound = lower_bound(config);
  out.value_floor = value_floor(config, params);
  if (config.euclidean()) out.solution_bound = solution_size_bound(config);
  return out;
}

Instance::Instance(AdversaryConfig config, InstanceParams params, Chain chain)
    : config_(config), params_(params), chain_(std::move(chain)) {
  config_.validate();
  if (chain_.dim() != config_.dim) throw InputError("instance chain dimension differs from config dimension");
}

OracleAnswer Instance::smooth(const VectorXd& x) const {
  const Envelope env = envelope(chain_, x, params_.mu);
  return {params_.beta * env.value, params_.beta * env.gradient};
}

double Instance::objective(const VectorXd& x) const {
  return smooth(x).value + reg_value(regularizer(), x);
}

Adversary::Adversary(const AdversaryConfig& config)
    : config_(config), params_(derive_params(config)), chain_(config.dim, params_.delta) {}

OracleAnswer Adversary::respond(const VectorXd& x) {
  if (exhausted()) {
    throw BudgetError("adversary budget of " + std::to_string(config_.budget) + " queries is exhausted");
  }
  if (x.size() != config_.dim) {
    throw InputError("query has dimension " + std::to_string(x.size()) + ", expected " +
                     std::to_string(config_.dim));
  }
  if (!x.allFinite()) throw InputError("query point is not finite");

  // Largest |x_i| among the first T coordinates not used yet; ties go to the smallest index.
  Index chosen = -1;
  double largest = -1.0;
  for (Index i = 0; i < config_.budget; ++i) {
    if (used_.count(i) != 0) continue;
    if (std::abs(x(i)) > largest) {
      largest = std::abs(x(i));
      chosen = i;
    }
  }
  const int sign = x(chosen) < 0.0 ? -1 : 1;
  chain_.push_back({chosen, sign, double(chain_.size()) * params_.delta});
  used_.insert(chosen);

  const Envelope env = envelope(chain_, x, params_.mu);
  OracleAnswer answer{params_.beta * env.value, params_.beta * env.gradient};
  log_.push_back({x, answer.value, answer.gradient});
  return answer;
}

std::pair<Instance, BoundReport> Adversary::finalize() const {
  if (!exhausted()) {
    throw StateError("cannot finalize after " + std::to_string(step()) + " of " +
                     std::to_string(config_.budget) + " queries");
  }
  return {Instance(config_, params_, chain_), bound_report(config_, params_)};
}

}  // namespace resist
