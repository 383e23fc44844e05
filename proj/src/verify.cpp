#include "resist/verify.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace resist {

namespace {

using Rng = std::mt19937_64;

Json vec_json(const VectorXd& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Json chain_json(const Chain& chain) {
  Json pieces = Json::array();
  for (const Piece& p : chain.pieces()) pieces.push_back({{"coord", p.coord + 1}, {"sign", p.sign}, {"offset", p.offset}});
  return Json{{"n", chain.dim()}, {"delta", chain.delta()}, {"pieces", pieces}};
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Collects per-component worst violations and the witness of the worst trial.
class Tally {
 public:
  void observe(const std::string& name, double violation, double tolerance,
               const std::function<Json()>& witness = {}) {
    Component& c = components_[name];
    c.tolerance = tolerance;
    if (!(violation <= c.worst) || std::isnan(violation)) c.worst = violation;
    const double excess = std::isnan(violation) ? std::numeric_limits<double>::infinity() : violation - tolerance;
    if (excess > worst_excess_) {
      worst_excess_ = excess;
      if (witness) {
        witness_ = witness();
        witness_["component"] = name;
      }
    }
  }

  CheckReport finish(std::string id, std::size_t trials) const {
    CheckReport r;
    r.check_id = std::move(id);
    r.trials = trials;
    r.components = components_;
    r.worst_violation = worst_excess_;
    r.tolerance = 0.0;
    r.pass = !components_.empty() && worst_excess_ <= 0.0;
    r.witness = witness_;
    return r;
  }

 private:
  std::map<std::string, Component> components_;
  double worst_excess_ = -std::numeric_limits<double>::infinity();
  Json witness_;
};

VectorXd gaussian(Rng& rng, Index n) {
  std::normal_distribution<double> nd;
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = nd(rng);
  return v;
}

// Uniform sample from the ball of radius r around c.
VectorXd in_ball(Rng& rng, const VectorXd& c, double r) {
  VectorXd d = gaussian(rng, c.size());
  const double nrm = d.norm();
  if (nrm == 0.0) return c;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return c + d * (r * std::pow(u(rng), 1.0 / double(c.size())) / nrm);
}

Chain random_chain(Rng& rng, Index n, Index t, double mu) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Index> coords(static_cast<std::size_t>(n));
  std::iota(coords.begin(), coords.end(), Index(0));
  std::shuffle(coords.begin(), coords.end(), rng);
  const bool regular = u(rng) < 0.5;
  const double delta = regular ? 4.0 / mu * (0.25 + 2.0 * u(rng)) : 1.0;
  Chain chain(n, delta);
  for (Index k = 0; k < t; ++k) {
    const int sign = u(rng) < 0.5 ? -1 : 1;
    const double offset = regular ? double(k) * delta : 3.0 / mu * u(rng) * double(t);
    chain.push_back({coords[std::size_t(k)], sign, offset});
  }
  return chain;
}

double g_of(const Chain& chain, const VectorXd& x) { return eval_max(chain, x).value; }

}  // namespace

Json report_to_json(const CheckReport& r) {
  Json comps = Json::object();
  for (const auto& [name, c] : r.components) comps[name] = {{"worst", c.worst}, {"tolerance", c.tolerance}};
  return Json{{"check_id", r.check_id}, {"trials", r.trials},   {"worst_violation", r.worst_violation},
              {"tolerance", r.tolerance}, {"pass", r.pass},    {"witness", r.witness},
              {"components", comps}};
}

CheckReport check_smoothing_lemmas(Index n, Index t, double mu, std::size_t trials, std::uint64_t seed) {
  if (t < 1 || t > n) throw ConfigError("smoothing check needs 1 <= t <= n");
  if (!(mu > 0.0)) throw ConfigError("smoothing check needs mu > 0");
  if (trials < 1) throw ConfigError("smoothing check needs at least one trial");
  constexpr double tol = 1e-10;
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tally tally;
  const double scales[] = {1.0 / mu, 1.0, 10.0};

  for (std::size_t trial = 0; trial < trials; ++trial) {
    const Chain chain = random_chain(rng, n, t, mu);
    const double scale = scales[trial % 3];
    const VectorXd x = scale * gaussian(rng, n);
    const double r = std::pow(10.0, 4.0 * u(rng) - 2.0) / mu;
    const VectorXd dir = gaussian(rng, n).normalized();
    const VectorXd y = x + r * dir;
    const VectorXd far = x + scale * gaussian(rng, n);

    const Envelope ex = envelope(chain, x, mu);
    const Envelope ey = envelope(chain, y, mu);
    const double gx = g_of(chain, x);
    const double gz = g_of(chain, ex.prox_point);
    auto witness = [&] {
      return Json{{"trial", trial}, {"mu", mu}, {"chain", chain_json(chain)}, {"x", vec_json(x)}, {"y", vec_json(y)}};
    };

    tally.observe("sandwich_lower", ex.value - gx, tol, witness);
    tally.observe("sandwich_upper", (gx - ex.value) - 1.0 / (2.0 * mu), tol, witness);
    tally.observe("lipschitz_value", std::abs(ex.value - ey.value) - (x - y).norm(), tol, witness);
    tally.observe("gradient_bound", ex.gradient.norm() - 1.0, tol, witness);
    tally.observe("lipschitz_gradient", (ex.gradient - ey.gradient).norm() - mu * (x - y).norm(), tol, witness);
    tally.observe("prox_in_ball", (ex.prox_point - x).norm() - 2.0 / mu, tol, witness);
    tally.observe("prox_in_inner_ball", (ex.prox_point - x).norm() - 1.0 / mu, tol, witness);
    // mu (z - x) is -grad G(x); using the gradient avoids the cancellation in
    // z - x when |x| is much larger than 1/mu.
    for (const VectorXd* probe : {&y, &far}) {
      const double lhs = -ex.gradient.dot(*probe - ex.prox_point) + g_of(chain, *probe);
      tally.observe("optimality_condition", gz - lhs, tol, witness);
    }
    tally.observe("dual_feasibility",
                  std::max(std::abs(ex.dual_weights.sum() - 1.0), -ex.dual_weights.minCoeff()), 1e-12, witness);
  }
  std::ostringstream id;
  id << "smoothing_lemmas[n=" << n << ",t=" << t << ",mu=" << mu << "]";
  return tally.finish(id.str(), trials);
}

LowerBoundRun run_lower_bound(const AdversaryConfig& config, const std::string& method_id, std::uint64_t seed,
                              std::size_t ball_samples) {
  config.validate();
  if (!method_supports(method_id, config.norm_q)) {
    throw ConfigError("method '" + method_id + "' does not support q = " + std::to_string(config.norm_q));
  }
  const Method method = method_by_id(method_id);

  Adversary adversary(config);
  CompositeProblem problem;
  problem.smooth_oracle = [&adversary](const VectorXd& x) { return adversary.respond(x); };
  problem.reg = config.regularizer();
  problem.dim = config.dim;
  problem.nu = config.nu;
  problem.holder = config.holder;

  LowerBoundRun out;
  out.run = method(problem, static_cast<std::size_t>(config.budget));
  if (adversary.step() != config.budget) {
    throw StateError("method '" + method_id + "' made " + std::to_string(adversary.step()) + " of " +
                     std::to_string(config.budget) + " oracle calls");
  }
  auto [instance, bounds] = adversary.finalize();
  out.bounds = bounds;
  out.log = adversary.log();
  const InstanceParams& prm = instance.params();
  const Regularizer reg = config.regularizer();
  const int T = config.budget;

  Tally tally;
  const VectorXd& x_last = out.log.back().query;
  const double f_last = out.run.value_curve.empty() ? std::numeric_limits<double>::infinity()
                                                    : out.run.value_curve.back();
  const double rb = residual_bound(config, prm);
  auto witness = [&] {
    return Json{{"config", config_to_json(config)}, {"method", method_id}, {"x_T", vec_json(x_last)},
                {"F_x_T", f_last}, {"h_star", bounds.h_star}, {"residual_bound", rb},
                {"value_floor", bounds.value_floor}, {"instance", instance_to_json(instance)}};
  };

  constexpr double rel = 1e-12;
  tally.observe("value_floor", (bounds.value_floor - f_last) / std::abs(bounds.value_floor), rel, witness);
  tally.observe("residual_bound", (rb - (f_last - bounds.h_star)) / rb, rel, witness);
  tally.observe("theorem_constant", std::abs(bounds.lower_bound - rb) / rb, 1e-10, witness);

  double worst_floor = -std::numeric_limits<double>::infinity();
  double worst_record = 0.0;
  double worst_replay = 0.0;
  for (std::size_t s = 0; s < out.log.size(); ++s) {
    const LogEntry& e = out.log[s];
    const OracleAnswer replay = instance.smooth(e.query);
    worst_replay = std::max({worst_replay, std::abs(replay.value - e.value),
                             (replay.gradient - e.gradient).lpNorm<Eigen::Infinity>()});
    const double total = e.value + reg_value(reg, e.query);
    worst_floor = std::max(worst_floor, (bounds.value_floor - total) / std::abs(bounds.value_floor));
    if (s < out.run.value_curve.size() && s < out.run.queries.size() && out.run.queries[s] == e.query) {
      worst_record = std::max(worst_record, std::abs(out.run.value_curve[s] - total) / std::abs(bounds.h_star));
    } else {
      worst_record = std::numeric_limits<double>::infinity();
    }
  }
  tally.observe("trajectory_replay", worst_replay, 1e-9, witness);
  tally.observe("value_floor_all_queries", worst_floor, rel, witness);
  tally.observe("record_consistency", worst_record, rel, witness);

  const double g_floor = -double(T - 1) * 4.0 / prm.mu;
  tally.observe("chain_floor", (g_floor - g_of(instance.chain(), x_last)) / (std::abs(g_floor) + prm.delta), rel,
                witness);

  // g_t and g_s must coincide on the ball of radius 2/mu around x_s for s < t.
  Rng rng(seed);
  const double radius = 2.0 / prm.mu;
  double worst_indist = 0.0;
  const std::size_t t_count = instance.chain().size();
  std::vector<double> prefix(t_count);
  for (std::size_t s = 0; s < out.log.size(); ++s) {
    const VectorXd& center = out.log[s].query;
    const double scale = center.lpNorm<Eigen::Infinity>() + double(T) * prm.delta;
    for (std::size_t j = 0; j <= ball_samples; ++j) {
      const VectorXd x = j == 0 ? center : in_ball(rng, center, radius);
      double running = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < t_count; ++k) {
        running = std::max(running, instance.chain()[k](x));
        prefix[k] = running;
      }
      for (std::size_t t = s + 1; t < t_count; ++t) {
        worst_indist = std::max(worst_indist, std::abs(prefix[t] - prefix[s]) / scale);
      }
    }
  }
  tally.observe("indistinguishability", worst_indist, rel, witness);

  std::ostringstream id;
  id << "lower_bound[" << method_id << ",p=" << config.power << ",nu=" << config.nu << ",q=" << config.norm_q
     << ",T=" << T << "]";
  out.report = tally.finish(id.str(), out.log.size());
  out.instance.emplace(std::move(instance));
  return out;
}

CheckReport check_lower_bound(const AdversaryConfig& config, const std::string& method_id, std::uint64_t seed) {
  return run_lower_bound(config, method_id, seed).report;
}

CheckReport check_solution_bound(const AdversaryConfig& config, std::uint64_t seed) {
  if (!config.euclidean()) throw UnsupportedError("solution size bound is only available for q = 2");
  LowerBoundRun lb = run_lower_bound(config, "fgm", seed);
  const Instance& instance = *lb.instance;
  const CompositeProblem problem = make_problem(instance);
  const double tol = 1e-10 * std::abs(lb.bounds.h_star);
  const ReferenceSolution ref = reference_solve(problem, tol);

  // |x_hat - x*| <= (p 2^(p-2) eps / sigma)^(1/p) whenever F(x_hat) - F* <= eps.
  const double p = config.power;
  const double eps = 10.0 * std::max(ref.last_gap, tol);
  const double slack = std::pow(p * std::pow(2.0, p - 2.0) * eps / config.sigma, 1.0 / p);
  const double bound = *lb.bounds.solution_bound;

  Tally tally;
  tally.observe("solution_size", ref.x.norm() - (bound * (1.0 + 1e-6) + slack), 0.0, [&] {
    return Json{{"config", config_to_json(config)}, {"x_norm", ref.x.norm()}, {"bound", bound},
                {"slack", slack}, {"reference_value", ref.value}, {"instance", instance_to_json(instance)}};
  });
  // The reference value is an upper bound on F*, as is h_star; both sit above
  // the floor implied by the residual bound at the optimum.
  tally.observe("reference_below_hstar", (ref.value - lb.bounds.h_star) / std::abs(lb.bounds.h_star), 1e-9);
  std::ostringstream id;
  id << "solution_bound[p=" << p << ",nu=" << config.nu << ",T=" << config.budget << "]";
  return tally.finish(id.str(), 1);
}

CheckReport check_parameter_identities(const std::vector<AdversaryConfig>& configs) {
  Tally tally;
  for (const AdversaryConfig& c : configs) {
    const InstanceParams prm = derive_params(c);
    auto witness = [&] {
      return Json{{"config", config_to_json(c)}, {"beta", prm.beta}, {"mu", prm.mu}, {"delta", prm.delta}};
    };
    tally.observe("holder_identity", std::abs(holder_constant(prm.beta, prm.mu, c.nu) - c.holder) / c.holder,
                  1e-10, witness);
    tally.observe("delta_mu", std::abs(prm.delta * prm.mu - 4.0) / 4.0, 4.0 * std::numeric_limits<double>::epsilon(),
                  witness);
    const double lb = lower_bound(c);
    const double rb = residual_bound(c, prm);
    tally.observe("theorem_constant", std::abs(lb - rb) / rb, 1e-10, witness);
    tally.observe("floor_balance", std::abs(-value_floor(c, prm) - rb) / rb, 1e-10, witness);
    tally.observe("hstar_half", std::abs(-0.5 * hstar(c, prm) - rb) / rb, 1e-12, witness);
  }
  return tally.finish("parameter_identities", configs.size());
}

RateFit estimate_rate(std::span<const double> curve, std::size_t k_lo, std::size_t k_hi) {
  if (k_lo < 1 || k_hi < 2 * k_lo) throw DataError("rate window needs 1 <= k_lo and k_hi >= 2 k_lo");
  if (k_hi > curve.size()) {
    throw DataError("rate window ends at " + std::to_string(k_hi) + " but the curve has " +
                    std::to_string(curve.size()) + " points");
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double m = double(k_hi - k_lo + 1);
  for (std::size_t k = k_lo; k <= k_hi; ++k) {
    const double r = curve[k - 1];
    if (!(r > 0.0)) {
      throw DataError("residual at k = " + std::to_string(k) + " is not positive (" + std::to_string(r) + ")");
    }
    const double lx = std::log(double(k));
    const double ly = std::log(r);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  RateFit fit;
  fit.points = k_hi - k_lo + 1;
  fit.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / m;
  return fit;
}

CheckReport check_upper_rate(const UpperRateOptions& o) {
  AdversaryConfig config;
  config.power = o.power;
  config.nu = 1.0;
  config.holder = o.holder;
  config.sigma = o.sigma;
  config.norm_q = 2.0;
  config.budget = o.budget;
  config.dim = o.budget;
  LowerBoundRun lb = run_lower_bound(config, "fgm_restart", 0, 0);
  const Instance& instance = *lb.instance;
  const CompositeProblem problem = make_problem(instance);

  // Restart rounds are only cut by the budget, so a shorter run is a prefix of
  // the reference run; one long run serves both.
  const std::size_t ref_calls = o.run_calls * o.reference_factor;
  const RunRecord ref = fgm_restart(problem, ref_calls);
  const double f_ref = ref.best_value;
  const double half_best =
      *std::min_element(ref.value_curve.begin(), ref.value_curve.begin() + std::ptrdiff_t(ref_calls / 2));
  const double ref_tol = std::max(half_best - f_ref, 4.0 * std::numeric_limits<double>::epsilon() * std::abs(f_ref));
  const double floor = 10.0 * ref_tol;

  std::vector<double> residual(o.run_calls);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < o.run_calls; ++k) {
    best = std::min(best, ref.value_curve[k]);
    residual[k] = best - f_ref;
  }
  // Drop the tail that has reached the reference noise floor.
  std::size_t k_hi = o.k_hi;
  while (k_hi >= o.k_lo && !(residual[k_hi - 1] > floor)) --k_hi;

  Tally tally;
  Json witness{{"config", config_to_json(config)}, {"f_ref", f_ref}, {"ref_tol", ref_tol}, {"k_lo", o.k_lo},
               {"k_hi_requested", o.k_hi}, {"k_hi_used", k_hi}};
  std::ostringstream id;
  id << "upper_rate[p=" << o.power << ",T=" << o.budget << "]";
  if (k_hi < 2 * o.k_lo) {
    // The residual hit the reference floor before a fit window exists.
    witness["residual_at_k_lo"] = residual[o.k_lo - 1];
    tally.observe("fit_window", double(2 * o.k_lo - k_hi), 0.0, [&] { return witness; });
    return tally.finish(id.str(), 1);
  }
  const RateFit fit = estimate_rate(residual, o.k_lo, k_hi);
  witness["slope"] = fit.slope;
  witness["intercept"] = fit.intercept;
  tally.observe("slope", fit.slope - o.max_slope, 0.0, [&] { return witness; });
  return tally.finish(id.str(), 1);
}

std::vector<AdversaryConfig> euclidean_grid(const std::vector<int>& budgets) {
  std::vector<AdversaryConfig> out;
  for (double p : {2.5, 3.0, 4.0}) {
    for (double nu : {0.0, 0.5, 1.0}) {
      if (!(nu < p - 1.0)) continue;
      for (int T : budgets) {
        AdversaryConfig c;
        c.power = p;
        c.nu = nu;
        c.holder = 1.0;
        c.sigma = 1.0;
        c.norm_q = 2.0;
        c.budget = T;
        c.dim = T;
        out.push_back(c);
      }
    }
  }
  return out;
}

bool VerifySummary::all_pass() const {
  return std::all_of(reports.begin(), reports.end(), [](const CheckReport& r) { return r.pass; });
}

std::string VerifySummary::table() const {
  std::ostringstream out;
  out << std::left << std::setw(56) << "check" << std::setw(8) << "trials" << std::setw(16) << "worst_excess"
      << "verdict\n";
  for (const CheckReport& r : reports) {
    out << std::left << std::setw(56) << r.check_id << std::setw(8) << r.trials << std::setw(16)
        << std::setprecision(6) << r.worst_violation << (r.pass ? "PASS" : "FAIL") << '\n';
  }
  const auto passed = std::count_if(reports.begin(), reports.end(), [](const CheckReport& r) { return r.pass; });
  out << passed << "/" << reports.size() << " checks passed\n";
  return out.str();
}

VerifySummary run_verify(Scale scale, std::uint64_t seed, unsigned workers) {
  const bool full = scale == Scale::kFull;
  const std::size_t lemma_trials = full ? 100'000 : 10'000;
  const std::vector<int> budgets = full ? std::vector<int>{4, 8, 16, 32, 64, 128, 256} : std::vector<int>{4, 8, 16};

  std::vector<std::function<CheckReport()>> cells;
  const std::tuple<Index, Index, double> lemma_cells[] = {{6, 4, 1.0}, {8, 5, 0.1}, {8, 5, 100.0}, {6, 4, 1e6}};
  for (const auto& [n, t, mu] : lemma_cells) {
    const std::uint64_t s = mix_seed(seed, cells.size());
    cells.push_back([=] { return check_smoothing_lemmas(n, t, mu, lemma_trials, s); });
  }

  std::vector<AdversaryConfig> identity_grid = euclidean_grid(full ? std::vector<int>{4, 16, 64, 256}
                                                                    : std::vector<int>{4, 16, 64});
  for (double q : {1.0, 3.0}) {
    for (AdversaryConfig c : euclidean_grid({4, 16, 64})) {
      c.norm_q = q;
      identity_grid.push_back(c);
    }
  }
  cells.push_back([identity_grid] { return check_parameter_identities(identity_grid); });

  for (const char* method : {"subgradient", "prox_grad", "fgm", "fgm_restart"}) {
    for (const AdversaryConfig& c : euclidean_grid(budgets)) {
      const std::uint64_t s = mix_seed(seed, cells.size());
      cells.push_back([=] { return check_lower_bound(c, method, s); });
    }
  }
  for (double q : {1.0, 3.0}) {
    for (double nu : {0.0, 1.0}) {
      for (int T : full ? std::vector<int>{4, 16, 64} : std::vector<int>{4, 16}) {
        AdversaryConfig c;
        c.power = 3.0;
        c.nu = nu;
        c.norm_q = q;
        c.budget = T;
        c.dim = T;
        const std::uint64_t s = mix_seed(seed, cells.size());
        cells.push_back([=] { return check_lower_bound(c, "subgradient", s); });
      }
    }
  }
  for (int T : full ? std::vector<int>{4, 8, 16} : std::vector<int>{4, 8}) {
    AdversaryConfig c;
    c.power = 3.0;
    c.nu = 1.0;
    c.budget = T;
    c.dim = T;
    const std::uint64_t s = mix_seed(seed, cells.size());
    cells.push_back([=] { return check_solution_bound(c, s); });
  }
  // The residual stays near its starting value until well after T calls, so
  // the fit window starts at 32 T, past that plateau.
  UpperRateOptions cubic;
  cubic.budget = 16;
  cubic.k_lo = 32 * 16;
  cubic.k_hi = 128 * 16;
  cubic.run_calls = 256 * 16;
  cubic.reference_factor = full ? 100 : 10;
  UpperRateOptions quartic = cubic;
  quartic.power = 4.0;
  quartic.max_slope = -3.5;
  cells.push_back([cubic] { return check_upper_rate(cubic); });
  cells.push_back([quartic] { return check_upper_rate(quartic); });

  VerifySummary summary;
  summary.reports.resize(cells.size());
  unsigned n_workers = workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : workers;
  n_workers = std::min<unsigned>(n_workers, static_cast<unsigned>(cells.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        summary.reports[i] = cells[i]();
      } catch (const std::exception& e) {
        CheckReport r;
        r.check_id = "cell_" + std::to_string(i);
        r.worst_violation = std::numeric_limits<double>::infinity();
        r.witness = Json{{"error", e.what()}};
        summary.reports[i] = r;
      }
    }
  };
  std::vector<std::jthread> pool;
  for (unsigned w = 1; w < n_workers; ++w) pool.emplace_back(work);
  work();
  pool.clear();
  return summary;
}

}  // namespace resist
