#include "resist/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>

namespace resist {

namespace {

constexpr int kMaxDoublings = 200;
// Halving stops at this fraction of the initial L. Without a floor a linear
// smooth part drives L to zero and the step to infinity.
constexpr double kLipschitzFloor = 1e-30;

// Thrown by Tracker when the call budget is spent; never escapes this file.
struct OutOfBudget {};

struct Eval {
  double f = 0.0;
  VectorXd grad;
  double total = 0.0;  // f + psi
  std::size_t call = 0;
};

class Tracker {
 public:
  Tracker(const CompositeProblem& problem, std::size_t budget, RunRecord& record)
      : problem_(problem), budget_(budget), limit_(budget), record_(record) {}

  Eval query(const VectorXd& x) {
    if (record_.oracle_calls >= limit_) throw OutOfBudget{};
    OracleAnswer ans = problem_.smooth_oracle(x);
    if (!std::isfinite(ans.value) || ans.gradient.size() != x.size() || !ans.gradient.allFinite()) {
      std::ostringstream msg;
      msg << record_.method_id << ": oracle returned a non-finite answer at call " << record_.oracle_calls
          << " (|x| = " << x.norm() << ", f = " << ans.value << ")";
      throw NumericalError(msg.str());
    }
    Eval e{ans.value, std::move(ans.gradient), 0.0, record_.oracle_calls};
    e.total = e.f + reg_value(problem_.reg, x);
    record_.queries.push_back(x);
    record_.value_curve.push_back(e.total);
    ++record_.oracle_calls;
    if (!best_ || e.total < best_->total) {
      best_ = e;
      best_point_ = x;
    }
    return e;
  }

  const Eval& best() const { return *best_; }
  const VectorXd& best_point() const { return best_point_; }

  void accept(const Eval& e, double lipschitz = 0.0) {
    record_.iterate_calls.push_back(e.call);
    record_.lipschitz_estimate = std::max(record_.lipschitz_estimate, lipschitz);
  }

  std::size_t used() const { return record_.oracle_calls; }
  std::size_t remaining() const { return budget_ - record_.oracle_calls; }
  void set_limit(std::size_t calls_from_now) {
    limit_ = std::min(budget_, record_.oracle_calls + calls_from_now);
  }

  const CompositeProblem& problem() const { return problem_; }

 private:
  const CompositeProblem& problem_;
  std::size_t budget_;
  std::size_t limit_;
  RunRecord& record_;
  std::optional<Eval> best_;
  VectorXd best_point_;
};

void require_budget(std::size_t budget) {
  if (budget < 1) throw ConfigError("method budget must be at least one oracle call");
}

void require_euclidean(const CompositeProblem& problem, const std::string& id) {
  if (!problem.reg.euclidean()) {
    throw UnsupportedError(id + " needs the Euclidean regularizer (q = 2)");
  }
}

RunRecord start_record(const std::string& id, const CompositeProblem& problem) {
  if (problem.dim < 1) throw ConfigError("problem dimension must be positive");
  if (!problem.smooth_oracle) throw ConfigError("problem has no smooth oracle");
  RunRecord rec;
  rec.method_id = id;
  return rec;
}

void finish_record(RunRecord& rec) {
  rec.best_value = rec.value_curve.empty()
                       ? std::numeric_limits<double>::infinity()
                       : *std::min_element(rec.value_curve.begin(), rec.value_curve.end());
}

double initial_lipschitz(const CompositeProblem& problem) {
  return problem.nu == 1.0 ? problem.holder : 1.0;
}

// Upper quadratic model test with a few ulps of slack, so that probes
// collapsing onto x do not double L forever on rounding noise.
bool model_holds(double f_new, double f_old, double linear, double lipschitz, double dist_sq) {
  const double slack = 8.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(f_new), std::abs(f_old));
  return f_new <= f_old + linear + 0.5 * lipschitz * dist_sq + slack;
}

[[noreturn]] void backtracking_failed(const std::string& id, double lipschitz) {
  throw NumericalError(id + ": backtracking exceeded " + std::to_string(kMaxDoublings) +
                       " doublings (L = " + std::to_string(lipschitz) + ")");
}

struct FgmState {
  VectorXd x;
  Eval x_eval;
  double lipschitz;
  double min_lipschitz;
};

// Accelerated composite gradient method (similar-triangles form) with
// backtracking on L. Runs until the tracker's limit is hit; `state` holds the
// last accepted iterate and L on exit.
void run_fgm(Tracker& tr, FgmState& state, const std::string& id) {
  const CompositeProblem& pb = tr.problem();
  VectorXd v = state.x;
  double acc = 0.0;  // A_k
  std::optional<Eval> cached_y;
  VectorXd cached_y_point;
  if (state.x_eval.grad.size() == state.x.size()) {
    cached_y = state.x_eval;
    cached_y_point = state.x;
  }

  for (;;) {
    double lip = state.lipschitz;
    int doublings = 0;
    for (;;) {
      const double a = (1.0 + std::sqrt(1.0 + 4.0 * lip * acc)) / (2.0 * lip);
      const double next_acc = acc + a;
      const VectorXd y = (acc * state.x + a * v) / next_acc;
      Eval ey;
      if (cached_y && y == cached_y_point) {
        ey = *cached_y;
      } else {
        ey = tr.query(y);
        cached_y = ey;
        cached_y_point = y;
      }
      const VectorXd v_next = euclidean_power_prox(pb.reg, VectorXd(v - a * ey.grad), 1.0 / a);
      const VectorXd x_next = (acc * state.x + a * v_next) / next_acc;
      const Eval ex = tr.query(x_next);
      const VectorXd step = x_next - y;
      if (model_holds(ex.f, ey.f, ey.grad.dot(step), lip, step.squaredNorm())) {
        state.x = x_next;
        state.x_eval = ex;
        v = v_next;
        acc = next_acc;
        tr.accept(ex, lip);
        state.lipschitz = std::max(lip / 2.0, state.min_lipschitz);
        break;
      }
      if (++doublings > kMaxDoublings) backtracking_failed(id, lip);
      lip *= 2.0;
    }
  }
}

}  // namespace

std::size_t RunRecord::best_call() const {
  if (value_curve.empty()) throw StateError("run record has no queries");
  return static_cast<std::size_t>(std::min_element(value_curve.begin(), value_curve.end()) - value_curve.begin());
}

CompositeProblem make_problem(const Instance& instance) {
  CompositeProblem pb;
  pb.smooth_oracle = [&instance](const VectorXd& x) { return instance.smooth(x); };
  pb.reg = instance.regularizer();
  pb.dim = instance.config().dim;
  pb.nu = instance.config().nu;
  pb.holder = instance.config().holder;
  return pb;
}

StepRule default_step_rule(const CompositeProblem& problem) {
  const double c = 1.0 / (problem.holder + problem.reg.sigma + 1.0);
  return [c](std::size_t k) { return c / std::sqrt(double(k)); };
}

RunRecord subgradient_method(const CompositeProblem& problem, std::size_t budget, const StepRule& step_rule) {
  require_budget(budget);
  RunRecord rec = start_record("subgradient", problem);
  const StepRule rule = step_rule ? step_rule : default_step_rule(problem);
  Tracker tr(problem, budget, rec);
  VectorXd x = VectorXd::Zero(problem.dim);
  try {
    for (std::size_t k = 1;; ++k) {
      const Eval e = tr.query(x);
      tr.accept(e);
      x -= rule(k) * (e.grad + reg_subgrad(problem.reg, x));
    }
  } catch (const OutOfBudget&) {
  }
  finish_record(rec);
  return rec;
}

RunRecord prox_gradient(const CompositeProblem& problem, std::size_t budget) {
  require_budget(budget);
  require_euclidean(problem, "prox_grad");
  RunRecord rec = start_record("prox_grad", problem);
  Tracker tr(problem, budget, rec);
  try {
    VectorXd x = VectorXd::Zero(problem.dim);
    Eval ex = tr.query(x);
    tr.accept(ex);
    double lip = initial_lipschitz(problem);
    const double min_lip = kLipschitzFloor * lip;
    for (;;) {
      int doublings = 0;
      for (;;) {
        const VectorXd y = euclidean_power_prox(problem.reg, VectorXd(x - ex.grad / lip), lip);
        const Eval ey = tr.query(y);
        const VectorXd step = y - x;
        if (model_holds(ey.f, ex.f, ex.grad.dot(step), lip, step.squaredNorm())) {
          // Rounding can leave F(y) a hair above F(x) at a fixed point; keep x then.
          if (ey.total <= ex.total) {
            x = y;
            ex = ey;
            tr.accept(ey, lip);
          }
          lip = std::max(lip / 2.0, min_lip);
          break;
        }
        if (++doublings > kMaxDoublings) backtracking_failed("prox_grad", lip);
        lip *= 2.0;
      }
    }
  } catch (const OutOfBudget&) {
  }
  finish_record(rec);
  return rec;
}

RunRecord fgm_composite(const CompositeProblem& problem, std::size_t budget) {
  require_budget(budget);
  require_euclidean(problem, "fgm");
  RunRecord rec = start_record("fgm", problem);
  Tracker tr(problem, budget, rec);
  const double lip0 = initial_lipschitz(problem);
  FgmState state{VectorXd::Zero(problem.dim), Eval{}, lip0, kLipschitzFloor * lip0};
  try {
    run_fgm(tr, state, "fgm");
  } catch (const OutOfBudget&) {
  }
  finish_record(rec);
  return rec;
}

RunRecord fgm_restart(const CompositeProblem& problem, std::size_t budget) {
  require_budget(budget);
  require_euclidean(problem, "fgm_restart");
  RunRecord rec = start_record("fgm_restart", problem);
  Tracker tr(problem, budget, rec);
  const double lip0 = initial_lipschitz(problem);
  FgmState state{VectorXd::Zero(problem.dim), Eval{}, lip0, kLipschitzFloor * lip0};
  std::size_t round_length = kRestartFirstRound;
  while (tr.remaining() > 0) {
    const std::size_t round_start = tr.used();
    tr.set_limit(round_length);
    try {
      run_fgm(tr, state, "fgm_restart");
    } catch (const OutOfBudget&) {
    }
    // Restart from the best point seen so far with its known oracle answer.
    if (tr.used() > round_start) {
      state.x = tr.best_point();
      state.x_eval = tr.best();
    }
    round_length *= 2;
  }
  finish_record(rec);
  return rec;
}

ReferenceSolution reference_solve(const CompositeProblem& problem, double tol, std::size_t call_cap) {
  require_euclidean(problem, "reference_solve");
  if (!(tol > 0.0)) throw ConfigError("reference_solve tolerance must be positive");
  ReferenceSolution out;
  std::optional<double> previous;
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t budget = 1000; out.calls + budget <= call_cap; budget *= 4) {
    RunRecord rec = fgm_restart(problem, budget);
    out.calls += rec.oracle_calls;
    const std::size_t best = rec.best_call();
    if (previous) {
      gap = std::abs(*previous - rec.best_value);
      if (gap <= tol * (1.0 + std::abs(rec.best_value))) {
        out.x = rec.queries[best];
        out.value = rec.best_value;
        out.last_gap = gap;
        return out;
      }
    }
    previous = rec.best_value;
  }
  throw ConvergenceError("reference_solve: call cap of " + std::to_string(call_cap) +
                             " reached before successive best values agreed",
                         gap);
}

void attach_residuals(RunRecord& record, double f_star) {
  std::vector<double> res(record.value_curve.size());
  std::transform(record.value_curve.begin(), record.value_curve.end(), res.begin(),
                 [f_star](double v) { return v - f_star; });
  record.residual_curve = std::move(res);
}

namespace {

struct MethodEntry {
  Method run;
  bool needs_euclidean;
};

std::map<std::string, MethodEntry>& registry() {
  static std::map<std::string, MethodEntry> methods = {
      {"subgradient",
       {[](const CompositeProblem& pb, std::size_t b) { return subgradient_method(pb, b); }, false}},
      {"prox_grad", {prox_gradient, true}},
      {"fgm", {fgm_composite, true}},
      {"fgm_restart", {fgm_restart, true}},
  };
  return methods;
}

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

Method method_by_id(const std::string& id) {
  std::lock_guard lock(registry_mutex());
  const auto it = registry().find(id);
  if (it == registry().end()) throw ConfigError("unknown method identifier '" + id + "'");
  return it->second.run;
}

std::vector<std::string> method_ids() {
  std::lock_guard lock(registry_mutex());
  std::vector<std::string> ids;
  for (const auto& [id, entry] : registry()) ids.push_back(id);
  return ids;
}

bool method_supports(const std::string& id, double norm_q) {
  std::lock_guard lock(registry_mutex());
  const auto it = registry().find(id);
  if (it == registry().end()) throw ConfigError("unknown method identifier '" + id + "'");
  return !it->second.needs_euclidean || norm_q == 2.0;
}

void register_method(const std::string& id, Method method, bool needs_euclidean) {
  std::lock_guard lock(registry_mutex());
  registry()[id] = {std::move(method), needs_euclidean};
}

}  // namespace resist
