#include "resist/figures.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <string>

#include "resist/regularizer.hpp"

namespace resist {

namespace {

std::string short_real(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void check_curve(const PiecewiseLinear1d& g) {
  if (g.slopes.empty() || g.slopes.size() != g.intercepts.size()) {
    throw InputError("piecewise-linear curve needs matching, nonempty slopes and intercepts");
  }
}

}  // namespace

double PiecewiseLinear1d::operator()(double x) const {
  check_curve(*this);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < slopes.size(); ++k) best = std::max(best, slopes[k] * x + intercepts[k]);
  return best;
}

PiecewiseLinear1d default_figure_curve() { return {{-1.0, 0.25, 1.0}, {-0.5, 0.0, -0.75}}; }

double envelope_1d(const PiecewiseLinear1d& g, double x, double mu) {
  check_curve(g);
  if (!(mu > 0.0)) throw InputError("smoothing parameter mu must be positive");
  std::vector<double> candidates;
  for (double a : g.slopes) candidates.push_back(x - a / mu);
  for (std::size_t i = 0; i < g.slopes.size(); ++i) {
    for (std::size_t j = i + 1; j < g.slopes.size(); ++j) {
      if (g.slopes[i] != g.slopes[j]) {
        candidates.push_back((g.intercepts[j] - g.intercepts[i]) / (g.slopes[i] - g.slopes[j]));
      }
    }
  }
  double best = std::numeric_limits<double>::infinity();
  for (double y : candidates) best = std::min(best, g(y) + 0.5 * mu * (y - x) * (y - x));
  return best;
}

CsvTable smoothing_table(const PiecewiseLinear1d& g, const std::vector<double>& mus, double lo, double hi,
                         std::size_t points) {
  if (mus.empty()) throw InputError("smoothing figure needs at least one mu");
  if (points < 2 || !(hi > lo)) throw InputError("smoothing figure needs points >= 2 and hi > lo");
  for (double mu : mus) {
    if (!(mu > 0.0)) throw InputError("smoothing figure needs positive mu values");
  }
  CsvTable t;
  t.header = {"x", "g"};
  for (double mu : mus) t.header.push_back("S_mu=" + short_real(mu));
  for (std::size_t i = 0; i < points; ++i) {
    const double x = lo + (hi - lo) * double(i) / double(points - 1);
    std::vector<double> row{x, g(x)};
    for (double mu : mus) row.push_back(envelope_1d(g, x, mu));
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable levelset_table(const std::vector<double>& powers, double norm_q, double range, std::size_t points) {
  if (powers.empty()) throw InputError("level-set figure needs at least one power");
  if (points < 2 || !(range > 0.0)) throw InputError("level-set figure needs points >= 2 and range > 0");
  if (!(norm_q >= 1.0)) throw InputError("level-set figure needs q >= 1");
  CsvTable t;
  t.header = {"x1", "x2"};
  for (double p : powers) {
    if (!(p > 0.0)) throw InputError("level-set powers must be positive");
    t.header.push_back("p=" + short_real(p));
  }
  const double denom = double(points - 1);
  auto coord = [&](std::size_t i) { return range * (2.0 * double(i) - denom) / denom; };
  for (std::size_t i = 0; i < points; ++i) {
    for (std::size_t j = 0; j < points; ++j) {
      Eigen::Vector2d x(coord(i), coord(j));
      const double nrm = lq_norm(x, norm_q);
      std::vector<double> row{x(0), x(1)};
      for (double p : powers) row.push_back(std::pow(nrm, p));
      t.rows.push_back(std::move(row));
    }
  }
  return t;
}

}  // namespace resist
