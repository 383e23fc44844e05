#pragma once

// Data behind the smoothing and level-set figures. Emits tables, never images.

#include <cstddef>
#include <vector>

#include "resist/io.hpp"

namespace resist {

/// g(x) = max_k slopes[k] * x + intercepts[k] on the real line.
struct PiecewiseLinear1d {
  std::vector<double> slopes;
  std::vector<double> intercepts;

  double operator()(double x) const;
};

/// The default curve: max(-x - 0.5, 0.25 x, x - 0.75), which is 1-Lipschitz.
PiecewiseLinear1d default_figure_curve();

/// Exact S_mu[g](x) in one dimension. The minimizer of g(y) + mu/2 (y - x)^2 is
/// either a stationary point x - a_k/mu of a linear piece or a kink, so the
/// minimum over those candidates is exact.
double envelope_1d(const PiecewiseLinear1d& g, double x, double mu);

/// Columns: x, g, then one S_mu column per mu (named "S_mu=<mu>").
CsvTable smoothing_table(const PiecewiseLinear1d& g, const std::vector<double>& mus, double lo, double hi,
                         std::size_t points);

/// Columns: x1, x2, then |x|_q^p for each power (named "p=<p>"). The grid is
/// symmetric: every coordinate value appears with its exact negation.
CsvTable levelset_table(const std::vector<double>& powers, double norm_q, double range, std::size_t points);

}  // namespace resist
