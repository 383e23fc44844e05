#pragma once

// Exact Moreau envelope (local smoothing) of chain functions
//
//   g(x) = max_k [ sign_k * x[coord_k] - offset_k ],
//
// whose pieces have pairwise distinct coordinates. Because the piece gradients
// are orthonormal, the dual of
//
//   S_mu[g](x) = min_y { g(y) + (mu/2) |y - x|^2 }
//
// is  max_{lambda in simplex} <lambda, s> - |lambda|^2 / (2 mu)  with
// s_k = sign_k * x[coord_k] - offset_k, solved by one Euclidean projection of
// mu * s onto the probability simplex. No iteration, no tolerance.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "resist/errors.hpp"

namespace resist {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

/// One affine piece  sign * x[coord] - offset.  `coord` is zero-based.
template <typename Scalar>
struct AffinePiece {
  Index coord = 0;
  int sign = 1;
  Scalar offset = Scalar(0);

  template <typename Derived>
  Scalar operator()(const Eigen::MatrixBase<Derived>& x) const {
    return Scalar(sign) * x(coord) - offset;
  }

  friend bool operator==(const AffinePiece&, const AffinePiece&) = default;
};

/// Maximum of signed-coordinate affine pieces over R^dim.
///
/// Construction rejects repeated coordinates: the closed-form envelope relies on
/// the pieces having orthonormal gradients.
template <typename Scalar>
class ChainFunction {
 public:
  using Piece = AffinePiece<Scalar>;

  ChainFunction(Index dim, Scalar delta) : dim_(dim), delta_(delta) {
    if (dim < 1) throw InputError("chain dimension must be positive");
    if (!(delta > Scalar(0)) || !std::isfinite(double(delta))) {
      throw InputError("chain spacing delta must be positive and finite");
    }
  }

  ChainFunction(Index dim, Scalar delta, const std::vector<Piece>& pieces)
      : ChainFunction(dim, delta) {
    for (const auto& p : pieces) push_back(p);
  }

  void push_back(const Piece& piece) {
    if (piece.coord < 0 || piece.coord >= dim_) {
      throw InputError("piece coordinate " + std::to_string(piece.coord) +
                       " outside [0, " + std::to_string(dim_) + ")");
    }
    if (piece.sign != 1 && piece.sign != -1) throw InputError("piece sign must be +1 or -1");
    if (!(piece.offset >= Scalar(0)) || !std::isfinite(double(piece.offset))) {
      throw InputError("piece offset must be finite and nonnegative");
    }
    if (uses(piece.coord)) {
      throw InputError("coordinate " + std::to_string(piece.coord) + " already used by the chain");
    }
    pieces_.push_back(piece);
  }

  Index dim() const noexcept { return dim_; }
  Scalar delta() const noexcept { return delta_; }
  std::size_t size() const noexcept { return pieces_.size(); }
  bool empty() const noexcept { return pieces_.empty(); }
  const std::vector<Piece>& pieces() const noexcept { return pieces_; }
  const Piece& operator[](std::size_t k) const { return pieces_[k]; }

  bool uses(Index coord) const {
    return std::any_of(pieces_.begin(), pieces_.end(),
                       [coord](const Piece& p) { return p.coord == coord; });
  }

  /// The chain truncated to its first `t` pieces (g_t from g_T).
  ChainFunction prefix(std::size_t t) const {
    ChainFunction out(dim_, delta_);
    out.pieces_.assign(pieces_.begin(), pieces_.begin() + std::min(t, pieces_.size()));
    return out;
  }

  /// True when the k-th piece (zero-based) has offset exactly k * delta.
  bool has_regular_offsets() const {
    for (std::size_t k = 0; k < pieces_.size(); ++k) {
      if (pieces_[k].offset != Scalar(k) * delta_) return false;
    }
    return true;
  }

 private:
  Index dim_;
  Scalar delta_;
  std::vector<Piece> pieces_;
};

template <typename Scalar>
struct MaxValue {
  Scalar value;
  std::size_t active;  // zero-based; smallest index attaining the max
};

template <typename Scalar>
struct EnvelopeResult {
  Scalar value;
  Vec<Scalar> gradient;
  Vec<Scalar> prox_point;
  Vec<Scalar> dual_weights;
};

namespace detail {

template <typename Scalar, typename Derived>
void check_point(const ChainFunction<Scalar>& chain, const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != chain.dim()) {
    throw InputError("point has dimension " + std::to_string(x.size()) + ", chain expects " +
                     std::to_string(chain.dim()));
  }
  if (chain.empty()) throw InputError("chain has no pieces");
}

}  // namespace detail

template <typename Scalar, typename Derived>
MaxValue<Scalar> eval_max(const ChainFunction<Scalar>& chain, const Eigen::MatrixBase<Derived>& x) {
  detail::check_point(chain, x);
  MaxValue<Scalar> best{chain[0](x), 0};
  for (std::size_t k = 1; k < chain.size(); ++k) {
    const Scalar v = chain[k](x);
    if (v > best.value) best = {v, k};
  }
  return best;
}

/// Euclidean projection onto the probability simplex by sorting and thresholding.
///
/// The input is shifted by its maximum before thresholding; every entry that
/// survives lies within 1 of the maximum, so the threshold is computed from
/// O(1) numbers even when |v| is large.
template <typename Derived>
Vec<typename Derived::Scalar> simplex_project(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  const Index m = v.size();
  if (m < 1) throw InputError("cannot project an empty vector onto the simplex");
  if (!v.allFinite()) throw InputError("simplex projection input is not finite");

  const Scalar top = v.maxCoeff();
  Vec<Scalar> shifted = v.array() - top;
  std::vector<Scalar> sorted(shifted.data(), shifted.data() + m);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());

  Scalar running = Scalar(0);
  Scalar theta = sorted[0] - Scalar(1);
  for (Index j = 0; j < m; ++j) {
    running += sorted[j];
    const Scalar candidate = (running - Scalar(1)) / Scalar(j + 1);
    if (sorted[j] - candidate > Scalar(0)) {
      theta = candidate;
    } else {
      break;
    }
  }
  return (shifted.array() - theta).max(Scalar(0)).matrix();
}

template <typename Scalar, typename Derived>
EnvelopeResult<Scalar> envelope(const ChainFunction<Scalar>& chain,
                                const Eigen::MatrixBase<Derived>& x, Scalar mu) {
  detail::check_point(chain, x);
  if (!(mu > Scalar(0))) throw InputError("smoothing parameter mu must be positive");

  const std::size_t t = chain.size();
  Vec<Scalar> slack(static_cast<Index>(t));
  for (std::size_t k = 0; k < t; ++k) slack(Index(k)) = chain[k](x);

  EnvelopeResult<Scalar> out;
  out.dual_weights = simplex_project(mu * slack);
  out.value = out.dual_weights.dot(slack) - out.dual_weights.squaredNorm() / (Scalar(2) * mu);
  out.gradient = Vec<Scalar>::Zero(chain.dim());
  for (std::size_t k = 0; k < t; ++k) {
    out.gradient(chain[k].coord) = Scalar(chain[k].sign) * out.dual_weights(Index(k));
  }
  out.prox_point = x - out.gradient / mu;
  return out;
}

/// Hölder constant of the gradient of beta * S_mu[g] for a 1-Lipschitz g:
/// beta * 2^(1-nu) * mu^nu.
template <typename Scalar>
Scalar holder_constant(Scalar beta, Scalar mu, Scalar nu) {
  if (!(beta > Scalar(0)) || !(mu > Scalar(0)) || !(nu >= Scalar(0) && nu <= Scalar(1))) {
    throw InputError("holder_constant needs beta > 0, mu > 0, 0 <= nu <= 1");
  }
  using std::pow;
  return beta * pow(Scalar(2), Scalar(1) - nu) * pow(mu, nu);
}

using Chain = ChainFunction<double>;
using Piece = AffinePiece<double>;
using Envelope = EnvelopeResult<double>;

}  // namespace resist
