#pragma once

#include <cmath>
#include <cstdint>

#include "lne/errors.hpp"
#include "lne/graph.hpp"
#include "lne/parallel.hpp"
#include "lne/randsvd.hpp"
#include "lne/sparse_matrix.hpp"

namespace lne {

struct PropagationParams {
  std::uint32_t k = 10;
  double mu = 0.2;
  double theta = 0.5;

  void validate() const {
    if (k < 1) throw InvalidArgument("k must be >= 1");
    if (!(theta > 0)) throw InvalidArgument("theta must be > 0");
    if (!std::isfinite(mu)) throw InvalidArgument("mu must be finite");
  }
};

/// X - D^-1 A X. Rows of isolated vertices pass through unchanged.
inline DenseMatrix normalized_laplacian_apply(const Graph& g, const DenseMatrix& x) {
  if (static_cast<std::uint64_t>(x.rows()) != g.n()) throw InvalidArgument("row count must equal n");
  DenseMatrix y(x.rows(), x.cols());
  parallel_for(
      0, g.n(),
      [&](std::size_t u) {
        const auto r = static_cast<Eigen::Index>(u);
        Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(x.cols());
        g.for_each_neighbor(static_cast<vertex_t>(u), [&](vertex_t v) { acc += x.row(v).cast<double>(); });
        const std::uint32_t deg = g.degree(static_cast<vertex_t>(u));
        if (deg == 0) {
          y.row(r) = x.row(r);
        } else {
          y.row(r) = (x.row(r).cast<double>() - acc / deg).cast<float>();
        }
      },
      256);
  return y;
}

/// Modified Bessel function of the first kind I_r(theta) by its power
/// series, stopped once a term drops below 1e-16 of the partial sum.
inline double modified_bessel_i(std::uint32_t r, double theta) {
  if (theta < 0) throw InvalidArgument("theta must be >= 0");
  if (theta == 0) return r == 0 ? 1.0 : 0.0;
  const double half = theta / 2;
  // leading term (theta/2)^r / r!
  double term = 1.0;
  for (std::uint32_t i = 1; i <= r; ++i) term *= half / i;
  double sum = term;
  const double h2 = half * half;
  for (std::uint32_t m = 1; m < 10000; ++m) {
    term *= h2 / (static_cast<double>(m) * static_cast<double>(m + r));
    sum += term;
    if (term < 1e-16 * sum) break;
  }
  return sum;
}

namespace detail {

/// Z -> D~^-1 (A + I) Z, the self-looped row-normalized adjacency.
inline void apply_smoothed(const Graph& g, const DenseMatrixD& z, DenseMatrixD& out) {
  out.resize(z.rows(), z.cols());
  parallel_for(
      0, g.n(),
      [&](std::size_t u) {
        const auto r = static_cast<Eigen::Index>(u);
        auto row = out.row(r);
        row = z.row(r);
        g.for_each_neighbor(static_cast<vertex_t>(u), [&](vertex_t v) { row += z.row(v); });
        row /= static_cast<double>(g.degree(static_cast<vertex_t>(u)) + 1);
      },
      256);
}

}  // namespace detail

/// Chebyshev band-pass filter on the embedding. With P = D~^-1 (A + I) and M = (1 - mu) I - P:
///
///   L0 = X,  L1 = M(M X)/2 - X,  Li = M(M L{i-1}) - 2 L{i-1} - L{i-2}
///   conv = I0(theta) L0 - 2 I1(theta) L1 + sum_{i=2}^{k-1} (-1)^i 2 Ii(theta) Li
///   out  = P (X - conv)
///
/// k = 1 returns X unchanged.
inline Embedding chebyshev_propagate(const Graph& g, const Embedding& emb, const PropagationParams& p) {
  p.validate();
  if (emb.n() != g.n()) throw InvalidArgument("embedding rows must equal n");
  if (p.k == 1) return emb;

  const DenseMatrixD x = emb.X.cast<double>();
  DenseMatrixD scratch;
  auto apply_shifted = [&](const DenseMatrixD& z, DenseMatrixD& out) {
    detail::apply_smoothed(g, z, scratch);
    out = (1.0 - p.mu) * z - scratch;
  };

  DenseMatrixD l0 = x;
  DenseMatrixD l1, t;
  apply_shifted(x, t);
  apply_shifted(t, l1);
  l1 = 0.5 * l1 - x;

  DenseMatrixD conv = modified_bessel_i(0, p.theta) * l0 - 2.0 * modified_bessel_i(1, p.theta) * l1;
  DenseMatrixD l2;
  for (std::uint32_t i = 2; i < p.k; ++i) {
    apply_shifted(l1, t);
    apply_shifted(t, l2);
    l2 = l2 - 2.0 * l1 - l0;
    const double c = 2.0 * modified_bessel_i(i, p.theta);
    if (i % 2 == 0) {
      conv += c * l2;
    } else {
      conv -= c * l2;
    }
    l0.swap(l1);
    l1.swap(l2);
  }

  DenseMatrixD out;
  detail::apply_smoothed(g, x - conv, out);
  Embedding result;
  result.X = out.cast<float>();
  return result;
}

}  // namespace lne
