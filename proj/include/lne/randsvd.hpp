#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "lne/errors.hpp"
#include "lne/graph_io.hpp"
#include "lne/parallel.hpp"
#include "lne/random.hpp"
#include "lne/sparse_matrix.hpp"

namespace lne {

struct SvdParams {
  std::uint32_t d = 128;
  std::uint32_t s_over = 16;
  std::uint32_t q = 1;
  std::uint64_t seed = 0;

  void validate(std::uint64_t n) const {
    if (d < 1) throw InvalidArgument("d must be >= 1");
    if (q < 1) throw InvalidArgument("q must be >= 1");
    if (static_cast<std::uint64_t>(d) + s_over > n) {
      throw InvalidArgument("d + s_over = " + std::to_string(d + s_over) + " exceeds n = " + std::to_string(n));
    }
  }
};

struct EigSvdResult {
  DenseMatrix U;      // n x k, orthonormal columns
  Eigen::VectorXd S;  // k, descending
  Eigen::MatrixXd V;  // k x k, orthogonal
};

namespace detail {

/// X^T X in double. Rows are split into a fixed number of partitions that
/// does not depend on the worker count; partials are summed in order.
inline Eigen::MatrixXd gram(const DenseMatrix& x) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = x.cols();
  constexpr std::size_t kParts = 64;
  constexpr Eigen::Index kRows = 256;
  const std::size_t parts = std::max<std::size_t>(1, std::min<std::size_t>(kParts, static_cast<std::size_t>(n / kRows)));
  std::vector<Eigen::MatrixXd> partial(parts, Eigen::MatrixXd::Zero(k, k));
  parallel_for(
      0, parts,
      [&](std::size_t part) {
        Eigen::Index lo = static_cast<Eigen::Index>(part) * n / static_cast<Eigen::Index>(parts);
        Eigen::Index hi = static_cast<Eigen::Index>(part + 1) * n / static_cast<Eigen::Index>(parts);
        Eigen::MatrixXd block;
        for (Eigen::Index r = lo; r < hi; r += kRows) {
          Eigen::Index rows = std::min(kRows, hi - r);
          block = x.middleRows(r, rows).cast<double>();
          partial[part].noalias() += block.transpose() * block;
        }
      },
      1);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(k, k);
  for (const auto& p : partial) g += p;
  return g;
}

/// Y = X * W in double, cast to float. Per-row, deterministic.
inline DenseMatrix times_small(const DenseMatrix& x, const Eigen::MatrixXd& w, Eigen::Index cols) {
  DenseMatrix y(x.rows(), cols);
  const auto wl = w.leftCols(cols);
  parallel_for(
      0, static_cast<std::size_t>(x.rows()),
      [&](std::size_t r) {
        Eigen::RowVectorXd row = x.row(static_cast<Eigen::Index>(r)).cast<double>() * wl;
        y.row(static_cast<Eigen::Index>(r)) = row.cast<float>();
      },
      256);
  return y;
}

}  // namespace detail

/// Economy SVD through the eigendecomposition of the Gram matrix:
/// C = X^T X = V D V^T, S = sqrt(D), U = X V S^-1. Pairs are returned in
/// descending order of S. Eigenvalues below 1e-12 * max are clamped.
inline EigSvdResult eig_svd(const DenseMatrix& x) {
  if (x.cols() > x.rows()) throw InvalidArgument("eig_svd requires k <= n");
  const Eigen::Index k = x.cols();
  Eigen::MatrixXd c = detail::gram(x);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");

  EigSvdResult out;
  out.V = es.eigenvectors().rowwise().reverse();
  Eigen::VectorXd lam = es.eigenvalues().reverse();
  const double top = k > 0 ? lam(0) : 0.0;
  out.S.resize(k);
  Eigen::VectorXd inv(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    if (top <= 0) {
      out.S(j) = 0;
      inv(j) = 0;
      continue;
    }
    double l = std::max(lam(j), 1e-12 * top);
    out.S(j) = std::sqrt(l);
    inv(j) = 1.0 / out.S(j);
  }
  out.U = detail::times_small(x, out.V * inv.asDiagonal(), k);
  return out;
}

struct SvdFactors {
  DenseMatrix U;          // n x d
  Eigen::VectorXf Sigma;  // d, descending
  DenseMatrix V;          // n x d
  DenseMatrix basis;      // n x (d + s_over), orthonormal basis from the last pass
};

/// Randomized truncated SVD of a symmetric operator with power iteration,
/// orthonormalizing with eig_svd after every product. `Op` provides n() and
/// multiply(const DenseMatrix&) -> DenseMatrix.
template <typename Op>
SvdFactors fast_randomized_svd(const Op& m, const SvdParams& p) {
  const std::uint64_t n = m.n();
  p.validate(n);
  const Eigen::Index k = static_cast<Eigen::Index>(p.d + p.s_over);
  const std::uint64_t omega_seed = substream(p.seed, "omega");

  DenseMatrix omega(static_cast<Eigen::Index>(n), k);
  parallel_for(
      0, n,
      [&](std::size_t r) {
        for (Eigen::Index c = 0; c < k; ++c) {
          omega(static_cast<Eigen::Index>(r), c) = static_cast<float>(gaussian_at(omega_seed, r, static_cast<std::uint64_t>(c)));
        }
      },
      256);

  DenseMatrix q = eig_svd(m.multiply(omega)).U;
  DenseMatrix prev;
  EigSvdResult last;
  for (std::uint32_t it = 0; it < p.q; ++it) {
    DenseMatrix y = m.multiply(q);
    prev = std::move(q);
    last = eig_svd(y);
    q = std::move(last.U);
  }

  SvdFactors f;
  f.U = q.leftCols(p.d);
  f.Sigma = last.S.head(p.d).cast<float>();
  f.V = detail::times_small(prev, last.V, static_cast<Eigen::Index>(p.d));
  f.basis = std::move(q);
  return f;
}

struct Embedding {
  DenseMatrix X;  // n x d, row-major

  std::uint64_t n() const { return static_cast<std::uint64_t>(X.rows()); }
  std::uint32_t d() const { return static_cast<std::uint32_t>(X.cols()); }
};

/// X = U diag(Sigma)^(1/2).
inline Embedding embedding_from_factors(const SvdFactors& f) {
  if ((f.Sigma.array() < 0).any()) throw InvalidArgument("negative singular value");
  Embedding e;
  e.X = f.U * f.Sigma.cwiseSqrt().asDiagonal();
  return e;
}

inline constexpr char kEmbeddingMagic[8] = {'L', 'N', 'E', '2', 'E', 'M', 'B', '0'};
inline constexpr std::uint32_t kEmbeddingVersion = 1;

/// LNE2EMB0: magic, u32 version, u64 n, u32 d, n*d f32 row-major, little-endian.
inline void write_embedding(const Embedding& e, std::ostream& os) {
  os.write(kEmbeddingMagic, 8);
  io::put_le(os, kEmbeddingVersion, 4);
  io::put_le(os, e.n(), 8);
  io::put_le(os, e.d(), 4);
  for (Eigen::Index i = 0; i < e.X.rows(); ++i) {
    for (Eigen::Index j = 0; j < e.X.cols(); ++j) {
      std::uint32_t bits;
      float v = e.X(i, j);
      std::memcpy(&bits, &v, 4);
      io::put_le(os, bits, 4);
    }
  }
  if (!os) throw std::runtime_error("embedding write failed");
}

inline void write_embedding(const Embedding& e, const std::string& path) {
  auto os = io::open_out(path);
  write_embedding(e, os);
}

inline Embedding read_embedding(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kEmbeddingMagic, 8) != 0) throw FormatError("not an LNE2EMB0 file");
  if (io::get_le(is, 4) != kEmbeddingVersion) throw FormatError("unsupported embedding version");
  std::uint64_t n = io::get_le(is, 8);
  std::uint64_t d = io::get_le(is, 4);
  Embedding e;
  e.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::vector<unsigned char> buf(n * d * 4);
  if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
    throw FormatError("truncated embedding payload");
  }
  for (std::size_t i = 0; i < n * d; ++i) {
    std::uint32_t bits = static_cast<std::uint32_t>(buf[4 * i]) | (static_cast<std::uint32_t>(buf[4 * i + 1]) << 8) |
                         (static_cast<std::uint32_t>(buf[4 * i + 2]) << 16) |
                         (static_cast<std::uint32_t>(buf[4 * i + 3]) << 24);
    float v;
    std::memcpy(&v, &bits, 4);
    e.X.data()[i] = v;
  }
  return e;
}

inline Embedding read_embedding(const std::string& path) {
  auto is = io::open_in(path);
  return read_embedding(is);
}

/// "id v1 ... vd" per line.
inline void write_embedding_text(const Embedding& e, std::ostream& os) {
  char buf[32];
  for (Eigen::Index i = 0; i < e.X.rows(); ++i) {
    os << i;
    for (Eigen::Index j = 0; j < e.X.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), " %.9g", e.X(i, j));
      os << buf;
    }
    os << '\n';
  }
}

}  // namespace lne
