#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <tuple>
#include <vector>

#include "lne/errors.hpp"
#include "lne/parallel.hpp"

namespace lne {

/// Row-major dense single-precision matrix (n x d operands, embeddings).
using DenseMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using DenseMatrixD = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Triplet {
  std::uint32_t row;
  std::uint32_t col;
  float value;
};

/// Square CSR matrix with sorted, unique column indices per row.
class SparseMatrix {
 public:
  SparseMatrix() = default;

  /// Duplicate (row, col) pairs are summed.
  static SparseMatrix from_triplets(std::uint64_t n, std::vector<Triplet> entries) {
    for (const auto& t : entries) {
      if (t.row >= n || t.col >= n) throw InvalidArgument("triplet index out of range");
    }
    std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
      return std::tie(a.row, a.col) < std::tie(b.row, b.col);
    });
    SparseMatrix s;
    s.n_ = n;
    s.row_offsets_.assign(n + 1, 0);
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (i > 0 && entries[i].row == entries[i - 1].row && entries[i].col == entries[i - 1].col) {
        s.values_.back() += entries[i].value;
        continue;
      }
      s.cols_.push_back(entries[i].col);
      s.values_.push_back(entries[i].value);
      ++s.row_offsets_[entries[i].row + 1];
    }
    for (std::uint64_t r = 0; r < n; ++r) s.row_offsets_[r + 1] += s.row_offsets_[r];
    return s;
  }

  /// All nonzeros of a dense matrix.
  template <typename Derived>
  static SparseMatrix from_dense(const Eigen::MatrixBase<Derived>& a) {
    if (a.rows() != a.cols()) throw InvalidArgument("matrix must be square");
    std::vector<Triplet> t;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      for (Eigen::Index j = 0; j < a.cols(); ++j) {
        if (a(i, j) != 0) {
          t.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), static_cast<float>(a(i, j))});
        }
      }
    }
    return from_triplets(static_cast<std::uint64_t>(a.rows()), std::move(t));
  }

  std::uint64_t n() const { return n_; }
  std::uint64_t nnz() const { return values_.size(); }
  const std::vector<std::uint64_t>& row_offsets() const { return row_offsets_; }
  const std::vector<std::uint32_t>& cols() const { return cols_; }
  const std::vector<float>& values() const { return values_; }

  /// Stored value or 0.
  float at(std::uint64_t r, std::uint64_t c) const {
    auto first = cols_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[r]);
    auto last = cols_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[r + 1]);
    auto it = std::lower_bound(first, last, static_cast<std::uint32_t>(c));
    if (it == last || *it != c) return 0.0f;
    return values_[static_cast<std::size_t>(it - cols_.begin())];
  }

  /// Y = A X. Parallel over rows; each row accumulates in column order, so
  /// the result does not depend on the worker count.
  DenseMatrix multiply(const DenseMatrix& x) const {
    if (static_cast<std::uint64_t>(x.rows()) != n_) throw InvalidArgument("SpMM dimension mismatch");
    const Eigen::Index k = x.cols();
    DenseMatrix y(x.rows(), k);
    parallel_for(
        0, n_,
        [&](std::size_t r) {
          auto out = y.row(static_cast<Eigen::Index>(r));
          out.setZero();
          for (std::uint64_t p = row_offsets_[r]; p < row_offsets_[r + 1]; ++p) {
            out.noalias() += values_[p] * x.row(cols_[p]);
          }
        },
        256);
    return y;
  }

  DenseMatrixD to_dense() const {
    DenseMatrixD a = DenseMatrixD::Zero(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
    for (std::uint64_t r = 0; r < n_; ++r) {
      for (std::uint64_t p = row_offsets_[r]; p < row_offsets_[r + 1]; ++p) a(r, cols_[p]) = values_[p];
    }
    return a;
  }

 private:
  std::uint64_t n_ = 0;
  std::vector<std::uint64_t> row_offsets_;
  std::vector<std::uint32_t> cols_;
  std::vector<float> values_;
};

}  // namespace lne
