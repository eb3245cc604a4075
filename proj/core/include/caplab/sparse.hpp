#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "caplab/mat.hpp"

namespace caplab {

/// Sparse vector with strictly increasing indices and no stored zeros.
struct SparseVec {
  std::size_t dim = 0;
  std::vector<std::uint32_t> index;
  std::vector<double> value;

  std::size_t nnz() const noexcept { return index.size(); }
  Vec to_dense() const;
  static SparseVec from_dense(std::span<const double> x);
  /// Builds from unsorted (index, value) pairs; duplicates are summed and
  /// exact zeros dropped.
  static SparseVec from_pairs(std::size_t dim, std::vector<std::pair<std::uint32_t, double>> pairs);

  friend bool operator==(const SparseVec&, const SparseVec&) = default;
};

SparseVec operator+(const SparseVec& a, const SparseVec& b);
SparseVec operator*(double s, const SparseVec& a);

struct SparseRowView {
  std::span<const std::uint32_t> index;
  std::span<const double> value;
};

/// Compressed sparse rows sharing one dimension.
class SparseRows {
 public:
  SparseRows() = default;
  explicit SparseRows(std::size_t dim) : dim_(dim) {}

  void push_back(const SparseVec& v);
  void reserve(std::size_t rows, std::size_t nnz);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return offsets_.size() - 1; }
  std::size_t nnz() const noexcept { return index_.size(); }
  std::size_t row_nnz(std::size_t r) const noexcept { return offsets_[r + 1] - offsets_[r]; }
  std::size_t max_row_nnz() const noexcept { return max_row_nnz_; }

  SparseRowView row(std::size_t r) const {
    const std::size_t lo = offsets_[r];
    const std::size_t n = offsets_[r + 1] - lo;
    return {{index_.data() + lo, n}, {value_.data() + lo, n}};
  }
  SparseVec row_vec(std::size_t r) const;

 private:
  std::size_t dim_ = 0;
  std::size_t max_row_nnz_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::uint32_t> index_;
  std::vector<double> value_;
};

/// Per-thread dense scatter of a sparse query, reset in O(nnz) on release.
/// Gives O(1) coordinate lookup without materializing dense vectors per call.
class QueryScratch {
 public:
  QueryScratch(const SparseVec& x);
  ~QueryScratch();
  QueryScratch(const QueryScratch&) = delete;
  QueryScratch& operator=(const QueryScratch&) = delete;

  double operator[](std::uint32_t k) const { return dense_[k]; }
  const SparseVec& query() const noexcept { return x_; }

  /// Stamps the coordinates of `support`; `marked(k)` is true afterwards
  /// until the next call.
  void mark(std::span<const std::uint32_t> support);
  bool marked(std::uint32_t k) const { return stamp_[k] == epoch_; }

 private:
  const SparseVec& x_;
  std::vector<double>& dense_;
  std::vector<std::uint32_t>& stamp_;
  std::uint32_t& epoch_;
};

/// Sparse matrix-vector product with a dense matrix and sparse input.
SparseVec apply_sparse(const Mat& m, const SparseVec& x);

}  // namespace caplab
