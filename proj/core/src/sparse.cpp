#include "caplab/sparse.hpp"

#include <algorithm>
#include <limits>

#include "caplab/error.hpp"

namespace caplab {

Vec SparseVec::to_dense() const {
  Vec x(dim, 0.0);
  for (std::size_t t = 0; t < index.size(); ++t) x[index[t]] = value[t];
  return x;
}

SparseVec SparseVec::from_dense(std::span<const double> x) {
  require(x.size() <= std::numeric_limits<std::uint32_t>::max(), "sparse dimension too large");
  SparseVec s;
  s.dim = x.size();
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k] != 0.0) {
      s.index.push_back(static_cast<std::uint32_t>(k));
      s.value.push_back(x[k]);
    }
  }
  return s;
}

SparseVec SparseVec::from_pairs(std::size_t dim, std::vector<std::pair<std::uint32_t, double>> pairs) {
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  SparseVec s;
  s.dim = dim;
  for (std::size_t t = 0; t < pairs.size();) {
    const std::uint32_t k = pairs[t].first;
    require(k < dim, "sparse index out of range");
    double v = 0.0;
    for (; t < pairs.size() && pairs[t].first == k; ++t) v += pairs[t].second;
    if (v != 0.0) {
      s.index.push_back(k);
      s.value.push_back(v);
    }
  }
  return s;
}

SparseVec operator+(const SparseVec& a, const SparseVec& b) {
  require(a.dim == b.dim, "sparse addition: dimension mismatch");
  SparseVec out;
  out.dim = a.dim;
  std::size_t i = 0, j = 0;
  auto emit = [&](std::uint32_t k, double v) {
    if (v != 0.0) {
      out.index.push_back(k);
      out.value.push_back(v);
    }
  };
  while (i < a.nnz() || j < b.nnz()) {
    if (j == b.nnz() || (i < a.nnz() && a.index[i] < b.index[j])) {
      emit(a.index[i], a.value[i]);
      ++i;
    } else if (i == a.nnz() || b.index[j] < a.index[i]) {
      emit(b.index[j], b.value[j]);
      ++j;
    } else {
      emit(a.index[i], a.value[i] + b.value[j]);
      ++i;
      ++j;
    }
  }
  return out;
}

SparseVec operator*(double s, const SparseVec& a) {
  SparseVec out;
  out.dim = a.dim;
  for (std::size_t t = 0; t < a.nnz(); ++t) {
    const double v = s * a.value[t];
    if (v != 0.0) {
      out.index.push_back(a.index[t]);
      out.value.push_back(v);
    }
  }
  return out;
}

void SparseRows::push_back(const SparseVec& v) {
  require(v.dim == dim_, "sparse row dimension mismatch");
  index_.insert(index_.end(), v.index.begin(), v.index.end());
  value_.insert(value_.end(), v.value.begin(), v.value.end());
  offsets_.push_back(index_.size());
  max_row_nnz_ = std::max(max_row_nnz_, v.nnz());
}

void SparseRows::reserve(std::size_t rows, std::size_t nnz) {
  offsets_.reserve(rows + 1);
  index_.reserve(nnz);
  value_.reserve(nnz);
}

SparseVec SparseRows::row_vec(std::size_t r) const {
  auto v = row(r);
  SparseVec s;
  s.dim = dim_;
  s.index.assign(v.index.begin(), v.index.end());
  s.value.assign(v.value.begin(), v.value.end());
  return s;
}

namespace {
struct ScratchStore {
  std::vector<double> dense;
  std::vector<std::uint32_t> stamp;
  std::uint32_t epoch = 0;
};
thread_local ScratchStore scratch_store;
}  // namespace

QueryScratch::QueryScratch(const SparseVec& x)
    : x_(x), dense_(scratch_store.dense), stamp_(scratch_store.stamp), epoch_(scratch_store.epoch) {
  if (dense_.size() < x.dim) {
    dense_.resize(x.dim, 0.0);
    stamp_.resize(x.dim, 0);
  }
  for (std::size_t t = 0; t < x.nnz(); ++t) dense_[x.index[t]] = x.value[t];
}

QueryScratch::~QueryScratch() {
  for (std::uint32_t k : x_.index) dense_[k] = 0.0;
}

void QueryScratch::mark(std::span<const std::uint32_t> support) {
  if (++epoch_ == 0) {
    std::fill(stamp_.begin(), stamp_.end(), 0);
    epoch_ = 1;
  }
  for (std::uint32_t k : support) stamp_[k] = epoch_;
}

SparseVec apply_sparse(const Mat& m, const SparseVec& x) {
  require(x.dim == m.cols(), "apply_sparse: dimension mismatch");
  Vec y(m.rows(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    double s = 0.0;
    for (std::size_t t = 0; t < x.nnz(); ++t) s += row[x.index[t]] * x.value[t];
    y[r] = s;
  }
  return SparseVec::from_dense(y);
}

}  // namespace caplab
