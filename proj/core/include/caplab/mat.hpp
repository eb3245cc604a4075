#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace caplab {

using Vec = std::vector<double>;

/// Dense real matrix, row-major. A matrix with one column doubles as a
/// column vector.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols);
  Mat(std::size_t rows, std::size_t cols, std::vector<double> entries);

  static Mat identity(std::size_t n);
  static Mat diagonal(std::span<const double> diag);
  static Mat from_rows(const std::vector<Vec>& rows);
  static Mat column(std::span<const double> v);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& entries() noexcept { return data_; }
  const std::vector<double>& entries() const noexcept { return data_; }

  /// y = M x
  Vec apply(std::span<const double> x) const;
  /// y = Mᵀ x
  Vec apply_transposed(std::span<const double> x) const;

  Mat transposed() const;
  bool all_finite() const noexcept;

  Mat& operator+=(const Mat& other);
  Mat& operator-=(const Mat& other);
  Mat& operator*=(double s);

  friend bool operator==(const Mat&, const Mat&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Mat operator+(Mat a, const Mat& b);
Mat operator-(Mat a, const Mat& b);
Mat operator*(Mat a, double s);
Mat operator*(double s, Mat a);
Mat multiply(const Mat& a, const Mat& b);

/// Frobenius inner product.
double frobenius_dot(const Mat& a, const Mat& b);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);
double distance2(std::span<const double> a, std::span<const double> b);
double distance_inf(std::span<const double> a, std::span<const double> b);

}  // namespace caplab
