#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace dagdiff {

enum class FeatureRole { Unary, Propagated, Pairwise, Gradient };

/// Dense N x c row-major matrix of per-vertex features.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols, FeatureRole role = FeatureRole::Unary)
      : rows_(rows), cols_(cols), role_(role), values_(rows * cols, 0.0) {}
  FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                FeatureRole role = FeatureRole::Unary);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  FeatureRole role() const noexcept { return role_; }
  void set_role(FeatureRole role) noexcept { role_ = role; }

  double& operator()(std::size_t r, std::size_t c) noexcept { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept {
    return values_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) noexcept { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {values_.data() + r * cols_, cols_};
  }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  bool same_shape(const FeatureMatrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  /// Equality of shape and values; the role tag is ignored.
  friend bool operator==(const FeatureMatrix& a, const FeatureMatrix& b) {
    return a.same_shape(b) && a.values_ == b.values_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  FeatureRole role_ = FeatureRole::Unary;
  std::vector<double> values_;
};

/// `fm <N> <c>` header, then N lines of c values at 17 significant digits.
void write_feature_matrix(std::ostream& out, const FeatureMatrix& m);
FeatureMatrix read_feature_matrix(std::istream& in);

}  // namespace dagdiff
