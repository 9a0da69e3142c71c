#pragma once
// Dense row-major tensor of doubles. Only what the rest of the library needs:
// rank-1 vectors, rank-2 matrices, and rank-0-like scalars stored as shape
// {1}. No views, no broadcasting; every operation that combines tensors
// checks shape congruence explicitly.

#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdgan {

using Shape = std::vector<std::size_t>;

inline std::string shape_to_string(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ',';
    os << s[i];
  }
  os << ']';
  return os.str();
}

inline std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

class Tensor {
 public:
  Tensor() = default;

  /// All-zero tensor of the given shape. Zero-size shapes are rejected: every
  /// tensor in this library holds at least one element.
  static Tensor zeros(Shape shape) {
    validate_shape(shape);
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_.assign(shape_numel(t.shape_), 0.0);
    return t;
  }

  static Tensor full(Shape shape, double value) {
    Tensor t = zeros(std::move(shape));
    for (double& x : t.data_) x = value;
    return t;
  }

  /// Builds a tensor from explicit data, validating element count and
  /// finiteness. This is the entry point for external/leaf data; internal
  /// ops construct via zeros() and fill values they computed themselves.
  static Tensor from(Shape shape, std::vector<double> data) {
    validate_shape(shape);
    if (data.size() != shape_numel(shape)) {
      std::ostringstream os;
      os << "Tensor::from: shape " << shape_to_string(shape) << " needs "
         << shape_numel(shape) << " elements, got " << data.size();
      throw std::invalid_argument(os.str());
    }
    for (double x : data) {
      if (!std::isfinite(x)) {
        throw std::invalid_argument("Tensor::from: data contains a non-finite value");
      }
    }
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = std::move(data);
    return t;
  }

  static Tensor scalar(double value) { return from({1}, {value}); }

  /// d x d identity matrix.
  static Tensor identity(std::size_t d) {
    Tensor t = zeros({d, d});
    for (std::size_t i = 0; i < d; ++i) t.data_[i * d + i] = 1.0;
    return t;
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t numel() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t rows() const { return dim_checked(0, "rows"); }
  std::size_t cols() const { return dim_checked(1, "cols"); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  /// Rank-2 element access.
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  const std::vector<double>& vec() const { return data_; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  bool all_finite() const {
    for (double x : data_)
      if (!std::isfinite(x)) return false;
    return true;
  }

  /// Squared Euclidean norm over all entries.
  double sq_norm() const {
    double s = 0.0;
    for (double x : data_) s += x * x;
    return s;
  }

  bool operator==(const Tensor& o) const {
    return shape_ == o.shape_ && data_ == o.data_;
  }

 private:
  static void validate_shape(const Shape& shape) {
    if (shape.empty()) throw std::invalid_argument("Tensor: empty shape");
    for (std::size_t d : shape) {
      if (d == 0) {
        throw std::invalid_argument("Tensor: zero-size dimension in shape " +
                                    shape_to_string(shape));
      }
    }
  }

  std::size_t dim_checked(std::size_t axis, const char* what) const {
    if (shape_.size() != 2) {
      throw std::logic_error(std::string("Tensor::") + what +
                             ": tensor is not rank-2, shape " + shape_to_string(shape_));
    }
    return shape_[axis];
  }

  Shape shape_;
  std::vector<double> data_;
};

}  // namespace sdgan
