#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace onexn {

/// Dimensions of a layer's weights: n output channels (filters), m input
/// channels, and an h x w spatial kernel.
struct TensorShape {
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t h = 1;
  std::size_t w = 1;

  std::size_t kernel_size() const { return h * w; }
  std::size_t filter_size() const { return m * h * w; }
  std::size_t elements() const { return n * m * h * w; }
  bool valid() const { return n > 0 && m > 0 && h > 0 && w > 0; }

  friend bool operator==(const TensorShape&, const TensorShape&) = default;
};

std::string to_string(const TensorShape& shape);

/// Dense 4-D weights stored row-major in (n, m, h, w) order.
///
/// Constructors reject zero dimensions, size mismatches, and non-finite
/// entries. A default-constructed tensor is an empty placeholder.
class WeightTensor {
 public:
  WeightTensor() = default;
  WeightTensor(TensorShape shape, std::vector<float> data);

  static WeightTensor zeros(TensorShape shape);

  const TensorShape& shape() const { return shape_; }
  std::size_t n() const { return shape_.n; }
  std::size_t m() const { return shape_.m; }
  std::size_t h() const { return shape_.h; }
  std::size_t w() const { return shape_.w; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<const float> data() const { return data_; }
  // Writers must keep entries finite.
  std::span<float> mutable_data() { return data_; }

  std::size_t offset(std::size_t j, std::size_t k, std::size_t q = 0,
                     std::size_t r = 0) const {
    return ((j * shape_.m + k) * shape_.h + q) * shape_.w + r;
  }
  float at(std::size_t j, std::size_t k, std::size_t q = 0,
           std::size_t r = 0) const {
    return data_[offset(j, k, q, r)];
  }

  /// The h*w kernel connecting input channel k to output channel j.
  std::span<const float> kernel(std::size_t j, std::size_t k) const {
    return std::span<const float>(data_).subspan(offset(j, k), shape_.kernel_size());
  }
  std::span<float> kernel(std::size_t j, std::size_t k) {
    return std::span<float>(data_).subspan(offset(j, k), shape_.kernel_size());
  }
  /// All m*h*w weights of filter j.
  std::span<const float> filter(std::size_t j) const {
    return std::span<const float>(data_).subspan(j * shape_.filter_size(),
                                                 shape_.filter_size());
  }

  friend bool operator==(const WeightTensor&, const WeightTensor&) = default;

 private:
  TensorShape shape_{0, 0, 0, 0};
  std::vector<float> data_;
};

/// Throws kNonFinite naming `what` if any entry is NaN or infinite.
void check_finite(std::span<const float> values, const std::string& what);

/// Swaps the filter and input-channel axes: result(k, j, q, r) = t(j, k, q, r).
WeightTensor transpose_io(const WeightTensor& t);

/// Sum of absolute values, accumulated in double.
double l1_mass(const WeightTensor& t);

/// Number of exactly-zero entries.
std::size_t count_zeros(std::span<const float> values);

}  // namespace onexn
