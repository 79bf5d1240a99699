#include "onexn/tensor.hpp"

#include <cmath>

#include "onexn/error.hpp"

namespace onexn {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo: return "io";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kShape: return "shape";
    case ErrorCode::kNonFinite: return "non-finite";
    case ErrorCode::kDuplicateId: return "duplicate-id";
    case ErrorCode::kStructure: return "structure";
    case ErrorCode::kDivisibility: return "divisibility";
    case ErrorCode::kNotBlockSparse: return "not-block-sparse";
    case ErrorCode::kInvariant: return "invariant";
    case ErrorCode::kPrecondition: return "precondition";
    case ErrorCode::kUsage: return "usage";
  }
  return "unknown";
}

std::string to_string(const TensorShape& s) {
  return std::to_string(s.n) + "x" + std::to_string(s.m) + "x" + std::to_string(s.h) +
         "x" + std::to_string(s.w);
}

WeightTensor::WeightTensor(TensorShape shape, std::vector<float> data)
    : shape_(shape), data_(std::move(data)) {
  if (!shape_.valid()) fail(ErrorCode::kShape, "invalid tensor shape " + to_string(shape_));
  if (data_.size() != shape_.elements()) {
    fail(ErrorCode::kShape, "tensor " + to_string(shape_) + " needs " +
                                std::to_string(shape_.elements()) + " values, got " +
                                std::to_string(data_.size()));
  }
  check_finite(data_, "tensor " + to_string(shape_));
}

WeightTensor WeightTensor::zeros(TensorShape shape) {
  return WeightTensor(shape, std::vector<float>(shape.elements(), 0.0f));
}

void check_finite(std::span<const float> values, const std::string& what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      fail(ErrorCode::kNonFinite, what + ": non-finite value at index " + std::to_string(i));
    }
  }
}

WeightTensor transpose_io(const WeightTensor& t) {
  const TensorShape s = t.shape();
  const TensorShape out_shape{s.m, s.n, s.h, s.w};
  std::vector<float> out(s.elements());
  const std::size_t ks = s.kernel_size();
  for (std::size_t j = 0; j < s.n; ++j) {
    for (std::size_t k = 0; k < s.m; ++k) {
      const auto src = t.kernel(j, k);
      std::copy(src.begin(), src.end(), out.begin() + (k * s.n + j) * ks);
    }
  }
  return WeightTensor(out_shape, std::move(out));
}

double l1_mass(const WeightTensor& t) {
  double sum = 0.0;
  for (float v : t.data()) sum += std::fabs(static_cast<double>(v));
  return sum;
}

std::size_t count_zeros(std::span<const float> values) {
  std::size_t zeros = 0;
  for (float v : values) zeros += (v == 0.0f);
  return zeros;
}

}  // namespace onexn
