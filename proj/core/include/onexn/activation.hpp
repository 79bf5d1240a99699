#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace onexn {

/// NHWC activation dims. For fully-connected use, height = width = 1 and batch
/// counts the rows.
struct ActivationShape {
  std::size_t batch = 1;
  std::size_t height = 1;
  std::size_t width = 1;
  std::size_t channels = 0;

  /// Spatial positions across the batch: each is one row of the channel matrix.
  std::size_t rows() const { return batch * height * width; }
  std::size_t elements() const { return rows() * channels; }

  friend bool operator==(const ActivationShape&, const ActivationShape&) = default;
};

class Activation {
 public:
  Activation() = default;
  Activation(ActivationShape shape, std::vector<float> data);

  static Activation zeros(ActivationShape shape);

  const ActivationShape& shape() const { return shape_; }
  std::span<const float> data() const { return data_; }
  std::span<float> mutable_data() { return data_; }

  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(data_).subspan(i * shape_.channels, shape_.channels);
  }
  std::span<float> row(std::size_t i) {
    return std::span<float>(data_).subspan(i * shape_.channels, shape_.channels);
  }

  friend bool operator==(const Activation&, const Activation&) = default;

 private:
  ActivationShape shape_;
  std::vector<float> data_;
};

/// Reads a JSON sidecar {batch, height, width, channels, blob} and its blob.
Activation load_activation(const std::filesystem::path& sidecar);
/// Writes `sidecar` plus a blob named after its stem with a `.bin` suffix.
void save_activation(const Activation& act, const std::filesystem::path& sidecar);

/// Max |a - b| over max |reference|, with the denominator floored at `floor`.
double max_relative_error(std::span<const float> actual,
                          std::span<const float> reference, double floor = 1e-6);
/// Elementwise variant: max over i of |a_i - b_i| / max(|b_i|, floor).
double max_elementwise_relative_error(std::span<const float> actual,
                                      std::span<const float> reference,
                                      double floor = 1e-6);

}  // namespace onexn
