#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "onexn/activation.hpp"
#include "onexn/bsr.hpp"
#include "onexn/model.hpp"
#include "onexn/tensor.hpp"

namespace onexn {

struct ConvParams {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

struct ExecOptions {
  // 0 selects std::thread::hardware_concurrency().
  unsigned threads = 1;
};

unsigned resolve_threads(unsigned requested);

/// Output dims of a convolution, or kShape when the window does not fit.
ActivationShape conv_output_shape(const ActivationShape& in, const TensorShape& w,
                                  const ConvParams& conv);

/// Dense weights repacked for the reference executor: filters are grouped into
/// panels of kPanel output channels, stored [panel][k][tap][lane].
class DenseLayer {
 public:
  static constexpr std::size_t kPanel = 16;

  DenseLayer() = default;
  explicit DenseLayer(const WeightTensor& t);

  const TensorShape& shape() const { return shape_; }
  std::size_t panels() const { return (shape_.n + kPanel - 1) / kPanel; }
  const float* panel(std::size_t p) const {
    return packed_.data() + p * shape_.filter_size() * kPanel;
  }

 private:
  TensorShape shape_{0, 0, 0, 0};
  std::vector<float> packed_;
};

/// Elementwise sparse weights: one row per filter holding the nonzero
/// weights in ascending (k, q, r) order.
class CsrLayer {
 public:
  CsrLayer() = default;
  explicit CsrLayer(const WeightTensor& t);

  const TensorShape& shape() const { return shape_; }
  std::size_t nnz() const { return values_.size(); }
  std::span<const std::uint32_t> row_ptr() const { return row_ptr_; }
  std::span<const std::uint32_t> channel() const { return channel_; }
  std::span<const std::uint32_t> tap() const { return tap_; }
  std::span<const float> values() const { return values_; }

 private:
  TensorShape shape_{0, 0, 0, 0};
  std::vector<std::uint32_t> row_ptr_;
  std::vector<std::uint32_t> channel_;
  std::vector<std::uint32_t> tap_;
  std::vector<float> values_;
};

// Every executor accumulates each output in ascending input-channel order with
// kernel taps innermost, in binary32. Work is split over output rows only.

Activation dense_forward(const Activation& x, const DenseLayer& layer,
                         const ConvParams& conv = {}, const ExecOptions& opts = {});
Activation dense_forward(const Activation& x, const WeightTensor& t,
                         const ConvParams& conv = {}, const ExecOptions& opts = {});

Activation csr_forward(const Activation& x, const CsrLayer& layer,
                       const ConvParams& conv = {}, const ExecOptions& opts = {});
Activation csr_forward(const Activation& x, const WeightTensor& t,
                       const ConvParams& conv = {}, const ExecOptions& opts = {});

/// Block-wise kernel: for each output row and column group g, the N-lane
/// output slice accumulates X[row, I[z]] * D[z] for z in [P[g], P[g+1]).
Activation bsr_forward(const Activation& x, const BsrLayer& layer,
                       const ConvParams& conv = {}, const ExecOptions& opts = {});

/// Per-channel convolution for depthwise layers (t.m == 1, t.n == channels).
Activation depthwise_forward(const Activation& x, const WeightTensor& t,
                             const ConvParams& conv = {}, const ExecOptions& opts = {});

/// Adds bias[j] to channel j of every row.
void add_bias(Activation& y, std::span<const float> bias);

enum class Executor { kDense, kCsr, kBsr };

std::string_view to_string(Executor e);
Executor parse_executor(std::string_view text);

/// A chain model with weights prepared for one executor. Depthwise layers
/// always run through depthwise_forward.
class ModelPlan {
 public:
  /// Prepares dense or CSR weights. For kBsr, each layer is encoded with the
  /// blocks it actually occupies at `block_width`.
  ModelPlan(const ModelGraph& model, Executor executor, std::size_t block_width = 0);
  /// BSR plan from pre-encoded layers keyed by layer id; layers missing from
  /// `encoded` must be depthwise.
  ModelPlan(const ModelGraph& model, std::map<std::string, BsrLayer> encoded);

  Executor executor() const { return executor_; }
  std::size_t size() const { return steps_.size(); }

  Activation forward(const Activation& x, const ExecOptions& opts = {}) const;

 private:
  struct Step {
    std::string id;
    LayerKind kind;
    ConvParams conv;
    std::vector<float> bias;
    WeightTensor depthwise;
    DenseLayer dense;
    CsrLayer csr;
    BsrLayer bsr;
    std::size_t in_channels = 0;
  };

  static void require_chain(const ModelGraph& model);

  Executor executor_;
  std::vector<Step> steps_;
};

/// Runs x through the chain with the chosen executor, adding biases after
/// each layer. Throws kStructure for non-chain models.
Activation model_forward(const Activation& x, const ModelGraph& model, Executor executor,
                         const ExecOptions& opts = {}, std::size_t block_width = 0);

}  // namespace onexn
