#include "onexn/error.hpp"
#include "onexn/exec.hpp"

namespace onexn {

std::string_view to_string(Executor e) {
  switch (e) {
    case Executor::kDense: return "dense";
    case Executor::kCsr: return "csr";
    case Executor::kBsr: return "bsr";
  }
  return "dense";
}

Executor parse_executor(std::string_view text) {
  if (text == "dense") return Executor::kDense;
  if (text == "csr") return Executor::kCsr;
  if (text == "bsr") return Executor::kBsr;
  fail(ErrorCode::kUsage, "unknown executor '" + std::string(text) +
                              "' (expected dense, csr or bsr)");
}

void ModelPlan::require_chain(const ModelGraph& model) {
  if (!model.is_chain()) {
    fail(ErrorCode::kStructure, "model '" + model.name() +
                                    "' is not a simple chain; branching graphs are unsupported");
  }
}

ModelPlan::ModelPlan(const ModelGraph& model, Executor executor, std::size_t block_width)
    : executor_(executor) {
  require_chain(model);
  if (executor == Executor::kBsr && block_width == 0) {
    fail(ErrorCode::kUsage, "bsr execution needs a block width");
  }
  for (const auto& layer : model.layers()) {
    Step step;
    step.id = layer.id;
    step.kind = layer.kind;
    step.conv = {layer.stride, layer.padding};
    step.in_channels = layer.input_channels();
    if (layer.bias) step.bias = *layer.bias;
    if (layer.kind == LayerKind::kDepthwise) {
      step.depthwise = layer.weights;
    } else if (executor == Executor::kDense) {
      step.dense = DenseLayer(layer.weights);
    } else if (executor == Executor::kCsr) {
      step.csr = CsrLayer(layer.weights);
    } else {
      step.bsr = bsr_encode(layer.weights, occupied_blocks(layer.weights, block_width));
    }
    steps_.push_back(std::move(step));
  }
}

ModelPlan::ModelPlan(const ModelGraph& model, std::map<std::string, BsrLayer> encoded)
    : executor_(Executor::kBsr) {
  require_chain(model);
  for (const auto& layer : model.layers()) {
    Step step;
    step.id = layer.id;
    step.kind = layer.kind;
    step.conv = {layer.stride, layer.padding};
    step.in_channels = layer.input_channels();
    if (layer.bias) step.bias = *layer.bias;
    if (layer.kind == LayerKind::kDepthwise) {
      step.depthwise = layer.weights;
    } else {
      auto it = encoded.find(layer.id);
      if (it == encoded.end()) fail(ErrorCode::kUsage, layer.id + ": no BSR encoding");
      if (it->second.shape() != layer.weights.shape()) {
        fail(ErrorCode::kShape, layer.id + ": BSR encoding shape differs from the model");
      }
      step.bsr = std::move(it->second);
    }
    steps_.push_back(std::move(step));
  }
}

Activation ModelPlan::forward(const Activation& x, const ExecOptions& opts) const {
  Activation current = x;
  for (const auto& step : steps_) {
    if (current.shape().channels != step.in_channels) {
      fail(ErrorCode::kShape, step.id + ": expects " + std::to_string(step.in_channels) +
                                  " channels, got " + std::to_string(current.shape().channels));
    }
    Activation next;
    if (step.kind == LayerKind::kDepthwise) {
      next = depthwise_forward(current, step.depthwise, step.conv, opts);
    } else if (executor_ == Executor::kDense) {
      next = dense_forward(current, step.dense, step.conv, opts);
    } else if (executor_ == Executor::kCsr) {
      next = csr_forward(current, step.csr, step.conv, opts);
    } else {
      next = bsr_forward(current, step.bsr, step.conv, opts);
    }
    if (!step.bias.empty()) add_bias(next, step.bias);
    current = std::move(next);
  }
  return current;
}

Activation model_forward(const Activation& x, const ModelGraph& model, Executor executor,
                         const ExecOptions& opts, std::size_t block_width) {
  return ModelPlan(model, executor, block_width).forward(x, opts);
}

}  // namespace onexn
