#include "onexn/model.hpp"

#include <set>

#include "onexn/error.hpp"

namespace onexn {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv: return "conv";
    case LayerKind::kFc: return "fc";
    case LayerKind::kDepthwise: return "depthwise";
  }
  return "conv";
}

LayerKind parse_layer_kind(std::string_view text) {
  if (text == "conv") return LayerKind::kConv;
  if (text == "fc") return LayerKind::kFc;
  if (text == "depthwise") return LayerKind::kDepthwise;
  fail(ErrorCode::kFormat, "unknown layer kind '" + std::string(text) + "'");
}

namespace {

bool valid_id(const std::string& id) {
  if (id.empty() || id == "." || id == "..") return false;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
    if (!ok) return false;
  }
  return true;
}

}  // namespace

void validate_layer(const LayerRecord& layer) {
  if (!valid_id(layer.id)) {
    fail(ErrorCode::kFormat, "invalid layer id '" + layer.id +
                                 "' (allowed: letters, digits, '_', '-', '.')");
  }
  const TensorShape& s = layer.weights.shape();
  if (!s.valid() || layer.weights.size() != s.elements()) {
    fail(ErrorCode::kShape, layer.id + ": invalid weight shape " + to_string(s));
  }
  if (layer.kind == LayerKind::kFc && (s.h != 1 || s.w != 1)) {
    fail(ErrorCode::kShape, layer.id + ": fc layers need h = w = 1");
  }
  if (layer.kind == LayerKind::kDepthwise && s.m != 1) {
    fail(ErrorCode::kShape, layer.id + ": depthwise layers need m = 1");
  }
  if (layer.stride == 0) fail(ErrorCode::kShape, layer.id + ": stride must be >= 1");
  if (layer.bias) {
    if (layer.bias->size() != s.n) {
      fail(ErrorCode::kShape, layer.id + ": bias length " + std::to_string(layer.bias->size()) +
                                  " != n " + std::to_string(s.n));
    }
    check_finite(*layer.bias, layer.id + " bias");
  }
}

ModelGraph::ModelGraph(std::string name, std::vector<LayerRecord> layers)
    : name_(std::move(name)), layers_(std::move(layers)) {
  std::set<std::string> seen;
  for (const auto& layer : layers_) {
    validate_layer(layer);
    if (!seen.insert(layer.id).second) {
      fail(ErrorCode::kDuplicateId, "duplicate layer id '" + layer.id + "'");
    }
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& layer = layers_[i];
    if (!layer.successor) continue;
    const auto target = index_of(*layer.successor);
    if (!target) {
      fail(ErrorCode::kStructure, layer.id + ": unknown successor '" + *layer.successor + "'");
    }
    // Successors must come later in the list, which also rules out cycles.
    if (*target <= i) {
      fail(ErrorCode::kStructure, layer.id + ": successor '" + *layer.successor +
                                      "' must appear after it");
    }
    const auto& next = layers_[*target];
    if (next.input_channels() != layer.output_channels()) {
      fail(ErrorCode::kStructure, layer.id + " -> " + next.id + ": " +
                                      std::to_string(layer.output_channels()) +
                                      " output channels feed a layer expecting " +
                                      std::to_string(next.input_channels()));
    }
  }
}

std::optional<std::size_t> ModelGraph::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].id == id) return i;
  }
  return std::nullopt;
}

std::size_t ModelGraph::predecessor_count(std::string_view id) const {
  std::size_t count = 0;
  for (const auto& layer : layers_) count += (layer.successor && *layer.successor == id);
  return count;
}

bool ModelGraph::is_chain() const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& succ = layers_[i].successor;
    if (i + 1 < layers_.size()) {
      if (!succ || *succ != layers_[i + 1].id) return false;
    } else if (succ) {
      return false;
    }
  }
  return true;
}

}  // namespace onexn
