#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "onexn/tensor.hpp"

namespace onexn {

enum class LayerKind { kConv, kFc, kDepthwise };

std::string_view to_string(LayerKind kind);
LayerKind parse_layer_kind(std::string_view text);

/// One layer of a chain-structured network.
///
/// Depthwise layers keep n == channels and m == 1; every output channel j reads
/// only input channel j.
struct LayerRecord {
  std::string id;
  LayerKind kind = LayerKind::kConv;
  WeightTensor weights;
  std::optional<std::vector<float>> bias;
  std::optional<std::string> successor;
  std::size_t stride = 1;
  std::size_t padding = 0;

  /// Channels this layer consumes from its predecessor.
  std::size_t input_channels() const {
    return kind == LayerKind::kDepthwise ? weights.n() : weights.m();
  }
  std::size_t output_channels() const { return weights.n(); }

  friend bool operator==(const LayerRecord&, const LayerRecord&) = default;
};

/// Checks a single layer in isolation (id, kind constraints, bias, stride).
void validate_layer(const LayerRecord& layer);

class ModelGraph {
 public:
  ModelGraph() = default;
  /// Validates every layer plus graph-level invariants: unique ids, successors
  /// that exist later in the list, and matching channel counts across links.
  ModelGraph(std::string name, std::vector<LayerRecord> layers);

  const std::string& name() const { return name_; }
  const std::vector<LayerRecord>& layers() const { return layers_; }
  std::size_t size() const { return layers_.size(); }
  bool empty() const { return layers_.empty(); }
  const LayerRecord& operator[](std::size_t i) const { return layers_[i]; }

  std::optional<std::size_t> index_of(std::string_view id) const;
  /// Number of layers naming `id` as their successor.
  std::size_t predecessor_count(std::string_view id) const;
  /// True when layer i links to layer i+1 for every i and the last layer has
  /// no successor. An empty model is a chain.
  bool is_chain() const;

  friend bool operator==(const ModelGraph&, const ModelGraph&) = default;

 private:
  std::string name_;
  std::vector<LayerRecord> layers_;
};

}  // namespace onexn
