#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "onexn/model.hpp"

namespace onexn {

/// Bijection on {0, ..., n-1}; forward[new_position] = old_filter_index.
class Permutation {
 public:
  Permutation() = default;
  explicit Permutation(std::vector<std::size_t> forward);

  static Permutation identity(std::size_t n);

  std::size_t size() const { return forward_.size(); }
  const std::vector<std::size_t>& forward() const { return forward_; }
  std::size_t operator[](std::size_t i) const { return forward_[i]; }
  bool is_identity() const;

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<std::size_t> forward_;
};

/// Orders filters by descending l1 norm, ties kept in original order.
Permutation compute_rearrangement(const WeightTensor& t);

WeightTensor permute_filters(const WeightTensor& t, const Permutation& perm);
WeightTensor permute_input_channels(const WeightTensor& t, const Permutation& perm);

struct RearrangedPair {
  LayerRecord layer;
  std::optional<LayerRecord> next;
};

/// Moves filter perm[j] (and its bias) of `layer` to position j and reorders
/// the input channels of `next` to match, so the pair computes the same
/// function.
///
/// Throws kPrecondition when perm has the wrong size and kStructure when the
/// successor is missing, depthwise, or has a mismatched channel count.
RearrangedPair apply_rearrangement(const LayerRecord& layer, const LayerRecord* next,
                                   const Permutation& perm);

struct RearrangeEntry {
  std::string id;
  bool rearranged = false;
  std::string reason;  // empty when rearranged
  // Filled when a retention probe is supplied.
  std::optional<double> retained_l1_before;
  std::optional<double> retained_l1_after;
};

struct RearrangeReport {
  std::vector<RearrangeEntry> entries;

  std::size_t rearranged_count() const;
  std::string to_json() const;
  /// Throws kFormat on malformed input.
  static RearrangeReport from_json(const std::string& text);
};

/// 1xN settings used to measure how much l1 mass a mask keeps before and
/// after rearrangement.
struct RetentionProbe {
  std::size_t block_width = 4;
  double rate = 0.5;
};

struct RearrangeResult {
  ModelGraph model;
  RearrangeReport report;
};

/// Rearranges every layer whose successor can absorb the permutation. Layers
/// without a successor, depthwise layers, layers feeding a depthwise layer,
/// and layers sharing a successor are skipped and reported.
RearrangeResult rearrange_model(const ModelGraph& model,
                                const std::optional<RetentionProbe>& probe = std::nullopt);

/// l1 mass kept by 1xN selection on t, with optional rearrangement first.
double retained_l1_1xn(const WeightTensor& t, std::size_t block_width, double rate,
                       bool rearrange);

}  // namespace onexn
