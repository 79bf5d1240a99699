#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "onexn/tensor.hpp"

namespace onexn {

enum class PatternKind { kWeight, kFilter, kBlock1xN };

std::string_view to_string(PatternKind kind);
PatternKind parse_pattern(std::string_view text);

struct LayerOverride {
  std::optional<double> rate;
  std::optional<std::size_t> block_width;
};

struct PruneConfig {
  PatternKind pattern = PatternKind::kBlock1xN;
  std::size_t block_width = 4;
  double rate = 0.5;
  // Zero-pad the filter axis up to a multiple of block_width instead of
  // rejecting layers where block_width does not divide n.
  bool pad_filters = false;
  std::map<std::string, LayerOverride> overrides;
};

/// Granules kept for pruning rate p out of `granules`: round-half-up of
/// (1 - p) * granules. Throws kPrecondition unless 0 <= p <= 1.
std::size_t keep_count(double rate, std::size_t granules);

/// Column groups of width `block_width` covering n filters (ceil division).
std::size_t group_count(std::size_t n, std::size_t block_width);

/// m x n view of a weight tensor whose element (k, j) is the kernel W[j, k].
class KernelMatrix {
 public:
  explicit KernelMatrix(const WeightTensor& tensor) : tensor_(&tensor) {}

  std::size_t rows() const { return tensor_->m(); }
  std::size_t cols() const { return tensor_->n(); }
  std::span<const float> kernel(std::size_t k, std::size_t j) const {
    return tensor_->kernel(j, k);
  }
  const WeightTensor& tensor() const { return *tensor_; }

 private:
  const WeightTensor* tensor_;
};

/// Dense row-major m x g matrix of doubles.
struct ScoreMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double at(std::size_t k, std::size_t g) const { return values[k * cols + g]; }
};

/// Binary mask over 1xN blocks: bit (k, g) covers kernels
/// (k, g*N) .. (k, g*N + N - 1) of the kernel matrix.
class BlockMask {
 public:
  BlockMask() = default;
  BlockMask(std::size_t rows, std::size_t groups, std::size_t block_width,
            bool value = false);

  std::size_t rows() const { return rows_; }
  std::size_t groups() const { return groups_; }
  std::size_t block_width() const { return block_width_; }
  std::size_t size() const { return bits_.size(); }

  bool test(std::size_t k, std::size_t g) const { return bits_[k * groups_ + g] != 0; }
  void set(std::size_t k, std::size_t g, bool value) {
    bits_[k * groups_ + g] = value ? 1 : 0;
  }
  std::span<const std::uint8_t> bits() const { return bits_; }
  std::size_t kept() const;
  double keep_ratio() const;

  friend bool operator==(const BlockMask&, const BlockMask&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t groups_ = 0;
  std::size_t block_width_ = 1;
  std::vector<std::uint8_t> bits_;
};

/// Indices of the `keep` largest scores, ties resolved toward the lower
/// index. Returned in ascending index order.
std::vector<std::size_t> select_top(std::span<const double> scores, std::size_t keep);

/// l1 norm of every 1xN block. With `pad_filters`, a trailing partial group
/// is scored over its real filters only; otherwise N must divide n.
ScoreMatrix block_l1_scores(const KernelMatrix& om, std::size_t block_width,
                            bool pad_filters = false);

BlockMask select_mask_1xn(const ScoreMatrix& scores, std::size_t block_width,
                          double rate);

/// Elementwise mask shaped like t (flat (n, m, h, w) order).
std::vector<std::uint8_t> select_mask_weight(const WeightTensor& t, double rate);

/// Per-filter keep flags, length n.
std::vector<std::uint8_t> select_mask_filter(const WeightTensor& t, double rate);

std::vector<double> filter_l1_norms(const WeightTensor& t);

/// Kernels in kept blocks are copied verbatim, the rest set to 0.
WeightTensor apply_mask(const KernelMatrix& om, const BlockMask& mask);
WeightTensor apply_weight_mask(const WeightTensor& t, std::span<const std::uint8_t> mask);
WeightTensor apply_filter_mask(const WeightTensor& t, std::span<const std::uint8_t> mask);

/// Result of pruning one tensor with any pattern.
struct PruneResult {
  WeightTensor pruned;
  std::size_t granules = 0;
  std::size_t kept = 0;
  std::optional<BlockMask> block_mask;  // set for kBlock1xN
};

/// Scores, selects, and applies a mask in one step.
PruneResult prune_tensor(const WeightTensor& t, PatternKind pattern,
                         std::size_t block_width, double rate,
                         bool pad_filters = false);

}  // namespace onexn
