#include "onexn/pattern.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "onexn/error.hpp"

namespace onexn {

std::string_view to_string(PatternKind kind) {
  switch (kind) {
    case PatternKind::kWeight: return "weight";
    case PatternKind::kFilter: return "filter";
    case PatternKind::kBlock1xN: return "1xn";
  }
  return "1xn";
}

PatternKind parse_pattern(std::string_view text) {
  if (text == "weight") return PatternKind::kWeight;
  if (text == "filter") return PatternKind::kFilter;
  if (text == "1xn" || text == "1xN") return PatternKind::kBlock1xN;
  fail(ErrorCode::kUsage, "unknown pattern '" + std::string(text) +
                              "' (expected weight, filter or 1xn)");
}

std::size_t keep_count(double rate, std::size_t granules) {
  if (!(rate >= 0.0 && rate <= 1.0)) {
    fail(ErrorCode::kPrecondition, "pruning rate must lie in [0, 1], got " + std::to_string(rate));
  }
  const double k = static_cast<double>(granules);
  // Round half up. The slack absorbs binary representation error of decimal
  // rates such as 0.1 so that (1 - 0.1) * 5 rounds like 4.5.
  const double slack = 1e-12 * (k + 1.0);
  const double kept = std::floor((1.0 - rate) * k + 0.5 + slack);
  return std::min<std::size_t>(granules, static_cast<std::size_t>(std::max(0.0, kept)));
}

std::size_t group_count(std::size_t n, std::size_t block_width) {
  if (block_width == 0) fail(ErrorCode::kPrecondition, "block width must be >= 1");
  return (n + block_width - 1) / block_width;
}

BlockMask::BlockMask(std::size_t rows, std::size_t groups, std::size_t block_width, bool value)
    : rows_(rows), groups_(groups), block_width_(block_width),
      bits_(rows * groups, value ? 1 : 0) {
  if (block_width == 0) fail(ErrorCode::kPrecondition, "block width must be >= 1");
}

std::size_t BlockMask::kept() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

double BlockMask::keep_ratio() const {
  return bits_.empty() ? 0.0 : static_cast<double>(kept()) / static_cast<double>(bits_.size());
}

std::vector<std::size_t> select_top(std::span<const double> scores, std::size_t keep) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (keep >= order.size()) return order;
  auto before = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep),
                   order.end(), before);
  order.resize(keep);
  std::sort(order.begin(), order.end());
  return order;
}

ScoreMatrix block_l1_scores(const KernelMatrix& om, std::size_t block_width, bool pad_filters) {
  const std::size_t m = om.rows();
  const std::size_t n = om.cols();
  if (block_width == 0) fail(ErrorCode::kPrecondition, "block width must be >= 1");
  if (n % block_width != 0 && !pad_filters) {
    fail(ErrorCode::kDivisibility, "block width " + std::to_string(block_width) +
                                       " does not divide " + std::to_string(n) + " filters");
  }
  const std::size_t groups = group_count(n, block_width);
  ScoreMatrix scores{m, groups, std::vector<double>(m * groups, 0.0)};
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t g = 0; g < groups; ++g) {
      double sum = 0.0;
      const std::size_t end = std::min(n, (g + 1) * block_width);
      for (std::size_t j = g * block_width; j < end; ++j) {
        for (float v : om.kernel(k, j)) sum += std::fabs(static_cast<double>(v));
      }
      scores.values[k * groups + g] = sum;
    }
  }
  return scores;
}

BlockMask select_mask_1xn(const ScoreMatrix& scores, std::size_t block_width, double rate) {
  if (scores.values.size() != scores.rows * scores.cols) {
    fail(ErrorCode::kShape, "score matrix size does not match its dims");
  }
  const std::size_t keep = keep_count(rate, scores.values.size());
  BlockMask mask(scores.rows, scores.cols, block_width);
  for (std::size_t idx : select_top(scores.values, keep)) {
    mask.set(idx / scores.cols, idx % scores.cols, true);
  }
  return mask;
}

std::vector<std::uint8_t> select_mask_weight(const WeightTensor& t, double rate) {
  std::vector<double> magnitude(t.size());
  const auto data = t.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    magnitude[i] = std::fabs(static_cast<double>(data[i]));
  }
  std::vector<std::uint8_t> mask(t.size(), 0);
  for (std::size_t idx : select_top(magnitude, keep_count(rate, t.size()))) mask[idx] = 1;
  return mask;
}

std::vector<double> filter_l1_norms(const WeightTensor& t) {
  std::vector<double> norms(t.n(), 0.0);
  for (std::size_t j = 0; j < t.n(); ++j) {
    double sum = 0.0;
    for (float v : t.filter(j)) sum += std::fabs(static_cast<double>(v));
    norms[j] = sum;
  }
  return norms;
}

std::vector<std::uint8_t> select_mask_filter(const WeightTensor& t, double rate) {
  const auto norms = filter_l1_norms(t);
  std::vector<std::uint8_t> mask(t.n(), 0);
  for (std::size_t idx : select_top(norms, keep_count(rate, t.n()))) mask[idx] = 1;
  return mask;
}

WeightTensor apply_mask(const KernelMatrix& om, const BlockMask& mask) {
  const std::size_t n = om.cols();
  const std::size_t bw = mask.block_width();
  if (mask.rows() != om.rows() || mask.groups() != group_count(n, bw)) {
    fail(ErrorCode::kShape, "mask " + std::to_string(mask.rows()) + "x" +
                                std::to_string(mask.groups()) + " (N=" + std::to_string(bw) +
                                ") does not partition a " + std::to_string(om.rows()) + "x" +
                                std::to_string(n) + " kernel matrix");
  }
  WeightTensor out = om.tensor();
  for (std::size_t k = 0; k < mask.rows(); ++k) {
    for (std::size_t g = 0; g < mask.groups(); ++g) {
      if (mask.test(k, g)) continue;
      const std::size_t end = std::min(n, (g + 1) * bw);
      for (std::size_t j = g * bw; j < end; ++j) {
        auto kernel = out.kernel(j, k);
        std::fill(kernel.begin(), kernel.end(), 0.0f);
      }
    }
  }
  return out;
}

WeightTensor apply_weight_mask(const WeightTensor& t, std::span<const std::uint8_t> mask) {
  if (mask.size() != t.size()) fail(ErrorCode::kShape, "weight mask size mismatch");
  WeightTensor out = t;
  auto data = out.mutable_data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!mask[i]) data[i] = 0.0f;
  }
  return out;
}

WeightTensor apply_filter_mask(const WeightTensor& t, std::span<const std::uint8_t> mask) {
  if (mask.size() != t.n()) fail(ErrorCode::kShape, "filter mask size mismatch");
  WeightTensor out = t;
  auto data = out.mutable_data();
  const std::size_t fs = t.shape().filter_size();
  for (std::size_t j = 0; j < t.n(); ++j) {
    if (!mask[j]) std::fill_n(data.begin() + static_cast<std::ptrdiff_t>(j * fs), fs, 0.0f);
  }
  return out;
}

PruneResult prune_tensor(const WeightTensor& t, PatternKind pattern, std::size_t block_width,
                         double rate, bool pad_filters) {
  PruneResult result;
  switch (pattern) {
    case PatternKind::kWeight: {
      const auto mask = select_mask_weight(t, rate);
      result.pruned = apply_weight_mask(t, mask);
      result.granules = mask.size();
      result.kept = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
      break;
    }
    case PatternKind::kFilter: {
      const auto mask = select_mask_filter(t, rate);
      result.pruned = apply_filter_mask(t, mask);
      result.granules = mask.size();
      result.kept = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
      break;
    }
    case PatternKind::kBlock1xN: {
      const KernelMatrix om(t);
      auto mask = select_mask_1xn(block_l1_scores(om, block_width, pad_filters), block_width, rate);
      result.pruned = apply_mask(om, mask);
      result.granules = mask.size();
      result.kept = mask.kept();
      result.block_mask = std::move(mask);
      break;
    }
  }
  return result;
}

}  // namespace onexn
