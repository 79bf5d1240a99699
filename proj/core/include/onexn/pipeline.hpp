#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "onexn/bsr.hpp"
#include "onexn/model.hpp"
#include "onexn/pattern.hpp"
#include "onexn/rearrange.hpp"

namespace onexn {

inline constexpr std::size_t kMagnitudeBins = 20;

struct LayerPruneSummary {
  std::string id;
  bool pruned = false;
  std::string skip_reason;
  std::size_t block_width = 0;
  double rate = 0.0;
  std::size_t granules = 0;
  std::size_t kept = 0;
  std::size_t weights_total = 0;
  std::size_t weights_nonzero = 0;
  double total_l1 = 0.0;
  double retained_l1 = 0.0;
  double achieved_sparsity = 0.0;  // 1 - kept/granules
  // Histogram of surviving |w| / max|w| over [0, 1] in equal-width bins.
  std::array<std::size_t, kMagnitudeBins> magnitude_hist{};
};

struct PruneSummary {
  PatternKind pattern = PatternKind::kBlock1xN;
  std::size_t block_width = 0;
  double rate = 0.0;
  bool rearranged = false;
  std::vector<LayerPruneSummary> layers;
  std::optional<RearrangeReport> rearrange_report;

  std::string to_json() const;
  static PruneSummary from_json(const std::string& text);
};

struct PruneOutcome {
  ModelGraph model;
  PruneSummary summary;
};

/// Prunes every non-depthwise layer with its (possibly overridden) pattern
/// settings. With `rearrange`, filter rearrangement runs first. Throws
/// kDivisibility when a 1xN layer has N not dividing n and padding is off.
PruneOutcome prune_model(const ModelGraph& model, const PruneConfig& config,
                         bool rearrange);

inline constexpr const char* kPruneSummaryName = "prune_summary.json";
inline constexpr const char* kEncodingName = "encoding.json";
inline constexpr const char* kStorageReportName = "storage_report.json";

struct EncodedModel {
  ModelGraph model;
  std::size_t block_width = 0;
  std::map<std::string, BsrLayer> layers;
  std::map<std::string, StorageReport> storage;
  std::map<std::string, std::string> skipped;  // id -> reason
};

/// Encodes every non-depthwise layer. With `strict`, a layer must be entirely
/// built from all-zero and zero-free blocks; otherwise occupancy alone decides
/// which blocks are stored. Throws kNotBlockSparse on a strict violation.
/// Encodes every non-depthwise layer at `block_width`, or at the width given
/// for it in `layer_widths`. With `strict`, a layer holding a partially zero
/// block is rejected with kNotBlockSparse; otherwise blocks are chosen by
/// occupancy.
EncodedModel encode_model(const ModelGraph& model, std::size_t block_width, bool strict,
                          const std::map<std::string, std::size_t>& layer_widths = {});

/// Writes the model, one `<id>.bsr` per encoded layer, `encoding.json` and
/// `storage_report.json`.
void save_encoded(const EncodedModel& encoded, const std::filesystem::path& dir);
EncodedModel load_encoded(const std::filesystem::path& dir);
bool has_encoding(const std::filesystem::path& dir);

std::string storage_report_json(const EncodedModel& encoded);

}  // namespace onexn
