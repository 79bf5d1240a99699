#include "onexn/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "binary_io.hpp"
#include "json.hpp"
#include "onexn/error.hpp"
#include "onexn/model_io.hpp"

namespace onexn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::array<std::size_t, kMagnitudeBins> magnitude_histogram(const WeightTensor& original,
                                                            const WeightTensor& pruned) {
  std::array<std::size_t, kMagnitudeBins> hist{};
  float max_abs = 0.0f;
  for (float v : original.data()) max_abs = std::max(max_abs, std::fabs(v));
  if (max_abs == 0.0f) return hist;
  for (float v : pruned.data()) {
    if (v == 0.0f) continue;
    const double ratio = std::fabs(static_cast<double>(v)) / max_abs;
    const auto bin = static_cast<std::size_t>(ratio * kMagnitudeBins);
    ++hist[std::min(bin, kMagnitudeBins - 1)];
  }
  return hist;
}

json layer_to_json(const LayerPruneSummary& s) {
  json j = {{"id", s.id}, {"pruned", s.pruned}};
  if (!s.pruned) j["skip_reason"] = s.skip_reason;
  j["N"] = s.block_width;
  j["p"] = s.rate;
  j["granules"] = s.granules;
  j["kept"] = s.kept;
  j["weights_total"] = s.weights_total;
  j["weights_nonzero"] = s.weights_nonzero;
  j["total_l1"] = s.total_l1;
  j["retained_l1"] = s.retained_l1;
  j["achieved_sparsity"] = s.achieved_sparsity;
  j["magnitude_hist"] = s.magnitude_hist;
  return j;
}

LayerPruneSummary layer_from_json(const json& j) {
  LayerPruneSummary s;
  s.id = j.at("id").get<std::string>();
  s.pruned = j.at("pruned").get<bool>();
  s.skip_reason = j.value("skip_reason", std::string());
  s.block_width = j.value("N", std::size_t{0});
  s.rate = j.value("p", 0.0);
  s.granules = j.value("granules", std::size_t{0});
  s.kept = j.value("kept", std::size_t{0});
  s.weights_total = j.value("weights_total", std::size_t{0});
  s.weights_nonzero = j.value("weights_nonzero", std::size_t{0});
  s.total_l1 = j.value("total_l1", 0.0);
  s.retained_l1 = j.value("retained_l1", 0.0);
  s.achieved_sparsity = j.value("achieved_sparsity", 0.0);
  if (j.contains("magnitude_hist")) {
    const auto& h = j.at("magnitude_hist");
    if (!h.is_array() || h.size() != kMagnitudeBins) {
      fail(ErrorCode::kFormat, "magnitude_hist must have " + std::to_string(kMagnitudeBins) +
                                   " bins");
    }
    for (std::size_t i = 0; i < kMagnitudeBins; ++i) s.magnitude_hist[i] = h[i].get<std::size_t>();
  }
  return s;
}

}  // namespace

std::string PruneSummary::to_json() const {
  json layers_json = json::array();
  for (const auto& l : layers) layers_json.push_back(layer_to_json(l));
  json doc = {{"kind", "prune_summary"},
              {"pattern", std::string(to_string(pattern))},
              {"N", block_width},
              {"p", rate},
              {"rearranged", rearranged},
              {"layers", std::move(layers_json)}};
  if (rearrange_report) doc["rearrange"] = json::parse(rearrange_report->to_json());
  return doc.dump(2) + "\n";
}

PruneSummary PruneSummary::from_json(const std::string& text) {
  PruneSummary s;
  try {
    const json doc = json::parse(text);
    if (doc.value("kind", std::string()) != "prune_summary") {
      fail(ErrorCode::kFormat, "not a prune summary");
    }
    s.pattern = parse_pattern(doc.at("pattern").get<std::string>());
    s.block_width = doc.at("N").get<std::size_t>();
    s.rate = doc.at("p").get<double>();
    s.rearranged = doc.at("rearranged").get<bool>();
    for (const auto& l : doc.at("layers")) s.layers.push_back(layer_from_json(l));
    if (doc.contains("rearrange")) {
      s.rearrange_report = RearrangeReport::from_json(doc.at("rearrange").dump());
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("prune summary: ") + e.what());
  }
  return s;
}

PruneOutcome prune_model(const ModelGraph& model, const PruneConfig& config, bool rearrange) {
  PruneSummary summary;
  summary.pattern = config.pattern;
  summary.block_width = config.pattern == PatternKind::kBlock1xN ? config.block_width : 0;
  summary.rate = config.rate;
  summary.rearranged = rearrange;

  ModelGraph source = model;
  if (rearrange) {
    std::optional<RetentionProbe> probe;
    if (config.pattern == PatternKind::kBlock1xN) {
      probe = RetentionProbe{config.block_width, config.rate};
    }
    auto result = rearrange_model(model, probe);
    source = std::move(result.model);
    summary.rearrange_report = std::move(result.report);
  }

  std::vector<LayerRecord> layers = source.layers();
  for (auto& layer : layers) {
    LayerPruneSummary ls;
    ls.id = layer.id;
    ls.weights_total = layer.weights.size();
    ls.total_l1 = l1_mass(layer.weights);
    double rate = config.rate;
    std::size_t bw = config.block_width;
    if (auto it = config.overrides.find(layer.id); it != config.overrides.end()) {
      rate = it->second.rate.value_or(rate);
      bw = it->second.block_width.value_or(bw);
    }
    ls.rate = rate;
    ls.block_width = config.pattern == PatternKind::kBlock1xN ? bw : 0;

    if (layer.kind == LayerKind::kDepthwise) {
      ls.skip_reason = "depthwise layer";
      ls.weights_nonzero = layer.weights.size() - count_zeros(layer.weights.data());
      ls.retained_l1 = ls.total_l1;
      ls.magnitude_hist = magnitude_histogram(layer.weights, layer.weights);
      summary.layers.push_back(std::move(ls));
      continue;
    }
    if (config.pattern == PatternKind::kBlock1xN && !config.pad_filters &&
        layer.weights.n() % bw != 0) {
      fail(ErrorCode::kDivisibility, layer.id + ": block width " + std::to_string(bw) +
                                         " does not divide n = " +
                                         std::to_string(layer.weights.n()) +
                                         " (use --pad-filters)");
    }
    auto result = prune_tensor(layer.weights, config.pattern, bw, rate, config.pad_filters);
    ls.pruned = true;
    ls.granules = result.granules;
    ls.kept = result.kept;
    ls.weights_nonzero = result.pruned.size() - count_zeros(result.pruned.data());
    ls.retained_l1 = l1_mass(result.pruned);
    ls.achieved_sparsity =
        1.0 - static_cast<double>(result.kept) / static_cast<double>(result.granules);
    ls.magnitude_hist = magnitude_histogram(layer.weights, result.pruned);
    layer.weights = std::move(result.pruned);
    summary.layers.push_back(std::move(ls));
  }
  return {ModelGraph(source.name(), std::move(layers)), std::move(summary)};
}

EncodedModel encode_model(const ModelGraph& model, std::size_t block_width, bool strict,
                          const std::map<std::string, std::size_t>& layer_widths) {
  if (block_width == 0) fail(ErrorCode::kUsage, "block width must be >= 1");
  EncodedModel out;
  out.model = model;
  out.block_width = block_width;
  for (const auto& layer : model.layers()) {
    if (layer.kind == LayerKind::kDepthwise) {
      out.skipped[layer.id] = "depthwise layer";
      continue;
    }
    std::size_t width = block_width;
    if (auto it = layer_widths.find(layer.id); it != layer_widths.end()) width = it->second;
    if (width == 0) fail(ErrorCode::kUsage, layer.id + ": block width must be >= 1");
    if (strict && !is_strictly_block_sparse(layer.weights, width)) {
      fail(ErrorCode::kNotBlockSparse, layer.id + ": not block-sparse at N = " +
                                           std::to_string(width) +
                                           " (a nonzero lies outside any complete block)");
    }
    BsrLayer bsr = bsr_encode(layer.weights, occupied_blocks(layer.weights, width));
    out.storage[layer.id] = storage_report(bsr);
    out.layers.emplace(layer.id, std::move(bsr));
  }
  return out;
}

std::string storage_report_json(const EncodedModel& encoded) {
  json layers = json::array();
  std::size_t bsr_total = 0;
  std::size_t csr_total = 0;
  for (const auto& layer : encoded.model.layers()) {
    auto it = encoded.storage.find(layer.id);
    if (it == encoded.storage.end()) continue;
    const StorageReport& r = it->second;
    layers.push_back({{"id", layer.id},
                      {"t", encoded.layers.at(layer.id).blocks()},
                      {"bsr_index_count", r.bsr_index_count},
                      {"csr_index_count", r.csr_index_count},
                      {"index_ratio", r.index_ratio()},
                      {"nnz_values", r.nnz_values},
                      {"dense_values", r.dense_values}});
    bsr_total += r.bsr_index_count;
    csr_total += r.csr_index_count;
  }
  json doc = {{"N", encoded.block_width},
              {"layers", std::move(layers)},
              {"bsr_index_total", bsr_total},
              {"csr_index_total", csr_total}};
  if (bsr_total > 0) {
    doc["index_ratio"] = static_cast<double>(csr_total) / static_cast<double>(bsr_total);
  }
  return doc.dump(2) + "\n";
}

void save_encoded(const EncodedModel& encoded, const fs::path& dir) {
  save_model(encoded.model, dir);
  json files = json::object();
  for (const auto& [id, layer] : encoded.layers) {
    const std::string name = id + ".bsr";
    write_bsr(layer, dir / name);
    files[id] = name;
  }
  const json doc = {{"N", encoded.block_width}, {"layers", files}, {"skipped", encoded.skipped}};
  detail::write_file(dir / kEncodingName, doc.dump(2) + "\n");
  detail::write_file(dir / kStorageReportName, storage_report_json(encoded));
}

bool has_encoding(const fs::path& dir) { return fs::exists(dir / kEncodingName); }

EncodedModel load_encoded(const fs::path& dir) {
  if (!has_encoding(dir)) fail(ErrorCode::kUsage, dir.string() + " is not an encoded model");
  EncodedModel out;
  out.model = load_model(dir);
  try {
    const json doc = json::parse(detail::read_file(dir / kEncodingName));
    out.block_width = doc.at("N").get<std::size_t>();
    for (const auto& [id, file] : doc.at("layers").items()) {
      const std::string name = file.get<std::string>();
      if (fs::path(name).has_parent_path()) fail(ErrorCode::kFormat, "bad .bsr name " + name);
      BsrLayer layer = read_bsr(dir / name);
      out.storage[id] = storage_report(layer);
      out.layers.emplace(id, std::move(layer));
    }
    if (doc.contains("skipped")) {
      for (const auto& [id, reason] : doc.at("skipped").items()) {
        out.skipped[id] = reason.get<std::string>();
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("encoding.json: ") + e.what());
  }
  return out;
}

}  // namespace onexn
