#include "onexn/rearrange.hpp"

#include <algorithm>
#include <numeric>

#include "json.hpp"
#include "onexn/error.hpp"
#include "onexn/pattern.hpp"

namespace onexn {

Permutation::Permutation(std::vector<std::size_t> forward) : forward_(std::move(forward)) {
  std::vector<std::uint8_t> seen(forward_.size(), 0);
  for (std::size_t v : forward_) {
    if (v >= forward_.size() || seen[v]) {
      fail(ErrorCode::kPrecondition, "permutation is not a bijection");
    }
    seen[v] = 1;
  }
}

Permutation Permutation::identity(std::size_t n) {
  std::vector<std::size_t> forward(n);
  std::iota(forward.begin(), forward.end(), std::size_t{0});
  return Permutation(std::move(forward));
}

bool Permutation::is_identity() const {
  for (std::size_t i = 0; i < forward_.size(); ++i) {
    if (forward_[i] != i) return false;
  }
  return true;
}

Permutation compute_rearrangement(const WeightTensor& t) {
  const auto norms = filter_l1_norms(t);
  std::vector<std::size_t> order(norms.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });
  return Permutation(std::move(order));
}

WeightTensor permute_filters(const WeightTensor& t, const Permutation& perm) {
  if (perm.size() != t.n()) {
    fail(ErrorCode::kPrecondition, "permutation size " + std::to_string(perm.size()) +
                                       " != filter count " + std::to_string(t.n()));
  }
  std::vector<float> out(t.size());
  const std::size_t fs = t.shape().filter_size();
  for (std::size_t j = 0; j < t.n(); ++j) {
    const auto src = t.filter(perm[j]);
    std::copy(src.begin(), src.end(), out.begin() + static_cast<std::ptrdiff_t>(j * fs));
  }
  return WeightTensor(t.shape(), std::move(out));
}

WeightTensor permute_input_channels(const WeightTensor& t, const Permutation& perm) {
  if (perm.size() != t.m()) {
    fail(ErrorCode::kPrecondition, "permutation size " + std::to_string(perm.size()) +
                                       " != input channel count " + std::to_string(t.m()));
  }
  std::vector<float> out(t.size());
  for (std::size_t j = 0; j < t.n(); ++j) {
    for (std::size_t k = 0; k < t.m(); ++k) {
      const auto src = t.kernel(j, perm[k]);
      std::copy(src.begin(), src.end(), out.begin() + static_cast<std::ptrdiff_t>(t.offset(j, k)));
    }
  }
  return WeightTensor(t.shape(), std::move(out));
}

RearrangedPair apply_rearrangement(const LayerRecord& layer, const LayerRecord* next,
                                   const Permutation& perm) {
  if (perm.size() != layer.weights.n()) {
    fail(ErrorCode::kPrecondition, layer.id + ": permutation size " + std::to_string(perm.size()) +
                                       " != filter count " + std::to_string(layer.weights.n()));
  }
  if (perm.is_identity()) {
    return {layer, next ? std::optional<LayerRecord>(*next) : std::nullopt};
  }
  if (layer.kind == LayerKind::kDepthwise) {
    fail(ErrorCode::kStructure, layer.id + ": depthwise layer cannot be rearranged");
  }
  if (!next) {
    fail(ErrorCode::kStructure, layer.id + ": no successor to absorb the permutation");
  }
  if (layer.successor && *layer.successor != next->id) {
    fail(ErrorCode::kStructure, layer.id + ": successor is '" + *layer.successor + "', not '" +
                                    next->id + "'");
  }
  if (next->kind == LayerKind::kDepthwise) {
    fail(ErrorCode::kStructure, layer.id + ": depthwise successor");
  }
  if (next->weights.m() != layer.weights.n()) {
    fail(ErrorCode::kStructure, layer.id + ": successor expects " +
                                    std::to_string(next->weights.m()) + " channels");
  }

  RearrangedPair out{layer, *next};
  out.layer.weights = permute_filters(layer.weights, perm);
  if (layer.bias) {
    std::vector<float> bias(layer.bias->size());
    for (std::size_t j = 0; j < bias.size(); ++j) bias[j] = (*layer.bias)[perm[j]];
    out.layer.bias = std::move(bias);
  }
  out.next->weights = permute_input_channels(next->weights, perm);
  return out;
}

std::size_t RearrangeReport::rearranged_count() const {
  return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(),
                                                [](const auto& e) { return e.rearranged; }));
}

std::string RearrangeReport::to_json() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& e : entries) {
    nlohmann::json entry = {{"id", e.id}, {"status", e.rearranged ? "rearranged" : "skipped"}};
    if (!e.rearranged) entry["reason"] = e.reason;
    if (e.retained_l1_before) entry["retained_l1_before"] = *e.retained_l1_before;
    if (e.retained_l1_after) entry["retained_l1_after"] = *e.retained_l1_after;
    layers.push_back(std::move(entry));
  }
  const nlohmann::json doc = {{"rearranged", rearranged_count()}, {"layers", std::move(layers)}};
  return doc.dump(2);
}

RearrangeReport RearrangeReport::from_json(const std::string& text) {
  RearrangeReport report;
  try {
    const auto doc = nlohmann::json::parse(text);
    for (const auto& l : doc.at("layers")) {
      RearrangeEntry e;
      e.id = l.at("id").get<std::string>();
      e.rearranged = l.at("status").get<std::string>() == "rearranged";
      e.reason = l.value("reason", std::string());
      if (l.contains("retained_l1_before")) {
        e.retained_l1_before = l.at("retained_l1_before").get<double>();
      }
      if (l.contains("retained_l1_after")) {
        e.retained_l1_after = l.at("retained_l1_after").get<double>();
      }
      report.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("rearrange report: ") + e.what());
  }
  return report;
}

double retained_l1_1xn(const WeightTensor& t, std::size_t block_width, double rate,
                       bool rearrange) {
  if (!rearrange) {
    return l1_mass(prune_tensor(t, PatternKind::kBlock1xN, block_width, rate, true).pruned);
  }
  const WeightTensor sorted = permute_filters(t, compute_rearrangement(t));
  return l1_mass(prune_tensor(sorted, PatternKind::kBlock1xN, block_width, rate, true).pruned);
}

RearrangeResult rearrange_model(const ModelGraph& model,
                                const std::optional<RetentionProbe>& probe) {
  std::vector<LayerRecord> layers = model.layers();
  RearrangeReport report;

  for (std::size_t i = 0; i < layers.size(); ++i) {
    LayerRecord& layer = layers[i];
    RearrangeEntry entry{layer.id, false, {}, std::nullopt, std::nullopt};
    if (probe) {
      entry.retained_l1_before =
          retained_l1_1xn(layer.weights, probe->block_width, probe->rate, false);
    }

    std::optional<std::size_t> next_index;
    if (layer.kind == LayerKind::kDepthwise) {
      entry.reason = "depthwise layer";
    } else if (!layer.successor) {
      entry.reason = "no successor";
    } else {
      next_index = model.index_of(*layer.successor);
      if (layers[*next_index].kind == LayerKind::kDepthwise) {
        entry.reason = "depthwise successor";
      } else if (model.predecessor_count(*layer.successor) > 1) {
        entry.reason = "shared successor";
      }
    }

    if (entry.reason.empty()) {
      const Permutation perm = compute_rearrangement(layer.weights);
      auto pair = apply_rearrangement(layer, &layers[*next_index], perm);
      layer = std::move(pair.layer);
      layers[*next_index] = std::move(*pair.next);
      entry.rearranged = true;
    }
    if (probe) {
      entry.retained_l1_after =
          retained_l1_1xn(layer.weights, probe->block_width, probe->rate, false);
    }
    report.entries.push_back(std::move(entry));
  }
  return {ModelGraph(model.name(), std::move(layers)), std::move(report)};
}

}  // namespace onexn
