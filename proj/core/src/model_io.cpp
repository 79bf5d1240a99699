#include "onexn/model_io.hpp"

#include <random>

#include "binary_io.hpp"
#include "json.hpp"
#include "onexn/error.hpp"

namespace onexn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string weights_blob_name(const std::string& id) { return id + ".weights.bin"; }
std::string bias_blob_name(const std::string& id) { return id + ".bias.bin"; }

std::size_t as_size(const json& j, const char* what) {
  if (!j.is_number_integer() || j.get<long long>() < 0) {
    fail(ErrorCode::kFormat, std::string("manifest field '") + what +
                                 "' must be a non-negative integer");
  }
  return j.get<std::size_t>();
}

// Blob names must stay inside the model directory.
fs::path resolve_blob(const fs::path& base, const std::string& name) {
  const fs::path rel(name);
  if (name.empty() || rel.is_absolute() || rel.has_parent_path()) {
    fail(ErrorCode::kFormat, "blob name '" + name + "' must be a plain file name");
  }
  return base / rel;
}

LayerRecord parse_layer(const json& entry, const fs::path& base) {
  if (!entry.is_object()) fail(ErrorCode::kFormat, "layer entries must be objects");
  for (const char* key : {"id", "kind", "shape", "blob"}) {
    if (!entry.contains(key)) fail(ErrorCode::kFormat, std::string("layer missing '") + key + "'");
  }
  LayerRecord layer;
  layer.id = entry.at("id").get<std::string>();
  layer.kind = parse_layer_kind(entry.at("kind").get<std::string>());

  const json& shape = entry.at("shape");
  if (!shape.is_array() || shape.size() != 4) {
    fail(ErrorCode::kFormat, layer.id + ": shape must be [n, m, h, w]");
  }
  const TensorShape s{as_size(shape[0], "shape"), as_size(shape[1], "shape"),
                      as_size(shape[2], "shape"), as_size(shape[3], "shape")};
  if (!s.valid()) fail(ErrorCode::kShape, layer.id + ": zero dimension in shape");

  auto weights = detail::read_f32_blob(resolve_blob(base, entry.at("blob").get<std::string>()),
                                       s.elements());
  check_finite(weights, layer.id + " weights");
  layer.weights = WeightTensor(s, std::move(weights));

  if (entry.contains("bias") && !entry.at("bias").is_null()) {
    auto bias = detail::read_f32_blob(resolve_blob(base, entry.at("bias").get<std::string>()), s.n);
    layer.bias = std::move(bias);
  }
  if (entry.contains("successor") && !entry.at("successor").is_null()) {
    layer.successor = entry.at("successor").get<std::string>();
  }
  if (entry.contains("stride")) layer.stride = as_size(entry.at("stride"), "stride");
  if (entry.contains("padding")) layer.padding = as_size(entry.at("padding"), "padding");
  return layer;
}

}  // namespace

ModelGraph load_model(const fs::path& manifest_path) {
  fs::path manifest = manifest_path;
  if (fs::is_directory(manifest)) manifest /= kManifestName;
  if (!fs::exists(manifest)) fail(ErrorCode::kIo, "missing manifest " + manifest.string());

  json doc;
  try {
    doc = json::parse(detail::read_file(manifest));
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, manifest.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("layers") || !doc.at("layers").is_array()) {
    fail(ErrorCode::kFormat, manifest.string() + ": expected an object with a 'layers' array");
  }

  const fs::path base = manifest.parent_path();
  std::vector<LayerRecord> layers;
  try {
    for (const auto& entry : doc.at("layers")) layers.push_back(parse_layer(entry, base));
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, manifest.string() + ": " + e.what());
  }
  return ModelGraph(doc.value("name", std::string()), std::move(layers));
}

void save_model(const ModelGraph& model, const fs::path& dir) {
  detail::ensure_directory(dir);
  json layers = json::array();
  for (const auto& layer : model.layers()) {
    const TensorShape& s = layer.weights.shape();
    json entry = {
        {"id", layer.id},
        {"kind", std::string(to_string(layer.kind))},
        {"shape", {s.n, s.m, s.h, s.w}},
        {"blob", weights_blob_name(layer.id)},
        {"successor", layer.successor ? json(*layer.successor) : json(nullptr)},
        {"stride", layer.stride},
        {"padding", layer.padding},
    };
    detail::write_f32_blob(dir / weights_blob_name(layer.id), layer.weights.data());
    if (layer.bias) {
      entry["bias"] = bias_blob_name(layer.id);
      detail::write_f32_blob(dir / bias_blob_name(layer.id), *layer.bias);
    }
    layers.push_back(std::move(entry));
  }
  const json doc = {{"name", model.name()}, {"layers", std::move(layers)}};
  detail::write_file(dir / kManifestName, doc.dump(2) + "\n");
}

namespace {

float next_uniform(std::mt19937_64& rng) {
  // 24 random bits -> [0, 1) exactly representable in binary32.
  const auto bits = static_cast<std::uint32_t>(rng() >> 40);
  return static_cast<float>(bits) * 0x1p-23f - 1.0f;
}

}  // namespace

void fill_uniform(std::span<float> out, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (float& v : out) v = next_uniform(rng);
}

ModelGraph random_model(std::span<const TensorShape> shapes, std::uint64_t seed,
                        const RandomModelOptions& options) {
  std::mt19937_64 rng(seed);
  std::vector<LayerRecord> layers;
  layers.reserve(shapes.size());
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const TensorShape& s = shapes[i];
    if (!s.valid()) fail(ErrorCode::kShape, "invalid layer shape " + to_string(s));
    LayerRecord layer;
    layer.id = "layer" + std::to_string(i);
    const bool pointwise = s.h == 1 && s.w == 1;
    layer.kind = pointwise ? LayerKind::kFc : LayerKind::kConv;
    layer.padding = pointwise ? 0 : s.h / 2;
    std::vector<float> data(s.elements());
    for (float& v : data) v = next_uniform(rng);
    layer.weights = WeightTensor(s, std::move(data));
    if (options.with_bias) {
      std::vector<float> bias(s.n);
      for (float& v : bias) v = next_uniform(rng);
      layer.bias = std::move(bias);
    }
    layers.push_back(std::move(layer));
  }
  for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
    if (layers[i + 1].weights.m() == layers[i].weights.n()) {
      layers[i].successor = layers[i + 1].id;
    }
  }
  return ModelGraph(options.name, std::move(layers));
}

}  // namespace onexn
