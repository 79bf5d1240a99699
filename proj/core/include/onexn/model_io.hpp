#pragma once

#include <cstdint>
#include <filesystem>
#include <span>

#include "onexn/model.hpp"

namespace onexn {

inline constexpr const char* kManifestName = "model.json";

/// Loads a model from `model.json` (or a directory containing one). Blobs are
/// headerless little-endian binary32 in (n, m, h, w) order and are resolved
/// relative to the manifest.
ModelGraph load_model(const std::filesystem::path& manifest_path);

/// Writes `model.json`, `<id>.weights.bin` and, when present, `<id>.bias.bin`
/// into `dir`, creating it if needed.
void save_model(const ModelGraph& model, const std::filesystem::path& dir);

struct RandomModelOptions {
  bool with_bias = false;
  std::string name = "random";
};

/// Builds a model with weights drawn uniformly from [-1, 1).
///
/// Layers are named layer0, layer1, ... Shapes with h = w = 1 become fc
/// layers, everything else a stride-1 conv padded by h/2. Consecutive layers
/// are linked whenever the channel counts line up. The stream is a
/// std::mt19937_64 seeded with `seed`; each draw keeps the top 24 bits, so
/// output is identical on every platform.
ModelGraph random_model(std::span<const TensorShape> shapes, std::uint64_t seed,
                        const RandomModelOptions& options = {});

/// Fills `out` with uniform [-1, 1) values from the same generator.
void fill_uniform(std::span<float> out, std::uint64_t seed);

}  // namespace onexn
