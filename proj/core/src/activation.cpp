#include "onexn/activation.hpp"

#include <algorithm>
#include <cmath>

#include "binary_io.hpp"
#include "json.hpp"
#include "onexn/error.hpp"
#include "onexn/tensor.hpp"

namespace onexn {

namespace fs = std::filesystem;

Activation::Activation(ActivationShape shape, std::vector<float> data)
    : shape_(shape), data_(std::move(data)) {
  if (shape_.batch == 0 || shape_.height == 0 || shape_.width == 0 || shape_.channels == 0) {
    fail(ErrorCode::kShape, "activation dims must be >= 1");
  }
  if (data_.size() != shape_.elements()) {
    fail(ErrorCode::kShape, "activation needs " + std::to_string(shape_.elements()) +
                                " values, got " + std::to_string(data_.size()));
  }
  check_finite(data_, "activation");
}

Activation Activation::zeros(ActivationShape shape) {
  return Activation(shape, std::vector<float>(shape.elements(), 0.0f));
}

Activation load_activation(const fs::path& sidecar) {
  if (!fs::exists(sidecar)) fail(ErrorCode::kIo, "missing activation sidecar " + sidecar.string());
  ActivationShape shape;
  std::string blob;
  try {
    const auto doc = nlohmann::json::parse(detail::read_file(sidecar));
    shape.batch = doc.value("batch", std::size_t{1});
    shape.height = doc.value("height", std::size_t{1});
    shape.width = doc.value("width", std::size_t{1});
    shape.channels = doc.at("channels").get<std::size_t>();
    blob = doc.at("blob").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, sidecar.string() + ": " + e.what());
  }
  const fs::path rel(blob);
  if (blob.empty() || rel.is_absolute() || rel.has_parent_path()) {
    fail(ErrorCode::kFormat, "activation blob '" + blob + "' must be a plain file name");
  }
  auto data = detail::read_f32_blob(sidecar.parent_path() / rel, shape.elements());
  return Activation(shape, std::move(data));
}

void save_activation(const Activation& act, const fs::path& sidecar) {
  if (sidecar.has_parent_path()) detail::ensure_directory(sidecar.parent_path());
  const std::string blob = sidecar.stem().string() + ".bin";
  const auto& s = act.shape();
  const nlohmann::json doc = {{"batch", s.batch}, {"height", s.height}, {"width", s.width},
                              {"channels", s.channels}, {"blob", blob}};
  detail::write_f32_blob(sidecar.parent_path() / blob, act.data());
  detail::write_file(sidecar, doc.dump(2) + "\n");
}

double max_relative_error(std::span<const float> actual, std::span<const float> reference,
                          double floor) {
  if (actual.size() != reference.size()) fail(ErrorCode::kShape, "error metric: size mismatch");
  double max_diff = 0.0;
  double max_ref = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    max_diff = std::max(max_diff, std::fabs(static_cast<double>(actual[i]) - reference[i]));
    max_ref = std::max(max_ref, std::fabs(static_cast<double>(reference[i])));
  }
  return max_diff / std::max(max_ref, floor);
}

double max_elementwise_relative_error(std::span<const float> actual,
                                      std::span<const float> reference, double floor) {
  if (actual.size() != reference.size()) fail(ErrorCode::kShape, "error metric: size mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double diff = std::fabs(static_cast<double>(actual[i]) - reference[i]);
    worst = std::max(worst, diff / std::max(std::fabs(static_cast<double>(reference[i])), floor));
  }
  return worst;
}

}  // namespace onexn
