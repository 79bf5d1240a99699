#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "onexn/activation.hpp"
#include "onexn/exec.hpp"
#include "onexn/tensor.hpp"

namespace onexn::testing {

// Reference implementations written independently of the library code paths:
// straightforward loops in double precision, no packing, no sorting helpers.

/// Direct cross-correlation over NHWC input, accumulated in double.
std::vector<double> naive_forward(const Activation& x, const WeightTensor& w,
                                  const ConvParams& conv = {});

/// Indices whose rank (larger score first, lower index first on ties) is
/// below `keep`, found by pairwise comparison.
std::set<std::size_t> rank_select(const std::vector<double>& scores, std::size_t keep);

/// l1 of every (input channel k, col-group g) block, summed element by element.
std::vector<std::vector<double>> block_abs_sums(const WeightTensor& w, std::size_t block_width);

/// Round-half-up of (1000 - permille) * granules / 1000 in integer arithmetic.
std::size_t keep_count_permille(std::size_t permille, std::size_t granules);

WeightTensor random_tensor(const TensorShape& shape, std::mt19937_64& rng);
Activation random_activation(const ActivationShape& shape, std::mt19937_64& rng);

std::vector<float> to_floats(const std::vector<double>& values);

/// Unique scratch directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace onexn::testing
