#include "onexn/bsr.hpp"

#include <algorithm>
#include <cstring>

#include "binary_io.hpp"
#include "json.hpp"
#include "onexn/error.hpp"

namespace onexn {

BsrLayer::BsrLayer(std::size_t block_width, TensorShape shape, std::vector<float> values,
                   std::vector<std::uint32_t> row_indices,
                   std::vector<std::uint32_t> group_offsets)
    : block_width_(block_width), shape_(shape), values_(std::move(values)),
      row_indices_(std::move(row_indices)), group_offsets_(std::move(group_offsets)) {
  if (block_width_ == 0) fail(ErrorCode::kInvariant, "bsr: block width must be >= 1");
  if (!shape_.valid()) fail(ErrorCode::kInvariant, "bsr: invalid shape " + to_string(shape_));
  const std::size_t groups = group_count(shape_.n, block_width_);
  const std::size_t t = row_indices_.size();
  if (group_offsets_.size() != groups + 1) {
    fail(ErrorCode::kInvariant, "bsr: expected " + std::to_string(groups + 1) +
                                    " group offsets, got " + std::to_string(group_offsets_.size()));
  }
  if (group_offsets_.front() != 0) fail(ErrorCode::kInvariant, "bsr: P[0] must be 0");
  if (group_offsets_.back() != t) {
    fail(ErrorCode::kInvariant, "bsr: terminal offset " + std::to_string(group_offsets_.back()) +
                                    " != block count " + std::to_string(t));
  }
  for (std::size_t g = 0; g < groups; ++g) {
    const std::uint32_t begin = group_offsets_[g];
    const std::uint32_t end = group_offsets_[g + 1];
    if (end < begin) fail(ErrorCode::kInvariant, "bsr: group offsets are not monotonic");
    for (std::uint32_t z = begin; z < end; ++z) {
      if (row_indices_[z] >= shape_.m) {
        fail(ErrorCode::kInvariant, "bsr: row index " + std::to_string(row_indices_[z]) +
                                        " out of range");
      }
      if (z > begin && row_indices_[z] <= row_indices_[z - 1]) {
        fail(ErrorCode::kInvariant, "bsr: row indices must increase within a group");
      }
    }
  }
  if (values_.size() != t * block_stride()) {
    fail(ErrorCode::kInvariant, "bsr: expected " + std::to_string(t * block_stride()) +
                                    " values, got " + std::to_string(values_.size()));
  }
  check_finite(values_, "bsr values");
  const std::size_t tail = shape_.n - (groups - 1) * block_width_;
  if (tail < block_width_) {
    const std::size_t last = groups - 1;
    for (std::uint32_t z = group_offsets_[last]; z < group_offsets_[last + 1]; ++z) {
      const auto blk = block(z);
      for (std::size_t tap = 0; tap < shape_.kernel_size(); ++tap) {
        for (std::size_t lane = tail; lane < block_width_; ++lane) {
          if (blk[tap * block_width_ + lane] != 0.0f) {
            fail(ErrorCode::kInvariant, "bsr: padding lanes must be zero");
          }
        }
      }
    }
  }
}

namespace {

void check_partition(const WeightTensor& t, const BlockMask& mask) {
  if (mask.rows() != t.m() || mask.groups() != group_count(t.n(), mask.block_width())) {
    fail(ErrorCode::kShape, "mask " + std::to_string(mask.rows()) + "x" +
                                std::to_string(mask.groups()) + " does not match tensor " +
                                to_string(t.shape()) + " at N=" +
                                std::to_string(mask.block_width()));
  }
}

// Counts zero entries in block (k, g); `total` receives its real element count.
std::size_t block_zeros(const WeightTensor& t, std::size_t k, std::size_t g, std::size_t bw,
                        std::size_t& total) {
  const std::size_t end = std::min(t.n(), (g + 1) * bw);
  std::size_t zeros = 0;
  total = 0;
  for (std::size_t j = g * bw; j < end; ++j) {
    const auto kernel = t.kernel(j, k);
    zeros += count_zeros(kernel);
    total += kernel.size();
  }
  return zeros;
}

}  // namespace

BsrLayer bsr_encode(const WeightTensor& pruned, const BlockMask& mask) {
  check_partition(pruned, mask);
  const std::size_t bw = mask.block_width();
  const std::size_t m = pruned.m();
  const std::size_t n = pruned.n();
  const std::size_t ks = pruned.shape().kernel_size();
  const std::size_t groups = mask.groups();

  std::vector<float> values;
  std::vector<std::uint32_t> rows;
  std::vector<std::uint32_t> offsets{0};
  values.reserve(mask.kept() * bw * ks);
  rows.reserve(mask.kept());

  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t end = std::min(n, (g + 1) * bw);
    for (std::size_t k = 0; k < m; ++k) {
      if (!mask.test(k, g)) {
        std::size_t total = 0;
        if (block_zeros(pruned, k, g, bw, total) != total) {
          fail(ErrorCode::kNotBlockSparse, "nonzero weight in masked-out block (row " +
                                               std::to_string(k) + ", group " +
                                               std::to_string(g) + ")");
        }
        continue;
      }
      const std::size_t base = values.size();
      values.resize(base + bw * ks, 0.0f);
      for (std::size_t j = g * bw; j < end; ++j) {
        const auto kernel = pruned.kernel(j, k);
        const std::size_t lane = j - g * bw;
        for (std::size_t tap = 0; tap < ks; ++tap) values[base + tap * bw + lane] = kernel[tap];
      }
      rows.push_back(static_cast<std::uint32_t>(k));
    }
    offsets.push_back(static_cast<std::uint32_t>(rows.size()));
  }
  return BsrLayer(bw, pruned.shape(), std::move(values), std::move(rows), std::move(offsets));
}

BlockMask occupied_blocks(const WeightTensor& t, std::size_t block_width) {
  const std::size_t groups = group_count(t.n(), block_width);
  BlockMask mask(t.m(), groups, block_width);
  for (std::size_t k = 0; k < t.m(); ++k) {
    for (std::size_t g = 0; g < groups; ++g) {
      std::size_t total = 0;
      mask.set(k, g, block_zeros(t, k, g, block_width, total) != total);
    }
  }
  return mask;
}

bool is_strictly_block_sparse(const WeightTensor& t, std::size_t block_width) {
  const std::size_t groups = group_count(t.n(), block_width);
  for (std::size_t k = 0; k < t.m(); ++k) {
    for (std::size_t g = 0; g < groups; ++g) {
      std::size_t total = 0;
      const std::size_t zeros = block_zeros(t, k, g, block_width, total);
      if (zeros != 0 && zeros != total) return false;
    }
  }
  return true;
}

WeightTensor bsr_decode(const BsrLayer& layer) {
  const TensorShape& s = layer.shape();
  const std::size_t bw = layer.block_width();
  const std::size_t ks = s.kernel_size();
  std::vector<float> out(s.elements(), 0.0f);
  const auto offsets = layer.group_offsets();
  const auto rows = layer.row_indices();
  for (std::size_t g = 0; g < layer.groups(); ++g) {
    const std::size_t end = std::min(s.n, (g + 1) * bw);
    for (std::uint32_t z = offsets[g]; z < offsets[g + 1]; ++z) {
      const auto blk = layer.block(z);
      for (std::size_t j = g * bw; j < end; ++j) {
        float* dst = out.data() + (j * s.m + rows[z]) * ks;
        for (std::size_t tap = 0; tap < ks; ++tap) dst[tap] = blk[tap * bw + (j - g * bw)];
      }
    }
  }
  return WeightTensor(s, std::move(out));
}

StorageReport storage_report(const BsrLayer& layer) {
  const TensorShape& s = layer.shape();
  const std::size_t t = layer.blocks();
  StorageReport r;
  r.bsr_index_count = t + layer.groups() + 1;
  r.csr_index_count = t * layer.block_width() + s.m + 1;
  r.nnz_values = t * layer.block_width() * s.kernel_size();
  r.dense_values = s.elements();
  return r;
}

namespace {
constexpr char kMagic[4] = {'1', 'X', 'N', 'B'};
}

void write_bsr(const BsrLayer& layer, const std::filesystem::path& path) {
  const TensorShape& s = layer.shape();
  const nlohmann::json header = {{"N", layer.block_width()}, {"m", s.m}, {"n", s.n},
                                 {"h", s.h}, {"w", s.w}, {"t", layer.blocks()}};
  const std::string text = header.dump();
  std::string bytes(kMagic, sizeof(kMagic));
  const std::uint32_t len = static_cast<std::uint32_t>(text.size());
  detail::append_le32(bytes, std::span<const std::uint32_t>(&len, 1));
  bytes += text;
  detail::append_le32(bytes, layer.values());
  detail::append_le32(bytes, layer.row_indices());
  detail::append_le32(bytes, layer.group_offsets());
  detail::write_file(path, bytes);
}

BsrLayer read_bsr(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  const std::string name = path.filename().string();
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    fail(ErrorCode::kFormat, name + ": not a .bsr file");
  }
  const auto len = detail::parse_le32<std::uint32_t>(bytes.data() + 4, 1)[0];
  if (bytes.size() < 8 + static_cast<std::size_t>(len)) {
    fail(ErrorCode::kFormat, name + ": truncated header");
  }
  nlohmann::json header;
  TensorShape s;
  std::size_t bw = 0;
  std::size_t t = 0;
  try {
    header = nlohmann::json::parse(bytes.substr(8, len));
    bw = header.at("N").get<std::size_t>();
    s = {header.at("n").get<std::size_t>(), header.at("m").get<std::size_t>(),
         header.at("h").get<std::size_t>(), header.at("w").get<std::size_t>()};
    t = header.at("t").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, name + ": bad header: " + e.what());
  }
  if (bw == 0 || !s.valid()) fail(ErrorCode::kFormat, name + ": bad header dims");
  const std::size_t groups = group_count(s.n, bw);
  const std::size_t nvalues = t * bw * s.kernel_size();
  const std::size_t expected = 8 + len + 4 * (nvalues + t + groups + 1);
  if (bytes.size() != expected) {
    fail(ErrorCode::kFormat, name + ": expected " + std::to_string(expected) + " bytes, found " +
                                 std::to_string(bytes.size()));
  }
  const char* p = bytes.data() + 8 + len;
  auto values = detail::parse_le32<float>(p, nvalues);
  p += 4 * nvalues;
  auto rows = detail::parse_le32<std::uint32_t>(p, t);
  p += 4 * t;
  auto offsets = detail::parse_le32<std::uint32_t>(p, groups + 1);
  return BsrLayer(bw, s, std::move(values), std::move(rows), std::move(offsets));
}

}  // namespace onexn
