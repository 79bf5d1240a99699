#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "onexn/pattern.hpp"
#include "onexn/tensor.hpp"

namespace onexn {

/// A 1xN-pruned layer in Block Compressed Sparse Row form.
///
/// Blocks are stored group by group; within a group, by ascending row
/// (input channel). Block z occupies values()[z*N*h*w, (z+1)*N*h*w) laid out
/// as [tap][lane]: the N output lanes for kernel tap (q, r) are contiguous.
/// row_indices()[z] is the input channel of block z, and group_offsets()[g]
/// is the index of the first block of group g, with a terminal entry equal to
/// the block count. When N does not divide n the last group is partial and its
/// missing lanes are stored as zeros.
class BsrLayer {
 public:
  BsrLayer() = default;
  /// Validates all invariants; throws kInvariant on violation.
  BsrLayer(std::size_t block_width, TensorShape shape, std::vector<float> values,
           std::vector<std::uint32_t> row_indices,
           std::vector<std::uint32_t> group_offsets);

  std::size_t block_width() const { return block_width_; }
  const TensorShape& shape() const { return shape_; }
  std::size_t groups() const { return group_offsets_.size() - 1; }
  std::size_t blocks() const { return row_indices_.size(); }
  std::size_t block_stride() const { return block_width_ * shape_.kernel_size(); }

  std::span<const float> values() const { return values_; }
  std::span<const std::uint32_t> row_indices() const { return row_indices_; }
  std::span<const std::uint32_t> group_offsets() const { return group_offsets_; }

  std::span<const float> block(std::size_t z) const {
    return std::span<const float>(values_).subspan(z * block_stride(), block_stride());
  }

  friend bool operator==(const BsrLayer&, const BsrLayer&) = default;

 private:
  std::size_t block_width_ = 1;
  TensorShape shape_{0, 0, 0, 0};
  std::vector<float> values_;
  std::vector<std::uint32_t> row_indices_;
  std::vector<std::uint32_t> group_offsets_{0};
};

/// Encodes the blocks selected by `mask`. Throws kNotBlockSparse if a
/// masked-out block holds a nonzero weight, kShape if dims disagree.
BsrLayer bsr_encode(const WeightTensor& pruned, const BlockMask& mask);

/// Mask with a bit set for every block holding at least one nonzero.
BlockMask occupied_blocks(const WeightTensor& t, std::size_t block_width);

/// True when every 1xN block is either entirely zero or free of zeros.
bool is_strictly_block_sparse(const WeightTensor& t, std::size_t block_width);

WeightTensor bsr_decode(const BsrLayer& layer);

struct StorageReport {
  std::size_t bsr_index_count = 0;  // t + groups + 1
  std::size_t csr_index_count = 0;  // t*N + m + 1
  std::size_t nnz_values = 0;       // t*N*h*w
  std::size_t dense_values = 0;     // n*m*h*w

  double index_ratio() const {
    return static_cast<double>(csr_index_count) / static_cast<double>(bsr_index_count);
  }
};

StorageReport storage_report(const BsrLayer& layer);

/// `.bsr` file: magic "1XNB", u32 header length, JSON header
/// {N, m, n, h, w, t}, then D as binary32, I and P as u32, all little-endian.
void write_bsr(const BsrLayer& layer, const std::filesystem::path& path);
BsrLayer read_bsr(const std::filesystem::path& path);

}  // namespace onexn
