#include <algorithm>
#include <vector>

#include "conv_geometry.hpp"
#include "lanes.hpp"
#include "onexn/exec.hpp"
#include "parallel.hpp"

namespace onexn {

using detail::ConvGeometry;
constexpr std::size_t kRowTile = 8;

namespace {

// Fixed block widths keep each block's accumulators in one vector register.
template <std::size_t N>
struct FixedWidth {};
struct RuntimeWidth {};

// Blocks wider than one native vector are processed as kChunk-lane pieces.
constexpr std::size_t kChunk = 16;

template <std::size_t N>
constexpr std::size_t chunk_width() {
  return N < kChunk ? N : kChunk;
}

template <std::size_t N, typename Acc>
void store_chunks(float* y, const Acc& acc, std::size_t lanes) {
  constexpr std::size_t C = chunk_width<N>();
  for (std::size_t c = 0; c < N / C && c * C < lanes; ++c) {
    detail::store_lanes<C>(y + c * C, acc[c], std::min(C, lanes - c * C));
  }
}

template <std::size_t Rows, std::size_t N>
void bsr_gemm_tile(const float* x, std::size_t m, float* y, std::size_t n, const BsrLayer& layer,
                   FixedWidth<N>) {
  constexpr std::size_t C = chunk_width<N>();
  const auto offsets = layer.group_offsets();
  const auto rows = layer.row_indices();
  const float* d = layer.values().data();
  for (std::size_t g = 0; g < layer.groups(); ++g) {
    const std::size_t lanes = std::min(N, n - g * N);
    if constexpr (C == N) {
      detail::Lanes<N> acc[Rows] = {};
      for (std::uint32_t z = offsets[g]; z < offsets[g + 1]; ++z) {
        const std::size_t k = rows[z];
        const detail::Lanes<N> blk = detail::load_lanes<N>(d + z * N);
        for (std::size_t r = 0; r < Rows; ++r) acc[r] += x[r * m + k] * blk;
      }
      for (std::size_t r = 0; r < Rows; ++r) detail::store_lanes<N>(y + r * n + g * N, acc[r], lanes);
    } else {
      detail::Lanes<C> acc[Rows][N / C] = {};
      for (std::uint32_t z = offsets[g]; z < offsets[g + 1]; ++z) {
        const std::size_t k = rows[z];
        for (std::size_t c = 0; c < N / C; ++c) {
          const detail::Lanes<C> blk = detail::load_lanes<C>(d + z * N + c * C);
          for (std::size_t r = 0; r < Rows; ++r) acc[r][c] += x[r * m + k] * blk;
        }
      }
      for (std::size_t r = 0; r < Rows; ++r) store_chunks<N>(y + r * n + g * N, acc[r], lanes);
    }
  }
}

template <std::size_t Rows>
void bsr_gemm_tile(const float* x, std::size_t m, float* y, std::size_t n, const BsrLayer& layer,
                   RuntimeWidth) {
  const std::size_t bw = layer.block_width();
  const auto offsets = layer.group_offsets();
  const auto rows = layer.row_indices();
  const float* d = layer.values().data();
  std::vector<float> acc(Rows * bw);
  for (std::size_t g = 0; g < layer.groups(); ++g) {
    std::fill(acc.begin(), acc.end(), 0.0f);
    for (std::uint32_t z = offsets[g]; z < offsets[g + 1]; ++z) {
      const std::size_t k = rows[z];
      const float* blk = d + z * bw;
      for (std::size_t r = 0; r < Rows; ++r) {
        const float xv = x[r * m + k];
        float* a = acc.data() + r * bw;
        for (std::size_t l = 0; l < bw; ++l) a[l] += xv * blk[l];
      }
    }
    const std::size_t lanes = std::min(bw, n - g * bw);
    for (std::size_t r = 0; r < Rows; ++r) std::copy_n(acc.data() + r * bw, lanes, y + r * n + g * bw);
  }
}

template <std::size_t N>
void bsr_conv_rows(const ConvGeometry& geo, const float* xd, float* yd, const BsrLayer& layer,
                   std::size_t begin, std::size_t end, FixedWidth<N>) {
  constexpr std::size_t C = chunk_width<N>();
  const TensorShape& s = layer.shape();
  const std::size_t stride = N * s.kernel_size();
  const auto offsets = layer.group_offsets();
  const auto rows = layer.row_indices();
  const float* d = layer.values().data();
  std::vector<detail::Tap> taps;
  for (std::size_t o = begin; o < end; ++o) {
    geo.taps(o, taps);
    for (std::size_t g = 0; g < layer.groups(); ++g) {
      detail::Lanes<C> acc[N / C] = {};
      for (std::uint32_t z = offsets[g]; z < offsets[g + 1]; ++z) {
        const std::size_t k = rows[z];
        const float* blk = d + z * stride;
        for (const auto& tap : taps) {
          const float xv = xd[tap.input_row * s.m + k];
          for (std::size_t c = 0; c < N / C; ++c) {
            acc[c] += xv * detail::load_lanes<C>(blk + tap.index * N + c * C);
          }
        }
      }
      store_chunks<N>(yd + o * s.n + g * N, acc, std::min(N, s.n - g * N));
    }
  }
}

void bsr_conv_rows(const ConvGeometry& geo, const float* xd, float* yd, const BsrLayer& layer,
                   std::size_t begin, std::size_t end, RuntimeWidth) {
  const TensorShape& s = layer.shape();
  const std::size_t bw = layer.block_width();
  const std::size_t stride = bw * s.kernel_size();
  const auto offsets = layer.group_offsets();
  const auto rows = layer.row_indices();
  const float* d = layer.values().data();
  std::vector<detail::Tap> taps;
  std::vector<float> acc(bw);
  for (std::size_t o = begin; o < end; ++o) {
    geo.taps(o, taps);
    for (std::size_t g = 0; g < layer.groups(); ++g) {
      std::fill(acc.begin(), acc.end(), 0.0f);
      for (std::uint32_t z = offsets[g]; z < offsets[g + 1]; ++z) {
        const std::size_t k = rows[z];
        const float* blk = d + z * stride;
        for (const auto& tap : taps) {
          const float xv = xd[tap.input_row * s.m + k];
          const float* dt = blk + tap.index * bw;
          for (std::size_t l = 0; l < bw; ++l) acc[l] += xv * dt[l];
        }
      }
      const std::size_t lanes = std::min(bw, s.n - g * bw);
      std::copy_n(acc.begin(), lanes, yd + o * s.n + g * bw);
    }
  }
}

template <typename Width>
void bsr_run(const ConvGeometry& geo, const float* xd, float* yd, const BsrLayer& layer,
             unsigned threads) {
  const TensorShape& s = layer.shape();
  if (geo.pointwise()) {
    detail::parallel_for(geo.out().rows(), threads, [&](std::size_t begin, std::size_t end) {
      std::size_t row = begin;
      for (; row + kRowTile <= end; row += kRowTile) {
        bsr_gemm_tile<kRowTile>(xd + row * s.m, s.m, yd + row * s.n, s.n, layer, Width{});
      }
      for (; row < end; ++row) {
        bsr_gemm_tile<1>(xd + row * s.m, s.m, yd + row * s.n, s.n, layer, Width{});
      }
    });
    return;
  }
  detail::parallel_for(geo.out().rows(), threads, [&](std::size_t begin, std::size_t end) {
    bsr_conv_rows(geo, xd, yd, layer, begin, end, Width{});
  });
}

}  // namespace

Activation bsr_forward(const Activation& x, const BsrLayer& layer, const ConvParams& conv,
                       const ExecOptions& opts) {
  detail::check_channels(x, layer.shape().m, "bsr_forward");
  const ConvGeometry geo(x.shape(), layer.shape(), conv);
  Activation y = Activation::zeros(geo.out());
  const float* xd = x.data().data();
  float* yd = y.mutable_data().data();
  const unsigned threads = resolve_threads(opts.threads);
  switch (layer.block_width()) {
    case 1: bsr_run<FixedWidth<1>>(geo, xd, yd, layer, threads); break;
    case 2: bsr_run<FixedWidth<2>>(geo, xd, yd, layer, threads); break;
    case 4: bsr_run<FixedWidth<4>>(geo, xd, yd, layer, threads); break;
    case 8: bsr_run<FixedWidth<8>>(geo, xd, yd, layer, threads); break;
    case 16: bsr_run<FixedWidth<16>>(geo, xd, yd, layer, threads); break;
    case 32: bsr_run<FixedWidth<32>>(geo, xd, yd, layer, threads); break;
    default: bsr_run<RuntimeWidth>(geo, xd, yd, layer, threads); break;
  }
  return y;
}

}  // namespace onexn
