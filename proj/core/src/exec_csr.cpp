#include <algorithm>

#include "conv_geometry.hpp"
#include "onexn/exec.hpp"
#include "parallel.hpp"

namespace onexn {

using detail::ConvGeometry;
using detail::kRowTile;

CsrLayer::CsrLayer(const WeightTensor& t) : shape_(t.shape()) {
  const std::size_t ks = shape_.kernel_size();
  row_ptr_.reserve(shape_.n + 1);
  row_ptr_.push_back(0);
  for (std::size_t j = 0; j < shape_.n; ++j) {
    const auto filter = t.filter(j);
    for (std::size_t i = 0; i < filter.size(); ++i) {
      if (filter[i] == 0.0f) continue;
      channel_.push_back(static_cast<std::uint32_t>(i / ks));
      tap_.push_back(static_cast<std::uint32_t>(i % ks));
      values_.push_back(filter[i]);
    }
    row_ptr_.push_back(static_cast<std::uint32_t>(values_.size()));
  }
}

namespace {

template <std::size_t Rows>
void csr_gemm_tile(const float* x, std::size_t m, float* y, std::size_t n, const CsrLayer& layer) {
  const auto row_ptr = layer.row_ptr();
  const auto channel = layer.channel();
  const auto values = layer.values();
  for (std::size_t j = 0; j < n; ++j) {
    float acc[Rows] = {};
    for (std::uint32_t e = row_ptr[j]; e < row_ptr[j + 1]; ++e) {
      const std::size_t k = channel[e];
      const float v = values[e];
      for (std::size_t r = 0; r < Rows; ++r) acc[r] += x[r * m + k] * v;
    }
    for (std::size_t r = 0; r < Rows; ++r) y[r * n + j] = acc[r];
  }
}

}  // namespace

Activation csr_forward(const Activation& x, const CsrLayer& layer, const ConvParams& conv,
                       const ExecOptions& opts) {
  const TensorShape& s = layer.shape();
  detail::check_channels(x, s.m, "csr_forward");
  const ConvGeometry geo(x.shape(), s, conv);
  Activation y = Activation::zeros(geo.out());
  const float* xd = x.data().data();
  float* yd = y.mutable_data().data();
  const unsigned threads = resolve_threads(opts.threads);

  if (geo.pointwise()) {
    detail::parallel_for(geo.out().rows(), threads, [&](std::size_t begin, std::size_t end) {
      std::size_t row = begin;
      for (; row + kRowTile <= end; row += kRowTile) {
        csr_gemm_tile<kRowTile>(xd + row * s.m, s.m, yd + row * s.n, s.n, layer);
      }
      for (; row < end; ++row) csr_gemm_tile<1>(xd + row * s.m, s.m, yd + row * s.n, s.n, layer);
    });
    return y;
  }

  const auto row_ptr = layer.row_ptr();
  const auto channel = layer.channel();
  const auto tap_of = layer.tap();
  const auto values = layer.values();
  const std::size_t ks = s.kernel_size();
  detail::parallel_for(geo.out().rows(), threads, [&](std::size_t begin, std::size_t end) {
    std::vector<detail::Tap> taps;
    std::vector<const float*> tap_rows(ks);
    for (std::size_t o = begin; o < end; ++o) {
      geo.taps(o, taps);
      std::fill(tap_rows.begin(), tap_rows.end(), nullptr);
      for (const auto& tap : taps) tap_rows[tap.index] = xd + tap.input_row * s.m;
      for (std::size_t j = 0; j < s.n; ++j) {
        float acc = 0.0f;
        for (std::uint32_t e = row_ptr[j]; e < row_ptr[j + 1]; ++e) {
          const float* xr = tap_rows[tap_of[e]];
          if (xr != nullptr) acc += xr[channel[e]] * values[e];
        }
        yd[o * s.n + j] = acc;
      }
    }
  });
  return y;
}

Activation csr_forward(const Activation& x, const WeightTensor& t, const ConvParams& conv,
                       const ExecOptions& opts) {
  return csr_forward(x, CsrLayer(t), conv, opts);
}

}  // namespace onexn
