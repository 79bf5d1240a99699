#include <algorithm>
#include <thread>

#include "conv_geometry.hpp"
#include "lanes.hpp"
#include "onexn/exec.hpp"
#include "parallel.hpp"

namespace onexn {

using detail::ConvGeometry;
using detail::kRowTile;

unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

ActivationShape conv_output_shape(const ActivationShape& in, const TensorShape& w,
                                  const ConvParams& conv) {
  if (conv.stride == 0) fail(ErrorCode::kShape, "stride must be >= 1");
  if (in.height + 2 * conv.padding < w.h || in.width + 2 * conv.padding < w.w) {
    fail(ErrorCode::kShape, "kernel " + std::to_string(w.h) + "x" + std::to_string(w.w) +
                                " larger than padded input " + std::to_string(in.height) + "x" +
                                std::to_string(in.width));
  }
  ActivationShape out = in;
  out.height = (in.height + 2 * conv.padding - w.h) / conv.stride + 1;
  out.width = (in.width + 2 * conv.padding - w.w) / conv.stride + 1;
  out.channels = w.n;
  return out;
}

DenseLayer::DenseLayer(const WeightTensor& t) : shape_(t.shape()) {
  const std::size_t ks = shape_.kernel_size();
  packed_.assign(panels() * shape_.filter_size() * kPanel, 0.0f);
  for (std::size_t j = 0; j < shape_.n; ++j) {
    float* panel_base = packed_.data() + (j / kPanel) * shape_.filter_size() * kPanel;
    const std::size_t lane = j % kPanel;
    for (std::size_t k = 0; k < shape_.m; ++k) {
      const auto kernel = t.kernel(j, k);
      for (std::size_t tap = 0; tap < ks; ++tap) {
        panel_base[(k * ks + tap) * kPanel + lane] = kernel[tap];
      }
    }
  }
}

namespace {

constexpr std::size_t kPanel = DenseLayer::kPanel;

using PanelLanes = detail::Lanes<kPanel>;

template <std::size_t Rows>
void dense_gemm_tile(const float* x, std::size_t m, float* y, std::size_t n,
                     const DenseLayer& layer) {
  for (std::size_t p = 0; p < layer.panels(); ++p) {
    const float* wp = layer.panel(p);
    PanelLanes acc[Rows] = {};
    for (std::size_t k = 0; k < m; ++k) {
      const PanelLanes wk = detail::load_lanes<kPanel>(wp + k * kPanel);
      for (std::size_t r = 0; r < Rows; ++r) acc[r] += x[r * m + k] * wk;
    }
    const std::size_t lanes = std::min(kPanel, n - p * kPanel);
    for (std::size_t r = 0; r < Rows; ++r) {
      detail::store_lanes<kPanel>(y + r * n + p * kPanel, acc[r], lanes);
    }
  }
}

}  // namespace

Activation dense_forward(const Activation& x, const DenseLayer& layer, const ConvParams& conv,
                         const ExecOptions& opts) {
  const TensorShape& s = layer.shape();
  detail::check_channels(x, s.m, "dense_forward");
  const ConvGeometry geo(x.shape(), s, conv);
  Activation y = Activation::zeros(geo.out());
  const float* xd = x.data().data();
  float* yd = y.mutable_data().data();
  const unsigned threads = resolve_threads(opts.threads);

  if (geo.pointwise()) {
    detail::parallel_for(geo.out().rows(), threads, [&](std::size_t begin, std::size_t end) {
      std::size_t row = begin;
      for (; row + kRowTile <= end; row += kRowTile) {
        dense_gemm_tile<kRowTile>(xd + row * s.m, s.m, yd + row * s.n, s.n, layer);
      }
      for (; row < end; ++row) dense_gemm_tile<1>(xd + row * s.m, s.m, yd + row * s.n, s.n, layer);
    });
    return y;
  }

  const std::size_t ks = s.kernel_size();
  detail::parallel_for(geo.out().rows(), threads, [&](std::size_t begin, std::size_t end) {
    std::vector<detail::Tap> taps;
    for (std::size_t o = begin; o < end; ++o) {
      geo.taps(o, taps);
      for (std::size_t p = 0; p < layer.panels(); ++p) {
        const float* wp = layer.panel(p);
        PanelLanes acc = {};
        for (std::size_t k = 0; k < s.m; ++k) {
          for (const auto& tap : taps) {
            const float xv = xd[tap.input_row * s.m + k];
            acc += xv * detail::load_lanes<kPanel>(wp + (k * ks + tap.index) * kPanel);
          }
        }
        const std::size_t lanes = std::min(kPanel, s.n - p * kPanel);
        detail::store_lanes<kPanel>(yd + o * s.n + p * kPanel, acc, lanes);
      }
    }
  });
  return y;
}

Activation dense_forward(const Activation& x, const WeightTensor& t, const ConvParams& conv,
                         const ExecOptions& opts) {
  return dense_forward(x, DenseLayer(t), conv, opts);
}

Activation depthwise_forward(const Activation& x, const WeightTensor& t, const ConvParams& conv,
                             const ExecOptions& opts) {
  if (t.m() != 1) fail(ErrorCode::kShape, "depthwise_forward: weights need m = 1");
  detail::check_channels(x, t.n(), "depthwise_forward");
  const ConvGeometry geo(x.shape(), t.shape(), conv);
  Activation y = Activation::zeros(geo.out());
  const float* xd = x.data().data();
  float* yd = y.mutable_data().data();
  const std::size_t c = t.n();
  detail::parallel_for(geo.out().rows(), resolve_threads(opts.threads),
                       [&](std::size_t begin, std::size_t end) {
                         std::vector<detail::Tap> taps;
                         for (std::size_t o = begin; o < end; ++o) {
                           geo.taps(o, taps);
                           for (std::size_t j = 0; j < c; ++j) {
                             const auto kernel = t.kernel(j, 0);
                             float acc = 0.0f;
                             for (const auto& tap : taps) {
                               acc += xd[tap.input_row * c + j] * kernel[tap.index];
                             }
                             yd[o * c + j] = acc;
                           }
                         }
                       });
  return y;
}

void add_bias(Activation& y, std::span<const float> bias) {
  const std::size_t c = y.shape().channels;
  if (bias.size() != c) fail(ErrorCode::kShape, "bias length does not match channels");
  auto data = y.mutable_data();
  for (std::size_t row = 0; row < y.shape().rows(); ++row) {
    for (std::size_t j = 0; j < c; ++j) data[row * c + j] += bias[j];
  }
}

}  // namespace onexn
