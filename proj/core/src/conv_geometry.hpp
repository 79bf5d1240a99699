#pragma once

#include <cstddef>
#include <vector>

#include "onexn/activation.hpp"
#include "onexn/error.hpp"
#include "onexn/exec.hpp"

namespace onexn::detail {

struct Tap {
  std::size_t index;      // q * kw + r
  std::size_t input_row;  // row of the input channel matrix
};

// Maps output rows to the input rows each kernel tap reads.
class ConvGeometry {
 public:
  ConvGeometry(const ActivationShape& in, const TensorShape& w, const ConvParams& conv)
      : in_(in), out_(conv_output_shape(in, w, conv)), kh_(w.h), kw_(w.w),
        stride_(conv.stride), pad_(conv.padding) {}

  const ActivationShape& in() const { return in_; }
  const ActivationShape& out() const { return out_; }
  bool pointwise() const { return kh_ == 1 && kw_ == 1 && stride_ == 1 && pad_ == 0; }

  // In-bounds taps of output row o, ascending by tap index.
  void taps(std::size_t o, std::vector<Tap>& out) const {
    out.clear();
    const std::size_t ox = o % out_.width;
    const std::size_t oy = (o / out_.width) % out_.height;
    const std::size_t b = o / (out_.width * out_.height);
    for (std::size_t q = 0; q < kh_; ++q) {
      const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride_ + q) -
                                static_cast<std::ptrdiff_t>(pad_);
      if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in_.height)) continue;
      for (std::size_t r = 0; r < kw_; ++r) {
        const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride_ + r) -
                                  static_cast<std::ptrdiff_t>(pad_);
        if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in_.width)) continue;
        const std::size_t row = (b * in_.height + static_cast<std::size_t>(iy)) * in_.width +
                                static_cast<std::size_t>(ix);
        out.push_back({q * kw_ + r, row});
      }
    }
  }

 private:
  ActivationShape in_;
  ActivationShape out_;
  std::size_t kh_, kw_, stride_, pad_;
};

inline void check_channels(const Activation& x, std::size_t expected, const char* who) {
  if (x.shape().channels != expected) {
    fail(ErrorCode::kShape, std::string(who) + ": input has " +
                                std::to_string(x.shape().channels) + " channels, layer expects " +
                                std::to_string(expected));
  }
}

// Rows handled together by the GEMM micro-kernels.
inline constexpr std::size_t kRowTile = 4;

}  // namespace onexn::detail
