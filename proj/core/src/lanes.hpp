#pragma once

#include <cstddef>
#include <cstring>

namespace onexn::detail {

// N contiguous output lanes as one GCC/Clang vector. Arithmetic on these is
// plain IEEE multiply and add per lane, matching the scalar paths bit for bit.
template <std::size_t N>
struct LaneType;

#define ONEXN_LANE_TYPE(N)                                                 \
  template <>                                                              \
  struct LaneType<N> {                                                     \
    typedef float type __attribute__((vector_size(N * sizeof(float))));   \
  };
ONEXN_LANE_TYPE(1)
ONEXN_LANE_TYPE(2)
ONEXN_LANE_TYPE(4)
ONEXN_LANE_TYPE(8)
ONEXN_LANE_TYPE(16)
#undef ONEXN_LANE_TYPE

template <std::size_t N>
using Lanes = typename LaneType<N>::type;

template <std::size_t N>
inline Lanes<N> load_lanes(const float* p) {
  Lanes<N> v;
  std::memcpy(&v, p, sizeof(v));
  return v;
}

template <std::size_t N>
inline void store_lanes(float* p, const Lanes<N>& v, std::size_t count = N) {
  std::memcpy(p, &v, count * sizeof(float));
}

}  // namespace onexn::detail
