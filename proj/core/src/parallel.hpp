#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace onexn::detail {

// Splits [0, count) into `threads` contiguous ranges and runs fn(begin, end)
// on each. The caller's thread takes the first range.
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (count == 0) return;
  const std::size_t parts = std::max<std::size_t>(1, std::min<std::size_t>(threads, count));
  if (parts == 1) {
    fn(std::size_t{0}, count);
    return;
  }
  const std::size_t chunk = (count + parts - 1) / parts;
  std::vector<std::exception_ptr> errors(parts);
  {
    std::vector<std::jthread> workers;
    workers.reserve(parts - 1);
    for (std::size_t p = 1; p < parts; ++p) {
      const std::size_t begin = std::min(count, p * chunk);
      const std::size_t end = std::min(count, begin + chunk);
      workers.emplace_back([&, p, begin, end] {
        try {
          fn(begin, end);
        } catch (...) {
          errors[p] = std::current_exception();
        }
      });
    }
    try {
      fn(std::size_t{0}, std::min(count, chunk));
    } catch (...) {
      errors[0] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace onexn::detail
