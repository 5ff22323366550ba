#pragma once

#include <cstdint>
#include <span>

#include "shq/diff/tensor.hpp"

namespace shq::data {

struct Event {
  double t;
  std::uint32_t x;
  std::uint32_t y;
  std::uint8_t polarity;  // 0 = OFF, 1 = ON
};

// Binary frames [steps, 2, H, W]: event (t, x, y, p) sets
// [min(floor(t * steps / t_max), steps - 1), p, y, x] to 1.
Tensor bin_events(std::span<const Event> events, std::size_t steps, std::size_t height,
                  std::size_t width, double t_max);

}  // namespace shq::data
