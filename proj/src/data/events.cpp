#include "shq/data/events.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "shq/errors.hpp"

namespace shq::data {

Tensor bin_events(std::span<const Event> events, std::size_t steps, std::size_t height,
                  std::size_t width, double t_max) {
  if (steps == 0 || height == 0 || width == 0) throw ValidationError("bin_events: dimensions must be positive");
  if (!(t_max > 0.0)) throw ValidationError("bin_events: t_max must be positive");
  std::vector<double> frames(steps * 2 * height * width, 0.0);
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    if (e.x >= width || e.y >= height || e.polarity > 1 || !(e.t >= 0.0 && e.t <= t_max)) {
      std::ostringstream msg;
      msg << "bin_events: event " << i << " (t=" << e.t << ", x=" << e.x << ", y=" << e.y
          << ", p=" << int(e.polarity) << ") lies outside [0," << t_max << "] x [0," << width
          << ") x [0," << height << ")";
      throw ValidationError(msg.str());
    }
    const double raw = std::floor(e.t * static_cast<double>(steps) / t_max);
    const std::size_t bin = std::min(static_cast<std::size_t>(raw), steps - 1);
    frames[((bin * 2 + e.polarity) * height + e.y) * width + e.x] = 1.0;
  }
  return Tensor({steps, 2, height, width}, std::move(frames));
}

}  // namespace shq::data
