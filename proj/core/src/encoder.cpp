#include "ahtm/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ahtm/error.hpp"

namespace ahtm {

void ScalarEncoderConfig::validate() const {
  if (active_width == 0 || active_width >= width) {
    throw ValidationError("encoder: require 0 < active_width < width (got active_width=" +
                          std::to_string(active_width) + ", width=" + std::to_string(width) + ")");
  }
  if (!(min_value < max_value)) {
    throw ValidationError("encoder: require min < max");
  }
}

ScalarEncoder::ScalarEncoder(ScalarEncoderConfig cfg) : cfg_(cfg) { cfg_.validate(); }

std::uint32_t ScalarEncoder::bucket(double x) const {
  if (!std::isfinite(x)) throw InputError("encoder: non-finite input");
  if (x < cfg_.min_value || x > cfg_.max_value) {
    if (!cfg_.clip_out_of_range) {
      throw RangeError("encoder: value " + std::to_string(x) + " outside [" + std::to_string(cfg_.min_value) +
                       ", " + std::to_string(cfg_.max_value) + "]");
    }
    x = std::clamp(x, cfg_.min_value, cfg_.max_value);
  }
  const double span = static_cast<double>(cfg_.width - cfg_.active_width);
  const double fraction = (x - cfg_.min_value) / (cfg_.max_value - cfg_.min_value);
  const auto b = static_cast<std::uint32_t>(std::floor(fraction * span + 0.5));
  return std::min(b, cfg_.width - cfg_.active_width);
}

Sdr ScalarEncoder::encode(double x) const {
  std::vector<BitIndex> active(cfg_.active_width);
  std::iota(active.begin(), active.end(), bucket(x));
  return Sdr(cfg_.width, std::move(active));
}

}  // namespace ahtm
