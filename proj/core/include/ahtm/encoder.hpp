#pragma once

#include <cstdint>

#include "ahtm/sdr.hpp"

namespace ahtm {

struct ScalarEncoderConfig {
  std::uint32_t width = 1024;
  std::uint32_t active_width = 40;
  double min_value = 0.0;
  double max_value = 1.0;
  bool clip_out_of_range = true;

  /// Throws ValidationError when the invariants do not hold.
  void validate() const;
};

/// Contiguous-bucket scalar encoder. Nearby values share most of their
/// active window, so Hamming similarity falls off with numeric distance.
class ScalarEncoder {
 public:
  explicit ScalarEncoder(ScalarEncoderConfig cfg);

  const ScalarEncoderConfig& config() const noexcept { return cfg_; }

  /// First active bit for x.
  std::uint32_t bucket(double x) const;
  Sdr encode(double x) const;

 private:
  ScalarEncoderConfig cfg_;
};

inline Sdr encode(const ScalarEncoderConfig& cfg, double x) { return ScalarEncoder(cfg).encode(x); }

}  // namespace ahtm
