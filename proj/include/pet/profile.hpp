#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace pet {

inline constexpr double kSecondsPerHour = 3600.0;
inline constexpr double kSecondsPerDay = 86400.0;

/// Hour of day in [0, 24) for a simulation time in seconds.
inline double hour_of_day(double t_s) {
  double h = std::fmod(t_s, kSecondsPerDay) / kSecondsPerHour;
  if (h < 0.0) h += 24.0;
  return h;
}

/// Asymmetric 24 h periodic cosine in [-1, 1]: -1 at `trough_h`, +1 at `peak_h`.
///
/// Each half (rise and fall) is a half-period cosine stretched to its own
/// length, so the daily mean is exactly zero for any trough/peak placement.
inline double warped_cosine(double hour, double trough_h, double peak_h) {
  const double rise = std::fmod(peak_h - trough_h + 24.0, 24.0);
  const double fall = 24.0 - rise;
  const double since_trough = std::fmod(hour - trough_h + 48.0, 24.0);
  if (since_trough <= rise) return -std::cos(std::numbers::pi * since_trough / rise);
  return std::cos(std::numbers::pi * (since_trough - rise) / fall);
}

/// splitmix64 finalizer; used to derive independent per-entity seeds and
/// stateless noise from (seed, index) pairs.
inline constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(mix64(seed) ^ mix64(stream + 0x5851F42D4C957F2Dull));
}

/// Uniform in [0, 1) from a hashed (seed, index) pair.
inline constexpr double hashed_unit(std::uint64_t seed, std::uint64_t index) {
  return static_cast<double>(derive_seed(seed, index) >> 11) * 0x1.0p-53;
}

} // namespace pet
