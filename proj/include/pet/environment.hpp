#pragma once

// Weather source: outdoor temperature and normalized solar irradiance, either
// from a synthetic diurnal profile or from an interpolated CSV series.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iterator>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "pet/error.hpp"
#include "pet/log.hpp"
#include "pet/profile.hpp"

namespace pet::environment {

struct WeatherSample {
  double t = 0.0;
  double temp_out = 0.0;     // °C
  double irradiance_frac = 0.0;  // fraction of rated panel output, [0, 1]
};

struct SyntheticWeather {
  double temp_mean_c = 29.0;
  double temp_amplitude_c = 6.0;
  double temp_trough_h = 6.0;
  double temp_peak_h = 15.0;
  double sun_rise_h = 6.5;
  double sun_peak_h = 12.0;
  double sun_set_h = 21.5;
  /// Optional per-day offset on temperature, uniform in ±jitter (0 disables).
  double daily_jitter_c = 0.0;
  std::uint64_t seed = 0;

  double temperature(double t_s) const {
    double temp = temp_mean_c +
                  temp_amplitude_c * warped_cosine(hour_of_day(t_s), temp_trough_h, temp_peak_h);
    if (daily_jitter_c > 0.0) {
      const auto day = static_cast<std::uint64_t>(std::floor(t_s / kSecondsPerDay));
      temp += daily_jitter_c * (2.0 * hashed_unit(seed, day) - 1.0);
    }
    return temp;
  }

  /// Raised-cosine daylight curve: 0 outside [sun_rise, sun_set], 1 at sun_peak.
  double irradiance(double t_s) const {
    const double h = hour_of_day(t_s);
    if (h <= sun_rise_h || h >= sun_set_h) return 0.0;
    const double x = h <= sun_peak_h ? (sun_peak_h - h) / (sun_peak_h - sun_rise_h)
                                     : (h - sun_peak_h) / (sun_set_h - sun_peak_h);
    return std::clamp(0.5 * (1.0 + std::cos(std::numbers::pi * x)), 0.0, 1.0);
  }
};

/// Irradiance is stored already normalized; samples strictly increase in t.
class WeatherSeries {
public:
  WeatherSeries() = default;
  explicit WeatherSeries(std::vector<WeatherSample> samples) : samples_(std::move(samples)) {
    if (samples_.empty()) throw ParseError("weather series is empty");
    for (std::size_t i = 1; i < samples_.size(); ++i)
      if (!(samples_[i].t > samples_[i - 1].t))
        throw ParseError(fmt::format("weather timestamps not increasing at sample {}", i));
  }

  const std::vector<WeatherSample>& samples() const { return samples_; }
  double start() const { return samples_.front().t; }
  double end() const { return samples_.back().t; }

  WeatherSample at(double t_s) const {
    double t = t_s;
    if (t < start() || t > end()) {
      // Wrap by whole days of data.
      const double span = std::max(kSecondsPerDay,
                                   std::ceil((end() - start()) / kSecondsPerDay) * kSecondsPerDay);
      double offset = std::fmod(t - start(), span);
      if (offset < 0.0) offset += span;
      t = start() + offset;
      if (!warned_->exchange(true))
        log::warn(fmt::format("weather time {} s outside series [{}, {}]; wrapping by day of data",
                              t_s, start(), end()));
    }
    auto hi = std::lower_bound(samples_.begin(), samples_.end(), t,
                               [](const WeatherSample& s, double v) { return s.t < v; });
    if (hi == samples_.end()) {
      // Inside the wrap span but past the last sample: hold the last value.
      auto s = samples_.back();
      s.t = t_s;
      return s;
    }
    if (hi == samples_.begin() || hi->t == t) {
      auto s = *hi;
      s.t = t_s;
      return s;
    }
    const auto lo = std::prev(hi);
    const double w = (t - lo->t) / (hi->t - lo->t);
    return WeatherSample{t_s, lo->temp_out + w * (hi->temp_out - lo->temp_out),
                         lo->irradiance_frac + w * (hi->irradiance_frac - lo->irradiance_frac)};
  }

private:
  std::vector<WeatherSample> samples_;
  std::shared_ptr<std::atomic<bool>> warned_ = std::make_shared<std::atomic<bool>>(false);
};

namespace detail {

/// Accepts plain seconds or HH:MM[:SS] (seconds since start of the series day).
inline std::optional<double> parse_timestamp(const std::string& field) {
  if (field.find(':') != std::string::npos) {
    int h = 0, m = 0, s = 0;
    char c1 = 0, c2 = 0;
    std::istringstream in(field);
    in >> h >> c1 >> m;
    if (!in || c1 != ':') return std::nullopt;
    if (in >> c2) {
      if (c2 != ':' || !(in >> s)) return std::nullopt;
    }
    return h * 3600.0 + m * 60.0 + s;
  }
  try {
    std::size_t used = 0;
    double v = std::stod(field, &used);
    if (used != field.size()) return std::nullopt;
    return v;
  } catch (...) {
    return std::nullopt;
  }
}

inline std::string trim(std::string s) {
  auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
  return s;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

} // namespace detail

/// Parse a weather CSV with header columns timestamp, temp_c, irradiance_wm2
/// (any order, extra columns ignored).
inline WeatherSeries parse_weather_csv(std::istream& in, double rated_irradiance_wm2 = 1000.0) {
  if (!(rated_irradiance_wm2 > 0.0)) throw ParseError("rated irradiance must be positive");
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!detail::trim(line).empty()) break;
  }
  if (detail::trim(line).empty()) throw ParseError("weather CSV is empty");

  const auto header = detail::split_csv(line);
  auto column = [&](const char* name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError(fmt::format("weather CSV missing column '{}'", name));
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto c_t = column("timestamp");
  const auto c_temp = column("temp_c");
  const auto c_irr = column("irradiance_wm2");
  const auto needed = std::max({c_t, c_temp, c_irr}) + 1;

  std::vector<WeatherSample> samples;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv(line);
    if (cells.size() < needed) throw ParseError(fmt::format("weather CSV row {}: too few columns", row));
    const auto t = detail::parse_timestamp(cells[c_t]);
    if (!t) throw ParseError(fmt::format("weather CSV row {}: bad timestamp '{}'", row, cells[c_t]));
    double temp = 0.0, irr = 0.0;
    try {
      temp = std::stod(cells[c_temp]);
      irr = std::stod(cells[c_irr]);
    } catch (...) {
      throw ParseError(fmt::format("weather CSV row {}: non-numeric value", row));
    }
    if (!samples.empty() && !(*t > samples.back().t))
      throw ParseError(fmt::format("weather CSV row {}: timestamps not increasing", row));
    samples.push_back({*t, temp, std::clamp(irr / rated_irradiance_wm2, 0.0, 1.0)});
  }
  if (samples.empty()) throw ParseError("weather CSV has no data rows");
  return WeatherSeries(std::move(samples));
}

inline WeatherSeries load_weather_csv(const std::string& path, double rated_irradiance_wm2 = 1000.0) {
  std::ifstream in(path);
  if (!in) throw ParseError(fmt::format("cannot open weather file '{}'", path));
  return parse_weather_csv(in, rated_irradiance_wm2);
}

/// Read-only after construction.
class Weather {
public:
  explicit Weather(SyntheticWeather synthetic = {}) : synthetic_(synthetic) {}
  explicit Weather(WeatherSeries series) : series_(std::move(series)) {}

  bool from_file() const { return series_.has_value(); }

  WeatherSample sample(double t_s) const {
    if (series_) return series_->at(t_s);
    return WeatherSample{t_s, synthetic_.temperature(t_s), synthetic_.irradiance(t_s)};
  }

private:
  SyntheticWeather synthetic_;
  std::optional<WeatherSeries> series_;
};

} // namespace pet::environment
