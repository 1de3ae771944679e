#include <gtest/gtest.h>

#include <sstream>

#include "pet/environment.hpp"
#include "pet/log.hpp"

using namespace pet;
using namespace pet::environment;

namespace {

constexpr double kH = 3600.0;

WeatherSeries parse(const std::string& text, double rated = 1000.0) {
  std::istringstream in(text);
  return parse_weather_csv(in, rated);
}

}  // namespace

TEST(WarpedCosine, HitsTroughAndPeakWithZeroMean) {
  EXPECT_NEAR(warped_cosine(6.0, 6.0, 15.0), -1.0, 1e-12);
  EXPECT_NEAR(warped_cosine(15.0, 6.0, 15.0), 1.0, 1e-12);
  double sum = 0.0;
  constexpr int n = 24 * 600;
  for (int i = 0; i < n; ++i) sum += warped_cosine(24.0 * i / n, 6.0, 15.0);
  EXPECT_NEAR(sum / n, 0.0, 1e-9);
}

TEST(SyntheticWeather, NightHasNoSun) {
  SyntheticWeather w;
  EXPECT_EQ(w.irradiance(3 * kH), 0.0);
  EXPECT_EQ(w.irradiance(6.5 * kH), 0.0);
  EXPECT_EQ(w.irradiance(21.5 * kH), 0.0);
  EXPECT_EQ(w.irradiance(23 * kH), 0.0);
}

TEST(SyntheticWeather, IrradiancePeaksAtNoon) {
  SyntheticWeather w;
  EXPECT_DOUBLE_EQ(w.irradiance(12 * kH), 1.0);
  EXPECT_DOUBLE_EQ(w.irradiance((24 + 12) * kH), 1.0);
}

TEST(SyntheticWeather, IrradianceUnimodalAndBounded) {
  SyntheticWeather w;
  double prev = 0.0;
  for (double t = 6.5 * kH; t <= 12 * kH; t += 60) {
    const double v = w.irradiance(t);
    EXPECT_GE(v, prev);
    prev = v;
  }
  for (double t = 12 * kH; t <= 21.5 * kH; t += 60) {
    const double v = w.irradiance(t);
    EXPECT_LE(v, prev);
    EXPECT_GE(v, 0.0);
    prev = v;
  }
  // Produces from around 07:00 and is negligible by 21:00.
  EXPECT_GT(w.irradiance(7.5 * kH), 0.0);
  EXPECT_LT(w.irradiance(21 * kH), 0.01);
}

TEST(SyntheticWeather, TemperatureExtremesAndPeriodicity) {
  SyntheticWeather w;
  EXPECT_NEAR(w.temperature(15 * kH), 35.0, 1e-9);
  EXPECT_NEAR(w.temperature(6 * kH), 23.0, 1e-9);
  double hi = -1e9, lo = 1e9, t_hi = 0, t_lo = 0;
  for (double t = 0; t < 86400; t += 60) {
    const double v = w.temperature(t);
    if (v > hi) hi = v, t_hi = t;
    if (v < lo) lo = v, t_lo = t;
    EXPECT_NEAR(v, w.temperature(t + 3 * 86400.0), 1e-9);
  }
  EXPECT_DOUBLE_EQ(t_hi, 15 * kH);
  EXPECT_DOUBLE_EQ(t_lo, 6 * kH);
}

TEST(SyntheticWeather, DailyJitterIsBoundedAndPerDay) {
  SyntheticWeather w;
  w.daily_jitter_c = 1.5;
  w.seed = 9;
  SyntheticWeather base;
  bool any_diff = false;
  for (int d = 0; d < 8; ++d) {
    const double t0 = d * 86400.0 + 3 * kH;
    const double off = w.temperature(t0) - base.temperature(t0);
    EXPECT_LE(std::abs(off), 1.5);
    EXPECT_NEAR(w.temperature(t0 + 5 * kH) - base.temperature(t0 + 5 * kH), off, 1e-9);
    any_diff |= std::abs(off) > 1e-6;
  }
  EXPECT_TRUE(any_diff);
}

TEST(WeatherCsv, MidpointInterpolation) {
  const auto s = parse("timestamp,temp_c,irradiance_wm2\n00:00,10,0\n01:00,12,200\n");
  const auto v = s.at(1800);
  EXPECT_DOUBLE_EQ(v.temp_out, 11.0);
  EXPECT_DOUBLE_EQ(v.irradiance_frac, 0.1);
  EXPECT_DOUBLE_EQ(v.t, 1800.0);
}

TEST(WeatherCsv, IrradianceClampedToRating) {
  const auto s = parse("timestamp,temp_c,irradiance_wm2\n0,20,1500\n3600,20,-5\n");
  EXPECT_DOUBLE_EQ(s.samples()[0].irradiance_frac, 1.0);
  EXPECT_DOUBLE_EQ(s.samples()[1].irradiance_frac, 0.0);
  const auto r = parse("timestamp,temp_c,irradiance_wm2\n0,20,400\n", 800.0);
  EXPECT_DOUBLE_EQ(r.samples()[0].irradiance_frac, 0.5);
}

TEST(WeatherCsv, ColumnOrderIsFreeAndSecondsAccepted) {
  const auto s = parse("irradiance_wm2, temp_c ,timestamp,humidity\n0,15,0,80\n500,17,7200,70\n");
  EXPECT_DOUBLE_EQ(s.at(3600).temp_out, 16.0);
  EXPECT_DOUBLE_EQ(s.at(3600).irradiance_frac, 0.25);
}

TEST(WeatherCsv, EmptyFileRejected) {
  EXPECT_THROW(parse(""), ParseError);
  EXPECT_THROW(parse("\n\n"), ParseError);
  EXPECT_THROW(parse("timestamp,temp_c,irradiance_wm2\n"), ParseError);
}

TEST(WeatherCsv, MissingColumnNamed) {
  try {
    parse("timestamp,temp_c\n0,1\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("irradiance_wm2"), std::string::npos);
  }
}

TEST(WeatherCsv, NonMonotonicTimestampNamesRow) {
  try {
    parse("timestamp,temp_c,irradiance_wm2\n0,1,0\n3600,1,0\n1800,1,0\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("row 4"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse("timestamp,temp_c,irradiance_wm2\n0,1,0\n0,1,0\n"), ParseError);
}

TEST(WeatherCsv, BadValuesRejected) {
  EXPECT_THROW(parse("timestamp,temp_c,irradiance_wm2\n0,warm,0\n"), ParseError);
  EXPECT_THROW(parse("timestamp,temp_c,irradiance_wm2\nnoon,20,0\n"), ParseError);
  EXPECT_THROW(parse("timestamp,temp_c,irradiance_wm2\n0,20\n"), ParseError);
}

TEST(WeatherCsv, WrapsByDayBeyondRange) {
  log::set_quiet(true);
  std::string text = "timestamp,temp_c,irradiance_wm2\n";
  for (int h = 0; h <= 23; ++h) text += fmt::format("{}:00,{},0\n", h, 10 + h);
  const auto s = parse(text);
  EXPECT_DOUBLE_EQ(s.at(86400.0 + 5 * kH).temp_out, 15.0);
  EXPECT_DOUBLE_EQ(s.at(3 * 86400.0 + 2.5 * kH).temp_out, 12.5);
  EXPECT_DOUBLE_EQ(s.at(3 * 86400.0 + 2.5 * kH).t, 3 * 86400.0 + 2.5 * kH);
  log::set_quiet(false);
}

TEST(WeatherCsv, MissingFileRejected) {
  EXPECT_THROW(load_weather_csv("/nonexistent/weather.csv"), ParseError);
}

TEST(Weather, SyntheticAndSeriesDispatch) {
  Weather syn;
  EXPECT_FALSE(syn.from_file());
  EXPECT_DOUBLE_EQ(syn.sample(12 * kH).irradiance_frac, 1.0);
  Weather file(parse("timestamp,temp_c,irradiance_wm2\n0,10,0\n3600,12,0\n"));
  EXPECT_TRUE(file.from_file());
  EXPECT_DOUBLE_EQ(file.sample(900).temp_out, 10.5);
}

TEST(Weather, IrradianceFractionAlwaysInUnitInterval) {
  Weather w;
  for (double t = 0; t < 2 * 86400; t += 137) {
    const auto s = w.sample(t);
    EXPECT_GE(s.irradiance_frac, 0.0);
    EXPECT_LE(s.irradiance_frac, 1.0);
  }
}
