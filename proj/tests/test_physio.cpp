#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "havok/error.hpp"
#include "havok/intermittency.hpp"
#include "havok/physio.hpp"
#include "oracles.hpp"

using namespace havok;
using namespace havok::physio;
using std::numbers::pi;

namespace {

// |H(f)| of the digital Butterworth band-pass: analog prototype evaluated at
// the pre-warped frequency.
double analytic_magnitude(int order, double lo, double hi, double fs, double f) {
  const double w = std::tan(pi * f / fs);
  const double w1 = std::tan(pi * lo / fs);
  const double w2 = std::tan(pi * hi / fs);
  if (w == 0.0) return 0.0;
  const double x = (w * w - w1 * w2) / (w * (w2 - w1));
  return std::pow(1.0 + std::pow(x, 2.0 * order), -0.5);
}

double rms_middle(const std::vector<double>& y) {
  const std::size_t lo = y.size() / 4, hi = 3 * y.size() / 4;
  double acc = 0.0;
  for (std::size_t i = lo; i < hi; ++i) acc += y[i] * y[i];
  return std::sqrt(acc / static_cast<double>(hi - lo));
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::IoError;
}

EcgRecord record(std::vector<double> x, double fs) {
  EcgRecord e;
  e.samples = std::move(x);
  e.fs = fs;
  return e;
}

HrvFrame frame_with(std::optional<double> tri) {
  HrvFrame f;
  f.tri = tri;
  f.n_beats = tri ? 60 : 0;
  return f;
}

}  // namespace

TEST_CASE("butterworth design matches the analytic magnitude") {
  for (auto [order, lo, hi, fs] : {std::tuple{5, 0.5, 30.0, 100.0}, {2, 1.0, 10.0, 250.0}, {4, 5.0, 15.0, 360.0}}) {
    const Sos sos = design_butterworth_bandpass(order, lo, hi, fs);
    CHECK(sos.size() == static_cast<std::size_t>(order));
    for (double f = 0.05; f < fs / 2; f *= 1.07) {
      const double h = std::abs(frequency_response(sos, f, fs));
      CHECK(h == doctest::Approx(analytic_magnitude(order, lo, hi, fs, f)).epsilon(1e-8).scale(1e-12));
      CHECK(butterworth_bandpass_magnitude(order, lo, hi, fs, f) ==
            doctest::Approx(analytic_magnitude(order, lo, hi, fs, f)).epsilon(1e-12));
    }
    // Poles inside the unit circle.
    for (const Biquad& b : sos) CHECK(b.a2 < 1.0);
  }
}

TEST_CASE("zero-phase filtering matches an external reference") {
  std::vector<double> x(80);
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double kk = static_cast<double>(k);
    x[k] = std::sin(0.3 * kk) + 0.5 * std::cos(1.1 * kk) + 0.01 * kk;
  }
  const auto y = sosfiltfilt(design_butterworth_bandpass(5, 0.5, 30.0, 100.0), x);
  const std::vector<std::size_t> idx{0, 1, 7, 20, 40, 79};
  const std::vector<double> expected{-0.0042908908098365922, 0.0031645372732828914, 0.53431377393047796,
                                     -1.0078345778556626,    -0.051853878976210188, -0.18045519647850655};
  for (std::size_t i = 0; i < idx.size(); ++i) CHECK(y[idx[i]] == doctest::Approx(expected[i]).epsilon(1e-9));
}

TEST_CASE("band-pass gains for the ECG filter") {
  const double fs = 100.0;
  auto through = [&](double f, double offset) {
    std::vector<double> x(6000);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = offset + std::sin(2 * pi * f * static_cast<double>(k) / fs);
    return bandpass_butterworth(record(x, fs)).samples;
  };
  const double in_rms = 1.0 / std::sqrt(2.0);
  const double gain10 = 20 * std::log10(rms_middle(through(10.0, 0.0)) / in_rms);
  const double oracle10 = 40 * std::log10(analytic_magnitude(5, 0.5, 30, fs, 10.0));
  CHECK(std::abs(gain10) <= 1.0);
  CHECK(gain10 == doctest::Approx(oracle10).epsilon(0.01).scale(0.01));
  CHECK(20 * std::log10(rms_middle(through(45.0, 0.0)) / in_rms) <= -40.0);
  CHECK(40 * std::log10(analytic_magnitude(5, 0.5, 30, fs, 45.0)) <= -40.0);
  // DC offset of 1 on top of nothing else.
  const auto dc = bandpass_butterworth(record(std::vector<double>(6000, 1.0), fs)).samples;
  CHECK(20 * std::log10(std::max(rms_middle(dc), 1e-300)) <= -40.0);
}

TEST_CASE("zero-phase filtering does not shift an R template") {
  const double fs = 250.0;
  std::vector<double> x(2500, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = (static_cast<double>(i) / fs - 5.0) / 0.012;
    x[i] = std::exp(-0.5 * r * r);
  }
  const auto y = bandpass_butterworth(record(x, fs)).samples;
  long best_lag = 0;
  double best = -1e300;
  for (long lag = -20; lag <= 20; ++lag) {
    double acc = 0.0;
    for (long i = 100; i < 2400; ++i) acc += x[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i + lag)];
    if (acc > best) {
      best = acc;
      best_lag = lag;
    }
  }
  CHECK(best_lag == 0);
}

TEST_CASE("invalid bands") {
  const auto e = record(std::vector<double>(100, 0.0), 100.0);
  CHECK(code_of([&] { bandpass_butterworth(e, 30.0, 0.5); }) == ErrorCode::InvalidBand);
  CHECK(code_of([&] { bandpass_butterworth(e, 0.5, 50.0); }) == ErrorCode::InvalidBand);
  CHECK(code_of([&] { bandpass_butterworth(e, 0.0, 30.0); }) == ErrorCode::InvalidBand);
}

TEST_CASE("R-peak detection on a synthetic ECG") {
  const auto ecg = oracle::synthetic_ecg(600.0, 250.0, {0.8}, 20.0, 1);
  const auto rr = detect_rpeaks(bandpass_butterworth(record(ecg.samples, ecg.fs)));
  std::size_t matched = 0;
  double worst = 0.0;
  std::size_t j = 0;
  for (double t : ecg.r_times) {
    while (j < rr.peak_times.size() && rr.peak_times[j] < t - 0.075) ++j;
    if (j < rr.peak_times.size() && std::abs(rr.peak_times[j] - t) <= 0.075) {
      ++matched;
      worst = std::max(worst, std::abs(rr.peak_times[j] - t));
    }
  }
  CHECK(static_cast<double>(matched) / static_cast<double>(ecg.r_times.size()) >= 0.99);
  CHECK(static_cast<double>(matched) / static_cast<double>(rr.peak_times.size()) >= 0.99);
  CHECK(worst <= 0.020);
}

TEST_CASE("alternating beats give alternating intervals and no rejections") {
  const auto ecg = oracle::synthetic_ecg(120.0, 500.0, {0.8, 0.82}, 40.0, 3);
  const auto rr = detect_rpeaks(bandpass_butterworth(record(ecg.samples, ecg.fs)));
  CHECK(rr.rejected_count == 0);
  REQUIRE(rr.rr.size() + 1 == ecg.r_times.size());
  for (std::size_t k = 0; k < rr.rr.size(); ++k) {
    const double expected = ecg.r_times[k + 1] - ecg.r_times[k];
    CHECK(std::abs(rr.rr[k] - expected) <= 2.0 / 500.0);
  }
  for (std::size_t k = 1; k < rr.rr.size(); ++k) CHECK((rr.rr[k] > 0.81) != (rr.rr[k - 1] > 0.81));
}

TEST_CASE("detection is deterministic and RR tiles the peak span") {
  const auto ecg = oracle::synthetic_ecg(90.0, 250.0, {0.7, 0.9, 0.75}, 20.0, 9);
  const auto filtered = bandpass_butterworth(record(ecg.samples, ecg.fs));
  const auto a = detect_rpeaks(filtered);
  const auto b = detect_rpeaks(filtered);
  CHECK(a.peak_times == b.peak_times);
  double sum = 0.0;
  for (double v : a.rr) sum += v;
  CHECK(sum == doctest::Approx(a.peak_times.back() - a.peak_times.front()).epsilon(1e-12));
  for (std::size_t k = 1; k < a.peak_times.size(); ++k) CHECK(a.peak_times[k] > a.peak_times[k - 1]);
  CHECK(std::all_of(a.rr.begin(), a.rr.end(), [](double v) { return v > 0.0; }));
}

TEST_CASE("flat line has no beats") {
  CHECK(code_of([] { detect_rpeaks(record(std::vector<double>(5000, 0.0), 250.0)); }) == ErrorCode::NoBeats);
}

TEST_CASE("RR outlier rejection keeps the interval but flags it") {
  std::vector<double> peaks{0.0};
  for (int k = 0; k < 12; ++k) peaks.push_back(peaks.back() + (k == 6 ? 1.3 : 0.8));
  const auto rr = rr_from_peaks(peaks, 20.0);
  CHECK(rr.rr.size() == 12);
  CHECK(rr.rejected_count == 1);
  CHECK_FALSE(rr.rr_valid[6]);
  CHECK(rr.valid_count() == 11);
  const auto out_of_range = rr_from_peaks({0.0, 0.25, 1.05, 1.85, 2.65}, 3.0);
  CHECK_FALSE(out_of_range.rr_valid[0]);
}

TEST_CASE("HRV per-minute features") {
  CHECK(triangular_index(std::vector<double>(60, 0.8)) == 1.0);
  std::vector<double> two_bins(40, 0.8);
  two_bins.insert(two_bins.end(), 20, 0.9);
  CHECK(triangular_index(two_bins) == doctest::Approx(1.5));
  CHECK(rmssd(std::vector<double>{0.8, 0.9, 0.8}) == doctest::Approx(0.1));
  CHECK(pnn50(std::vector<double>{0.8, 0.9, 0.91, 0.8}) == doctest::Approx(2.0 / 3.0));

  // 3 minutes of 0.8 s beats, then a sparse minute.
  std::vector<double> peaks;
  for (double t = 0.4; t < 180.0; t += 0.8) peaks.push_back(t);
  for (double t : {185.0, 190.0, 195.0}) peaks.push_back(t);
  const auto rr = rr_from_peaks(peaks, 240.0, RPeakOptions{0.15, 0.2, 0.3, 20.0, 100.0});
  const auto frames = hrv_features(rr);
  REQUIRE(frames.size() == 4);
  for (int m = 0; m < 3; ++m) {
    CHECK(frames[static_cast<std::size_t>(m)].tri.has_value());
    CHECK(*frames[static_cast<std::size_t>(m)].tri >= 1.0);
    CHECK(*frames[static_cast<std::size_t>(m)].mean_rr == doctest::Approx(0.8));
  }
  CHECK(frames[3].n_beats < kMinBeatsPerFrame);
  CHECK_FALSE(frames[3].tri.has_value());
  CHECK_FALSE(frames[3].rmssd.has_value());
}

TEST_CASE("TRI is at least one and equals one only for a single bin") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(0.6, 1.2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(10 + static_cast<std::size_t>(trial % 50));
    for (double& x : v) x = u(rng);
    const double tri = triangular_index(v);
    CHECK(tri >= 1.0);
    std::vector<long long> bins;
    for (double x : v) bins.push_back(static_cast<long long>(std::floor(x * 128.0 + 1e-9)));
    const bool single = std::all_of(bins.begin(), bins.end(), [&](long long b) { return b == bins.front(); });
    CHECK((tri == 1.0) == single);
  }
}

TEST_CASE("feature series fills short gaps and rejects long ones") {
  std::vector<HrvFrame> f{frame_with(1.0), frame_with(2.0), frame_with(3.0)};
  auto ts = feature_series(f, "tri");
  CHECK(ts.values == std::vector<double>{1, 2, 3});
  CHECK(ts.dt == 60.0);

  f = {frame_with(1.0), frame_with(std::nullopt), frame_with(3.0)};
  CHECK(feature_series(f, "tri").values == std::vector<double>{1, 2, 3});

  f = {frame_with(std::nullopt), frame_with(4.0), frame_with(6.0), frame_with(std::nullopt)};
  CHECK(feature_series(f, "tri").values == std::vector<double>{4, 4, 6, 6});

  f = {frame_with(1.0)};
  for (int i = 0; i < 5; ++i) f.push_back(frame_with(std::nullopt));
  f.push_back(frame_with(2.0));
  CHECK(code_of([&] { feature_series(f, "tri"); }) == ErrorCode::GapTooLong);
  CHECK(code_of([&] { feature_series(std::vector<HrvFrame>{frame_with(1.0), frame_with(2.0)}, "bogus"); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("association with exactly covering bursts") {
  AnnotationTrack ann;
  ann.apnea.assign(20, false);
  for (int m : {3, 4, 5, 10, 11, 12}) ann.apnea[static_cast<std::size_t>(m)] = true;
  intermittency::BurstAnalysis b;
  b.t_begin = 0.0;
  b.t_end = 1200.0;
  b.bursts = {{180.0, 360.0, 3, 6}, {600.0, 780.0, 10, 13}};
  const auto a = burst_annotation_association(b, ann);
  CHECK(a.overlap_fraction == 1.0);
  REQUIRE(a.point_biserial_r.has_value());
  CHECK(*a.point_biserial_r == doctest::Approx(1.0));
  CHECK(a.minutes_compared == 20);

  b.bursts.clear();
  const auto none = burst_annotation_association(b, ann);
  CHECK(none.overlap_fraction == 0.0);
  CHECK_FALSE(none.point_biserial_r.has_value());
  CHECK_FALSE(none.reason.empty());
}

TEST_CASE("association under permuted labels is near zero") {
  const std::size_t minutes = 2000;
  std::mt19937_64 rng(77);
  std::bernoulli_distribution coin(0.3);
  intermittency::BurstAnalysis b;
  b.t_begin = 0.0;
  b.t_end = 60.0 * minutes;
  for (std::size_t m = 0; m < minutes; ++m) {
    if (coin(rng)) b.bursts.push_back({60.0 * m + 10.0, 60.0 * m + 40.0, 0, 0});
  }
  AnnotationTrack ann;
  ann.apnea.assign(minutes, false);
  for (std::size_t m = 0; m < minutes * 3 / 10; ++m) ann.apnea[m] = true;
  std::shuffle(ann.apnea.begin(), ann.apnea.end(), rng);
  const auto a = burst_annotation_association(b, ann);
  REQUIRE(a.point_biserial_r.has_value());
  CHECK(std::abs(*a.point_biserial_r) <= 0.1);
}
