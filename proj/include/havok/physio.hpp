#pragma once

#include <complex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "havok/intermittency.hpp"
#include "havok/time_series.hpp"

namespace havok::physio {

struct EcgRecord {
  std::vector<double> samples;  // mV
  double fs = 0.0;              // Hz
  std::string record_id;

  double duration() const { return fs > 0.0 ? static_cast<double>(samples.size()) / fs : 0.0; }
};

// ---------------------------------------------------------------------------
// Butterworth band-pass as a cascade of second-order sections.

// Direct form II transposed, a0 == 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

using Sos = std::vector<Biquad>;

// Analog prototype of the given order mapped to a band-pass by the bilinear
// transform with both edges pre-warped. Unit gain at the (warped) centre.
Sos design_butterworth_bandpass(int order, double low_hz, double high_hz, double fs);

std::complex<double> frequency_response(const Sos& sos, double f_hz, double fs);

// |H(f)| of the ideal band-pass, evaluated at the pre-warped analog frequency.
double butterworth_bandpass_magnitude(int order, double low_hz, double high_hz, double fs, double f_hz);

// Single pass with steady-state initial conditions scaled by the first sample.
std::vector<double> sosfilt(const Sos& sos, std::span<const double> x);
// Forward-backward pass with odd-extension padding; zero net phase.
std::vector<double> sosfiltfilt(const Sos& sos, std::span<const double> x);

EcgRecord bandpass_butterworth(const EcgRecord& ecg, double low_hz = 0.5, double high_hz = 30.0,
                               int order = 5, bool zero_phase = true);

// ---------------------------------------------------------------------------
// R peaks and RR intervals.

struct RrSeries {
  std::vector<double> peak_times;  // s, strictly increasing
  std::vector<double> rr;          // rr[k] = peak_times[k+1] - peak_times[k]
  std::vector<bool> rr_valid;      // false for rejected intervals
  std::size_t rejected_count = 0;
  double duration = 0.0;           // length of the source record, s

  std::size_t valid_count() const;
};

struct RPeakOptions {
  double integration_window = 0.150;  // s
  double refractory = 0.200;          // s
  double rr_min = 0.3;
  double rr_max = 2.0;
  double rr_tolerance = 0.2;  // allowed relative deviation from the 5-beat median
};

RrSeries detect_rpeaks(const EcgRecord& ecg, const RPeakOptions& opts = {});

// Builds an RR series from known peak times and applies outlier rejection.
RrSeries rr_from_peaks(std::vector<double> peak_times, double duration, const RPeakOptions& opts = {});

// Builds an RR series from interval values, e.g. `time,rr` CSV rows where time
// is the beat ending each interval.
RrSeries rr_from_intervals(std::span<const double> end_times, std::span<const double> rr, double duration,
                           const RPeakOptions& opts = {});

// ---------------------------------------------------------------------------
// HRV features.

inline constexpr std::size_t kMinBeatsPerFrame = 8;

struct HrvFrame {
  int minute_index = 0;
  std::size_t n_beats = 0;
  std::optional<double> tri;
  std::optional<double> mean_rr;
  std::optional<double> sdnn;
  std::optional<double> rmssd;
  std::optional<double> pnn50;

  std::optional<double> feature(std::string_view name) const;
};

double triangular_index(std::span<const double> rr, double binwidth = 1.0 / 128.0);
double rmssd(std::span<const double> rr);
double pnn50(std::span<const double> rr);

std::vector<HrvFrame> hrv_features(const RrSeries& rr, double window = 60.0, double tri_binwidth = 1.0 / 128.0);

inline constexpr int kMaxGapFrames = 3;

// One sample per frame with dt = window. Null runs of up to kMaxGapFrames are
// linearly interpolated (held constant at the series edges).
TimeSeries feature_series(std::span<const HrvFrame> frames, std::string_view feature, double window = 60.0);

// ---------------------------------------------------------------------------
// Minute-level annotations.

struct AnnotationTrack {
  std::vector<bool> apnea;  // true = 'A', false = 'N'
  double t0 = 0.0;
  double minute = 60.0;
};

struct Association {
  double overlap_fraction = 0.0;
  std::optional<double> point_biserial_r;
  std::optional<double> p_value;
  std::string reason;  // set when r is null
  std::size_t minutes_compared = 0;
};

Association burst_annotation_association(const intermittency::BurstAnalysis& b, const AnnotationTrack& ann);

}  // namespace havok::physio
