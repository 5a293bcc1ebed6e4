#include "havok/physio.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include "havok/error.hpp"

namespace havok::physio {

using cd = std::complex<double>;
using std::numbers::pi;

namespace {

void check_band(double low_hz, double high_hz, double fs) {
  if (!(fs > 0.0) || !(low_hz > 0.0) || !(high_hz > low_hz) || !(high_hz < 0.5 * fs)) {
    std::ostringstream msg;
    msg << "need 0 < low < high < fs/2, got low=" << low_hz << " high=" << high_hz << " fs=" << fs;
    fail(ErrorCode::InvalidBand, msg.str());
  }
}

double prewarp(double f_hz, double fs) { return 2.0 * fs * std::tan(pi * f_hz / fs); }

}  // namespace

Sos design_butterworth_bandpass(int order, double low_hz, double high_hz, double fs) {
  check_band(low_hz, high_hz, fs);
  if (order < 1) fail(ErrorCode::InvalidArgument, "filter order must be >= 1");

  const double w1 = prewarp(low_hz, fs);
  const double w2 = prewarp(high_hz, fs);
  const double bw = w2 - w1;
  const double w0sq = w1 * w2;
  const double k = 2.0 * fs;

  std::vector<cd> zpoles;
  for (int i = 0; i < order; ++i) {
    const cd p = std::polar(1.0, pi * (2.0 * i + 1.0 + order) / (2.0 * order));
    const cd half = p * bw * 0.5;
    const cd root = std::sqrt(half * half - w0sq);
    for (const cd s : {half + root, half - root}) zpoles.push_back((k + s) / (k - s));
  }

  // Pair conjugates, then remaining real poles two at a time.
  Sos sos;
  std::vector<double> reals;
  for (const cd& z : zpoles) {
    const double tol = 1e-12 * std::max(1.0, std::abs(z));
    if (std::abs(z.imag()) <= tol) {
      reals.push_back(z.real());
    } else if (z.imag() > 0.0) {
      sos.push_back(Biquad{1.0, 0.0, -1.0, -2.0 * z.real(), std::norm(z)});
    }
  }
  std::sort(reals.begin(), reals.end());
  for (std::size_t i = 0; i + 1 < reals.size(); i += 2) {
    sos.push_back(Biquad{1.0, 0.0, -1.0, -(reals[i] + reals[i + 1]), reals[i] * reals[i + 1]});
  }
  if (sos.size() != static_cast<std::size_t>(order)) {
    fail(ErrorCode::ConvergenceFailure, "band-pass pole pairing failed");
  }

  const double centre = 2.0 * std::atan(std::sqrt(w0sq) / k) / (2.0 * pi) * fs;
  const double gain = std::abs(frequency_response(sos, centre, fs));
  sos.front().b0 /= gain;
  sos.front().b1 /= gain;
  sos.front().b2 /= gain;
  return sos;
}

cd frequency_response(const Sos& sos, double f_hz, double fs) {
  const cd zinv = std::polar(1.0, -2.0 * pi * f_hz / fs);
  cd h = 1.0;
  for (const Biquad& s : sos) {
    h *= (s.b0 + s.b1 * zinv + s.b2 * zinv * zinv) / (1.0 + s.a1 * zinv + s.a2 * zinv * zinv);
  }
  return h;
}

double butterworth_bandpass_magnitude(int order, double low_hz, double high_hz, double fs, double f_hz) {
  const double w = prewarp(f_hz, fs);
  if (w <= 0.0) return 0.0;
  const double w1 = prewarp(low_hz, fs);
  const double w2 = prewarp(high_hz, fs);
  const double ratio = (w * w - w1 * w2) / (w * (w2 - w1));
  return 1.0 / std::sqrt(1.0 + std::pow(ratio * ratio, order));
}

namespace {

struct SectionState {
  double z1 = 0.0;
  double z2 = 0.0;
};

// Steady-state section states for a unit step applied to the cascade.
std::vector<SectionState> step_states(const Sos& sos) {
  std::vector<SectionState> zi;
  double in = 1.0;
  for (const Biquad& s : sos) {
    const double dc = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    const double out = dc * in;
    SectionState st;
    st.z2 = s.b2 * in - s.a2 * out;
    st.z1 = s.b1 * in - s.a1 * out + st.z2;
    zi.push_back(st);
    in = out;
  }
  return zi;
}

std::vector<double> run(const Sos& sos, std::span<const double> x, double initial) {
  std::vector<SectionState> state = step_states(sos);
  for (SectionState& st : state) {
    st.z1 *= initial;
    st.z2 *= initial;
  }
  std::vector<double> y(x.begin(), x.end());
  for (std::size_t i = 0; i < sos.size(); ++i) {
    const Biquad& s = sos[i];
    SectionState& st = state[i];
    for (double& v : y) {
      const double in = v;
      const double out = s.b0 * in + st.z1;
      st.z1 = s.b1 * in - s.a1 * out + st.z2;
      st.z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
  return y;
}

}  // namespace

std::vector<double> sosfilt(const Sos& sos, std::span<const double> x) {
  if (x.empty()) return {};
  return run(sos, x, x.front());
}

std::vector<double> sosfiltfilt(const Sos& sos, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) return {x.begin(), x.end()};
  const std::size_t pad = std::min(n - 1, 3 * (2 * sos.size() + 1));

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  std::vector<double> fwd = run(sos, ext, ext.front());
  std::reverse(fwd.begin(), fwd.end());
  std::vector<double> back = run(sos, fwd, fwd.front());
  std::reverse(back.begin(), back.end());
  return {back.begin() + static_cast<std::ptrdiff_t>(pad), back.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

EcgRecord bandpass_butterworth(const EcgRecord& ecg, double low_hz, double high_hz, int order, bool zero_phase) {
  check_band(low_hz, high_hz, ecg.fs);
  if (!all_finite(ecg.samples)) fail(ErrorCode::NonFinite, "ECG contains NaN/Inf");
  const Sos sos = design_butterworth_bandpass(order, low_hz, high_hz, ecg.fs);
  EcgRecord out;
  out.fs = ecg.fs;
  out.record_id = ecg.record_id;
  out.samples = zero_phase ? sosfiltfilt(sos, ecg.samples) : sosfilt(sos, ecg.samples);
  return out;
}

// ---------------------------------------------------------------------------

std::size_t RrSeries::valid_count() const {
  return static_cast<std::size_t>(std::count(rr_valid.begin(), rr_valid.end(), true));
}

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size();
  return m % 2 == 1 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

void reject_outliers(RrSeries& s, const RPeakOptions& opts) {
  const std::size_t n = s.rr.size();
  s.rr_valid.assign(n, true);
  s.rejected_count = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t lo = k >= 2 ? k - 2 : 0;
    const std::size_t hi = std::min(n, k + 3);
    const double med = median_of({s.rr.begin() + static_cast<std::ptrdiff_t>(lo),
                                  s.rr.begin() + static_cast<std::ptrdiff_t>(hi)});
    const double v = s.rr[k];
    if (v < opts.rr_min || v > opts.rr_max || std::abs(v - med) > opts.rr_tolerance * med) {
      s.rr_valid[k] = false;
      ++s.rejected_count;
    }
  }
}

}  // namespace

RrSeries rr_from_peaks(std::vector<double> peak_times, double duration, const RPeakOptions& opts) {
  if (peak_times.size() < 2) fail(ErrorCode::NoBeats, "fewer than 2 R peaks");
  for (std::size_t k = 1; k < peak_times.size(); ++k) {
    if (!(peak_times[k] > peak_times[k - 1])) fail(ErrorCode::InvalidArgument, "peak times must increase");
  }
  RrSeries s;
  s.peak_times = std::move(peak_times);
  for (std::size_t k = 0; k + 1 < s.peak_times.size(); ++k) s.rr.push_back(s.peak_times[k + 1] - s.peak_times[k]);
  s.duration = std::max(duration, s.peak_times.back());
  reject_outliers(s, opts);
  return s;
}

RrSeries rr_from_intervals(std::span<const double> end_times, std::span<const double> rr, double duration,
                           const RPeakOptions& opts) {
  if (end_times.size() != rr.size()) fail(ErrorCode::InvalidArgument, "time and rr columns differ in length");
  if (rr.empty()) fail(ErrorCode::NoBeats, "no RR intervals");
  std::vector<double> peaks;
  peaks.push_back(end_times.front() - rr.front());
  for (double t : end_times) peaks.push_back(t);
  return rr_from_peaks(std::move(peaks), duration, opts);
}

RrSeries detect_rpeaks(const EcgRecord& ecg, const RPeakOptions& opts) {
  if (!(ecg.fs > 0.0)) fail(ErrorCode::InvalidArgument, "fs must be positive");
  if (!all_finite(ecg.samples)) fail(ErrorCode::NonFinite, "ECG contains NaN/Inf");
  const std::vector<double>& x = ecg.samples;
  const std::size_t n = x.size();
  const double fs = ecg.fs;
  if (n < 5) fail(ErrorCode::NoBeats, "record too short");

  // Five-point derivative, squaring, centred moving-window integration.
  std::vector<double> slope(n, 0.0);
  for (std::size_t i = 2; i + 2 < n; ++i) {
    slope[i] = (-x[i - 2] - 2.0 * x[i - 1] + 2.0 * x[i + 1] + x[i + 2]) * fs / 8.0;
  }
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = slope[i] * slope[i];
  const auto win = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(opts.integration_window * fs)));
  const std::size_t half = win / 2;
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + sq[i];
  std::vector<double> mwi(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n, i + half + 1);
    mwi[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(win);
  }

  std::vector<std::size_t> candidates;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (mwi[i] > mwi[i - 1] && mwi[i] >= mwi[i + 1]) candidates.push_back(i);
  }

  auto max_slope = [&](std::size_t centre) {
    const std::size_t lo = centre >= half ? centre - half : 0;
    const std::size_t hi = std::min(n, centre + half + 1);
    double m = 0.0;
    for (std::size_t i = lo; i < hi; ++i) m = std::max(m, std::abs(slope[i]));
    return m;
  };

  // Thresholds from the first two seconds.
  const std::size_t learn = std::min(n, static_cast<std::size_t>(2.0 * fs));
  const double learn_max = *std::max_element(mwi.begin(), mwi.begin() + static_cast<std::ptrdiff_t>(learn));
  const double learn_mean = std::accumulate(mwi.begin(), mwi.begin() + static_cast<std::ptrdiff_t>(learn), 0.0) /
                            static_cast<double>(learn);
  double spk = 0.25 * learn_max;
  double npk = 0.5 * learn_mean;
  double thr1 = npk + 0.25 * (spk - npk);

  const auto refractory = static_cast<std::size_t>(std::llround(opts.refractory * fs));
  const auto t_wave_window = static_cast<std::size_t>(std::llround(0.360 * fs));
  std::vector<std::size_t> qrs;
  std::vector<double> recent_rr;
  double last_slope = 0.0;
  std::size_t cand_start = 0;  // first candidate after the last accepted QRS

  auto accept = [&](std::size_t idx, std::size_t cand_index, bool from_searchback) {
    const double pk = mwi[idx];
    spk = from_searchback ? 0.25 * pk + 0.75 * spk : 0.125 * pk + 0.875 * spk;
    if (!qrs.empty()) {
      recent_rr.push_back(static_cast<double>(idx - qrs.back()));
      if (recent_rr.size() > 8) recent_rr.erase(recent_rr.begin());
    }
    qrs.push_back(idx);
    last_slope = max_slope(idx);
    cand_start = cand_index + 1;
  };

  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const std::size_t idx = candidates[c];
    const double pk = mwi[idx];

    if (!qrs.empty() && !recent_rr.empty()) {
      // Search back for a missed beat when the gap is unusually long.
      const double avg = std::accumulate(recent_rr.begin(), recent_rr.end(), 0.0) /
                         static_cast<double>(recent_rr.size());
      if (static_cast<double>(idx - qrs.back()) > 1.66 * avg) {
        const double thr2 = 0.5 * thr1;
        std::size_t best = candidates.size();
        for (std::size_t j = cand_start; j < c; ++j) {
          const std::size_t cj = candidates[j];
          if (cj - qrs.back() <= refractory) continue;
          if (idx - cj <= refractory) continue;
          if (mwi[cj] > thr2 && (best == candidates.size() || mwi[cj] > mwi[candidates[best]])) best = j;
        }
        if (best != candidates.size()) {
          accept(candidates[best], best, true);
          thr1 = npk + 0.25 * (spk - npk);
        }
      }
    }

    if (!qrs.empty() && idx - qrs.back() <= refractory) {
      npk = 0.125 * pk + 0.875 * npk;
    } else if (pk > thr1) {
      const bool t_wave = !qrs.empty() && idx - qrs.back() < t_wave_window && max_slope(idx) < 0.5 * last_slope;
      if (t_wave) {
        npk = 0.125 * pk + 0.875 * npk;
      } else {
        accept(idx, c, false);
      }
    } else {
      npk = 0.125 * pk + 0.875 * npk;
    }
    thr1 = npk + 0.25 * (spk - npk);
  }

  if (qrs.size() < 2) fail(ErrorCode::NoBeats, "fewer than 2 R peaks detected");

  // Locate each R wave as the largest excursion near the integrator peak.
  std::vector<double> times;
  for (std::size_t idx : qrs) {
    const std::size_t lo = idx >= half ? idx - half : 0;
    const std::size_t hi = std::min(n, idx + half + 1);
    std::size_t best = lo;
    for (std::size_t i = lo; i < hi; ++i) {
      if (std::abs(x[i]) > std::abs(x[best])) best = i;
    }
    const double t = static_cast<double>(best) / fs;
    if (times.empty() || t > times.back()) times.push_back(t);
  }
  if (times.size() < 2) fail(ErrorCode::NoBeats, "fewer than 2 R peaks detected");
  return rr_from_peaks(std::move(times), ecg.duration(), opts);
}

// ---------------------------------------------------------------------------

std::optional<double> HrvFrame::feature(std::string_view name) const {
  if (name == "tri") return tri;
  if (name == "mean_rr") return mean_rr;
  if (name == "sdnn") return sdnn;
  if (name == "rmssd") return rmssd;
  if (name == "pnn50") return pnn50;
  fail(ErrorCode::InvalidArgument, "unknown HRV feature '" + std::string(name) + "'");
}

double triangular_index(std::span<const double> rr, double binwidth) {
  if (rr.empty()) return 0.0;
  std::map<long long, std::size_t> hist;
  std::size_t peak = 0;
  for (double v : rr) {
    // Small slack so values on a bin edge are not split by rounding.
    const auto bin = static_cast<long long>(std::floor(v / binwidth + 1e-9));
    peak = std::max(peak, ++hist[bin]);
  }
  return static_cast<double>(rr.size()) / static_cast<double>(peak);
}

double rmssd(std::span<const double> rr) {
  if (rr.size() < 2) return 0.0;
  double acc = 0.0;
  for (std::size_t k = 1; k < rr.size(); ++k) acc += (rr[k] - rr[k - 1]) * (rr[k] - rr[k - 1]);
  return std::sqrt(acc / static_cast<double>(rr.size() - 1));
}

double pnn50(std::span<const double> rr) {
  if (rr.size() < 2) return 0.0;
  std::size_t over = 0;
  for (std::size_t k = 1; k < rr.size(); ++k) {
    if (std::abs(rr[k] - rr[k - 1]) > 0.050) ++over;
  }
  return static_cast<double>(over) / static_cast<double>(rr.size() - 1);
}

std::vector<HrvFrame> hrv_features(const RrSeries& rr, double window, double tri_binwidth) {
  if (!(window > 0.0) || !(tri_binwidth > 0.0)) fail(ErrorCode::InvalidArgument, "window and bin width must be > 0");
  const auto n_frames = static_cast<std::size_t>(std::floor(rr.duration / window + 1e-9));
  std::vector<std::vector<double>> per_frame(n_frames);
  for (std::size_t k = 0; k < rr.rr.size(); ++k) {
    if (!rr.rr_valid[k]) continue;
    const double t_end = rr.peak_times[k + 1];
    const auto f = static_cast<std::size_t>(std::floor(t_end / window));
    if (t_end >= 0.0 && f < n_frames) per_frame[f].push_back(rr.rr[k]);
  }

  std::vector<HrvFrame> frames;
  for (std::size_t f = 0; f < n_frames; ++f) {
    const std::vector<double>& v = per_frame[f];
    HrvFrame fr;
    fr.minute_index = static_cast<int>(f);
    fr.n_beats = v.size();
    if (v.size() >= kMinBeatsPerFrame) {
      fr.tri = triangular_index(v, tri_binwidth);
      fr.mean_rr = intermittency::sample_mean(v);
      fr.sdnn = intermittency::sample_sd(v);
      fr.rmssd = rmssd(v);
      fr.pnn50 = pnn50(v);
    }
    frames.push_back(fr);
  }
  return frames;
}

TimeSeries feature_series(std::span<const HrvFrame> frames, std::string_view feature, double window) {
  const std::size_t n = frames.size();
  std::vector<std::optional<double>> raw;
  for (const HrvFrame& f : frames) raw.push_back(f.feature(feature));

  std::vector<std::size_t> valid;
  for (std::size_t k = 0; k < n; ++k) {
    if (raw[k]) valid.push_back(k);
  }
  if (valid.size() < 2) fail(ErrorCode::ShortSeries, "fewer than 2 frames carry a valid " + std::string(feature));

  auto gap_error = [&](std::size_t from, std::size_t len) {
    std::ostringstream msg;
    msg << len << " consecutive null frames starting at frame " << from << " (max " << kMaxGapFrames << ")";
    fail(ErrorCode::GapTooLong, msg.str());
  };

  TimeSeries ts;
  ts.dt = window;
  ts.t0 = 0.0;
  ts.label = std::string(feature);
  ts.values.resize(n);
  if (valid.front() > static_cast<std::size_t>(kMaxGapFrames)) gap_error(0, valid.front());
  if (n - 1 - valid.back() > static_cast<std::size_t>(kMaxGapFrames)) gap_error(valid.back() + 1, n - 1 - valid.back());
  for (std::size_t k = 0; k < valid.front(); ++k) ts.values[k] = *raw[valid.front()];
  for (std::size_t k = valid.back() + 1; k < n; ++k) ts.values[k] = *raw[valid.back()];
  for (std::size_t i = 0; i + 1 < valid.size(); ++i) {
    const std::size_t a = valid[i];
    const std::size_t b = valid[i + 1];
    if (b - a - 1 > static_cast<std::size_t>(kMaxGapFrames)) gap_error(a + 1, b - a - 1);
    const double va = *raw[a];
    const double vb = *raw[b];
    for (std::size_t k = a; k < b; ++k) {
      ts.values[k] = va + (vb - va) * static_cast<double>(k - a) / static_cast<double>(b - a);
    }
  }
  ts.values[valid.back()] = *raw[valid.back()];
  return ts;
}

// ---------------------------------------------------------------------------

Association burst_annotation_association(const intermittency::BurstAnalysis& b, const AnnotationTrack& ann) {
  Association out;
  auto minute_start = [&](std::size_t m) { return ann.t0 + static_cast<double>(m) * ann.minute; };
  auto intersects = [&](const intermittency::Burst& burst, std::size_t m) {
    return burst.t_s < minute_start(m) + ann.minute && burst.t_e > minute_start(m);
  };

  if (!b.bursts.empty()) {
    std::size_t hits = 0;
    for (const auto& burst : b.bursts) {
      for (std::size_t m = 0; m < ann.apnea.size(); ++m) {
        if (ann.apnea[m] && intersects(burst, m)) {
          ++hits;
          break;
        }
      }
    }
    out.overlap_fraction = static_cast<double>(hits) / static_cast<double>(b.bursts.size());
  }

  std::vector<double> indicator;
  std::vector<double> label;
  for (std::size_t m = 0; m < ann.apnea.size(); ++m) {
    const double start = minute_start(m);
    if (start < b.t_begin - 1e-9 || start >= b.t_end) continue;
    bool active = false;
    for (const auto& burst : b.bursts) {
      if (intersects(burst, m)) {
        active = true;
        break;
      }
    }
    indicator.push_back(active ? 1.0 : 0.0);
    label.push_back(ann.apnea[m] ? 1.0 : 0.0);
  }
  out.minutes_compared = indicator.size();

  if (b.bursts.empty()) {
    out.reason = "no bursts detected";
    return out;
  }
  if (indicator.size() < 3) {
    out.reason = "fewer than 3 annotated minutes overlap the forcing";
    return out;
  }
  const auto constant = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
  };
  if (constant(indicator)) {
    out.reason = "active-forcing indicator is constant";
    return out;
  }
  if (constant(label)) {
    out.reason = "annotation labels are constant";
    return out;
  }
  const auto res = intermittency::pearson_test(indicator, label);
  out.point_biserial_r = res.r;
  out.p_value = res.p_value;
  return out;
}

}  // namespace havok::physio
