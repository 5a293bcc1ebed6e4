#include "havok/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include "havok/error.hpp"

namespace havok::spectral {

namespace {

// The FFTW planner is not re-entrant; execution on distinct buffers is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::vector<Complex> transform(std::span<const Complex> in, int sign) {
  const int n = static_cast<int>(in.size());
  std::vector<Complex> buf(in.begin(), in.end());
  std::vector<Complex> out(in.size());
  auto* src = reinterpret_cast<fftw_complex*>(buf.data());
  auto* dst = reinterpret_cast<fftw_complex*>(out.data());
  fftw_plan plan = nullptr;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_1d(n, src, dst, sign, FFTW_ESTIMATE);
  }
  if (plan == nullptr) fail(ErrorCode::ConvergenceFailure, "FFTW could not create a plan");
  fftw_execute(plan);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

}  // namespace

std::vector<Complex> fft_forward(std::span<const Complex> x) {
  if (x.size() < 2) fail(ErrorCode::TooShort, "FFT needs n >= 2");
  return transform(x, FFTW_FORWARD);
}

std::vector<Complex> fft_forward(std::span<const double> x) {
  if (!all_finite(x)) fail(ErrorCode::NonFinite, "FFT input contains NaN/Inf");
  std::vector<Complex> c(x.begin(), x.end());
  return fft_forward(std::span<const Complex>(c));
}

std::vector<Complex> fft_inverse(std::span<const Complex> x) {
  if (x.size() < 2) fail(ErrorCode::TooShort, "FFT needs n >= 2");
  std::vector<Complex> out = transform(x, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(x.size());
  for (Complex& c : out) c *= scale;
  return out;
}

SpectrumResult amplitude_spectrum(const TimeSeries& x, Taper taper) {
  validate(x);
  const std::size_t n = x.size();
  if (n < 4) fail(ErrorCode::TooShort, "amplitude spectrum needs n >= 4");

  std::vector<double> samples = x.values;
  double gain = 1.0;
  if (taper == Taper::Hann) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) /
                                            static_cast<double>(n - 1));
      samples[k] *= w;
      sum += w;
    }
    gain = sum / static_cast<double>(n);  // coherent gain
  }

  const std::vector<Complex> v = fft_forward(std::span<const double>(samples));
  const double fs = 1.0 / x.dt;
  const auto nd = static_cast<double>(n);
  const std::size_t half = n / 2;

  SpectrumResult out;
  for (std::size_t k = 0; k <= half; ++k) {
    const bool edge = k == 0 || (n % 2 == 0 && k == half);
    const double mag = std::abs(v[k]) / (nd * gain);
    const double amp = edge ? mag : 2.0 * mag;
    out.freqs.push_back(static_cast<double>(k) * fs / nd);
    out.amplitude.push_back(amp);
    out.power.push_back(edge ? amp * amp : 0.5 * amp * amp);
  }
  return out;
}

Band dominant_bandwidth(const SpectrumResult& spec, double energy_fraction) {
  if (!(energy_fraction > 0.0 && energy_fraction < 1.0)) {
    fail(ErrorCode::InvalidArgument, "energy fraction must lie in (0, 1)");
  }
  double total = 0.0;
  for (std::size_t k = 1; k < spec.power.size(); ++k) total += spec.power[k];
  if (!(total > 0.0)) fail(ErrorCode::ZeroPower, "no power outside DC");

  const double tail = 0.5 * (1.0 - energy_fraction);
  Band band;
  bool have_low = false;
  double acc = 0.0;
  for (std::size_t k = 1; k < spec.power.size(); ++k) {
    acc += spec.power[k];
    const double share = acc / total;
    if (!have_low && share >= tail) {
      band.f_low = spec.freqs[k];
      have_low = true;
    }
    if (share >= 1.0 - tail) {
      band.f_high = spec.freqs[k];
      return band;
    }
  }
  band.f_high = spec.freqs.back();
  return band;
}

double MorseWavelet::peak_frequency() const { return std::pow(beta() / gamma, 1.0 / gamma); }

double MorseWavelet::response(double omega) const {
  if (omega <= 0.0) return 0.0;
  const double b = beta();
  const double wp = peak_frequency();
  const double log_psi = std::log(2.0) + b * (std::log(omega) - std::log(wp)) -
                         (std::pow(omega, gamma) - std::pow(wp, gamma));
  return std::exp(log_psi);
}

Scalogram cwt_morse(const TimeSeries& x, double gamma, double time_bandwidth, int voices_per_octave) {
  validate(x);
  const std::size_t n = x.size();
  if (n < 16) fail(ErrorCode::TooShort, "CWT needs n >= 16");
  if (!(gamma > 0.0) || !(time_bandwidth > 0.0) || voices_per_octave < 1) {
    fail(ErrorCode::InvalidArgument, "invalid Morse parameters");
  }

  Scalogram s;
  s.wavelet = MorseWavelet{gamma, time_bandwidth};
  const double fs = 1.0 / x.dt;
  const double f_max = 0.5 * fs;
  const double f_min = 2.0 / (static_cast<double>(n) * x.dt);
  const double octaves = std::log2(f_max / f_min);
  const int count = static_cast<int>(std::floor(octaves * voices_per_octave)) + 1;
  const double wp = s.wavelet.peak_frequency();
  for (int i = 0; i < count; ++i) {
    const double f = f_max * std::exp2(-static_cast<double>(i) / voices_per_octave);
    s.freqs.push_back(f);
    s.scales.push_back(wp / (2.0 * std::numbers::pi * f));
  }
  for (std::size_t k = 0; k < n; ++k) s.times.push_back(x.time_at(k));

  const std::vector<Complex> spectrum = fft_forward(std::span<const double>(x.values));
  const auto nd = static_cast<double>(n);
  std::vector<double> omega(n, 0.0);  // rad/s; negative frequencies stay <= 0
  for (std::size_t k = 1; k < n; ++k) {
    const double kk = (2 * k <= n) ? static_cast<double>(k) : static_cast<double>(k) - nd;
    omega[k] = 2.0 * std::numbers::pi * kk / (nd * x.dt);
  }

  s.modulus.resize(count, static_cast<Eigen::Index>(n));
  std::vector<Complex> row(n);
  for (int i = 0; i < count; ++i) {
    const double a = s.scales[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < n; ++k) row[k] = spectrum[k] * s.wavelet.response(a * omega[k]);
    const std::vector<Complex> coeffs = fft_inverse(std::span<const Complex>(row));
    for (std::size_t k = 0; k < n; ++k) s.modulus(i, static_cast<Eigen::Index>(k)) = std::abs(coeffs[k]);
  }

  // Envelope e-folding time at scale a is sqrt(2) * a * P / omega_peak.
  const double p = std::sqrt(time_bandwidth);
  for (std::size_t k = 0; k < n; ++k) {
    const double d = static_cast<double>(std::min(k, n - 1 - k)) * x.dt;
    s.coi.push_back(d > 0.0 ? std::min(f_max, std::sqrt(2.0) * p / (2.0 * std::numbers::pi * d)) : f_max);
  }
  return s;
}

Scalogram downsample_times(const Scalogram& s, std::size_t max_columns) {
  if (max_columns == 0 || s.times.size() <= max_columns) return s;
  const std::size_t stride = (s.times.size() + max_columns - 1) / max_columns;
  Scalogram out;
  out.scales = s.scales;
  out.freqs = s.freqs;
  out.wavelet = s.wavelet;
  std::vector<Eigen::Index> keep;
  for (std::size_t k = 0; k < s.times.size(); k += stride) {
    keep.push_back(static_cast<Eigen::Index>(k));
    out.times.push_back(s.times[k]);
    out.coi.push_back(s.coi[k]);
  }
  out.modulus.resize(s.modulus.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) out.modulus.col(static_cast<Eigen::Index>(c)) = s.modulus.col(keep[c]);
  return out;
}

std::vector<SpectrumResult> windowed_spectra(const TimeSeries& x, std::span<const Window> windows,
                                             Taper taper) {
  validate(x);
  std::vector<SpectrumResult> out;
  for (const Window& w : windows) {
    const double a = std::round((w.t_a - x.t0) / x.dt);
    const double b = std::round((w.t_b - x.t0) / x.dt);
    if (a < 0.0 || b > static_cast<double>(x.size()) || b - a < 8.0) {
      fail(ErrorCode::WindowOutOfRange, "window [" + std::to_string(w.t_a) + ", " + std::to_string(w.t_b) +
                                            ") is outside the series or shorter than 8 samples");
    }
    TimeSeries seg;
    seg.dt = x.dt;
    seg.t0 = x.time_at(static_cast<std::size_t>(a));
    seg.values.assign(x.values.begin() + static_cast<std::ptrdiff_t>(a),
                      x.values.begin() + static_cast<std::ptrdiff_t>(b));
    out.push_back(amplitude_spectrum(seg, taper));
  }
  return out;
}

}  // namespace havok::spectral
