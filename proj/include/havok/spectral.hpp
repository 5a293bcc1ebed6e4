#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "havok/time_series.hpp"

namespace havok::spectral {

using Complex = std::complex<double>;

// Exact DFT X_k = sum_t x_t exp(-i 2 pi k t / n) for any n >= 2.
std::vector<Complex> fft_forward(std::span<const double> x);
std::vector<Complex> fft_forward(std::span<const Complex> x);
// Inverse with 1/n scaling.
std::vector<Complex> fft_inverse(std::span<const Complex> x);

enum class Taper { None, Hann };

struct Band {
  double f_low = 0.0;
  double f_high = 0.0;
};

struct SpectrumResult {
  std::vector<double> freqs;      // Hz, 0 .. fs/2
  std::vector<double> amplitude;  // single-sided
  std::vector<double> power;      // single-sided; sums to mean(x^2) when untapered
  std::optional<Band> band;
  double energy_fraction = 0.0;
};

SpectrumResult amplitude_spectrum(const TimeSeries& x, Taper taper = Taper::None);

// Symmetric trim of the cumulative non-DC power: f_L is the first frequency
// where the cumulative share reaches (1 - fraction) / 2, f_H the first where it
// reaches 1 - (1 - fraction) / 2.
Band dominant_bandwidth(const SpectrumResult& spec, double energy_fraction = 0.95);

struct MorseWavelet {
  double gamma = 3.0;
  double time_bandwidth = 60.0;  // P^2 = beta * gamma

  double beta() const { return time_bandwidth / gamma; }
  double peak_frequency() const;  // radians per unit scale
  // Frequency-domain response, peak value 2; zero for omega <= 0.
  double response(double omega) const;
};

struct Scalogram {
  std::vector<double> scales;  // ascending
  std::vector<double> freqs;   // Hz, descending
  std::vector<double> times;   // s
  Eigen::MatrixXd modulus;     // scales x times
  MorseWavelet wavelet;
  std::vector<double> coi;     // lowest edge-free frequency per time, Hz
};

Scalogram cwt_morse(const TimeSeries& x, double gamma = 3.0, double time_bandwidth = 60.0,
                    int voices_per_octave = 10);

// Keeps every k-th column so that at most max_columns remain.
Scalogram downsample_times(const Scalogram& s, std::size_t max_columns);

struct Window {
  double t_a = 0.0;
  double t_b = 0.0;  // exclusive
};

std::vector<SpectrumResult> windowed_spectra(const TimeSeries& x, std::span<const Window> windows,
                                             Taper taper = Taper::None);

}  // namespace havok::spectral
