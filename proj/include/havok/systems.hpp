#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "havok/intermittency.hpp"
#include "havok/time_series.hpp"

namespace havok::systems {

struct LorenzConfig {
  double sigma = 10.0;
  double rho = 28.0;
  double beta = 8.0 / 3.0;
  std::array<double, 3> x0{-8.0, 8.0, 27.0};
  double dt = 0.001;
  long n_steps = 1;
};

struct LorenzTrajectory {
  std::vector<double> t;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> z;

  TimeSeries x_series() const;
};

// Classical RK4 at fixed step; returns n_steps + 1 states including x0.
LorenzTrajectory integrate_lorenz(const LorenzConfig& cfg);

// Drops the first `burn_in` time units and re-bases time to zero.
LorenzTrajectory discard_transient(const LorenzTrajectory& traj, double burn_in);

// Sign changes of the x component after a centred moving average of
// `smoothing` time units. Returned as crossing times.
std::vector<double> lobe_switch_times(const LorenzTrajectory& traj, double smoothing = 0.5);

struct BurstSpec {
  double t_s = 0.0;
  double t_e = 0.0;
  double amplitude = 1.0;
  double carrier_freq_hz = 0.0;  // 0 gives a rectangular pulse
};

struct SyntheticBurstConfig {
  double duration = 60.0;
  double dt = 0.01;
  double noise_sd = 0.0;
  std::vector<BurstSpec> bursts;
  std::uint64_t seed = 0;
};

struct BurstTruth {
  std::vector<intermittency::Burst> bursts;
  std::vector<double> tb;
  std::vector<double> tib;
};

struct BurstySignal {
  TimeSeries series;
  BurstTruth truth;
};

// Gaussian baseline noise plus amplitude * cos(2 pi f (t - t_s)) inside each
// listed interval. Interval edges are snapped to the sample grid.
BurstySignal generate_bursty(const SyntheticBurstConfig& cfg);

}  // namespace havok::systems
