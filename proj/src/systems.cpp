#include "havok/systems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "havok/error.hpp"

namespace havok::systems {

namespace {

using State = std::array<double, 3>;

State lorenz_rhs(const LorenzConfig& c, const State& s) {
  return {c.sigma * (s[1] - s[0]), s[0] * (c.rho - s[2]) - s[1], s[0] * s[1] - c.beta * s[2]};
}

State axpy(const State& x, double h, const State& k) {
  return {x[0] + h * k[0], x[1] + h * k[1], x[2] + h * k[2]};
}

}  // namespace

TimeSeries LorenzTrajectory::x_series() const {
  TimeSeries ts;
  ts.values = x;
  ts.dt = t.size() > 1 ? t[1] - t[0] : 1.0;
  ts.t0 = t.empty() ? 0.0 : t.front();
  ts.label = "lorenz-x";
  return ts;
}

LorenzTrajectory integrate_lorenz(const LorenzConfig& cfg) {
  if (!(cfg.dt > 0.0)) fail(ErrorCode::InvalidArgument, "dt must be positive");
  if (cfg.n_steps < 1) fail(ErrorCode::InvalidArgument, "n_steps must be >= 1");

  LorenzTrajectory out;
  const auto n = static_cast<std::size_t>(cfg.n_steps) + 1;
  out.t.reserve(n);
  out.x.reserve(n);
  out.y.reserve(n);
  out.z.reserve(n);

  State s = cfg.x0;
  const double h = cfg.dt;
  for (std::size_t k = 0; k < n; ++k) {
    if (!std::isfinite(s[0]) || !std::isfinite(s[1]) || !std::isfinite(s[2])) {
      std::ostringstream msg;
      msg << "Lorenz state blew up at step " << k << " (dt=" << h << ")";
      fail(ErrorCode::NonFinite, msg.str());
    }
    out.t.push_back(static_cast<double>(k) * h);
    out.x.push_back(s[0]);
    out.y.push_back(s[1]);
    out.z.push_back(s[2]);
    if (k + 1 == n) break;
    const State k1 = lorenz_rhs(cfg, s);
    const State k2 = lorenz_rhs(cfg, axpy(s, 0.5 * h, k1));
    const State k3 = lorenz_rhs(cfg, axpy(s, 0.5 * h, k2));
    const State k4 = lorenz_rhs(cfg, axpy(s, h, k3));
    for (int i = 0; i < 3; ++i) s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return out;
}

LorenzTrajectory discard_transient(const LorenzTrajectory& traj, double burn_in) {
  if (traj.t.size() < 2) return traj;
  const double dt = traj.t[1] - traj.t[0];
  const auto skip = std::min(traj.t.size() - 1, static_cast<std::size_t>(std::llround(burn_in / dt)));
  LorenzTrajectory out;
  for (std::size_t k = skip; k < traj.t.size(); ++k) {
    out.t.push_back(static_cast<double>(k - skip) * dt);
    out.x.push_back(traj.x[k]);
    out.y.push_back(traj.y[k]);
    out.z.push_back(traj.z[k]);
  }
  return out;
}

std::vector<double> lobe_switch_times(const LorenzTrajectory& traj, double smoothing) {
  std::vector<double> out;
  const std::size_t n = traj.x.size();
  if (n < 3) return out;
  const double dt = traj.t[1] - traj.t[0];
  const auto half = static_cast<std::size_t>(std::llround(0.5 * smoothing / dt));
  if (2 * half + 1 > n) return out;

  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) prefix[k + 1] = prefix[k] + traj.x[k];
  auto smoothed = [&](std::size_t k) {
    return (prefix[k + half + 1] - prefix[k - half]) / static_cast<double>(2 * half + 1);
  };

  double prev = smoothed(half);
  for (std::size_t k = half + 1; k + half < n; ++k) {
    const double cur = smoothed(k);
    if ((prev < 0.0 && cur >= 0.0) || (prev >= 0.0 && cur < 0.0)) out.push_back(traj.t[k]);
    prev = cur;
  }
  return out;
}

BurstySignal generate_bursty(const SyntheticBurstConfig& cfg) {
  if (!(cfg.dt > 0.0) || !(cfg.duration > cfg.dt)) fail(ErrorCode::InvalidArgument, "invalid duration/dt");
  if (cfg.noise_sd < 0.0) fail(ErrorCode::InvalidArgument, "noise_sd must be >= 0");

  std::vector<BurstSpec> specs = cfg.bursts;
  std::sort(specs.begin(), specs.end(), [](const BurstSpec& a, const BurstSpec& b) { return a.t_s < b.t_s; });
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const BurstSpec& b = specs[k];
    if (!(b.t_e > b.t_s) || b.t_s < 0.0 || b.t_e > cfg.duration) {
      fail(ErrorCode::OverlapError, "burst interval outside [0, duration) or empty");
    }
    if (k > 0 && b.t_s < specs[k - 1].t_e) fail(ErrorCode::OverlapError, "burst intervals overlap");
  }

  const auto n = static_cast<std::size_t>(std::llround(cfg.duration / cfg.dt));
  BurstySignal out;
  out.series.dt = cfg.dt;
  out.series.label = "bursty";
  out.series.values.assign(n, 0.0);

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  if (cfg.noise_sd > 0.0) {
    for (double& v : out.series.values) v = cfg.noise_sd * gauss(rng);
  }

  auto snap = [&](double t) {
    return std::min(n, static_cast<std::size_t>(std::ceil(t / cfg.dt - 1e-9)));
  };
  for (const BurstSpec& b : specs) {
    const std::size_t first = snap(b.t_s);
    const std::size_t last = snap(b.t_e);
    for (std::size_t k = first; k < last; ++k) {
      const double t = static_cast<double>(k) * cfg.dt - b.t_s;
      out.series.values[k] += b.amplitude * std::cos(2.0 * std::numbers::pi * b.carrier_freq_hz * t);
    }
    intermittency::Burst truth;
    truth.first = first;
    truth.last = last;
    truth.t_s = static_cast<double>(first) * cfg.dt;
    truth.t_e = static_cast<double>(last) * cfg.dt;
    out.truth.bursts.push_back(truth);
    out.truth.tb.push_back(static_cast<double>(last - first) * cfg.dt);
  }
  for (std::size_t k = 1; k < out.truth.bursts.size(); ++k) {
    out.truth.tib.push_back(static_cast<double>(out.truth.bursts[k].first - out.truth.bursts[k - 1].last) * cfg.dt);
  }
  return out;
}

}  // namespace havok::systems
