#include "havok/intermittency.hpp"

#include <algorithm>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <numbers>

#include "havok/error.hpp"

namespace havok::intermittency {

namespace {

double max_square(std::span<const double> vr) {
  double best = 0.0;
  for (double v : vr) best = std::max(best, v * v);
  return best;
}

}  // namespace

std::vector<bool> active_mask(std::span<const double> vr, double psi) {
  const double threshold = psi * max_square(vr);
  std::vector<bool> mask(vr.size());
  for (std::size_t k = 0; k < vr.size(); ++k) mask[k] = vr[k] * vr[k] >= threshold;
  return mask;
}

BurstAnalysis detect_bursts(const model::ForcingSeries& vr, double psi, double min_duration,
                            double merge_gap) {
  if (!(psi > 0.0 && psi < 1.0)) fail(ErrorCode::InvalidArgument, "psi must lie in (0, 1)");
  if (min_duration < 0.0 || merge_gap < 0.0) {
    fail(ErrorCode::InvalidArgument, "min_duration and merge_gap must be >= 0");
  }
  if (!all_finite(vr.vr)) fail(ErrorCode::NonFinite, "forcing contains NaN/Inf");
  const double peak = max_square(vr.vr);
  if (peak <= 0.0) fail(ErrorCode::AllZeroForcing, "max vr^2 is zero");

  BurstAnalysis out;
  out.psi = psi;
  out.threshold = psi * peak;
  out.min_duration = min_duration;
  out.merge_gap = merge_gap;
  out.t_begin = vr.t0;
  out.t_end = vr.time_at(vr.vr.size());

  const std::vector<bool> mask = active_mask(vr.vr, psi);
  std::vector<Burst> runs;
  for (std::size_t k = 0; k < mask.size();) {
    if (!mask[k]) {
      ++k;
      continue;
    }
    std::size_t end = k;
    while (end < mask.size() && mask[end]) ++end;
    runs.push_back(Burst{0.0, 0.0, k, end});
    k = end;
  }

  std::vector<Burst> merged;
  for (const Burst& b : runs) {
    if (!merged.empty()) {
      const double gap = static_cast<double>(b.first - merged.back().last) * vr.dt;
      if (gap < merge_gap) {
        merged.back().last = b.last;
        continue;
      }
    }
    merged.push_back(b);
  }

  for (Burst& b : merged) {
    const double duration = static_cast<double>(b.last - b.first) * vr.dt;
    if (duration < min_duration) continue;
    b.t_s = vr.time_at(b.first);
    b.t_e = vr.time_at(b.last);
    out.bursts.push_back(b);
    out.tb.push_back(duration);
  }
  for (std::size_t k = 1; k < out.bursts.size(); ++k) {
    out.tib.push_back(static_cast<double>(out.bursts[k].first - out.bursts[k - 1].last) * vr.dt);
  }
  return out;
}

std::optional<double> sample_mean(std::span<const double> xs) {
  if (xs.empty()) return std::nullopt;
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

std::optional<double> sample_sd(std::span<const double> xs) {
  if (xs.size() < 2) return std::nullopt;
  const double mean = *sample_mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

BurstStatistics burst_statistics(const BurstAnalysis& b) {
  BurstStatistics s;
  s.n_bursts = b.bursts.size();
  s.tb_mean = sample_mean(b.tb);
  s.tb_sd = sample_sd(b.tb);
  s.tib_mean = sample_mean(b.tib);
  s.tib_sd = sample_sd(b.tib);
  return s;
}

std::vector<double> DistributionEstimate::bin_centers() const {
  std::vector<double> c;
  for (std::size_t i = 0; i + 1 < bin_edges.size(); ++i) c.push_back(0.5 * (bin_edges[i] + bin_edges[i + 1]));
  return c;
}

namespace {

// Linear-interpolation quantile of sorted data.
double quantile(const std::vector<double>& sorted, double prob) {
  const double pos = prob * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

constexpr int kMaxBins = 5000;

}  // namespace

DistributionEstimate estimate_pdf(std::span<const double> samples, const Binning& binning) {
  if (samples.size() < 8) fail(ErrorCode::ShortSeries, "estimate_pdf needs at least 8 samples");
  if (!all_finite(samples)) fail(ErrorCode::NonFinite, "samples contain NaN/Inf");

  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted.front();
  const double hi = sorted.back();
  if (!(hi > lo)) fail(ErrorCode::DegenerateVariance, "all samples are equal");

  const auto n = static_cast<double>(samples.size());
  DistributionEstimate d;
  d.mean = *sample_mean(samples);
  double m2 = 0.0;
  double m4 = 0.0;
  for (double x : samples) {
    const double c = (x - d.mean) * (x - d.mean);
    m2 += c;
    m4 += c * c;
  }
  d.sd = std::sqrt(m2 / (n - 1.0));
  m2 /= n;
  m4 /= n;
  d.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  std::size_t outside = 0;
  for (double x : samples) {
    if (std::abs(x - d.mean) > 3.0 * d.sd) ++outside;
  }
  d.tail_mass_3sigma = static_cast<double>(outside) / n;

  int bins = 0;
  if (const auto* fixed = std::get_if<binning::Fixed>(&binning)) {
    if (fixed->bins < 1) fail(ErrorCode::InvalidArgument, "bin count must be >= 1");
    bins = fixed->bins;
  } else {
    const double iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
    if (iqr > 0.0) {
      const double width = 2.0 * iqr / std::cbrt(n);
      bins = static_cast<int>(std::ceil((hi - lo) / width));
    } else {
      bins = static_cast<int>(std::ceil(std::log2(n))) + 1;  // Sturges fallback
    }
    bins = std::clamp(bins, 1, kMaxBins);
  }

  const double width = (hi - lo) / bins;
  d.bin_edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i) d.bin_edges[static_cast<std::size_t>(i)] = lo + width * i;
  d.bin_edges.back() = hi;

  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  for (double x : samples) {
    auto idx = static_cast<int>(std::floor((x - lo) / width));
    idx = std::clamp(idx, 0, bins - 1);
    counts[static_cast<std::size_t>(idx)] += 1.0;
  }
  d.density.resize(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    d.density[i] = counts[i] / (n * (d.bin_edges[i + 1] - d.bin_edges[i]));
  }

  const double norm = 1.0 / (d.sd * std::sqrt(2.0 * std::numbers::pi));
  for (double c : d.bin_centers()) {
    const double z = (c - d.mean) / d.sd;
    d.gaussian_ref.push_back(norm * std::exp(-0.5 * z * z));
  }
  return d;
}

double pearson_p_value(double r, std::size_t n) {
  if (n < 3) fail(ErrorCode::InsufficientRecords, "Pearson test needs n >= 3");
  const double df = static_cast<double>(n - 2);
  const double r2 = r * r;
  if (r2 >= 1.0) return 0.0;
  const double t2 = r2 * df / (1.0 - r2);
  // Two-tailed Student-t tail: I_{df/(df+t^2)}(df/2, 1/2).
  return boost::math::ibeta(0.5 * df, 0.5, df / (df + t2));
}

PearsonResult pearson_test(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(ErrorCode::InvalidArgument, "x and y lengths differ");
  if (x.size() < 3) fail(ErrorCode::InsufficientRecords, "Pearson test needs n >= 3");
  if (!all_finite(x) || !all_finite(y)) fail(ErrorCode::NonFinite, "inputs contain NaN/Inf");

  const double mx = *sample_mean(x);
  const double my = *sample_mean(y);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) fail(ErrorCode::ConstantInput, "Pearson input is constant");

  PearsonResult res;
  res.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  res.p_value = pearson_p_value(res.r, x.size());
  return res;
}

}  // namespace havok::intermittency
