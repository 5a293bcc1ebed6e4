#pragma once

#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "havok/model.hpp"

namespace havok::intermittency {

// Half-open active-forcing interval [t_s, t_e); indices refer to forcing samples.
struct Burst {
  double t_s = 0.0;
  double t_e = 0.0;
  std::size_t first = 0;  // first active sample
  std::size_t last = 0;   // one past the last active sample
};

struct BurstAnalysis {
  double psi = 0.0;
  double threshold = 0.0;  // psi * max vr^2
  std::vector<Burst> bursts;
  std::vector<double> tb;   // burst durations, seconds
  std::vector<double> tib;  // inter-burst durations, seconds
  double min_duration = 0.0;
  double merge_gap = 0.0;
  double t_begin = 0.0;  // span of the analysed forcing, [t_begin, t_end)
  double t_end = 0.0;
};

// Sample k is active iff vr[k]^2 >= psi * max(vr^2).
std::vector<bool> active_mask(std::span<const double> vr, double psi);

BurstAnalysis detect_bursts(const model::ForcingSeries& vr, double psi, double min_duration = 0.0,
                            double merge_gap = 0.0);

struct BurstStatistics {
  std::size_t n_bursts = 0;
  std::optional<double> tb_mean;
  std::optional<double> tb_sd;
  std::optional<double> tib_mean;
  std::optional<double> tib_sd;
};

BurstStatistics burst_statistics(const BurstAnalysis& b);

std::optional<double> sample_mean(std::span<const double> xs);
// n-1 denominator; empty when fewer than two samples.
std::optional<double> sample_sd(std::span<const double> xs);

namespace binning {
struct FreedmanDiaconis {};
struct Fixed {
  int bins;
};
}  // namespace binning
using Binning = std::variant<binning::FreedmanDiaconis, binning::Fixed>;

struct DistributionEstimate {
  std::vector<double> bin_edges;     // size = bins + 1
  std::vector<double> density;       // integrates to 1 over the bins
  std::vector<double> gaussian_ref;  // N(mean, sd) evaluated at bin centres
  double mean = 0.0;
  double sd = 0.0;               // sample SD
  double excess_kurtosis = 0.0;  // m4 / m2^2 - 3
  double tail_mass_3sigma = 0.0;  // empirical P(|x - mean| > 3 sd)

  std::vector<double> bin_centers() const;
};

DistributionEstimate estimate_pdf(std::span<const double> samples,
                                  const Binning& binning = binning::FreedmanDiaconis{});

struct PearsonResult {
  double r = 0.0;
  double p_value = 1.0;  // two-tailed
};

PearsonResult pearson_test(std::span<const double> x, std::span<const double> y);

// Two-tailed p-value for a correlation coefficient r over n pairs.
double pearson_p_value(double r, std::size_t n);

}  // namespace havok::intermittency
