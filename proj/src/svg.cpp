#include "havok/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace havok::svg {

namespace {

constexpr double kWidth = 900.0;
constexpr double kPlotHeight = 300.0;
constexpr double kMargin = 50.0;
constexpr double kLane = 24.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string colour(double t) {
  // Five-stop perceptual ramp, dark blue to yellow.
  static constexpr std::array<std::array<double, 3>, 5> stops{{
      {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
  t = std::clamp(t, 0.0, 1.0) * 4.0;
  const auto i = std::min<std::size_t>(3, static_cast<std::size_t>(t));
  const double f = t - static_cast<double>(i);
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(stops[i][0] + f * (stops[i + 1][0] - stops[i][0])),
                static_cast<int>(stops[i][1] + f * (stops[i + 1][1] - stops[i][1])),
                static_cast<int>(stops[i][2] + f * (stops[i + 1][2] - stops[i][2])));
  return buf;
}

void open(std::ostringstream& out, double height) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\"" << num(height)
      << "\" viewBox=\"0 0 " << num(kWidth) << ' ' << num(height) << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

void annotation_lane(std::ostringstream& out, const physio::AnnotationTrack& ann, double t_begin, double t_end,
                     double y) {
  const double span = t_end - t_begin;
  const double plot_w = kWidth - 2 * kMargin;
  out << "<g id=\"annotations\">\n";
  for (std::size_t m = 0; m < ann.apnea.size(); ++m) {
    if (!ann.apnea[m]) continue;
    const double a = ann.t0 + static_cast<double>(m) * ann.minute;
    const double b = a + ann.minute;
    if (b <= t_begin || a >= t_end) continue;
    const double x0 = kMargin + (std::max(a, t_begin) - t_begin) / span * plot_w;
    const double x1 = kMargin + (std::min(b, t_end) - t_begin) / span * plot_w;
    out << "<rect x=\"" << num(x0) << "\" y=\"" << num(y) << "\" width=\"" << num(std::max(0.5, x1 - x0))
        << "\" height=\"" << num(kLane - 4) << "\" fill=\"#d62728\"/>\n";
  }
  out << "<text x=\"" << num(kMargin - 5) << "\" y=\"" << num(y + 14)
      << "\" font-size=\"11\" text-anchor=\"end\">A</text>\n</g>\n";
}

}  // namespace

std::string forcing_plot(const model::ForcingSeries& f, const intermittency::BurstAnalysis& b,
                         const std::optional<physio::AnnotationTrack>& ann) {
  std::ostringstream out;
  const double height = kPlotHeight + 2 * kMargin + (ann ? kLane : 0.0);
  open(out, height);
  if (f.vr.empty()) {
    out << "</svg>\n";
    return out.str();
  }
  const double t_begin = f.t0;
  const double t_end = f.time_at(f.vr.size());
  double amp = 0.0;
  for (double v : f.vr) amp = std::max(amp, std::abs(v));
  if (amp == 0.0) amp = 1.0;
  const double plot_w = kWidth - 2 * kMargin;
  auto x_of = [&](double t) { return kMargin + (t - t_begin) / (t_end - t_begin) * plot_w; };
  auto y_of = [&](double v) { return kMargin + kPlotHeight * (0.5 - 0.5 * v / amp); };

  for (const auto& burst : b.bursts) {
    out << "<rect x=\"" << num(x_of(burst.t_s)) << "\" y=\"" << num(kMargin) << "\" width=\""
        << num(std::max(0.5, x_of(burst.t_e) - x_of(burst.t_s))) << "\" height=\"" << num(kPlotHeight)
        << "\" fill=\"#ffbbbb\"/>\n";
  }
  const double level = std::sqrt(b.threshold);
  for (double s : {level, -level}) {
    out << "<line x1=\"" << num(kMargin) << "\" x2=\"" << num(kWidth - kMargin) << "\" y1=\"" << num(y_of(s))
        << "\" y2=\"" << num(y_of(s)) << "\" stroke=\"#d62728\" stroke-dasharray=\"4 3\"/>\n";
  }

  const std::size_t stride = std::max<std::size_t>(1, f.vr.size() / 4000);
  out << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"0.8\" points=\"";
  for (std::size_t k = 0; k < f.vr.size(); k += stride) out << num(x_of(f.time_at(k))) << ',' << num(y_of(f.vr[k])) << ' ';
  out << "\"/>\n";
  out << "<text x=\"" << num(kMargin) << "\" y=\"" << num(kMargin - 10) << "\" font-size=\"13\">forcing v_r, psi = "
      << b.psi << ", " << b.bursts.size() << " bursts</text>\n";
  if (ann) annotation_lane(out, *ann, t_begin, t_end, kMargin + kPlotHeight + 8);
  out << "</svg>\n";
  return out.str();
}

std::string scalogram_plot(const spectral::Scalogram& s, const std::optional<physio::AnnotationTrack>& ann) {
  const spectral::Scalogram small = spectral::downsample_times(s, 300);
  std::ostringstream out;
  const double height = kPlotHeight + 2 * kMargin + (ann ? kLane : 0.0);
  open(out, height);
  const auto rows = static_cast<std::size_t>(small.modulus.rows());
  const auto cols = static_cast<std::size_t>(small.modulus.cols());
  if (rows == 0 || cols == 0) {
    out << "</svg>\n";
    return out.str();
  }
  const double peak = std::max(small.modulus.maxCoeff(), 1e-300);
  const double plot_w = kWidth - 2 * kMargin;
  const double cell_w = plot_w / static_cast<double>(cols);
  const double cell_h = kPlotHeight / static_cast<double>(rows);
  out << "<g id=\"heatmap\" shape-rendering=\"crispEdges\">\n";
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = small.modulus(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) / peak;
      out << "<rect x=\"" << num(kMargin + static_cast<double>(c) * cell_w) << "\" y=\""
          << num(kMargin + static_cast<double>(i) * cell_h) << "\" width=\"" << num(cell_w + 0.3) << "\" height=\""
          << num(cell_h + 0.3) << "\" fill=\"" << colour(v) << "\"/>\n";
    }
  }
  out << "</g>\n";

  // Cone of influence: rows with frequency below coi are edge-affected.
  const double log_hi = std::log(small.freqs.front());
  const double log_lo = std::log(small.freqs.back());
  auto y_of_freq = [&](double f) {
    f = std::clamp(f, small.freqs.back(), small.freqs.front());
    return kMargin + (log_hi - std::log(f)) / std::max(1e-12, log_hi - log_lo) * kPlotHeight;
  };
  out << "<polyline fill=\"none\" stroke=\"white\" stroke-dasharray=\"5 3\" points=\"";
  for (std::size_t c = 0; c < cols; ++c) {
    out << num(kMargin + (static_cast<double>(c) + 0.5) * cell_w) << ',' << num(y_of_freq(small.coi[c])) << ' ';
  }
  out << "\"/>\n";
  out << "<text x=\"" << num(kMargin) << "\" y=\"" << num(kMargin - 10)
      << "\" font-size=\"13\">|X_w| scalogram, " << num(small.freqs.back()) << " to " << num(small.freqs.front())
      << " Hz (log axis)</text>\n";
  if (ann) {
    const double dt = s.times.size() > 1 ? s.times[1] - s.times[0] : 1.0;
    annotation_lane(out, *ann, s.times.front(), s.times.back() + dt, kMargin + kPlotHeight + 8);
  }
  out << "</svg>\n";
  return out.str();
}

std::string distribution_plot(const intermittency::DistributionEstimate& d) {
  std::ostringstream out;
  open(out, kPlotHeight + 2 * kMargin);
  if (d.density.empty()) {
    out << "</svg>\n";
    return out.str();
  }
  const double lo = d.bin_edges.front();
  const double hi = d.bin_edges.back();
  const double top = std::max(*std::max_element(d.density.begin(), d.density.end()),
                              *std::max_element(d.gaussian_ref.begin(), d.gaussian_ref.end()));
  const double plot_w = kWidth - 2 * kMargin;
  auto x_of = [&](double v) { return kMargin + (v - lo) / (hi - lo) * plot_w; };
  auto y_of = [&](double v) { return kMargin + kPlotHeight * (1.0 - v / top); };
  for (std::size_t i = 0; i < d.density.size(); ++i) {
    out << "<rect x=\"" << num(x_of(d.bin_edges[i])) << "\" y=\"" << num(y_of(d.density[i])) << "\" width=\""
        << num(std::max(0.3, x_of(d.bin_edges[i + 1]) - x_of(d.bin_edges[i]))) << "\" height=\""
        << num(kPlotHeight - (y_of(d.density[i]) - kMargin)) << "\" fill=\"#9ecae1\"/>\n";
  }
  const auto centres = d.bin_centers();
  out << "<polyline fill=\"none\" stroke=\"#d62728\" points=\"";
  for (std::size_t i = 0; i < centres.size(); ++i) out << num(x_of(centres[i])) << ',' << num(y_of(d.gaussian_ref[i])) << ' ';
  out << "\"/>\n";
  out << "<text x=\"" << num(kMargin) << "\" y=\"" << num(kMargin - 10) << "\" font-size=\"13\">forcing pdf, excess kurtosis "
      << num(d.excess_kurtosis) << "</text>\n</svg>\n";
  return out.str();
}

}  // namespace havok::svg
