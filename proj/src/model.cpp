#include "havok/model.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "havok/error.hpp"

namespace havok::model {

std::string_view to_string(FitMode mode) {
  return mode == FitMode::Discrete ? "discrete" : "derivative";
}

FitMode parse_fit_mode(std::string_view text) {
  if (text == "discrete") return FitMode::Discrete;
  if (text == "derivative") return FitMode::Derivative;
  fail(ErrorCode::InvalidArgument, "unknown fit mode '" + std::string(text) + "'");
}

CoordinateSeries coordinates(const embedding::DelayEmbedding& e, double dt) {
  if (e.rank_r < 2 || e.rank_r > e.svd_v.cols()) fail(ErrorCode::InvalidRank, "embedding rank out of range");
  return CoordinateSeries{e.svd_v.leftCols(e.rank_r), dt};
}

ForcingSeries forcing(const embedding::DelayEmbedding& e, double dt, double t0) {
  if (e.rank_r < 2 || e.rank_r > e.svd_v.cols()) fail(ErrorCode::InvalidRank, "embedding rank out of range");
  ForcingSeries f;
  const Vector col = e.svd_v.col(e.rank_r - 1);
  f.vr.assign(col.data(), col.data() + col.size());
  f.dt = dt;
  f.t0 = t0;
  f.energy_fraction = embedding::energy_fraction(e.svd_s, e.rank_r - 1);
  return f;
}

Matrix regress(const Matrix& to, const Matrix& from) {
  // Solve X from^T-wise: to^T = from^T X^T.
  const Matrix design = from.transpose();
  const embedding::Svd svd = embedding::decompose(design);
  const double s_max = svd.s.size() > 0 ? svd.s.maxCoeff() : 0.0;
  const double cutoff = 1e-10 * s_max;
  Vector inv_s = Vector::Zero(svd.s.size());
  int kept = 0;
  for (Eigen::Index i = 0; i < svd.s.size(); ++i) {
    if (svd.s[i] > cutoff && svd.s[i] > 0.0) {
      inv_s[i] = 1.0 / svd.s[i];
      ++kept;
    }
  }
  if (kept == 0) fail(ErrorCode::RankDeficient, "pseudo-inverse eliminated every direction");
  // pinv(design) = V diag(1/s) U^T
  const Matrix pinv = svd.v * inv_s.asDiagonal() * svd.u.transpose();
  return (pinv * to.transpose()).transpose();
}

Matrix central_derivative(const Matrix& x, double dt) {
  const Eigen::Index n = x.rows();
  if (n < 5) fail(ErrorCode::ShortSeries, "need at least 5 snapshots for differencing");
  Matrix d(n - 4, x.cols());
  for (Eigen::Index k = 2; k < n - 2; ++k) {
    d.row(k - 2) = (-x.row(k + 2) + 8.0 * x.row(k + 1) - 8.0 * x.row(k - 1) + x.row(k - 2)) / (12.0 * dt);
  }
  return d;
}

HavokModel fit(const CoordinateSeries& coords, FitMode mode) {
  const int r = coords.r();
  const int q = coords.q();
  if (r < 2) fail(ErrorCode::InvalidRank, "fit needs r >= 2");
  if (q < r + 5) {
    std::ostringstream msg;
    msg << "q=" << q << " snapshots is too few for r=" << r;
    fail(ErrorCode::ShortSeries, msg.str());
  }
  if (!coords.v.allFinite()) fail(ErrorCode::NonFinite, "coordinates contain NaN/Inf");
  if (!(coords.dt > 0.0)) fail(ErrorCode::InvalidArgument, "dt must be positive");

  Matrix full;
  if (mode == FitMode::Discrete) {
    const Matrix now = coords.v.topRows(q - 1).transpose();
    const Matrix next = coords.v.bottomRows(q - 1).transpose();
    full = regress(next, now);
  } else {
    const Matrix deriv = central_derivative(coords.v, coords.dt).transpose();
    const Matrix interior = coords.v.middleRows(2, q - 4).transpose();
    full = regress(deriv, interior);
  }

  HavokModel m;
  m.mode = mode;
  m.r = r;
  m.dt = coords.dt;
  m.a = full.topLeftCorner(r - 1, r - 1);
  m.b = full.topRightCorner(r - 1, 1);
  m.residual_row_norm = full.row(r - 1).norm();
  m.operator_norm = full.norm();
  return m;
}

namespace {

void check_state(const Vector& x, std::size_t index) {
  if (!x.allFinite() || x.norm() > 1e12) {
    std::ostringstream msg;
    msg << "state norm exceeded 1e12 at index " << index;
    fail(ErrorCode::Divergence, msg.str());
  }
}

}  // namespace

Matrix simulate(const HavokModel& model, const Vector& v0, const ForcingSeries& forcing) {
  const Eigen::Index dim = model.a.rows();
  if (v0.size() != dim) fail(ErrorCode::InvalidArgument, "v0 has wrong dimension");
  if (forcing.vr.size() < 2) fail(ErrorCode::ShortSeries, "forcing needs at least 2 samples");
  if (!v0.allFinite()) fail(ErrorCode::NonFinite, "v0 contains NaN/Inf");

  const std::size_t n = forcing.vr.size();
  Matrix states(static_cast<Eigen::Index>(n), dim);
  Vector x = v0;
  states.row(0) = x.transpose();

  if (model.mode == FitMode::Discrete) {
    for (std::size_t k = 0; k + 1 < n; ++k) {
      x = model.a * x + model.b * forcing.vr[k];
      check_state(x, k + 1);
      states.row(static_cast<Eigen::Index>(k + 1)) = x.transpose();
    }
    return states;
  }

  // RK4 with zero-order hold on the input.
  const double h = model.dt;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const Vector drive = model.b * forcing.vr[k];
    auto f = [&](const Vector& y) -> Vector { return model.a * y + drive; };
    const Vector k1 = f(x);
    const Vector k2 = f(x + 0.5 * h * k1);
    const Vector k3 = f(x + 0.5 * h * k2);
    const Vector k4 = f(x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    check_state(x, k + 1);
    states.row(static_cast<Eigen::Index>(k + 1)) = x.transpose();
  }
  return states;
}

ReconstructionScore reconstruction_score(const Matrix& predicted, const Matrix& actual) {
  if (predicted.rows() != actual.rows() || predicted.cols() != actual.cols()) {
    fail(ErrorCode::InvalidArgument, "predicted and actual shapes differ");
  }
  if (actual.rows() < 2) fail(ErrorCode::ShortSeries, "need at least 2 rows");

  ReconstructionScore score;
  for (Eigen::Index c = 0; c < actual.cols(); ++c) {
    const double mean = actual.col(c).mean();
    const double ss_tot = (actual.col(c).array() - mean).square().sum();
    const double range = actual.col(c).maxCoeff() - actual.col(c).minCoeff();
    if (ss_tot <= 0.0 || range <= 0.0) {
      fail(ErrorCode::ZeroVariance, "actual column " + std::to_string(c) + " is constant");
    }
    const double ss_res = (actual.col(c) - predicted.col(c)).squaredNorm();
    score.r2.push_back(1.0 - ss_res / ss_tot);
    score.nrmse.push_back(std::sqrt(ss_res / static_cast<double>(actual.rows())) / range);
  }
  return score;
}

}  // namespace havok::model
