#include "havok/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "havok/error.hpp"

namespace havok::embedding {

Matrix build_hankel(const TimeSeries& z, int window_p, int lag_tau) {
  if (window_p < 2) fail(ErrorCode::InvalidArgument, "window_p must be >= 2");
  if (lag_tau < 1) fail(ErrorCode::InvalidArgument, "lag_tau must be >= 1");
  if (!all_finite(z.values)) fail(ErrorCode::NonFinite, "series contains NaN/Inf");

  const long n = static_cast<long>(z.values.size());
  const long q = n - static_cast<long>(window_p - 1) * lag_tau;
  if (q < window_p) {
    std::ostringstream msg;
    msg << "N=" << n << " gives q=" << q << " snapshots for p=" << window_p
        << ", tau=" << lag_tau << " (need q >= p)";
    fail(ErrorCode::SeriesTooShort, msg.str());
  }

  Matrix h(window_p, q);
  for (long j = 0; j < q; ++j) {
    for (int i = 0; i < window_p; ++i) {
      h(i, j) = z.values[static_cast<std::size_t>(i * lag_tau + j)];
    }
  }
  return h;
}

namespace {

// SVD of a matrix with rows <= cols.
Svd decompose_wide(const Matrix& h) {
  const Eigen::Index p = h.rows();
  const Eigen::Index q = h.cols();

  Eigen::HouseholderQR<Matrix> qr(h.transpose());
  const Matrix r = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();

  // R = Ur S Vr^T, so H = R^T Q^T = Vr S (Q Ur)^T.
  Eigen::JacobiSVD<Matrix> small(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (small.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "Jacobi SVD did not converge on " << p << "x" << q << " matrix";
    fail(ErrorCode::ConvergenceFailure, msg.str());
  }

  Svd out;
  out.s = small.singularValues();
  out.u = small.matrixV();
  Matrix padded = Matrix::Zero(q, p);
  padded.topRows(p) = small.matrixU();
  out.v = qr.householderQ() * padded;
  return out;
}

void apply_sign_convention(Svd& svd) {
  for (Eigen::Index c = 0; c < svd.u.cols(); ++c) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < svd.u.rows(); ++i) {
      const double a = std::abs(svd.u(i, c));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    if (svd.u(arg, c) < 0.0) {
      svd.u.col(c) *= -1.0;
      svd.v.col(c) *= -1.0;
    }
  }
}

}  // namespace

Svd decompose(const Matrix& h) {
  if (h.rows() < 1 || h.cols() < 1) fail(ErrorCode::InvalidArgument, "empty matrix");
  if (!h.allFinite()) fail(ErrorCode::NonFinite, "matrix contains NaN/Inf");

  Svd out;
  if (h.rows() <= h.cols()) {
    out = decompose_wide(h);
  } else {
    Svd t = decompose_wide(h.transpose());
    out.s = std::move(t.s);
    out.u = std::move(t.v);
    out.v = std::move(t.u);
  }
  apply_sign_convention(out);
  return out;
}

double optimal_threshold_coefficient(double beta) {
  return 0.56 * beta * beta * beta - 0.95 * beta * beta + 1.82 * beta + 1.43;
}

int select_rank(const Vector& s, int p, int q, const RankPolicy& policy) {
  const int m = static_cast<int>(s.size());
  if (m < 2) fail(ErrorCode::InvalidRank, "need at least 2 singular values");
  auto clamp = [m](int r) { return std::clamp(r, 2, m); };

  if (const auto* fixed = std::get_if<rank::Fixed>(&policy)) {
    if (fixed->r < 2 || fixed->r > m) {
      std::ostringstream msg;
      msg << "fixed rank " << fixed->r << " outside [2, " << m << "]";
      fail(ErrorCode::InvalidRank, msg.str());
    }
    return fixed->r;
  }

  if (const auto* energy = std::get_if<rank::Energy>(&policy)) {
    if (!(energy->fraction > 0.0 && energy->fraction <= 1.0)) {
      fail(ErrorCode::InvalidArgument, "energy fraction must be in (0, 1]");
    }
    const double total = s.squaredNorm();
    if (total <= 0.0) return 2;
    double acc = 0.0;
    for (int r = 1; r <= m; ++r) {
      acc += s[r - 1] * s[r - 1];
      if (acc / total >= energy->fraction) return clamp(r);
    }
    return m;
  }

  // Median-based Donoho-Gavish hard threshold.
  const double beta = static_cast<double>(std::min(p, q)) / static_cast<double>(std::max(p, q));
  std::vector<double> sorted(s.data(), s.data() + m);
  std::sort(sorted.begin(), sorted.end());
  const double median = (m % 2 == 1) ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  const double cutoff = optimal_threshold_coefficient(beta) * median;
  int count = 0;
  for (int i = 0; i < m; ++i) {
    if (s[i] > cutoff) ++count;
  }
  return clamp(count);
}

DelayEmbedding embed(const TimeSeries& z, int window_p, int lag_tau, const RankPolicy& policy) {
  DelayEmbedding e;
  e.window_p = window_p;
  e.lag_tau = lag_tau;
  e.hankel = build_hankel(z, window_p, lag_tau);
  Svd svd = decompose(e.hankel);
  e.svd_u = std::move(svd.u);
  e.svd_s = std::move(svd.s);
  e.svd_v = std::move(svd.v);
  e.rank_r = select_rank(e.svd_s, window_p, e.q(), policy);
  return e;
}

double energy_fraction(const Vector& s, int index) {
  const double total = s.squaredNorm();
  if (total <= 0.0 || index < 0 || index >= s.size()) return 0.0;
  return s[index] * s[index] / total;
}

}  // namespace havok::embedding
