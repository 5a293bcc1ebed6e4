#pragma once

#include <Eigen/Dense>
#include <variant>

#include "havok/time_series.hpp"

namespace havok::embedding {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Economy SVD H = U diag(s) V^T with m = min(rows, cols) columns.
struct Svd {
  Matrix u;  // rows(H) x m
  Vector s;  // descending, nonnegative
  Matrix v;  // cols(H) x m
};

// Hankel matrix stored delays x time (p x q) together with its SVD.
// Columns of svd_v are the eigen time-delay coordinates, each of length q.
struct DelayEmbedding {
  int window_p = 0;
  int lag_tau = 1;
  Matrix hankel;
  Matrix svd_u;
  Vector svd_s;
  Matrix svd_v;
  int rank_r = 0;

  int q() const { return static_cast<int>(hankel.cols()); }
  int m() const { return static_cast<int>(svd_s.size()); }
};

// H[i][j] = z[i * lag_tau + j], shape p x (N - (p-1) * lag_tau).
Matrix build_hankel(const TimeSeries& z, int window_p, int lag_tau = 1);

// Deterministic economy SVD. Each column of U is flipped so that its
// largest-magnitude entry is nonnegative (V follows). Uses a Householder QR
// of the long side followed by one-sided Jacobi on the small triangular
// factor, which keeps small singular values accurate.
Svd decompose(const Matrix& h);

namespace rank {
struct Auto {};
struct Fixed {
  int r;
};
struct Energy {
  double fraction;
};
}  // namespace rank
using RankPolicy = std::variant<rank::Auto, rank::Fixed, rank::Energy>;

// Median-based optimal hard threshold coefficient for unknown noise level.
double optimal_threshold_coefficient(double beta);

// Truncation rank, always clamped to [2, m].
int select_rank(const Vector& s, int p, int q, const RankPolicy& policy);

DelayEmbedding embed(const TimeSeries& z, int window_p, int lag_tau, const RankPolicy& policy);

// Fraction of total singular-value energy carried by coordinate index
// (0-based): s_k^2 / sum s_i^2.
double energy_fraction(const Vector& s, int index);

}  // namespace havok::embedding
