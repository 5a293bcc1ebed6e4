#pragma once

#include <Eigen/Dense>
#include <string_view>
#include <vector>

#include "havok/embedding.hpp"

namespace havok::model {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class FitMode { Discrete, Derivative };

std::string_view to_string(FitMode mode);
FitMode parse_fit_mode(std::string_view text);

// Eigen time-delay coordinates: column j is v_{j+1}(t), q snapshots.
struct CoordinateSeries {
  Matrix v;
  double dt = 1.0;

  int r() const { return static_cast<int>(v.cols()); }
  int q() const { return static_cast<int>(v.rows()); }
};

// Last retained coordinate v_r, treated as the external input.
struct ForcingSeries {
  std::vector<double> vr;
  double dt = 1.0;
  double t0 = 0.0;
  double energy_fraction = 0.0;  // s_r^2 / sum s_i^2

  double time_at(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
};

// v' = A v + B v_r over the first r-1 coordinates. In discrete mode A is a
// one-step map, in derivative mode a continuous-time generator.
struct HavokModel {
  Matrix a;
  Vector b;
  FitMode mode = FitMode::Discrete;
  double residual_row_norm = 0.0;  // norm of the discarded last regression row
  double operator_norm = 0.0;      // Frobenius norm of the full r x r operator
  int r = 0;
  double dt = 1.0;

  // Diagnostic only; values well above 0.1 suggest v_r is not behaving as a
  // pure input.
  double residual_ratio() const {
    return operator_norm > 0.0 ? residual_row_norm / operator_norm : 0.0;
  }
};

CoordinateSeries coordinates(const embedding::DelayEmbedding& e, double dt);
ForcingSeries forcing(const embedding::DelayEmbedding& e, double dt, double t0 = 0.0);

// Minimum-norm least-squares operator mapping `from` onto `to`
// (to ~= X * from, both with snapshots as columns), using an SVD pseudo-inverse
// with relative cutoff 1e-10 * s_max.
Matrix regress(const Matrix& to, const Matrix& from);

HavokModel fit(const CoordinateSeries& coords, FitMode mode = FitMode::Discrete);

// Returns forcing.vr.size() x (r-1) states, row 0 = v0.
Matrix simulate(const HavokModel& model, const Vector& v0, const ForcingSeries& forcing);

struct ReconstructionScore {
  std::vector<double> r2;
  std::vector<double> nrmse;  // RMSE divided by the range of the actual column
};

ReconstructionScore reconstruction_score(const Matrix& predicted, const Matrix& actual);

// Five-point central difference; rows 2 .. n-3 of the input, scaled by 1/dt.
Matrix central_derivative(const Matrix& x, double dt);

}  // namespace havok::model
