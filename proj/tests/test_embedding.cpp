#include <doctest.h>

#include <random>

#include "havok/embedding.hpp"
#include "havok/error.hpp"

using namespace havok;
using namespace havok::embedding;

namespace {

TimeSeries series(std::vector<double> v) {
  TimeSeries z;
  z.values = std::move(v);
  return z;
}

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = g(rng);
  return m;
}

Matrix orthonormal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Matrix> qr(random_matrix(rows, cols, rng));
  return qr.householderQ() * Matrix::Identity(rows, cols);
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("hankel of 1..4 with p=2") {
  const Matrix h = build_hankel(series({1, 2, 3, 4}), 2, 1);
  Matrix expected(2, 3);
  expected << 1, 2, 3, 2, 3, 4;
  CHECK(h == expected);
}

TEST_CASE("hankel of 480 minute samples with p=15 is 15 x 466") {
  std::vector<double> v(480);
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = std::sin(0.1 * static_cast<double>(k));
  const Matrix h = build_hankel(series(v), 15, 1);
  CHECK(h.rows() == 15);
  CHECK(h.cols() == 466);
}

TEST_CASE("hankel with lag 2 on a constant series") {
  const Matrix h = build_hankel(series({5, 5, 5, 5, 5}), 2, 2);
  CHECK(h.rows() == 2);
  CHECK(h.cols() == 3);
  CHECK((h.array() == 5.0).all());
}

TEST_CASE("hankel indexing and anti-diagonals for lagged windows") {
  std::vector<double> v(40);
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = static_cast<double>(k * k) - 3.0;
  const int p = 5, tau = 3;
  const Matrix h = build_hankel(series(v), p, tau);
  REQUIRE(h.cols() == 40 - (p - 1) * tau);
  for (int i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < h.cols(); ++j) CHECK(h(i, j) == v[static_cast<std::size_t>(i * tau + j)]);
}

TEST_CASE("hankel errors") {
  CHECK(code_of([] { build_hankel(series({1, 2}), 2, 1); }) == ErrorCode::SeriesTooShort);
  CHECK(code_of([] { build_hankel(series({1, 2, std::nan(""), 4, 5, 6}), 2, 1); }) == ErrorCode::NonFinite);
  CHECK(code_of([] { build_hankel(series({1, 2, 3, 4}), 1, 1); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("delay property: shifting the series shifts hankel columns") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::vector<double> v(60);
  for (double& x : v) x = g(rng);
  const Matrix a = build_hankel(series(std::vector<double>(v.begin(), v.end() - 1)), 6, 2);
  const Matrix b = build_hankel(series(std::vector<double>(v.begin() + 1, v.end())), 6, 2);
  CHECK(a.rightCols(a.cols() - 1) == b.leftCols(b.cols() - 1));
}

TEST_CASE("decompose identity and diagonal") {
  const Svd id = decompose(Matrix::Identity(2, 2));
  CHECK(id.s.isApprox(Vector::Ones(2)));
  CHECK(id.u.isApprox(Matrix::Identity(2, 2)));
  CHECK(id.v.isApprox(Matrix::Identity(2, 2)));

  Matrix d(2, 2);
  d << 3, 0, 0, 1;
  const Svd sd = decompose(d);
  CHECK(sd.s[0] == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(sd.s[1] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("decompose rank-1 outer product matches the analytic singular value") {
  std::mt19937_64 rng(11);
  const Matrix u = random_matrix(10, 1, rng);
  const Matrix w = random_matrix(50, 1, rng);
  const Svd svd = decompose(u * w.transpose());
  CHECK(svd.s[0] == doctest::Approx(u.norm() * w.norm()).epsilon(1e-12));
  CHECK(svd.s[1] / svd.s[0] <= 1e-12);
}

TEST_CASE("svd invariants on random wide and tall matrices") {
  std::mt19937_64 rng(5);
  for (auto [rows, cols] : {std::pair<int, int>{12, 300}, {40, 41}, {30, 7}}) {
    const Matrix h = random_matrix(rows, cols, rng);
    const Svd svd = decompose(h);
    const Eigen::Index m = std::min(rows, cols);
    REQUIRE(svd.s.size() == m);
    REQUIRE(svd.u.rows() == rows);
    REQUIRE(svd.v.rows() == cols);
    for (Eigen::Index i = 1; i < m; ++i) CHECK(svd.s[i] <= svd.s[i - 1]);
    CHECK((svd.s.array() >= 0).all());
    const Matrix rec = svd.u * svd.s.asDiagonal() * svd.v.transpose();
    CHECK((h - rec).norm() / h.norm() <= 1e-10);
    CHECK((svd.u.transpose() * svd.u - Matrix::Identity(m, m)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((svd.v.transpose() * svd.v - Matrix::Identity(m, m)).cwiseAbs().maxCoeff() <= 1e-10);
    for (Eigen::Index c = 0; c < m; ++c) {
      Eigen::Index arg = 0;
      svd.u.col(c).cwiseAbs().maxCoeff(&arg);
      CHECK(svd.u(arg, c) >= 0.0);
    }
    // Eckart-Young: truncation error equals the tail energy.
    for (Eigen::Index r = 1; r < m; ++r) {
      const Matrix hr = svd.u.leftCols(r) * svd.s.head(r).asDiagonal() * svd.v.leftCols(r).transpose();
      const double tail = std::sqrt(svd.s.tail(m - r).squaredNorm());
      CHECK((h - hr).norm() == doctest::Approx(tail).epsilon(1e-8));
    }
  }
}

TEST_CASE("decompose is bit-deterministic") {
  std::mt19937_64 rng(9);
  const Matrix h = random_matrix(15, 200, rng);
  const Svd a = decompose(h);
  const Svd b = decompose(h);
  CHECK(a.u == b.u);
  CHECK(a.s == b.s);
  CHECK(a.v == b.v);
}

TEST_CASE("auto rank recovers a rank-3 signal under small noise") {
  std::mt19937_64 rng(21);
  const int p = 20, q = 200;
  Vector sigma(3);
  sigma << 10, 5, 2;
  const Matrix clean = orthonormal(p, 3, rng) * sigma.asDiagonal() * orthonormal(q, 3, rng).transpose();
  const Matrix noisy = clean + 1e-3 * random_matrix(p, q, rng);
  const Svd svd = decompose(noisy);
  // Independent threshold evaluation: 3rd value above, 4th below.
  const double beta = static_cast<double>(p) / q;
  const double omega = 0.56 * beta * beta * beta - 0.95 * beta * beta + 1.82 * beta + 1.43;
  std::vector<double> sorted(svd.s.data(), svd.s.data() + svd.s.size());
  std::sort(sorted.begin(), sorted.end());
  const double median = 0.5 * (sorted[9] + sorted[10]);
  CHECK(svd.s[2] > omega * median);
  CHECK(svd.s[3] < omega * median);
  CHECK(select_rank(svd.s, p, q, rank::Auto{}) == 3);
}

TEST_CASE("auto rank clamps a noiseless rank-1 matrix to 2") {
  std::mt19937_64 rng(2);
  const Matrix h = random_matrix(8, 1, rng) * random_matrix(90, 1, rng).transpose();
  const Svd svd = decompose(h);
  CHECK(select_rank(svd.s, 8, 90, rank::Auto{}) == 2);
}

TEST_CASE("fixed and energy rank policies") {
  Vector s(4);
  s << 4, 2, 1, 1;  // energies 16, 4, 1, 1 of 22
  CHECK(select_rank(s, 4, 10, rank::Fixed{3}) == 3);
  CHECK(code_of([&] { select_rank(s, 4, 10, rank::Fixed{1}); }) == ErrorCode::InvalidRank);
  CHECK(code_of([&] { select_rank(s, 4, 10, rank::Fixed{5}); }) == ErrorCode::InvalidRank);
  CHECK(select_rank(s, 4, 10, rank::Energy{20.0 / 22.0}) == 2);
  CHECK(select_rank(s, 4, 10, rank::Energy{20.5 / 22.0}) == 3);
  CHECK(select_rank(s, 4, 10, rank::Energy{0.5}) == 2);  // clamp floor
  CHECK(energy_fraction(s, 3) == doctest::Approx(1.0 / 22.0));
}

TEST_CASE("embed ties the pieces together") {
  std::vector<double> v(300);
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double t = 0.05 * static_cast<double>(k);
    v[k] = std::sin(t) + 0.5 * std::cos(2.7 * t);
  }
  const DelayEmbedding e = embed(series(v), 10, 1, rank::Fixed{4});
  CHECK(e.window_p == 10);
  CHECK(e.q() == 291);
  CHECK(e.m() == 10);
  CHECK(e.rank_r == 4);
  CHECK(e.svd_v.rows() == 291);
}
