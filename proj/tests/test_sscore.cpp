#include <doctest.h>

#include <Eigen/Dense>

#include <complex>
#include <random>

#include "support/oracles.hpp"
#include "tripend/analysis.hpp"
#include "tripend/care.hpp"
#include "tripend/errors.hpp"
#include "tripend/state_space.hpp"

using namespace tripend;
using Cx = std::complex<double>;

namespace {

Eigen::MatrixXcd block(const Eigen::MatrixXcd& M, int r0, int nr, int c0, int nc) {
  return M.block(r0, c0, nr, nc);
}

}  // namespace

TEST_CASE("shape validation catches mismatched realizations") {
  StateSpaceModel g;
  g.A = Eigen::MatrixXd::Zero(2, 2);
  g.B = Eigen::MatrixXd::Zero(3, 1);  // wrong row count
  g.C = Eigen::MatrixXd::Zero(1, 2);
  g.D = Eigen::MatrixXd::Zero(1, 1);
  CHECK_THROWS_AS(g.check(), DimensionMismatch);
  g.B = Eigen::MatrixXd::Zero(2, 1);
  CHECK_NOTHROW(g.check());
  g.input_names = {"a", "b"};  // one name per input required
  CHECK_THROWS_AS(g.check(), DimensionMismatch);
}

TEST_CASE("factory transfer functions evaluate to their formulas") {
  const double w = 3.7;
  const auto lag = StateSpaceModel::first_order_lag(2.0, 0.25);
  const Cx got = eval_response(lag, w)(0, 0);
  const Cx want = 2.0 / (Cx(1.0, 0.25 * w));
  CHECK(std::abs(got - want) < 1e-12);

  // k (s/a + 1)/(s/b + 1)
  const auto ratio = StateSpaceModel::first_order_ratio(1.5, 2.0, 8.0);
  const Cx got2 = eval_response(ratio, w)(0, 0);
  const Cx want2 = 1.5 * (Cx(0.0, w) / 2.0 + 1.0) / (Cx(0.0, w) / 8.0 + 1.0);
  CHECK(std::abs(got2 - want2) < 1e-12);

  Eigen::MatrixXd d(2, 1);
  d << 3.0, -1.0;
  const auto k = StateSpaceModel::gain(d);
  CHECK(k.states() == 0);
  CHECK((eval_response(k, w) - d.cast<Cx>()).norm() < 1e-15);
}

TEST_CASE("series parallel and append compose frequency responses") {
  std::mt19937_64 rng(7);
  const auto g1 = oracles::random_stable(rng, 4, 2, 3);
  const auto g2 = oracles::random_stable(rng, 3, 3, 2);
  const auto g3 = oracles::random_stable(rng, 2, 2, 3);

  for (double w : {0.0, 0.8, 5.0}) {
    const Eigen::MatrixXcd r1 = eval_response(g1, w);
    const Eigen::MatrixXcd r2 = eval_response(g2, w);
    const Eigen::MatrixXcd r3 = eval_response(g3, w);
    CHECK((eval_response(series(g1, g2), w) - r2 * r1).norm() < 1e-10);
    CHECK((eval_response(parallel(g1, g3), w) - (r1 + r3)).norm() < 1e-10);
    const Eigen::MatrixXcd ra = eval_response(append(g1, g2), w);
    CHECK((block(ra, 0, 3, 0, 2) - r1).norm() < 1e-12);
    CHECK((block(ra, 3, 2, 2, 3) - r2).norm() < 1e-12);
    CHECK(block(ra, 0, 3, 2, 3).norm() < 1e-12);
  }
}

TEST_CASE("negative feedback closes to G(I + HG)^-1") {
  std::mt19937_64 rng(11);
  const auto g = oracles::random_stable(rng, 4, 2, 2);
  const auto h = oracles::random_stable(rng, 3, 2, 2, false);
  const auto cl = feedback_loop(g, h, -1.0);
  for (double w : {0.3, 2.0, 11.0}) {
    const Eigen::MatrixXcd G = eval_response(g, w);
    const Eigen::MatrixXcd H = eval_response(h, w);
    const Eigen::MatrixXcd want =
        G * (Eigen::MatrixXcd::Identity(2, 2) + H * G).inverse();
    CHECK((eval_response(cl, w) - want).norm() < 1e-9);
  }

  // algebraic loop: unit static gains in positive feedback have no solution
  const auto one = StateSpaceModel::gain(Eigen::MatrixXd::Identity(1, 1));
  CHECK_THROWS_AS(feedback_loop(one, one, +1.0), IllPosed);
}

TEST_CASE("subsystem selects and reorders channels") {
  std::mt19937_64 rng(13);
  const auto g = oracles::random_stable(rng, 3, 3, 3);
  const auto sub = subsystem(g, {2, 0}, {1});
  const Eigen::MatrixXcd R = eval_response(g, 1.7);
  const Eigen::MatrixXcd S = eval_response(sub, 1.7);
  CHECK(std::abs(S(0, 0) - R(2, 1)) < 1e-12);
  CHECK(std::abs(S(1, 0) - R(0, 1)) < 1e-12);
}

TEST_CASE("lower LFT equals the block elimination formula") {
  std::mt19937_64 rng(17);
  const auto p = oracles::random_stable(rng, 5, 4, 4);
  const auto k = oracles::random_stable(rng, 2, 2, 2, false);
  const auto cl = lft_lower(p, k, 2, 2);
  CHECK(cl.inputs() == 2);
  CHECK(cl.outputs() == 2);
  for (double w : {0.1, 1.0, 7.0}) {
    const Eigen::MatrixXcd P = eval_response(p, w);
    const Eigen::MatrixXcd K = eval_response(k, w);
    const Eigen::MatrixXcd P11 = block(P, 0, 2, 0, 2), P12 = block(P, 0, 2, 2, 2);
    const Eigen::MatrixXcd P21 = block(P, 2, 2, 0, 2), P22 = block(P, 2, 2, 2, 2);
    const Eigen::MatrixXcd want =
        P11 + P12 * K *
                  (Eigen::MatrixXcd::Identity(2, 2) - P22 * K).inverse() * P21;
    CHECK((eval_response(cl, w) - want).norm() < 1e-9);
  }
}

TEST_CASE("upper LFT and constant closure agree with the formula") {
  std::mt19937_64 rng(19);
  const auto p = oracles::random_stable(rng, 4, 5, 5);
  Eigen::MatrixXd delta(2, 2);
  delta << 0.3, -0.1, 0.2, 0.4;
  const auto cl = close_upper(p, delta, 2, 2);
  const auto cl2 = lft_upper(p, StateSpaceModel::gain(delta), 2, 2);
  for (double w : {0.5, 3.0}) {
    const Eigen::MatrixXcd P = eval_response(p, w);
    const Eigen::MatrixXcd P11 = block(P, 0, 2, 0, 2), P12 = block(P, 0, 2, 2, 3);
    const Eigen::MatrixXcd P21 = block(P, 2, 3, 0, 2), P22 = block(P, 2, 3, 2, 3);
    const Eigen::MatrixXcd D = delta.cast<Cx>();
    const Eigen::MatrixXcd want =
        P22 + P21 * D * (Eigen::MatrixXcd::Identity(2, 2) - P11 * D).inverse() * P12;
    CHECK((eval_response(cl, w) - want).norm() < 1e-9);
    CHECK((eval_response(cl2, w) - want).norm() < 1e-9);
  }
  // the complex-closure state matrix reduces to the real one at zero phase
  const Eigen::MatrixXcd Ac = close_upper_state_matrix(p, delta.cast<Cx>(), 2, 2);
  CHECK((Ac - cl.A.cast<Cx>()).norm() < 1e-12);
}

TEST_CASE("response at a pole is refused") {
  StateSpaceModel integ;
  integ.A = Eigen::MatrixXd::Zero(1, 1);
  integ.B = Eigen::MatrixXd::Ones(1, 1);
  integ.C = Eigen::MatrixXd::Ones(1, 1);
  integ.D = Eigen::MatrixXd::Zero(1, 1);
  CHECK_THROWS_AS(eval_response(integ, 0.0), SingularResolvent);
}

TEST_CASE("log grid covers the requested band") {
  const auto grid = default_grid();
  REQUIRE(grid.size() == 400);
  CHECK(grid.front() == doctest::Approx(1e-2).epsilon(1e-12));
  CHECK(grid.back() == doctest::Approx(1e3).epsilon(1e-12));
  for (size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] > grid[i - 1]);
}

TEST_CASE("hurwitz test reports the spectral abscissa") {
  Eigen::Matrix2d A;
  A << -1.0, 3.0, 0.0, -0.5;
  auto rep = is_hurwitz(A);
  CHECK(rep.hurwitz);
  CHECK(rep.spectral_abscissa == doctest::Approx(-0.5));
  A(1, 1) = 0.2;
  CHECK_FALSE(is_hurwitz(A).hurwitz);
}

TEST_CASE("norm of a first order lag is its dc gain") {
  const auto g = StateSpaceModel::first_order_lag(1.0, 1.0);
  const auto n = hinf_norm(g);
  REQUIRE(n.finite);
  CHECK(n.value == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("norm of an unstable system is infinite") {
  StateSpaceModel g;
  g.A = Eigen::MatrixXd::Ones(1, 1);
  g.B = Eigen::MatrixXd::Ones(1, 1);
  g.C = Eigen::MatrixXd::Ones(1, 1);
  g.D = Eigen::MatrixXd::Zero(1, 1);
  const auto n = hinf_norm(g);
  CHECK_FALSE(n.finite);
}

TEST_CASE("norm bisection agrees with a dense sweep") {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> ns(3, 8), ms(1, 3);
  for (int trial = 0; trial < 12; ++trial) {
    const auto g = oracles::random_stable(rng, ns(rng), ms(rng), ms(rng));
    const auto n = hinf_norm(g);
    REQUIRE(n.finite);
    const double swept = oracles::sweep_norm(g, 100000);
    CHECK(oracles::rel_err(n.value, swept) < 1e-4);
  }
}

TEST_CASE("riccati scalar case has the closed form root") {
  const Eigen::MatrixXd A = Eigen::MatrixXd::Ones(1, 1);
  const Eigen::MatrixXd B = Eigen::MatrixXd::Ones(1, 1);
  const Eigen::MatrixXd Q = Eigen::MatrixXd::Ones(1, 1);
  const Eigen::MatrixXd R = Eigen::MatrixXd::Ones(1, 1);
  const Eigen::MatrixXd X = care_solve(A, B, Q, R);
  CHECK(std::abs(X(0, 0) - (1.0 + std::sqrt(2.0))) < 1e-10);
}

TEST_CASE("riccati solutions stabilize and satisfy the equation") {
  std::mt19937_64 rng(29);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::MatrixXd A(6, 6), B(6, 2), C(3, 6);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) A(i, j) = gauss(rng);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 2; ++j) B(i, j) = gauss(rng);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 6; ++j) C(i, j) = gauss(rng);
    const Eigen::MatrixXd Q = C.transpose() * C;
    const Eigen::MatrixXd R = Eigen::MatrixXd::Identity(2, 2);

    const Eigen::MatrixXd X = care_solve(A, B, Q, R);
    CHECK(oracles::care_residual(A, B, Q, R, X) <= 1e-8 * (1.0 + X.norm()));
    const Eigen::MatrixXd Acl = A - B * R.ldlt().solve(B.transpose() * X);
    CHECK(is_hurwitz(Acl).hurwitz);
  }
}

TEST_CASE("riccati without a stabilizing solution is refused") {
  // uncontrollable integrator: Hamiltonian eigenvalues sit on the axis
  const Eigen::MatrixXd A = Eigen::MatrixXd::Zero(1, 1);
  const Eigen::MatrixXd B = Eigen::MatrixXd::Zero(1, 1);
  const Eigen::MatrixXd Q = Eigen::MatrixXd::Ones(1, 1);
  const Eigen::MatrixXd R = Eigen::MatrixXd::Ones(1, 1);
  CHECK_THROWS_AS(care_solve(A, B, Q, R), NoStabilizingSolution);
}
