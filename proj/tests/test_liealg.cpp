#include <cmath>
#include <vector>

#include "doctest.h"
#include "gaugeforge/errors.hpp"
#include "gaugeforge/liealg.hpp"

using namespace gaugeforge;
using namespace gaugeforge::liealg;

namespace {

MatN fill3(const double* vals) {
  MatN m(3, 3);
  for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = vals[i];
  return m;
}

const double kU3[9] = {0, 0.3, -0.7, -0.3, 0, 0.5, 0.7, -0.5, 0};

}  // namespace

TEST_SUITE_BEGIN("liealg");

TEST_CASE("antisymmetrize produces exact antisymmetry and is a projection") {
  MatN M(3, 3);
  M << 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0;
  MatN A = antisymmetrize(M);
  for (int i = 0; i < 3; ++i) {
    CHECK(A(i, i) == 0.0);
    for (int j = 0; j < 3; ++j) CHECK(A(i, j) == -A(j, i));  // exact, not approximate
  }
  MatN A2 = antisymmetrize(A);
  CHECK((A2 - A).norm() == 0.0);
  CHECK(A(0, 1) == doctest::Approx(0.5 * (2.0 - 4.0)).epsilon(1e-15));
}

TEST_CASE("commutator of antisymmetric matrices is exactly antisymmetric") {
  MatN A = antisym_random(4, 11);
  MatN B = antisym_random(4, 22);
  MatN C = commutator(A, B);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(C(i, j) == -C(j, i));
  // Matches the plain formula to rounding.
  MatN ref = A * B - B * A;
  CHECK((C - ref).norm() < 1e-14 * (1.0 + ref.norm()));
  // Bilinearity.
  MatN C2 = commutator(A, B + B);
  CHECK((C2 - 2.0 * C).norm() < 1e-13);
}

TEST_CASE("gram is exactly symmetric, PSD, and equals -a^2 for antisymmetric a") {
  MatN a = antisym_random(3, 7);
  MatN G = gram(a);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(G(i, j) == G(j, i));
  MatN minus_a2 = -(a * a);
  CHECK((G - minus_a2).norm() < 1e-13);
  const Eigen::MatrixXd Gd(G);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Gd);
  CHECK(es.eigenvalues().minCoeff() > -1e-13);
}

TEST_CASE("exp_so matches the reference matrix") {
  const double ref[9] = {7.2951153584272022e-01,  4.2341440179829465e-01, -5.3715283060055441e-01,
                         -9.6962807125715561e-02, 8.4143779687331866e-01, 5.3158315250511556e-01,
                         6.7706065688880257e-01,  -3.3571219570156807e-01, 6.5489402848898781e-01};
  MatN U = fill3(kU3);
  MatN E = exp_so(U);
  MatN R = fill3(ref);
  CHECK((E - R).norm() < 1e-13);
}

TEST_CASE("exp_so on so(2) reduces to plane rotation") {
  MatN U(2, 2);
  U << 0.0, 1.1, -1.1, 0.0;
  MatN E = exp_so(U);
  CHECK(E(0, 0) == doctest::Approx(0.4535961214255773).epsilon(1e-14));
  CHECK(E(0, 1) == doctest::Approx(0.8912073600614354).epsilon(1e-14));
  CHECK(E(1, 0) == doctest::Approx(-0.8912073600614354).epsilon(1e-14));
  CHECK(E(1, 1) == doctest::Approx(0.4535961214255773).epsilon(1e-14));
}

TEST_CASE("exp_so of an antisymmetric matrix is a rotation") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    AntisymMatrix U(antisym_random(3, seed) * 1.7);
    RotationMatrix R = exp_so(U);
    CHECK(R.orthogonality_defect() < 1e-13);
    CHECK(R.det_defect() < 1e-13);
    // exp(-U) is the transpose.
    MatN Einv = exp_so(MatN(-U.m));
    CHECK((Einv - R.m.transpose()).norm() < 1e-13);
  }
  MatN zero = MatN::Zero(3, 3);
  CHECK((exp_so(zero) - MatN::Identity(3, 3)).norm() == 0.0);
}

TEST_CASE("exp_so agrees with a long plain Taylor sum") {
  MatN U = antisym_random(3, 99) * 0.9;
  MatN series = MatN::Identity(3, 3);
  MatN term = MatN::Identity(3, 3);
  for (int k = 1; k <= 40; ++k) {
    term = MatN(term * U) / static_cast<double>(k);
    series += term;
  }
  CHECK((exp_so(U) - series).norm() < 1e-12);
}

TEST_CASE("dexp_conj matches the reference and a finite difference") {
  MatN U = fill3(kU3);
  MatN W(3, 3);
  W << 0, 0.11, -0.23, -0.11, 0, 0.41, 0.23, -0.41, 0;
  const double ref[9] = {0, 3.4326917077786102e-02, -2.7584628546693774e-01,
                         -3.4326917077786102e-02, 0, 3.9121905009961555e-01,
                         2.7584628546693774e-01, -3.9121905009961555e-01, 0};
  MatN D = dexp_conj(U, W);
  CHECK((D - fill3(ref)).norm() < 1e-12);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(D(i, j) == -D(j, i));

  // exp(-U) d/dt exp(U + tW) at t=0, by central differences.
  const double eps = 1e-5;
  MatN fd = exp_so(MatN(-U)) * (exp_so(MatN(U + eps * W)) - exp_so(MatN(U - eps * W))) /
            (2.0 * eps);
  CHECK((D - fd).norm() < 1e-8);
}

TEST_CASE("dexp_conj_inverse round-trips and handles the abelian case") {
  MatN U = antisym_random(3, 5) * 0.4;
  MatN W = antisym_random(3, 6) * 0.8;
  MatN Z = dexp_conj(U, W);
  MatN W2 = dexp_conj_inverse(U, Z);
  CHECK((W2 - W).norm() < 1e-10);

  // so(2) is abelian: D(U) is the identity map.
  MatN U2(2, 2), Z2(2, 2);
  U2 << 0, 0.9, -0.9, 0;
  Z2 << 0, -0.37, 0.37, 0;
  CHECK((dexp_conj(U2, Z2) - Z2).norm() == 0.0);
  CHECK((dexp_conj_inverse(U2, Z2) - Z2).norm() == 0.0);

  MatN big = antisym_random(3, 8) * 5.0;
  CHECK_THROWS_AS(dexp_conj_inverse(big, Z), SolverError);
}

TEST_CASE("project_orthogonal matches the reference factor and is minimal") {
  MatN M(3, 3);
  M << 1.0, 0.2, -0.1, 0.05, 0.9, 0.3, -0.2, 0.1, 1.1;
  const double ref[9] = {9.9709178887121919e-01,  6.5752702791942730e-02, 3.8529814963826937e-02,
                         -6.9023083373179347e-02, 9.9347366934397441e-01, 9.0806840501576419e-02,
                         -3.2307561456281809e-02, -9.3202201668062076e-02, 9.9512289244945751e-01};
  ProjectionResult pr = project_orthogonal(M);
  CHECK((pr.R - fill3(ref)).norm() < 1e-12);
  CHECK(pr.dist == doctest::Approx(0.4246574569144663).epsilon(1e-12));
  CHECK((pr.R.transpose() * pr.R - MatN::Identity(3, 3)).norm() < 1e-13);
  CHECK((pr.S - pr.R.transpose() * (M - pr.R)).norm() < 1e-13);

  // No sampled rotation comes closer than the polar factor.
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    MatN Q = exp_so(MatN(antisym_random(3, seed) * 2.0));
    CHECK((M - Q).norm() >= pr.dist - 1e-12);
  }
}

TEST_CASE("project_orthogonal on a scaled identity and near-singular input") {
  MatN M = 1.001 * MatN::Identity(3, 3);
  ProjectionResult pr = project_orthogonal(M);
  CHECK((pr.R - MatN::Identity(3, 3)).norm() < 1e-13);
  CHECK(pr.dist == doctest::Approx(0.001 * std::sqrt(3.0)).epsilon(1e-10));

  MatN sing = MatN::Zero(3, 3);
  sing(0, 0) = 1.0;
  sing(1, 1) = 1.0;
  CHECK_THROWS_AS(project_orthogonal(sing), SolverError);
}

TEST_CASE("antisym_random is deterministic, bounded, and seed-sensitive") {
  MatN A = antisym_random(3, 42);
  MatN B = antisym_random(3, 42);
  CHECK((A - B).norm() == 0.0);
  MatN C = antisym_random(3, 43);
  CHECK((A - C).norm() > 0.0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      CHECK(A(i, j) == -A(j, i));
      CHECK(std::abs(A(i, j)) <= 1.0);
    }
}

TEST_SUITE_END();
