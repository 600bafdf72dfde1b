#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ncsos/moment.hpp"
#include "ncsos/rng.hpp"

#include <cmath>

using namespace ncsos;
using namespace ncsos::moment;

namespace {

MatPoly scalar(const std::string& text, int g) { return parsePoly(text, g); }

MonicPencil ballPencil() {
  Eigen::MatrixXd A(2, 2);
  A << 0, 1, 1, 0;
  return MonicPencil({A});
}

// lambda(x^m) = 2^{-m}: the trace functional of the atom X = 1/2, gamma = 1.
MomentFunctional geometricFunctional(int bound) {
  MomentFunctional lam(1, 1, bound);
  for (const Word& w : enumerateBasis(1, bound)) {
    lam.setValue(w, 0, 0, std::pow(0.5, w.degree()));
  }
  return lam;
}

double minEig(const Eigen::MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M,
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

TEST_CASE("geometric moments give the rank-one Hankel matrix") {
  MomentFunctional lam = geometricFunctional(4);
  Eigen::MatrixXd M = momentMatrix(lam, 1);
  Eigen::MatrixXd expect(2, 2);
  expect << 1.0, 0.5, 0.5, 0.25;
  CHECK((M - expect).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(minEig(M) >= -1e-15);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  lu.setThreshold(1e-10);
  CHECK(lu.rank() == 1);
}

TEST_CASE("the zero functional yields zero matrices") {
  MomentFunctional lam(2, 2, 4);
  CHECK(momentMatrix(lam, 1).cwiseAbs().maxCoeff() == 0.0);
  CHECK(localizingMatrix(lam, scalar("1 - x1", 2), 1).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("localizing matrix of 1 - x at the atom 1/2") {
  MomentFunctional lam = geometricFunctional(2);
  Eigen::MatrixXd loc = localizingMatrix(lam, scalar("1 - x1", 1), 0);
  REQUIRE(loc.rows() == 1);
  CHECK(loc(0, 0) == doctest::Approx(0.5));
  CHECK(minEig(loc) >= 0.0);
}

TEST_CASE("functional from the zero witness is the delta at the empty word") {
  MatTuple X = MatTuple::zero(1, 1);
  Eigen::VectorXd gamma(1);
  gamma << 1.0;
  MomentFunctional lam = functionalFromWitness(X, gamma, 1, 1);
  CHECK(lam.value(Word::empty(), 0, 0) == doctest::Approx(1.0));
  CHECK(lam.value(Word::letter(1), 0, 0) == 0.0);
  CHECK(lam.value(Word({std::vector<int>{1, 1}}), 0, 0) == 0.0);
}

TEST_CASE("functional from the atom 1/2 reproduces geometric moments") {
  MatTuple X({Eigen::MatrixXd::Constant(1, 1, 0.5)});
  Eigen::VectorXd gamma(1);
  gamma << 1.0;
  MomentFunctional lam = functionalFromWitness(X, gamma, 1, 1);
  for (const Word& w : enumerateBasis(1, 4)) {
    CHECK(lam.value(w, 0, 0) ==
          doctest::Approx(std::pow(0.5, w.degree())).epsilon(1e-12));
  }
}

TEST_CASE("witness functionals have PSD moment matrices") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int g = rng.uniformInt(1, 2);
    const int n = rng.uniformInt(1, 3);
    const int nu = rng.uniformInt(1, 2);
    std::vector<Eigen::MatrixXd> Xs;
    for (int j = 0; j < g; ++j) Xs.push_back(rng.gaussianSymmetric(n));
    // Desk scale: points inside the unit ball.
    double norm2 = 0;
    for (const auto& Xj : Xs) norm2 += Xj.squaredNorm();
    for (auto& Xj : Xs) Xj /= std::sqrt(std::max(norm2, 1.0));
    MatTuple X(std::move(Xs));
    Eigen::VectorXd gamma = rng.gaussianVector(n * nu);
    MomentFunctional lam = functionalFromWitness(X, gamma, nu, 1);
    CHECK(minEig(momentMatrix(lam, 2)) >= -1e-10);
    CHECK(lam.maxSymmetryViolation() <= 1e-12);
  }
}

TEST_CASE("reference functional has a PD degree-k block") {
  MomentFunctional ref = referenceFunctional(ballPencil(), 1, 1, 8, 11);
  CHECK(minEig(momentMatrix(ref, 1)) >= 1e-10);
  // lambda-hat(1) = sum 2^{-i} * n with n = k + 1 = 2.
  CHECK(ref.value(Word::empty(), 0, 0) ==
        doctest::Approx(2.0 * (1.0 - std::pow(0.5, 8))).epsilon(1e-12));
}

TEST_CASE("reference functional is nonnegative on the quadratic module") {
  MonicPencil L = ballPencil();
  MomentFunctional ref = referenceFunctional(L, 1, 1, 10, 23);
  Rng rng(29);
  auto basis = enumerateBasis(1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    // Random p = s* s + f* L f with deg s <= 2, deg f <= 1.
    MatPoly s(1, 1, 1);
    for (const Word& w : enumerateBasis(1, 2)) {
      s.addTerm(w, Eigen::MatrixXd::Constant(1, 1, rng.gaussian()));
    }
    MatPoly f(2, 1, 1);
    for (const Word& w : basis) {
      Eigen::MatrixXd c(2, 1);
      c << rng.gaussian(), rng.gaussian();
      f.addTerm(w, c);
    }
    MatPoly p = s.adjoint() * s + f.adjoint() * L.toPoly() * f;
    CHECK(ref.apply(p) >= -1e-10);
  }
}

TEST_CASE("refutation SDP optimum for p = x on the ball is -1") {
  RefutationSdp rsdp =
      assembleRefutationSdp(scalar("x1", 1), ballPencil(), 0, 10.0);
  sdp::SdpSolution sol = sdp::solve(rsdp.problem);
  REQUIRE(sol.status == sdp::SdpStatus::Optimal);
  CHECK(sol.primalObjective == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("refutation SDP optimum for p = 1 is the normalization") {
  RefutationSdp rsdp =
      assembleRefutationSdp(scalar("1", 1), ballPencil(), 0, 10.0);
  sdp::SdpSolution sol = sdp::solve(rsdp.problem);
  REQUIRE(sol.status == sdp::SdpStatus::Optimal);
  CHECK(sol.primalObjective == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("refutation SDP cannot push 2 - x^2 below 1 on the ball") {
  RefutationSdp rsdp = assembleRefutationSdp(scalar("2 - x1*x1", 1),
                                             ballPencil(), 1, 100.0);
  sdp::SdpSolution sol = sdp::solve(rsdp.problem);
  REQUIRE(sol.status == sdp::SdpStatus::Optimal);
  CHECK(sol.primalObjective >= 1.0 - 1e-6);
}

TEST_CASE("mixing with an explicit weight of zero changes nothing") {
  MomentFunctional lam = geometricFunctional(4);
  MomentFunctional ref = referenceFunctional(ballPencil(), 1, 1, 8, 3);
  MixResult r = mix(lam, ref, 0.0, 1);
  REQUIRE(r.ok);
  for (const Word& w : enumerateBasis(1, 4)) {
    CHECK(r.mixed->value(w, 0, 0) == lam.value(w, 0, 0));
  }
}

TEST_CASE("automatic mixing regularizes a rank-deficient functional") {
  // Moments of the zero witness: M_1 is singular.
  MatTuple X = MatTuple::zero(1, 1);
  Eigen::VectorXd gamma(1);
  gamma << 1.0;
  MomentFunctional lam = functionalFromWitness(X, gamma, 1, 1);
  REQUIRE(minEig(momentMatrix(lam, 1)) <= 1e-12);
  MomentFunctional ref = referenceFunctional(ballPencil(), 1, 1, 8, 7);
  MixResult r = mix(lam, ref, std::nullopt, 1);
  REQUIRE(r.ok);
  CHECK(r.blockMinEig >= 1e-9);
  CHECK(r.mu <= 1e-2);  // small decades suffice
}

TEST_CASE("GNS extraction needs a PD block") {
  MomentFunctional lam = geometricFunctional(4);
  CHECK_THROWS_AS(gnsExtract(lam, 1), SingularMomentError);
}

TEST_CASE("GNS extraction after mixing recovers the atom at 1/2") {
  MomentFunctional lam = geometricFunctional(4);
  MomentFunctional ref = referenceFunctional(ballPencil(), 1, 1, 12, 13);
  MixResult r = mix(lam, ref, std::nullopt, 1);
  REQUIRE(r.ok);
  Witness w = gnsExtract(*r.mixed, 1);
  CHECK(w.X.level() == 2);  // nu * sigma(1) with nu = 1, g = 1
  const double xval = w.pairing(scalar("x1", 1));
  CHECK(std::abs(xval - 0.5) <= 1e-6);
  WitnessCheck wc = verifyWitness(*r.mixed, w, 1);
  CHECK(wc.residualLow <= 1e-8);
}

TEST_CASE("GNS of the delta functional sits near zero") {
  MatTuple X = MatTuple::zero(1, 1);
  Eigen::VectorXd gamma(1);
  gamma << 1.0;
  MomentFunctional lam = functionalFromWitness(X, gamma, 1, 1);
  MomentFunctional ref = referenceFunctional(ballPencil(), 1, 1, 8, 17);
  MixResult r = mix(lam, ref, std::nullopt, 1);
  REQUIRE(r.ok);
  Witness w = gnsExtract(*r.mixed, 1);
  CHECK(std::abs(w.pairing(scalar("x1", 1))) <= 1e-2);
  CHECK(w.gamma.squaredNorm() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("witness round trip: functional -> GNS -> functional") {
  Rng rng(41);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<Eigen::MatrixXd> Xs{rng.gaussianSymmetric(2)};
    MatTuple X(std::move(Xs));
    Eigen::MatrixXd G = rng.gaussianSymmetric(2);
    // Two vectors worth of mass makes M_1 generically PD at level 2.
    Eigen::VectorXd g1 = rng.gaussianVector(2);
    MomentFunctional lam = functionalFromWitness(X, g1, 1, 1);
    Eigen::VectorXd g2 = rng.gaussianVector(2);
    lam = lam.scaledAdd(1.0, functionalFromWitness(X, g2, 1, 1));
    if (minEig(momentMatrix(lam, 1)) < 1e-8) continue;
    Witness w = gnsExtract(lam, 1);
    WitnessCheck wc = verifyWitness(lam, w, 1);
    CHECK(wc.residualLow <= 1e-8);
  }
}

TEST_CASE("exact flat functionals agree at all degrees") {
  MatTuple X({Eigen::MatrixXd::Constant(1, 1, 0.5)});
  Eigen::VectorXd gamma(1);
  gamma << 1.0;
  MomentFunctional lam = functionalFromWitness(X, gamma, 1, 1);
  // M_1 here is singular (rank one), so extract at k = 0 instead: flat case.
  Witness w = gnsExtract(lam, 0);
  WitnessCheck wc = verifyWitness(lam, w, 0);
  CHECK(wc.residualLow <= 1e-9);
  CHECK(wc.residualTop <= 1e-9);
}

TEST_CASE("flatness of the geometric functional at k = 0") {
  MomentFunctional lam = geometricFunctional(2);
  FlatnessReport rep = flatnessCheck(lam, 0);
  CHECK(rep.flat);
  CHECK(rep.rankK == 1);
  CHECK(rep.rankK1 == 1);
}

TEST_CASE("sampled reference functionals are not flat") {
  MomentFunctional ref = referenceFunctional(ballPencil(), 1, 0, 16, 19);
  FlatnessReport rep = flatnessCheck(ref, 0);
  CHECK(rep.rankK == 1);
  CHECK(rep.rankK1 == 2);
  CHECK_FALSE(rep.flat);
}

TEST_CASE("delta functional padded with zeros is flat") {
  MomentFunctional lam(1, 1, 2);
  lam.setValue(Word::empty(), 0, 0, 1.0);
  FlatnessReport rep = flatnessCheck(lam, 0);
  CHECK(rep.flat);
  CHECK(rep.rankK == 1);
  CHECK(rep.rankK1 == 1);
}

TEST_CASE("refute finds a verified witness for p = x on the ball") {
  RefuteResult r = refute(scalar("x1", 1), ballPencil(), 0);
  REQUIRE(r.status == RefuteStatus::Witness);
  CHECK(r.witness->value <= -0.9);
  CHECK(r.domainMinEig >= -1e-8);
  CHECK(r.momentResidual <= 1e-6);
  CHECK(r.witness->X.level() == 1);  // nu * sigma(0)
}

TEST_CASE("refute declines p = 2 - x^2 on the ball") {
  RefuteResult r = refute(scalar("2 - x1*x1", 1), ballPencil(), 1);
  CHECK(r.status == RefuteStatus::NoRefutation);
  CHECK(r.optimum >= 1.0 - 1e-6);
}

TEST_CASE("refute declines the pencil itself") {
  MonicPencil L = ballPencil();
  RefuteResult r = refute(L.toPoly(), L, 0);
  CHECK(r.status == RefuteStatus::NoRefutation);
}
