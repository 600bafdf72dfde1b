#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ncsos/certify.hpp"
#include "ncsos/rng.hpp"

#include <cmath>

using namespace ncsos;
using namespace ncsos::certify;

namespace {

MatPoly scalar(const std::string& text, int g) { return parsePoly(text, g); }

MonicPencil ballPencil() {
  Eigen::MatrixXd A(2, 2);
  A << 0, 1, 1, 0;
  return MonicPencil({A});
}

QuadModuleSpec sosSpec(int alpha, int nu, int g) {
  QuadModuleSpec spec;
  spec.alpha = alpha;
  spec.beta = 0;
  spec.nu = nu;
  spec.nvars = g;
  return spec;
}

MatPoly randomPolyOfDegree(Rng& rng, int rows, int cols, int g, int deg) {
  MatPoly p(rows, cols, g);
  for (const Word& w : enumerateBasis(g, deg)) {
    Eigen::MatrixXd B(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) B(r, c) = rng.uniform(-1, 1);
    }
    p.addTerm(w, B);
  }
  return p;
}

// A random monic pencil of the given size; not necessarily bounded.
MonicPencil randomPencil(Rng& rng, int g, int ell) {
  std::vector<Eigen::MatrixXd> A;
  for (int j = 0; j < g; ++j) A.push_back(0.7 * rng.gaussianSymmetric(ell));
  return MonicPencil(std::move(A));
}

}  // namespace

TEST_CASE("1 + x^2 is a sum of squares") {
  MatPoly p = scalar("1 + x1*x1", 1);
  MembershipSdp ms = assembleMembershipSdp(p, sosSpec(1, 1, 1));
  sdp::SdpSolution sol = sdp::solve(ms.problem);
  REQUIRE(sol.status == sdp::SdpStatus::Optimal);
  Certificate cert = extractCertificate(sol, ms);
  CHECK(verifyCertificate(p, ms.spec, cert) <= 1e-7);
}

TEST_CASE("an odd polynomial is never a sum of squares") {
  MembershipSdp ms = assembleMembershipSdp(scalar("x1", 1), sosSpec(1, 1, 1));
  sdp::SdpSolution sol = sdp::solve(ms.problem);
  CHECK(sol.status == sdp::SdpStatus::Infeasible);
}

TEST_CASE("2 - x^2 lies in the degree-(1,1) module of the ball pencil") {
  MatPoly p = scalar("2 - x1*x1", 1);
  QuadModuleSpec spec;
  spec.constraints = {ballPencil().toPoly()};
  spec.alpha = spec.beta = 1;
  spec.nu = 1;
  spec.nvars = 1;
  MembershipSdp ms = assembleMembershipSdp(p, spec);
  sdp::SdpOptions tight;
  tight.feasTol = tight.gapTol = 1e-9;
  sdp::SdpSolution sol = sdp::solve(ms.problem, tight);
  REQUIRE(sol.status == sdp::SdpStatus::Optimal);
  Certificate cert = extractCertificate(sol, ms);
  CHECK(verifyCertificate(p, spec, cert) <= 1e-8);
}

TEST_CASE("hand-built Gram blocks unflatten to the expected factors") {
  MatPoly p = scalar("2 - x1*x1", 1);
  QuadModuleSpec spec;
  spec.constraints = {ballPencil().toPoly()};
  spec.alpha = spec.beta = 1;
  spec.nu = 1;
  spec.nvars = 1;
  MembershipSdp ms = assembleMembershipSdp(p, spec);

  sdp::SdpSolution sol;
  sol.status = sdp::SdpStatus::Optimal;
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(2, 2);
  G(0, 0) = 1.0;  // the constant factor 1
  // The factor [1; x] over basis {1, x} and rows {0, 1}; the test pencil is
  // I - Ax with A = [[0,1],[1,0]], so Q = [[1,-x],[-x,1]].
  Eigen::VectorXd h(4);
  h << 1, 0, 0, 1;
  sol.Z = {G, (h * h.transpose()).eval()};
  Certificate cert = extractCertificate(sol, ms);
  REQUIRE(cert.sos.size() == 1);
  REQUIRE(cert.weighted[0].size() == 1);
  CHECK(verifyCertificate(p, spec, cert) <= 1e-12);
  CHECK(cert.weighted[0][0].degree() == 1);
}

TEST_CASE("identity Gram factors into the monomial basis") {
  MatPoly p = scalar("1 + x1*x1", 1);
  MembershipSdp ms = assembleMembershipSdp(p, sosSpec(1, 1, 1));
  sdp::SdpSolution sol;
  sol.status = sdp::SdpStatus::Optimal;
  sol.Z = {Eigen::MatrixXd::Identity(2, 2)};
  Certificate cert = extractCertificate(sol, ms);
  REQUIRE(cert.sos.size() == 2);
  CHECK(verifyCertificate(p, ms.spec, cert) <= 1e-12);
}

TEST_CASE("zero Gram blocks give the empty certificate") {
  MatPoly p(1, 1, 1);
  MembershipSdp ms = assembleMembershipSdp(p, sosSpec(1, 1, 1));
  sdp::SdpSolution sol;
  sol.status = sdp::SdpStatus::Optimal;
  sol.Z = {Eigen::MatrixXd::Zero(2, 2)};
  Certificate cert = extractCertificate(sol, ms);
  CHECK(cert.sos.empty());
  CHECK(verifyCertificate(p, ms.spec, cert) == 0.0);
}

TEST_CASE("the empty-domain identity verifies to machine precision") {
  // q = [[x,1],[1,0]], u = [1; -1-x/2]: -1 = (u/sqrt 2)* q (u/sqrt 2).
  MatPoly q = parsePoly(R"([["x1", "1"], ["1", "0"]])", 1);
  MatPoly u(2, 1, 1);
  u.addTerm(Word::empty(), (Eigen::MatrixXd(2, 1) << 1, -1).finished());
  u.addTerm(Word::letter(1), (Eigen::MatrixXd(2, 1) << 0, -0.5).finished());
  Certificate cert(1, 1, 1);
  cert.weighted[0].push_back(u * (1.0 / std::sqrt(2.0)));

  QuadModuleSpec spec;
  spec.constraints = {q};
  spec.alpha = 0;
  spec.beta = 1;
  spec.nu = 1;
  spec.nvars = 1;
  MatPoly minusOne = scalar("0 - 1", 1);
  CHECK(verifyCertificate(minusOne, spec, cert) <= 1e-12);
}

TEST_CASE("corrupting a coefficient shows up linearly in the residual") {
  MatPoly p = scalar("1 + x1*x1", 1);
  Certificate cert(1, 1, 0);
  cert.sos.push_back(scalar("1", 1));
  cert.sos.push_back(scalar("x1", 1));
  QuadModuleSpec spec = sosSpec(1, 1, 1);
  CHECK(verifyCertificate(p, spec, cert) <= 1e-15);
  MatPoly corrupted = p + scalar("0.001", 1);
  const double r = verifyCertificate(corrupted, spec, cert);
  CHECK(r >= 9e-4);
  CHECK(r <= 1.1e-3);
}

TEST_CASE("certify_nonneg over a concave domain: 2 - x^2 on 1 - x^2") {
  CertifyResult res =
      certifyNonneg(scalar("2 - x1*x1", 1), scalar("1 - x1*x1", 1));
  REQUIRE(res.status == CertifyStatus::Certificate);
  CHECK(res.modeUsed == DomainMode::Concave);
  CHECK(res.certificateResidual <= 1e-7);
  CHECK(res.certificate->maxSosDegree() <= res.d + 1);
}

TEST_CASE("certify_nonneg refutes p = x on the ball") {
  CertifyResult res = certifyNonneg(scalar("x1", 1), ballPencil().toPoly());
  REQUIRE(res.status == CertifyStatus::Witness);
  CHECK(res.witnessValue <= -0.9);
  CHECK(res.witnessDomainMinEig >= -1e-8);
  CHECK(res.witnessMomentResidual <= 1e-6);
}

TEST_CASE("the pencil certifies itself") {
  MonicPencil L = ballPencil();
  CertifyResult res = certifyNonneg(L.toPoly(), L.toPoly());
  REQUIRE(res.status == CertifyStatus::Certificate);
  CHECK(res.certificateResidual <= 1e-7);
}

TEST_CASE("non-monic domains are rejected with the monicity error") {
  MatPoly p = scalar("x1", 1);
  CHECK_THROWS_AS(certifyNonneg(p, parsePoly(R"([["x1","1"],["1","0"]])", 1)),
                  NotMonicError);
  CHECK_THROWS_AS(certifyNonneg(p, parsePoly(R"([["1","x1"],["x1","0"]])", 1)),
                  NotMonicError);
}

TEST_CASE("x is outside every small module of q = [[1,x],[x,0]]") {
  MatPoly q = parsePoly(R"([["1","x1"],["x1","0"]])", 1);
  MatPoly p = scalar("x1", 1);
  for (int ab = 0; ab <= 2; ++ab) {
    QuadModuleSpec spec;
    spec.constraints = {q};
    spec.alpha = spec.beta = ab;
    spec.nu = 1;
    spec.nvars = 1;
    MembershipSdp ms = assembleMembershipSdp(p, spec);
    sdp::SdpSolution sol = sdp::solve(ms.problem);
    CHECK(sol.status == sdp::SdpStatus::Infeasible);
  }
}

TEST_CASE("membership soundness on random module elements") {
  Rng rng(2024);
  for (int trial = 0; trial < 10; ++trial) {
    const int g = rng.uniformInt(1, 2);
    const int ell = rng.uniformInt(1, 3);
    const int nu = rng.uniformInt(1, 2);
    const int d = rng.uniformInt(0, 1);
    MonicPencil L = randomPencil(rng, g, ell);
    MatPoly s = randomPolyOfDegree(rng, 1, nu, g, d);
    MatPoly f = randomPolyOfDegree(rng, ell, nu, g, d);
    MatPoly p = s.adjoint() * s + f.adjoint() * L.toPoly() * f;

    QuadModuleSpec spec;
    spec.constraints = {L.toPoly()};
    spec.alpha = spec.beta = d;
    spec.nu = nu;
    spec.nvars = g;
    MembershipSdp ms = assembleMembershipSdp(p, spec);
    sdp::SdpSolution sol = sdp::solve(ms.problem);
    REQUIRE(sol.status == sdp::SdpStatus::Optimal);
    Certificate cert = extractCertificate(sol, ms);
    CHECK(verifyCertificate(p, spec, cert) <= 1e-6);
  }
}

TEST_CASE("feasibility at (d,d) and (d+1,d) agree for pencils") {
  Rng rng(515);
  for (int trial = 0; trial < 8; ++trial) {
    const int g = rng.uniformInt(1, 2);
    MonicPencil L = randomPencil(rng, g, 2);
    const int d = 1;
    MatPoly p = [&]() {
      if (trial % 2 == 0) {
        MatPoly f = randomPolyOfDegree(rng, 2, 1, g, d);
        return f.adjoint() * L.toPoly() * f;
      }
      return scalar("x1", g);  // odd, not in any module of a generic pencil
    }();
    auto feasibleAt = [&](int alpha, int beta) {
      QuadModuleSpec spec;
      spec.constraints = {L.toPoly()};
      spec.alpha = alpha;
      spec.beta = beta;
      spec.nu = 1;
      spec.nvars = g;
      sdp::SdpSolution sol =
          sdp::solve(assembleMembershipSdp(p, spec).problem);
      REQUIRE(sol.status != sdp::SdpStatus::Indeterminate);
      return sol.status == sdp::SdpStatus::Optimal;
    };
    CHECK(feasibleAt(d, d) == feasibleAt(d + 1, d));
  }
}

TEST_CASE("dichotomy on small seeded matrix instances") {
  Rng rng(99);
  for (int trial = 0; trial < 6; ++trial) {
    const MonicPencil L = ballPencil();
    MatPoly half = randomPolyOfDegree(rng, 2, 2, 1, 1);
    MatPoly p = half + half.adjoint();
    if (trial % 2 == 0) {
      p = p + MatPoly::identity(2, 1) * rng.uniform(1.5, 4.0);
    }
    CertifyResult res = certifyNonneg(p, L.toPoly());
    REQUIRE(res.status != CertifyStatus::Indeterminate);
    if (res.status == CertifyStatus::Certificate) {
      CHECK(res.certificateResidual <= 1e-6);
    } else {
      CHECK(res.witnessValue <= -1e-7);
      CHECK(res.witnessDomainMinEig >= -1e-8);
      CHECK(res.witnessMomentResidual <= 1e-6);
    }
  }
}

TEST_CASE("certify_general: constant weights reach 2 - x^2") {
  GeneralResult res = certifyGeneral(scalar("2 - x1*x1", 1),
                                     {scalar("1 - x1*x1", 1)}, 1, 0);
  REQUIRE(res.status == GeneralStatus::InModule);
  CHECK(res.residual <= 1e-7);
}

TEST_CASE("certify_general: the sos cone contains no negative constants") {
  GeneralResult res = certifyGeneral(scalar("0 - 1", 1), {}, 1, 0);
  CHECK(res.status == GeneralStatus::NotInModule);
}

TEST_CASE("certify_general: quartic constraint with unit weight") {
  GeneralResult res = certifyGeneral(
      scalar("1 - x1*x1*x1*x1", 1), {scalar("1 - x1*x1*x1*x1", 1)}, 2, 0);
  REQUIRE(res.status == GeneralStatus::InModule);
  CHECK(res.residual <= 1e-6);
}

TEST_CASE("projected localizing check at beta = 0 is the scalar test") {
  // g = 1, s = x, X = 2, zeta = 1: 1 - 4 < 0.
  MatTuple X({Eigen::MatrixXd::Constant(1, 1, 2.0)});
  Eigen::VectorXd zeta(1);
  zeta << 1.0;
  CHECK_FALSE(projectedLocalizingCheck(X, zeta, 0, {scalar("x1", 1)}));
  MatTuple Xin({Eigen::MatrixXd::Constant(1, 1, 0.5)});
  CHECK(projectedLocalizingCheck(Xin, zeta, 0, {scalar("x1", 1)}));
}

TEST_CASE("projected localizing check at the zero tuple") {
  MatTuple X = MatTuple::zero(1, 3);
  Eigen::VectorXd zeta(3);
  zeta << 1, 2, -1;
  CHECK(projectedLocalizingCheck(X, zeta, 1, {scalar("x1", 1)}));
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
  CHECK_THROWS(projectedLocalizingCheck(X, zero, 0, {scalar("x1", 1)}));
}

TEST_CASE("projected localizing check against a direct computation") {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    MatTuple X({0.6 * rng.gaussianSymmetric(3)});
    Eigen::VectorXd zeta = rng.gaussianVector(3);
    MatPoly s = scalar("x1", 1);
    MatPoly m = scalar("1", 1) - s.adjoint() * s;
    const double direct =
        zeta.dot(m.evaluate(X) * zeta) / zeta.squaredNorm();
    const bool viaCheck = projectedLocalizingCheck(X, zeta, 0, {s});
    CHECK(viaCheck == (direct >= -1e-9));
  }
}

TEST_CASE("random evaluation agrees with the calculus bound") {
  RandomEvalReport rep = randomEvalCheck(scalar("2 - x1*x1", 1),
                                         scalar("1 - x1*x1", 1), 100, 5);
  CHECK(rep.accepted >= 90);
  CHECK(rep.minEig >= 1.0 - 1e-6);
  CHECK_FALSE(rep.falsified);
}

TEST_CASE("random evaluation falsifies p = x on the interval") {
  RandomEvalReport rep =
      randomEvalCheck(scalar("x1", 1), scalar("1 - x1*x1", 1), 60, 6);
  CHECK(rep.falsified);
  REQUIRE(rep.worst.has_value());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      scalar("x1", 1).evaluate(*rep.worst), Eigen::EigenvaluesOnly);
  CHECK(es.eigenvalues().minCoeff() == doctest::Approx(rep.minEig));
}

TEST_CASE("zero trials is a no-op report") {
  RandomEvalReport rep =
      randomEvalCheck(scalar("x1", 1), scalar("1 - x1*x1", 1), 0, 1);
  CHECK(rep.requested == 0);
  CHECK(rep.accepted == 0);
  CHECK_FALSE(rep.falsified);
}
