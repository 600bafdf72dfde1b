#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ncsos/pencil.hpp"
#include "ncsos/rng.hpp"

using namespace ncsos;

namespace {

MatPoly scalar(const std::string& text, int g) { return parsePoly(text, g); }

MatTuple randomSymTuple(Rng& rng, int g, int n, double scale = 1.0) {
  std::vector<Eigen::MatrixXd> Xs;
  for (int j = 0; j < g; ++j) Xs.push_back(scale * rng.gaussianSymmetric(n));
  return MatTuple(std::move(Xs));
}

double minEig(const Eigen::MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M,
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

MonicPencil ballPencil() {
  Eigen::MatrixXd A(2, 2);
  A << 0, 1, 1, 0;
  return MonicPencil({A});
}

// A random pencil with a bounded domain: the g-variable arrowhead ball
// composed with a well-conditioned change of variables and an orthogonal
// conjugation.
MonicPencil randomBoundedPencil(Rng& rng, int g) {
  const int ell = g + 1;
  std::vector<Eigen::MatrixXd> ball;
  for (int j = 1; j <= g; ++j) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(ell, ell);
    A(0, j) = A(j, 0) = 1.0;
    ball.push_back(A);
  }
  Eigen::MatrixXd R(g, g);
  for (int i = 0; i < g; ++i) {
    for (int j = 0; j < g; ++j) R(i, j) = rng.gaussian();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(R);
  Eigen::MatrixXd Q = qr.householderQ();
  R = Q + 0.3 * Eigen::MatrixXd::Identity(g, g);  // invertible, moderate cond
  Eigen::HouseholderQR<Eigen::MatrixXd> qr2(rng.gaussianSymmetric(ell));
  Eigen::MatrixXd U = qr2.householderQ();
  std::vector<Eigen::MatrixXd> A;
  for (int j = 0; j < g; ++j) {
    Eigen::MatrixXd Aj = Eigen::MatrixXd::Zero(ell, ell);
    for (int k = 0; k < g; ++k) Aj += R(j, k) * ball[k];
    A.push_back(U * Aj * U.transpose());
  }
  return MonicPencil(std::move(A));
}

}  // namespace

TEST_CASE("pencil round-trips through its polynomial") {
  MonicPencil L = ballPencil();
  MatPoly q = L.toPoly();
  CHECK(q.degree() == 1);
  CHECK(q.isSymmetric());
  MonicPencil back = MonicPencil::fromPoly(q);
  CHECK((back.coeff(0) - L.coeff(0)).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS(MonicPencil::fromPoly(scalar("2 - x1", 1)));  // not monic
  CHECK_THROWS(MonicPencil::fromPoly(scalar("1 - x1*x1", 1)));  // degree 2
}

TEST_CASE("concave decomposition of 1 - x^2") {
  ConcaveDecomposition dec = concaveDecompose(scalar("1 - x1*x1", 1));
  CHECK(dec.lambda.isZero());
  REQUIRE(dec.ellPrime() == 1);
  // s = +-x; s*s = x^2 either way.
  MatPoly ss = dec.s.adjoint() * dec.s;
  CHECK((ss - scalar("x1*x1", 1)).maxAbsCoeff() <= 1e-12);
}

TEST_CASE("convex squares are rejected") {
  CHECK_THROWS_AS(concaveDecompose(scalar("1 + x1*x1", 1)), NotConcaveError);
  CHECK_THROWS_AS(concaveDecompose(scalar("1 - x1*x1*x1", 1)),
                  NotConcaveError);
}

TEST_CASE("purely linear q decomposes with empty s") {
  ConcaveDecomposition dec = concaveDecompose(scalar("1 - x1", 1));
  CHECK(dec.ellPrime() == 0);
  CHECK((dec.lambda - scalar("x1", 1)).maxAbsCoeff() <= 1e-14);
  MonicPencil Q = linearize(dec);
  CHECK(Q.size() == 1);
  CHECK(Q.coeff(0)(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("decomposition reconstructs q on random concave inputs") {
  Rng rng(21);
  for (int trial = 0; trial < 12; ++trial) {
    const int g = rng.uniformInt(1, 2);
    const int ell = rng.uniformInt(1, 2);
    const int lp = rng.uniformInt(0, 2);
    MatPoly lambda(ell, ell, g);
    MatPoly s(lp, ell, g);
    for (int j = 1; j <= g; ++j) {
      Eigen::MatrixXd Aj = rng.gaussianSymmetric(ell);
      lambda.addTerm(Word::letter(j), Aj);
      if (lp > 0) {
        Eigen::MatrixXd Cj(lp, ell);
        for (int r = 0; r < lp; ++r) {
          for (int c = 0; c < ell; ++c) Cj(r, c) = rng.gaussian();
        }
        s.addTerm(Word::letter(j), Cj);
      }
    }
    MatPoly q = MatPoly::identity(ell, g) - lambda - s.adjoint() * s;
    ConcaveDecomposition dec = concaveDecompose(q);
    MatPoly back = MatPoly::identity(ell, g) - dec.lambda -
                   dec.s.adjoint() * dec.s;
    CHECK((back - q).maxAbsCoeff() <= 1e-8);
  }
}

TEST_CASE("linearize(1 - x^2) is the 2x2 ball pencil up to sign") {
  MonicPencil Q = linearize(scalar("1 - x1*x1", 1));
  REQUIRE(Q.size() == 2);
  Eigen::MatrixXd A = Q.coeff(0);
  CHECK(A(0, 0) == doctest::Approx(0.0));
  CHECK(A(1, 1) == doctest::Approx(0.0));
  CHECK(std::abs(A(0, 1)) == doctest::Approx(1.0));
}

TEST_CASE("linearization preserves the domain on sampled points") {
  Rng rng(31);
  MatPoly q = scalar("1 - x1*x1 - 0.5*x1", 1);
  ConcaveDecomposition dec = concaveDecompose(q);
  MonicPencil Q = linearize(dec);
  int compared = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 3;
    MatTuple X = randomSymTuple(rng, 1, n, 0.8);
    const double mq = minEig(q.evaluate(X));
    const double mQ = minEig(Q.evaluate(X));
    if (std::abs(mq) < 1e-6 || std::abs(mQ) < 1e-6) continue;
    ++compared;
    CHECK((mq > 0) == (mQ > 0));
  }
  CHECK(compared >= 25);
}

TEST_CASE("pullback reproduces 2 - x^2 from the linearized certificate") {
  MatPoly q = scalar("1 - x1*x1", 1);
  ConcaveDecomposition dec = concaveDecompose(q);
  // Certificate against Q: p = 1*1 + F* Q F with F = [1; -x].
  Certificate certQ(1, 1, 1);
  certQ.sos.push_back(scalar("1", 1));
  // Match the sign of the extracted s so f + s g lines up.
  const double sgn = dec.s.coeff(Word::letter(1))(0, 0);
  MatPoly F(2, 1, 1);
  F.addTerm(Word::empty(), (Eigen::MatrixXd(2, 1) << 1, 0).finished());
  F.addTerm(Word::letter(1), (Eigen::MatrixXd(2, 1) << 0, -sgn).finished());
  certQ.weighted[0].push_back(F);
  MonicPencil Q = linearize(dec);
  MatPoly p = certQ.reconstruct({Q.toPoly()});
  REQUIRE((p - scalar("2 - x1*x1", 1)).maxAbsCoeff() <= 1e-12);

  Certificate cert = pullbackCertificate(certQ, dec);
  MatPoly back = cert.reconstruct({q});
  CHECK((back - p).maxAbsCoeff() <= 1e-9);
  CHECK(cert.weighted[0].size() == 1);
  // The lifted sos factor has degree <= deg(g) + 1.
  CHECK(cert.maxSosDegree() <= 2);
}

TEST_CASE("pullback of the zero certificate is the zero certificate") {
  ConcaveDecomposition dec = concaveDecompose(scalar("1 - x1*x1", 1));
  Certificate zero(1, 1, 1);
  Certificate out = pullbackCertificate(zero, dec);
  CHECK(out.sos.empty());
  CHECK(out.weighted[0].empty());
  CHECK(out.reconstruct({scalar("1 - x1*x1", 1)}).isZero());
}

TEST_CASE("ball pencil is bounded, half-line and rank-deficient are not") {
  CHECK(isBounded(ballPencil()).bounded);

  MonicPencil half({Eigen::MatrixXd::Ones(1, 1)});
  BoundednessResult r = isBounded(half);
  CHECK(r.determinate);
  CHECK_FALSE(r.bounded);
  CHECK(r.maxRecession >= 0.9);

  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(2, 2);
  D(0, 0) = 1.0;
  CHECK_FALSE(isBounded(MonicPencil({D})).bounded);
}

TEST_CASE("unit certificate for the ball pencil") {
  UnitCertificate uc = unitCertificate(ballPencil());
  REQUIRE(uc.status == UnitCertStatus::Exists);
  CHECK(uc.residual <= 1e-8);
}

TEST_CASE("unit certificate for an indefinite coefficient") {
  Eigen::MatrixXd A(2, 2);
  A << 1, 0, 0, -1;
  UnitCertificate uc = unitCertificate(MonicPencil({A}));
  REQUIRE(uc.status == UnitCertStatus::Exists);
  CHECK(uc.residual <= 1e-8);
}

TEST_CASE("half-line pencil has no unit certificate; evidence is PD") {
  UnitCertificate uc = unitCertificate(MonicPencil({Eigen::MatrixXd::Ones(1, 1)}));
  REQUIRE(uc.status == UnitCertStatus::NotExists);
  REQUIRE(uc.evidence.size() == 1);
  CHECK(uc.evidence[0] >= 1.0 - 1e-6);
  CHECK(uc.evidenceMinEig >= 1.0 - 1e-6);
}

TEST_CASE("unit certificates at larger target sizes") {
  UnitCertificate uc = unitCertificate(ballPencil(), 3);
  REQUIRE(uc.status == UnitCertStatus::Exists);
  CHECK(uc.residual <= 1e-8);
  for (const auto& W : uc.W) {
    CHECK(W.rows() == 2);
    CHECK(W.cols() == 3);
  }
}

TEST_CASE("bounded pencils always admit unit certificates") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const int g = rng.uniformInt(1, 3);
    MonicPencil L = randomBoundedPencil(rng, g);
    REQUIRE(isBounded(L).bounded);
    UnitCertificate uc = unitCertificate(L);
    REQUIRE(uc.status == UnitCertStatus::Exists);
    CHECK(uc.residual <= 1e-7);
  }
}
