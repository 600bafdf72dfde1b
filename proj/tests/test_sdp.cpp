#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ncsos/rng.hpp"
#include "ncsos/sdp.hpp"

#include <sstream>

using namespace ncsos;
using namespace ncsos::sdp;

namespace {

// Test-only reader for the ".dat-s" text produced by exportSdpa; used to
// check the round trip against the original problem.
SdpProblem parseSdpa(const std::string& text) {
  std::istringstream in(text);
  SdpProblem p;
  int m = 0, nblocks = 0;
  in >> m >> nblocks;
  p.blockDims.resize(nblocks);
  for (int i = 0; i < nblocks; ++i) in >> p.blockDims[i];
  p.constraints.resize(m);
  for (int i = 0; i < m; ++i) in >> p.constraints[i].rhs;
  int matno, blkno, r, c;
  double v;
  while (in >> matno >> blkno >> r >> c >> v) {
    Entry e{blkno - 1, r - 1, c - 1, v};
    if (matno == 0) {
      e.value = -v;
      p.objective.push_back(e);
    } else {
      p.constraints[matno - 1].entries.push_back(e);
    }
  }
  return p;
}

bool sameProblem(const SdpProblem& a, const SdpProblem& b) {
  if (a.blockDims != b.blockDims) return false;
  if (a.numConstraints() != b.numConstraints()) return false;
  auto sameEntries = [](const std::vector<Entry>& x,
                        const std::vector<Entry>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i].block != y[i].block || x[i].row != y[i].row ||
          x[i].col != y[i].col || x[i].value != y[i].value) {
        return false;
      }
    }
    return true;
  };
  for (int i = 0; i < a.numConstraints(); ++i) {
    if (a.constraints[i].rhs != b.constraints[i].rhs) return false;
    if (!sameEntries(a.constraints[i].entries, b.constraints[i].entries)) {
      return false;
    }
  }
  return sameEntries(a.objective, b.objective);
}

}  // namespace

TEST_CASE("minimize x subject to x = 1 on a scalar block") {
  SdpProblem p;
  p.blockDims = {1};
  p.constraints.push_back({{{0, 0, 0, 1.0}}, 1.0});
  p.objective = {{0, 0, 0, 1.0}};
  SdpSolution s = solve(p);
  REQUIRE(s.status == SdpStatus::Optimal);
  CHECK(s.Z[0](0, 0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(s.primalObjective == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("feasibility: tr Z = 1 with Z11 = 0") {
  SdpProblem p;
  p.blockDims = {2};
  p.constraints.push_back(
      {{{0, 0, 0, 1.0}, {0, 1, 1, 1.0}}, 1.0});  // tr Z = 1
  p.constraints.push_back({{{0, 0, 0, 1.0}}, 0.0});  // Z11 = 0
  SdpSolution s = solve(p);
  REQUIRE(s.status == SdpStatus::Optimal);
  ResidualReport rep = checkSolution(p, s);
  CHECK(rep.maxConstraintResidual <= 1e-7);
  CHECK(rep.minEig >= -1e-8);
  CHECK(s.Z[0](1, 1) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("x = -1 on a scalar PSD block is infeasible with a certificate") {
  SdpProblem p;
  p.blockDims = {1};
  p.constraints.push_back({{{0, 0, 0, 1.0}}, -1.0});
  SdpSolution s = solve(p);
  REQUIRE(s.status == SdpStatus::Infeasible);
  REQUIRE(s.farkasY.size() == 1);
  ResidualReport rep = checkSolution(p, s);
  CHECK(std::abs(rep.farkasByMinusOne) <= 1e-7);
  CHECK(rep.farkasMaxEig <= 1e-7);
}

TEST_CASE("unbounded objective is detected with an improving ray") {
  // min -x11 with x22 = 1: x11 free to grow.
  SdpProblem p;
  p.blockDims = {2};
  p.constraints.push_back({{{0, 1, 1, 1.0}}, 1.0});
  p.objective = {{0, 0, 0, -1.0}};
  SdpSolution s = solve(p);
  REQUIRE(s.status == SdpStatus::Unbounded);
  REQUIRE(s.ray.size() == 1);
  // Ray: A(X) ~ 0 and tr(FX) = -1.
  CHECK(std::abs(s.ray[0](1, 1)) <= 1e-6);
  CHECK(s.ray[0](0, 0) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("two-block problem with objective") {
  // Z = diag(a, B) with a + tr(B) = 2, B12 = 0.3; min a + B11.
  SdpProblem p;
  p.blockDims = {1, 2};
  p.constraints.push_back(
      {{{0, 0, 0, 1.0}, {1, 0, 0, 1.0}, {1, 1, 1, 1.0}}, 2.0});
  p.constraints.push_back({{{1, 0, 1, 1.0}}, 0.6});  // 2*0.3
  p.objective = {{0, 0, 0, 1.0}, {1, 0, 0, 1.0}};
  SdpSolution s = solve(p);
  REQUIRE(s.status == SdpStatus::Optimal);
  ResidualReport rep = checkSolution(p, s);
  CHECK(rep.maxConstraintResidual <= 1e-7);
  CHECK(rep.minEig >= -1e-9);
  // B11*B22 >= 0.09 and a = 2 - tr(B); optimum pushes a to 0 and B11 small
  // with B22 large, but B22 <= 2, so B11 >= 0.045.
  CHECK(s.primalObjective >= 0.045 - 1e-6);
  CHECK(rep.dualityGap >= -1e-6);  // weak duality
}

TEST_CASE("random feasible problems solve with certified residuals") {
  Rng rng(42);
  for (int trial = 0; trial < 12; ++trial) {
    const int n = rng.uniformInt(2, 5);
    const int m = rng.uniformInt(1, 2 * n);
    SdpProblem p;
    p.blockDims = {n};
    // Feasible by construction: b = A(Z0) for a random PD Z0.
    Eigen::MatrixXd G = rng.gaussianSymmetric(n);
    Eigen::MatrixXd Z0 =
        G * G.transpose() + 0.3 * Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < m; ++i) {
      Constraint c;
      Eigen::MatrixXd C = rng.gaussianSymmetric(n);
      for (int r = 0; r < n; ++r) {
        for (int cc = r; cc < n; ++cc) {
          c.entries.push_back({0, r, cc, C(r, cc)});
        }
      }
      c.rhs = (C * Z0).trace();
      p.constraints.push_back(c);
    }
    p.objective.clear();
    for (int r = 0; r < n; ++r) p.objective.push_back({0, r, r, 1.0});
    SdpSolution s = solve(p);
    REQUIRE(s.status == SdpStatus::Optimal);
    ResidualReport rep = checkSolution(p, s);
    CHECK(rep.maxConstraintResidual <= 1e-6);
    CHECK(rep.minEig >= -1e-8);
    CHECK(rep.dualityGap >= -1e-6);
  }
}

TEST_CASE("solver is deterministic") {
  SdpProblem p;
  p.blockDims = {3};
  Rng rng(4);
  Eigen::MatrixXd G = rng.gaussianSymmetric(3);
  Eigen::MatrixXd Z0 = G * G.transpose() + Eigen::MatrixXd::Identity(3, 3);
  for (int i = 0; i < 3; ++i) {
    Constraint c;
    Eigen::MatrixXd C = rng.gaussianSymmetric(3);
    for (int r = 0; r < 3; ++r) {
      for (int cc = r; cc < 3; ++cc) {
        c.entries.push_back({0, r, cc, C(r, cc)});
      }
    }
    c.rhs = (C * Z0).trace();
    p.constraints.push_back(c);
  }
  for (int r = 0; r < 3; ++r) p.objective.push_back({0, r, r, 1.0});
  SdpSolution a = solve(p);
  SdpSolution b = solve(p);
  REQUIRE(a.status == b.status);
  CHECK(a.primalObjective == doctest::Approx(b.primalObjective).epsilon(1e-10));
  CHECK((a.Z[0] - b.Z[0]).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("perturbed solutions show up in check_solution") {
  SdpProblem p;
  p.blockDims = {2};
  p.constraints.push_back({{{0, 0, 0, 1.0}, {0, 1, 1, 1.0}}, 1.0});
  SdpSolution s = solve(p);
  REQUIRE(s.status == SdpStatus::Optimal);
  s.Z[0](0, 0) += 1e-3;
  ResidualReport rep = checkSolution(p, s);
  CHECK(rep.maxConstraintResidual == doctest::Approx(1e-3).epsilon(1e-3));
}

TEST_CASE("hand-built feasible point passes check_solution") {
  SdpProblem p;
  p.blockDims = {2};
  p.constraints.push_back({{{0, 0, 0, 1.0}, {0, 1, 1, 1.0}}, 1.0});
  p.constraints.push_back({{{0, 0, 0, 1.0}}, 0.0});
  SdpSolution s;
  s.status = SdpStatus::Optimal;
  s.Z = {Eigen::MatrixXd::Zero(2, 2)};
  s.Z[0](1, 1) = 1.0;
  ResidualReport rep = checkSolution(p, s);
  CHECK(rep.maxConstraintResidual <= 1e-12);
  CHECK(rep.minEig >= 0.0);
}

TEST_CASE("sdpa export emits the documented 5-line template") {
  SdpProblem p;
  p.blockDims = {1};
  p.constraints.push_back({{{0, 0, 0, 1.0}}, 1.0});
  std::string text = exportSdpa(p);
  CHECK(text == "1\n1\n1\n1\n1 1 1 1 1\n");
}

TEST_CASE("sdpa export round-trips through the test reader") {
  Rng rng(17);
  SdpProblem p;
  p.blockDims = {2, 3};
  for (int i = 0; i < 4; ++i) {
    Constraint c;
    for (int b = 0; b < 2; ++b) {
      const int n = p.blockDims[b];
      for (int r = 0; r < n; ++r) {
        for (int cc = r; cc < n; ++cc) {
          if (rng.uniform() < 0.5) {
            c.entries.push_back({b, r, cc, rng.gaussian()});
          }
        }
      }
    }
    c.rhs = rng.gaussian();
    p.constraints.push_back(c);
  }
  p.objective = {{0, 0, 0, 0.5}, {1, 1, 2, -2.25}};
  SdpProblem q = parseSdpa(exportSdpa(p));
  CHECK(sameProblem(p, q));
}

TEST_CASE("malformed problems are rejected") {
  SdpProblem p;
  p.blockDims = {2};
  p.constraints.push_back({{{0, 1, 0, 1.0}}, 0.0});  // lower triangle
  CHECK_THROWS_AS(solve(p), std::invalid_argument);
  SdpProblem q;
  q.blockDims = {-1};
  CHECK_THROWS_AS(solve(q), std::invalid_argument);
}
