#include "ncsos/pencil.hpp"

#include <algorithm>
#include <cmath>

namespace ncsos {

namespace {

constexpr double kConcavePsdTol = 1e-9;
constexpr double kRankCutoff = 1e-10;

int addSymmetricEntries(sdp::Constraint& c, int block,
                        const Eigen::MatrixXd& C) {
  int count = 0;
  for (int r = 0; r < C.rows(); ++r) {
    for (int cc = r; cc < C.cols(); ++cc) {
      if (C(r, cc) != 0.0) {
        c.entries.push_back({block, r, cc, C(r, cc)});
        ++count;
      }
    }
  }
  return count;
}

}  // namespace

MonicPencil::MonicPencil(std::vector<Eigen::MatrixXd> A) : A_(std::move(A)) {
  if (A_.empty()) {
    throw std::invalid_argument("a pencil needs at least one coefficient");
  }
  size_ = static_cast<int>(A_[0].rows());
  for (auto& Aj : A_) {
    if (Aj.rows() != size_ || Aj.cols() != size_) {
      throw std::invalid_argument("pencil coefficients must share one size");
    }
    if ((Aj - Aj.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol) {
      throw std::invalid_argument("pencil coefficients must be symmetric");
    }
    Aj = ((Aj + Aj.transpose()) / 2.0).eval();
  }
}

MonicPencil MonicPencil::fromPoly(const MatPoly& q) {
  if (q.rows() != q.cols()) {
    throw std::invalid_argument("pencil polynomial must be square");
  }
  if (q.degree() > 1) {
    throw std::invalid_argument("pencil polynomial must have degree <= 1");
  }
  const int n = q.rows();
  Eigen::MatrixXd c0 = q.coeff(Word::empty());
  if ((c0 - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-10) {
    throw std::invalid_argument("pencil polynomial must be monic: q(0) = I");
  }
  std::vector<Eigen::MatrixXd> A;
  for (int j = 1; j <= q.nvars(); ++j) {
    A.push_back(-q.coeff(Word::letter(j)));
  }
  return MonicPencil(std::move(A));
}

MatPoly MonicPencil::toPoly() const {
  MatPoly p = MatPoly::identity(size_, nvars());
  for (int j = 0; j < nvars(); ++j) {
    p.addTerm(Word::letter(j + 1), -A_[j]);
  }
  return p;
}

Eigen::MatrixXd MonicPencil::evaluate(const MatTuple& X) const {
  return toPoly().evaluate(X);
}

double MonicPencil::coeffNormSum() const {
  double s = 0;
  for (const auto& Aj : A_) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Aj,
                                                      Eigen::EigenvaluesOnly);
    s += es.eigenvalues().cwiseAbs().maxCoeff();
  }
  return s;
}

ConcaveDecomposition concaveDecompose(const MatPoly& q) {
  if (!q.isSymmetric(1e-8)) {
    throw std::invalid_argument("concave decomposition needs a symmetric q");
  }
  const int ell = q.rows();
  const int g = q.nvars();
  Eigen::MatrixXd c0 = q.coeff(Word::empty());
  if ((c0 - Eigen::MatrixXd::Identity(ell, ell)).cwiseAbs().maxCoeff() >
      1e-10) {
    throw std::invalid_argument("concave decomposition needs q(0) = I");
  }
  if (q.degree() > 2) {
    throw NotConcaveError("degree " + std::to_string(q.degree()) +
                          " polynomial cannot be concave");
  }

  MatPoly lambda(ell, ell, g);
  for (int j = 1; j <= g; ++j) {
    Eigen::MatrixXd Aj = -q.coeff(Word::letter(j));
    if (Aj.cwiseAbs().maxCoeff() > 0) {
      lambda.addTerm(Word::letter(j), Aj);
    }
  }

  // Negated quadratic block: B[(i,j)] = -[q]_{x_i x_j}; concavity demands
  // B positive semidefinite, and then B = C^T C recovers s.
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(ell * g, ell * g);
  for (int i = 1; i <= g; ++i) {
    for (int j = 1; j <= g; ++j) {
      B.block((i - 1) * ell, (j - 1) * ell, ell, ell) =
          -q.coeff(Word::letter(i).concat(Word::letter(j)));
    }
  }
  B = ((B + B.transpose()) / 2.0).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B);
  const Eigen::VectorXd ev = es.eigenvalues();
  if (ev.minCoeff() < -kConcavePsdTol) {
    throw NotConcaveError("quadratic block has eigenvalue " +
                          std::to_string(ev.minCoeff()));
  }
  const double cutoff = kRankCutoff * std::max(1.0, ev.maxCoeff());
  std::vector<int> kept;
  for (int i = 0; i < ev.size(); ++i) {
    if (ev[i] > cutoff) kept.push_back(i);
  }
  const int ellPrime = static_cast<int>(kept.size());
  Eigen::MatrixXd C(ellPrime, ell * g);
  for (int k = 0; k < ellPrime; ++k) {
    C.row(k) = std::sqrt(ev[kept[k]]) * es.eigenvectors().col(kept[k]).transpose();
  }
  MatPoly s(ellPrime, ell, g);
  for (int j = 1; j <= g; ++j) {
    Eigen::MatrixXd Cj = C.middleCols((j - 1) * ell, ell);
    if (Cj.size() > 0 && Cj.cwiseAbs().maxCoeff() > 0) {
      s.addTerm(Word::letter(j), Cj);
    }
  }
  return ConcaveDecomposition{std::move(lambda), std::move(s)};
}

MonicPencil linearize(const ConcaveDecomposition& dec) {
  const int ell = dec.ell();
  const int lp = dec.ellPrime();
  const int g = dec.lambda.nvars();
  std::vector<Eigen::MatrixXd> A;
  for (int j = 1; j <= g; ++j) {
    Eigen::MatrixXd Aj = dec.lambda.coeff(Word::letter(j));
    if (lp == 0) {
      A.push_back(Aj);
      continue;
    }
    Eigen::MatrixXd Cj = dec.s.coeff(Word::letter(j));
    Eigen::MatrixXd hat = Eigen::MatrixXd::Zero(lp + ell, lp + ell);
    hat.topRightCorner(lp, ell) = -Cj;
    hat.bottomLeftCorner(ell, lp) = -Cj.transpose();
    hat.bottomRightCorner(ell, ell) = Aj;
    A.push_back(hat);
  }
  return MonicPencil(std::move(A));
}

MonicPencil linearize(const MatPoly& q) {
  return linearize(concaveDecompose(q));
}

Certificate pullbackCertificate(const Certificate& cert,
                                const ConcaveDecomposition& dec) {
  if (cert.weighted.size() != 1) {
    throw std::invalid_argument(
        "pullback expects a certificate against the single pencil Q");
  }
  const int ell = dec.ell();
  const int lp = dec.ellPrime();
  Certificate out(cert.nu, cert.nvars, 1);
  out.sos = cert.sos;
  for (const MatPoly& F : cert.weighted[0]) {
    if (F.rows() != lp + ell) {
      throw std::invalid_argument("weighted factor rows != size of Q");
    }
    MatPoly f = F.middleRows(0, lp);
    MatPoly g = F.middleRows(lp, ell);
    if (lp > 0) {
      MatPoly lifted = f + dec.s * g;
      if (!lifted.isZero()) out.sos.push_back(lifted);
    }
    out.weighted[0].push_back(std::move(g));
  }
  return out;
}

BoundednessResult isBounded(const MonicPencil& L, double tol,
                            const sdp::SdpOptions& opts) {
  const int ell = L.size();
  const int g = L.nvars();
  BoundednessResult res;
  res.determinate = true;
  res.maxRecession = 0.0;

  // Blocks: M = -Lambda_A(x) (PSD), then u_j = x_j + 1 in [0, 2] and the box
  // slacks s_j, all scalar.
  Eigen::MatrixXd sumA = Eigen::MatrixXd::Zero(ell, ell);
  for (int j = 0; j < g; ++j) sumA += L.coeff(j);

  sdp::SdpProblem base;
  base.blockDims.assign(1, ell);
  for (int j = 0; j < 2 * g; ++j) base.blockDims.push_back(1);
  for (int r = 0; r < ell; ++r) {
    for (int c = r; c < ell; ++c) {
      sdp::Constraint con;
      con.entries.push_back({0, r, c, r == c ? 1.0 : 0.5});
      for (int j = 0; j < g; ++j) {
        const double a = L.coeff(j)(r, c);
        if (a != 0.0) con.entries.push_back({1 + j, 0, 0, a});
      }
      con.rhs = sumA(r, c);
      base.constraints.push_back(con);
    }
  }
  for (int j = 0; j < g; ++j) {
    sdp::Constraint box;
    box.entries.push_back({1 + j, 0, 0, 1.0});
    box.entries.push_back({1 + g + j, 0, 0, 1.0});
    box.rhs = 2.0;
    base.constraints.push_back(box);
  }

  for (int j = 0; j < g && res.determinate; ++j) {
    for (int sign = 0; sign < 2; ++sign) {
      sdp::SdpProblem prob = base;
      // max x_j = max (u_j - 1) -> min -u_j; max -x_j -> min u_j.
      prob.objective = {{1 + j, 0, 0, sign == 0 ? -1.0 : 1.0}};
      sdp::SdpSolution sol = sdp::solve(prob, opts);
      if (sol.status != sdp::SdpStatus::Optimal) {
        res.determinate = false;
        break;
      }
      const double value = sign == 0 ? -sol.primalObjective - 1.0
                                     : 1.0 - sol.primalObjective;
      res.maxRecession = std::max(res.maxRecession, value);
    }
  }
  res.bounded = res.determinate && res.maxRecession <= tol;
  return res;
}

UnitCertificate unitCertificate(const MonicPencil& L, int targetSize,
                                const sdp::SdpOptions& opts) {
  if (targetSize < 1) throw std::invalid_argument("targetSize must be >= 1");
  const int ell = L.size();
  const int g = L.nvars();

  sdp::SdpProblem prob;
  prob.blockDims = {ell};
  {
    sdp::Constraint trace;
    for (int r = 0; r < ell; ++r) trace.entries.push_back({0, r, r, 1.0});
    trace.rhs = 1.0;
    prob.constraints.push_back(trace);
  }
  for (int j = 0; j < g; ++j) {
    sdp::Constraint c;
    addSymmetricEntries(c, 0, L.coeff(j));
    c.rhs = 0.0;
    prob.constraints.push_back(c);
  }
  for (int r = 0; r < ell; ++r) prob.objective.push_back({0, r, r, 1.0});

  sdp::SdpOptions tight = opts;
  tight.feasTol = std::min(opts.feasTol, 1e-10);
  tight.gapTol = std::min(opts.gapTol, 1e-10);
  sdp::SdpSolution sol = sdp::solve(prob, tight);

  UnitCertificate out;
  if (sol.status == sdp::SdpStatus::Infeasible) {
    out.status = UnitCertStatus::NotExists;
    // Farkas: y0 I + sum y_j A_j <= 0 with y0 = 1, so sum (-y_j) A_j >= I.
    out.evidence.resize(g);
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(ell, ell);
    for (int j = 0; j < g; ++j) {
      out.evidence[j] = -sol.farkasY[1 + j] / sol.farkasY[0];
      P += out.evidence[j] * L.coeff(j);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P,
                                                      Eigen::EigenvaluesOnly);
    out.evidenceMinEig = es.eigenvalues().minCoeff();
    return out;
  }
  if (sol.status != sdp::SdpStatus::Optimal) {
    out.status = UnitCertStatus::Indeterminate;
    return out;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sol.Z[0]);
  const Eigen::VectorXd ev = es.eigenvalues();
  const double cutoff = 1e-9 * std::max(0.0, ev.maxCoeff());
  std::vector<Eigen::VectorXd> h;
  double total = 0;
  for (int i = 0; i < ev.size(); ++i) {
    if (ev[i] > cutoff) {
      h.push_back(std::sqrt(ev[i]) * es.eigenvectors().col(i));
      total += ev[i];
    }
  }
  // Renormalize so the constant term of sum W*W is exactly the identity.
  for (auto& hk : h) hk /= std::sqrt(total);

  for (const auto& hk : h) {
    for (int s = 0; s < targetSize; ++s) {
      Eigen::MatrixXd W = Eigen::MatrixXd::Zero(ell, targetSize);
      W.col(s) = hk;
      out.W.push_back(W);
    }
  }

  MatPoly expansion(targetSize, targetSize, g);
  const MatPoly Lpoly = L.toPoly();
  for (const auto& W : out.W) {
    MatPoly Wp = MatPoly::constant(W, g);
    expansion = expansion + Wp.adjoint() * Lpoly * Wp;
  }
  out.residual =
      (expansion - MatPoly::identity(targetSize, g)).maxAbsCoeff();
  out.status = UnitCertStatus::Exists;
  return out;
}

}  // namespace ncsos
