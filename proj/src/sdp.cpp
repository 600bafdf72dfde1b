#include "ncsos/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace ncsos::sdp {

namespace {

using BlockMat = std::vector<Eigen::MatrixXd>;

constexpr double kInf = std::numeric_limits<double>::infinity();

BlockMat zeroBlocks(const std::vector<int>& dims) {
  BlockMat out;
  out.reserve(dims.size());
  for (int d : dims) out.push_back(Eigen::MatrixXd::Zero(d, d));
  return out;
}

BlockMat identityBlocks(const std::vector<int>& dims) {
  BlockMat out;
  out.reserve(dims.size());
  for (int d : dims) out.push_back(Eigen::MatrixXd::Identity(d, d));
  return out;
}

double blockDot(const BlockMat& a, const BlockMat& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += a[i].cwiseProduct(b[i]).sum();
  }
  return s;
}

double blockNorm(const BlockMat& a) { return std::sqrt(blockDot(a, a)); }

void axpy(double alpha, const BlockMat& x, BlockMat& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void addEntriesScaled(const std::vector<Entry>& entries, double scale,
                      BlockMat& into) {
  for (const Entry& e : entries) {
    into[e.block](e.row, e.col) += scale * e.value;
    if (e.row != e.col) into[e.block](e.col, e.row) += scale * e.value;
  }
}

// sum_i y_i C_i as block matrices.
BlockMat adjointApply(const SdpProblem& p, const Eigen::VectorXd& y) {
  BlockMat out = zeroBlocks(p.blockDims);
  for (int i = 0; i < p.numConstraints(); ++i) {
    if (y[i] != 0.0) addEntriesScaled(p.constraints[i].entries, y[i], out);
  }
  return out;
}

Eigen::VectorXd forwardApply(const SdpProblem& p, const BlockMat& Z) {
  Eigen::VectorXd out(p.numConstraints());
  for (int i = 0; i < p.numConstraints(); ++i) {
    out[i] = entriesValue(Z, p.constraints[i].entries);
  }
  return out;
}

double minEigOverBlocks(const BlockMat& Z) {
  double m = kInf;
  for (const auto& B : Z) {
    if (B.rows() == 0) continue;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B,
                                                      Eigen::EigenvaluesOnly);
    m = std::min(m, es.eigenvalues().minCoeff());
  }
  return m == kInf ? 0.0 : m;
}

// NT scaling data per block.
struct Scaling {
  BlockMat G;       // Z = G G^T when scaled variable is the identity times d
  BlockMat Ginv;    // G^{-1}
  BlockMat T;       // G G^T
  std::vector<Eigen::VectorXd> d;  // scaled spectrum (diagonal of V)
};

// Computes the Nesterov-Todd scaling of the pair (Z, S):
//   G^{-1} Z G^{-T} = G^T S G = diag(d), all blocks.
bool computeScaling(const BlockMat& Z, const BlockMat& S, Scaling& sc) {
  const std::size_t nb = Z.size();
  sc.G.resize(nb);
  sc.Ginv.resize(nb);
  sc.T.resize(nb);
  sc.d.resize(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    Eigen::LLT<Eigen::MatrixXd> lltZ(Z[b]);
    Eigen::LLT<Eigen::MatrixXd> lltS(S[b]);
    if (lltZ.info() != Eigen::Success || lltS.info() != Eigen::Success) {
      return false;
    }
    Eigen::MatrixXd L1 = lltZ.matrixL();
    Eigen::MatrixXd L2 = lltS.matrixL();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        L2.transpose() * L1, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::VectorXd sv = svd.singularValues();
    if (sv.size() > 0 && sv.minCoeff() <= 0) return false;
    Eigen::VectorXd si = sv.cwiseSqrt();
    // G = L1 V diag(1/sqrt(sv)), Ginv = diag(sqrt(sv)) V^T L1^{-1}.
    sc.G[b] = L1 * svd.matrixV() * si.cwiseInverse().asDiagonal();
    Eigen::MatrixXd L1inv = L1.triangularView<Eigen::Lower>().solve(
        Eigen::MatrixXd::Identity(L1.rows(), L1.cols()));
    sc.Ginv[b] = si.asDiagonal() * svd.matrixV().transpose() * L1inv;
    sc.T[b] = sc.G[b] * sc.G[b].transpose();
    sc.d[b] = sv;
  }
  return true;
}

// T C_i T for a sparse constraint, exploiting the entry structure.
Eigen::MatrixXd scaledConstraint(const Scaling& sc,
                                 const std::vector<Entry>& entries, int block,
                                 int dim) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dim, dim);
  const Eigen::MatrixXd& T = sc.T[block];
  for (const Entry& e : entries) {
    if (e.block != block) continue;
    out += e.value * (T.col(e.row) * T.row(e.col));
    if (e.row != e.col) out += e.value * (T.col(e.col) * T.row(e.row));
  }
  return out;
}

BlockMat congruenceT(const Scaling& sc, const BlockMat& M) {
  BlockMat out(M.size());
  for (std::size_t b = 0; b < M.size(); ++b) {
    out[b] = sc.T[b] * M[b] * sc.T[b];
  }
  return out;
}

// Largest step alpha with D + alpha * Ginv W Ginv^T >= 0 (D = diag(d)).
double maxStepScaled(const Eigen::VectorXd& d, const Eigen::MatrixXd& W) {
  if (W.rows() == 0) return kInf;
  Eigen::VectorXd dis = d.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd M = dis.asDiagonal() * W * dis.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      ((M + M.transpose()) / 2).eval(), Eigen::EigenvaluesOnly);
  double lmin = es.eigenvalues().minCoeff();
  if (lmin >= 0) return kInf;
  return -1.0 / lmin;
}

struct SchurSolver {
  Eigen::MatrixXd M;
  Eigen::LDLT<Eigen::MatrixXd> ldlt;
  Eigen::FullPivLU<Eigen::MatrixXd> lu;
  bool useLu = false;

  void factor(const Eigen::MatrixXd& Min) {
    M = Min;
    useLu = false;
    if (M.rows() == 0) return;
    ldlt.compute(M);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      // Mild regularization, then a rank-revealing fallback.
      double ridge = 1e-13 * (M.trace() / std::max<int>(1, M.rows()) + 1.0);
      ldlt.compute(M + ridge * Eigen::MatrixXd::Identity(M.rows(), M.cols()));
      if (ldlt.info() != Eigen::Success) {
        lu.compute(M);
        useLu = true;
      }
    }
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    if (M.rows() == 0) return Eigen::VectorXd(0);
    Eigen::VectorXd x = useLu ? lu.solve(rhs).eval() : ldlt.solve(rhs).eval();
    // One round of iterative refinement.
    Eigen::VectorXd r = rhs - M * x;
    x += useLu ? lu.solve(r).eval() : ldlt.solve(r).eval();
    return x;
  }
};

struct Direction {
  BlockMat dZ, dS;
  Eigen::VectorXd dy;
  double dtau = 0, dkappa = 0;
};

// Outcome of the row presolve: either which constraints to keep (dependent
// consistent rows dropped), or an exact Farkas certificate built from an
// inconsistent dependency.
struct Presolve {
  bool infeasible = false;
  Eigen::VectorXd farkasY;  // full-length; set when infeasible
  std::vector<int> keep;
};

// Entries in canonical svec-like form for Gram inner products of rows.
struct RowKeys {
  std::vector<std::int64_t> keys;
  std::vector<double> vals;  // scaled so that dot(keys,vals) = <C_i, C_j>
};

RowKeys rowKeys(const std::vector<Entry>& entries) {
  std::vector<std::pair<std::int64_t, double>> kv;
  kv.reserve(entries.size());
  for (const Entry& e : entries) {
    std::int64_t key =
        (static_cast<std::int64_t>(e.block) << 40) +
        (static_cast<std::int64_t>(e.row) << 20) + e.col;
    kv.emplace_back(key, e.value * (e.row == e.col ? 1.0 : M_SQRT2));
  }
  std::sort(kv.begin(), kv.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  RowKeys out;
  for (const auto& [k, v] : kv) {
    if (!out.keys.empty() && out.keys.back() == k) {
      out.vals.back() += v;
    } else {
      out.keys.push_back(k);
      out.vals.push_back(v);
    }
  }
  return out;
}

double rowDot(const RowKeys& a, const RowKeys& b) {
  double s = 0;
  std::size_t i = 0, j = 0;
  while (i < a.keys.size() && j < b.keys.size()) {
    if (a.keys[i] < b.keys[j]) {
      ++i;
    } else if (a.keys[i] > b.keys[j]) {
      ++j;
    } else {
      s += a.vals[i] * b.vals[j];
      ++i;
      ++j;
    }
  }
  return s;
}

// Greedy Gram-Schmidt over constraint rows via an incremental Cholesky of
// the kept-row Gram matrix. Dependent rows are dropped when their right-hand
// side is consistent and certify infeasibility otherwise.
Presolve presolveRows(const SdpProblem& p) {
  const int m = p.numConstraints();
  Presolve out;
  std::vector<RowKeys> rows(m);
  for (int i = 0; i < m; ++i) rows[i] = rowKeys(p.constraints[i].entries);

  Eigen::MatrixXd L(m, m);  // lower Cholesky factor of the kept Gram
  int k = 0;
  const double depTol = 1e-9;
  const double rhsTol = 1e-9;
  for (int j = 0; j < m; ++j) {
    const double d = rowDot(rows[j], rows[j]);
    Eigen::VectorXd v(k);
    for (int i = 0; i < k; ++i) v[i] = rowDot(rows[out.keep[i]], rows[j]);
    Eigen::VectorXd w =
        k ? L.topLeftCorner(k, k)
                .triangularView<Eigen::Lower>()
                .solve(v)
                .eval()
            : Eigen::VectorXd(0);
    const double resid2 = d - w.squaredNorm();
    const double scale = std::max(1.0, d);
    if (resid2 > depTol * depTol * scale) {
      L.row(k).head(k) = w.transpose();
      L(k, k) = std::sqrt(std::max(resid2, 0.0));
      out.keep.push_back(j);
      ++k;
      continue;
    }
    // Dependent: C_j ~ sum_i c_i C_keep[i].
    Eigen::VectorXd c =
        k ? L.topLeftCorner(k, k)
                .transpose()
                .triangularView<Eigen::Upper>()
                .solve(w)
                .eval()
            : Eigen::VectorXd(0);
    double combRhs = 0;
    for (int i = 0; i < k; ++i) {
      combRhs += c[i] * p.constraints[out.keep[i]].rhs;
    }
    const double gap = p.constraints[j].rhs - combRhs;
    if (std::abs(gap) <= rhsTol * (1.0 + std::abs(p.constraints[j].rhs))) {
      continue;  // redundant row
    }
    // Inconsistent: an exact Farkas certificate.
    out.infeasible = true;
    out.farkasY = Eigen::VectorXd::Zero(m);
    const double s = 1.0 / gap;  // makes b'y = 1
    out.farkasY[j] = s;
    for (int i = 0; i < k; ++i) out.farkasY[out.keep[i]] = -s * c[i];
    return out;
  }
  return out;
}

}  // namespace

int SdpProblem::totalDim() const {
  int t = 0;
  for (int d : blockDims) t += d;
  return t;
}

void SdpProblem::validate() const {
  for (int d : blockDims) {
    if (d <= 0) throw std::invalid_argument("block sizes must be positive");
  }
  if (totalDim() > 4000) {
    throw std::invalid_argument("problem too large for the dense solver");
  }
  auto checkEntries = [&](const std::vector<Entry>& entries) {
    for (const Entry& e : entries) {
      if (e.block < 0 || e.block >= numBlocks()) {
        throw std::invalid_argument("entry block index out of range");
      }
      const int d = blockDims[e.block];
      if (e.row < 0 || e.col < 0 || e.row >= d || e.col >= d ||
          e.row > e.col) {
        throw std::invalid_argument(
            "entries must index the upper triangle of their block");
      }
      if (!std::isfinite(e.value)) {
        throw std::invalid_argument("non-finite coefficient");
      }
    }
  };
  for (const Constraint& c : constraints) {
    checkEntries(c.entries);
    if (!std::isfinite(c.rhs)) {
      throw std::invalid_argument("non-finite right-hand side");
    }
  }
  checkEntries(objective);
}

std::string statusName(SdpStatus s) {
  switch (s) {
    case SdpStatus::Optimal:
      return "optimal";
    case SdpStatus::Infeasible:
      return "infeasible";
    case SdpStatus::Unbounded:
      return "unbounded";
    case SdpStatus::Indeterminate:
      return "indeterminate";
  }
  return "indeterminate";
}

double entriesValue(const std::vector<Eigen::MatrixXd>& Z,
                    const std::vector<Entry>& entries) {
  double v = 0;
  for (const Entry& e : entries) {
    v += e.value * (e.row == e.col ? Z[e.block](e.row, e.col)
                                   : 2.0 * Z[e.block](e.row, e.col));
  }
  return v;
}

double constraintValue(const std::vector<Eigen::MatrixXd>& Z,
                       const Constraint& c) {
  return entriesValue(Z, c.entries);
}

std::vector<Eigen::MatrixXd> entriesToMatrices(const SdpProblem& problem,
                                               const std::vector<Entry>& e) {
  BlockMat out = zeroBlocks(problem.blockDims);
  addEntriesScaled(e, 1.0, out);
  return out;
}

namespace {

SdpSolution solveCore(const SdpProblem& problem, const SdpOptions& opts) {
  SdpSolution sol;
  const int m = problem.numConstraints();
  const int nb = problem.numBlocks();
  Eigen::VectorXd b(m);
  for (int i = 0; i < m; ++i) b[i] = problem.constraints[i].rhs;
  BlockMat F = zeroBlocks(problem.blockDims);
  addEntriesScaled(problem.objective, 1.0, F);

  int rho = 0;
  for (int d : problem.blockDims) rho += d;
  if (rho == 0) {
    sol.status = SdpStatus::Optimal;
    return sol;
  }

  const double normB = b.size() ? b.norm() : 0.0;
  const double normF = blockNorm(F);
  double normA = 0.0;
  for (const Constraint& c : problem.constraints) {
    double fr = 0;
    for (const Entry& e : c.entries) {
      fr += e.value * e.value * (e.row == e.col ? 1.0 : 2.0);
    }
    normA = std::max(normA, std::sqrt(fr));
  }

  // Homogeneous self-dual state.
  BlockMat Z = identityBlocks(problem.blockDims);
  BlockMat S = identityBlocks(problem.blockDims);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
  double tau = 1.0, kappa = 1.0;

  Scaling sc;
  SchurSolver schur;
  std::vector<Eigen::MatrixXd> scaledC(m);

  auto tryTerminate = [&](SdpSolution& out, bool lastChance) -> bool {
    // Optimality of the scaled-back iterate.
    BlockMat Zh(nb), Sh(nb);
    for (int bI = 0; bI < nb; ++bI) {
      Zh[bI] = Z[bI] / tau;
      Sh[bI] = S[bI] / tau;
    }
    Eigen::VectorXd yh = y / tau;
    Eigen::VectorXd pr = forwardApply(problem, Zh) - b;
    BlockMat dr = adjointApply(problem, yh);
    axpy(1.0, Sh, dr);
    axpy(-1.0, F, dr);
    const double pres = (pr.size() ? pr.norm() : 0.0) / (1.0 + normB);
    const double dres = blockNorm(dr) / (1.0 + normF);
    const double pobj = blockDot(F, Zh);
    const double dobj = b.size() ? b.dot(yh) : 0.0;
    const double gap =
        std::abs(pobj - dobj) / (1.0 + std::max(std::abs(pobj),
                                                std::abs(dobj)));
    const double compl_ = blockDot(Zh, Sh) /
                          (1.0 + std::max(std::abs(pobj), std::abs(dobj)));
    const double mu = (blockDot(Z, S) + tau * kappa) / (rho + 1);
    // Without a strictly complementary pair, tau and kappa may vanish
    // together and the scaled gap stalls above gapTol even though the
    // iterate is feasible to full accuracy. Feasibility is the contract;
    // accept once mu bottoms out, reporting the achieved gap.
    const bool gapOk = gap <= opts.gapTol || compl_ <= opts.gapTol ||
                       mu <= 1e-12 || (lastChance && gap <= 1e-5);
    if (pres <= opts.feasTol && dres <= opts.feasTol && gapOk) {
      out.status = SdpStatus::Optimal;
      out.Z = Zh;
      out.S = Sh;
      out.y.assign(yh.data(), yh.data() + yh.size());
      out.primalObjective = pobj;
      out.dualObjective = dobj;
      out.residuals = {pres, dres, gap};
      return true;
    }

    // Primal infeasibility: y with b'y = 1, A*(y) + S ~ 0, S >= 0.
    const double by = b.size() ? b.dot(y) : 0.0;
    if (by > 1e-14) {
      Eigen::VectorXd yc = y / by;
      BlockMat Sc(nb);
      for (int bI = 0; bI < nb; ++bI) Sc[bI] = S[bI] / by;
      BlockMat viol = adjointApply(problem, yc);
      axpy(1.0, Sc, viol);
      const double q =
          blockNorm(viol) / (1.0 + normA * yc.lpNorm<Eigen::Infinity>());
      if (q <= opts.feasTol) {
        out.status = SdpStatus::Infeasible;
        out.farkasY.assign(yc.data(), yc.data() + yc.size());
        out.farkasS = Sc;
        out.y = out.farkasY;
        out.S = Sc;
        out.residuals.dual = q;
        return true;
      }
    }

    // Dual infeasibility: X >= 0 with tr(F X) = -1, A(X) ~ 0.
    const double fz = blockDot(F, Z);
    if (fz < -1e-14) {
      BlockMat Xc(nb);
      for (int bI = 0; bI < nb; ++bI) Xc[bI] = Z[bI] / (-fz);
      Eigen::VectorXd viol = forwardApply(problem, Xc);
      double xnorm = blockNorm(Xc);
      const double q =
          (viol.size() ? viol.norm() : 0.0) / (1.0 + normA * xnorm);
      if (q <= opts.feasTol) {
        out.status = SdpStatus::Unbounded;
        out.ray = Xc;
        out.Z = Xc;
        out.residuals.primal = q;
        return true;
      }
    }
    return false;
  };

  auto solveDirection = [&](double eta, const BlockMat& Dc, double rtk,
                            const Eigen::VectorXd& rp, const BlockMat& rd,
                            double rg, Direction& dir) -> bool {
    // H = G Dc G^T per block.
    BlockMat H(nb);
    for (int bI = 0; bI < nb; ++bI) {
      H[bI] = sc.G[bI] * Dc[bI] * sc.G[bI].transpose();
    }
    BlockMat TrdT = congruenceT(sc, rd);
    BlockMat TFT = congruenceT(sc, F);
    Eigen::VectorXd fA = forwardApply(problem, TFT);
    Eigen::VectorXd rhs1 = b + fA;
    Eigen::VectorXd rhs2 = -forwardApply(problem, H) +
                           eta * forwardApply(problem, TrdT) - eta * rp;
    Eigen::VectorXd y1 = schur.solve(rhs1);
    Eigen::VectorXd y2 = schur.solve(rhs2);

    BlockMat Ay1 = adjointApply(problem, y1);
    BlockMat Ay2 = adjointApply(problem, y2);
    BlockMat X1 = congruenceT(sc, Ay1);
    axpy(-1.0, TFT, X1);
    BlockMat X2 = congruenceT(sc, Ay2);
    axpy(1.0, H, X2);
    axpy(-eta, TrdT, X2);

    const double denom = (b.size() ? b.dot(y1) : 0.0) - blockDot(F, X1) +
                         kappa / tau;
    if (!(std::abs(denom) > 1e-300)) return false;
    const double numer = -eta * rg + blockDot(F, X2) -
                         (b.size() ? b.dot(y2) : 0.0) + rtk / tau;
    dir.dtau = numer / denom;
    dir.dy = dir.dtau * y1 + y2;
    dir.dZ.resize(nb);
    for (int bI = 0; bI < nb; ++bI) {
      dir.dZ[bI] = dir.dtau * X1[bI] + X2[bI];
      dir.dZ[bI] = ((dir.dZ[bI] + dir.dZ[bI].transpose()) / 2).eval();
    }
    BlockMat Ady = adjointApply(problem, dir.dy);
    dir.dS.resize(nb);
    for (int bI = 0; bI < nb; ++bI) {
      dir.dS[bI] = F[bI] * dir.dtau - Ady[bI] + eta * rd[bI];
      dir.dS[bI] = ((dir.dS[bI] + dir.dS[bI].transpose()) / 2).eval();
    }
    dir.dkappa = (rtk - kappa * dir.dtau) / tau;
    for (int bI = 0; bI < nb; ++bI) {
      if (!dir.dZ[bI].allFinite() || !dir.dS[bI].allFinite()) return false;
    }
    return std::isfinite(dir.dtau) && std::isfinite(dir.dkappa) &&
           (dir.dy.size() == 0 || dir.dy.allFinite());
  };

  auto maxStep = [&](const Direction& dir) -> double {
    double alpha = kInf;
    for (int bI = 0; bI < nb; ++bI) {
      Eigen::MatrixXd Wz =
          sc.Ginv[bI] * dir.dZ[bI] * sc.Ginv[bI].transpose();
      Eigen::MatrixXd Ws =
          sc.G[bI].transpose() * dir.dS[bI] * sc.G[bI];
      alpha = std::min(alpha, maxStepScaled(sc.d[bI], Wz));
      alpha = std::min(alpha, maxStepScaled(sc.d[bI], Ws));
    }
    if (dir.dtau < 0) alpha = std::min(alpha, -tau / dir.dtau);
    if (dir.dkappa < 0) alpha = std::min(alpha, -kappa / dir.dkappa);
    return alpha;
  };

  for (int iter = 0; iter < opts.maxIter; ++iter) {
    sol.iterations = iter;
    if (tryTerminate(sol, false)) return sol;

    if (opts.verbose) {
      BlockMat Zh(nb), Sh(nb);
      for (int bI = 0; bI < nb; ++bI) {
        Zh[bI] = Z[bI] / tau;
        Sh[bI] = S[bI] / tau;
      }
      Eigen::VectorXd yh = y / tau;
      Eigen::VectorXd pr = forwardApply(problem, Zh) - b;
      BlockMat dr = adjointApply(problem, yh);
      axpy(1.0, Sh, dr);
      axpy(-1.0, F, dr);
      std::fprintf(stderr,
                   "[sdp] it=%3d mu=%9.2e tau=%9.2e kappa=%9.2e pres=%9.2e "
                   "dres=%9.2e pobj=%+12.5e dobj=%+12.5e\n",
                   iter, (blockDot(Z, S) + tau * kappa) / (rho + 1), tau,
                   kappa, (pr.size() ? pr.norm() : 0.0) / (1.0 + normB),
                   blockNorm(dr) / (1.0 + normF), blockDot(F, Zh),
                   b.size() ? b.dot(yh) : 0.0);
    }

    if (!computeScaling(Z, S, sc)) {
      if (!tryTerminate(sol, true)) sol.status = SdpStatus::Indeterminate;
      return sol;
    }

    // Schur complement M_ij = <C_i, T C_j T>.
    Eigen::MatrixXd M(m, m);
    for (int j = 0; j < m; ++j) {
      BlockMat TCjT(nb);
      for (int bI = 0; bI < nb; ++bI) {
        TCjT[bI] = scaledConstraint(sc, problem.constraints[j].entries, bI,
                                    problem.blockDims[bI]);
      }
      for (int i = 0; i < m; ++i) {
        M(i, j) = entriesValue(TCjT, problem.constraints[i].entries);
      }
    }
    M = ((M + M.transpose()) / 2).eval();
    schur.factor(M);

    // Residuals of the homogeneous model.
    Eigen::VectorXd rp = forwardApply(problem, Z) - b * tau;
    BlockMat rd(nb);
    {
      BlockMat Ay = adjointApply(problem, y);
      for (int bI = 0; bI < nb; ++bI) {
        rd[bI] = F[bI] * tau - Ay[bI] - S[bI];
      }
    }
    const double rg = (b.size() ? b.dot(y) : 0.0) - blockDot(F, Z) - kappa;
    const double mu = (blockDot(Z, S) + tau * kappa) / (rho + 1);

    // Affine (predictor) direction.
    BlockMat DcAff(nb);
    for (int bI = 0; bI < nb; ++bI) {
      DcAff[bI] = (-sc.d[bI]).asDiagonal();
    }
    Direction aff;
    if (!solveDirection(1.0, DcAff, -tau * kappa, rp, rd, rg, aff)) {
      if (!tryTerminate(sol, true)) sol.status = SdpStatus::Indeterminate;
      return sol;
    }
    double alphaAff = std::min(1.0, maxStep(aff));

    // Centering parameter from the affine decrease.
    double gapNow = blockDot(Z, S) + tau * kappa;
    double gapAff = 0;
    {
      BlockMat Za = Z, Sa = S;
      axpy(alphaAff, aff.dZ, Za);
      axpy(alphaAff, aff.dS, Sa);
      gapAff = blockDot(Za, Sa) +
               (tau + alphaAff * aff.dtau) * (kappa + alphaAff * aff.dkappa);
    }
    double sigma = std::pow(std::max(0.0, gapAff / gapNow), 3.0);
    sigma = std::min(1.0, std::max(0.0, sigma));

    // Combined (corrector) direction.
    BlockMat DcComb(nb);
    for (int bI = 0; bI < nb; ++bI) {
      const Eigen::VectorXd& d = sc.d[bI];
      Eigen::MatrixXd dZt =
          sc.Ginv[bI] * aff.dZ[bI] * sc.Ginv[bI].transpose();
      Eigen::MatrixXd dSt = sc.G[bI].transpose() * aff.dS[bI] * sc.G[bI];
      Eigen::MatrixXd cross = dZt * dSt;
      cross = ((cross + cross.transpose()) / 2).eval();
      Eigen::MatrixXd rhs = -cross;
      for (int r = 0; r < d.size(); ++r) {
        rhs(r, r) += sigma * mu - d[r] * d[r];
      }
      DcComb[bI].resize(d.size(), d.size());
      for (int r = 0; r < d.size(); ++r) {
        for (int c = 0; c < d.size(); ++c) {
          DcComb[bI](r, c) = 2.0 * rhs(r, c) / (d[r] + d[c]);
        }
      }
    }
    const double rtk = sigma * mu - tau * kappa - aff.dtau * aff.dkappa;
    Direction comb;
    if (!solveDirection(1.0 - sigma, DcComb, rtk, rp, rd, rg, comb)) {
      if (!tryTerminate(sol, true)) sol.status = SdpStatus::Indeterminate;
      return sol;
    }
    double alpha = std::min(1.0, opts.stepFrac * maxStep(comb));
    if (!(alpha > 0)) {
      if (!tryTerminate(sol, true)) sol.status = SdpStatus::Indeterminate;
      return sol;
    }

    axpy(alpha, comb.dZ, Z);
    axpy(alpha, comb.dS, S);
    y += alpha * comb.dy;
    tau += alpha * comb.dtau;
    kappa += alpha * comb.dkappa;

    if (!(tau > 1e-300) || !std::isfinite(tau) || !std::isfinite(kappa)) {
      sol.status = SdpStatus::Indeterminate;
      return sol;
    }
  }

  sol.iterations = opts.maxIter;
  tryTerminate(sol, true);
  return sol;
}

}  // namespace

SdpSolution solve(const SdpProblem& problem, const SdpOptions& opts) {
  problem.validate();
  SdpSolution sol;
  if (problem.triviallyInfeasible) {
    sol.status = SdpStatus::Infeasible;
    return sol;
  }

  const int m = problem.numConstraints();
  Presolve pre = presolveRows(problem);
  if (pre.infeasible) {
    sol.status = SdpStatus::Infeasible;
    sol.farkasY.assign(pre.farkasY.data(), pre.farkasY.data() + m);
    sol.y = sol.farkasY;
    sol.farkasS = zeroBlocks(problem.blockDims);
    sol.S = sol.farkasS;
    return sol;
  }

  if (static_cast<int>(pre.keep.size()) == m) {
    return solveCore(problem, opts);
  }

  SdpProblem reduced;
  reduced.blockDims = problem.blockDims;
  reduced.objective = problem.objective;
  for (int idx : pre.keep) reduced.constraints.push_back(problem.constraints[idx]);
  SdpSolution rs = solveCore(reduced, opts);

  // Dropped rows are consistent combinations of kept ones; a zero dual
  // multiplier extends any reduced dual vector.
  auto expand = [&](const std::vector<double>& yr) {
    std::vector<double> y(m, 0.0);
    for (std::size_t i = 0; i < pre.keep.size(); ++i) y[pre.keep[i]] = yr[i];
    return y;
  };
  if (!rs.y.empty()) rs.y = expand(rs.y);
  if (!rs.farkasY.empty()) rs.farkasY = expand(rs.farkasY);
  return rs;
}

ResidualReport checkSolution(const SdpProblem& problem,
                             const SdpSolution& solution) {
  ResidualReport rep;
  const int m = problem.numConstraints();
  BlockMat F = zeroBlocks(problem.blockDims);
  addEntriesScaled(problem.objective, 1.0, F);

  if (solution.status == SdpStatus::Infeasible) {
    if (!solution.farkasY.empty()) {
      Eigen::VectorXd y =
          Eigen::Map<const Eigen::VectorXd>(solution.farkasY.data(),
                                            solution.farkasY.size());
      double by = 0;
      for (int i = 0; i < m; ++i) by += problem.constraints[i].rhs * y[i];
      rep.farkasByMinusOne = by - 1.0;
      BlockMat Ay = adjointApply(problem, y);
      double maxEig = -kInf;
      for (const auto& B : Ay) {
        if (B.rows() == 0) continue;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
            B, Eigen::EigenvaluesOnly);
        maxEig = std::max(maxEig, es.eigenvalues().maxCoeff());
      }
      rep.farkasMaxEig = (maxEig == -kInf) ? 0.0 : maxEig;
    }
    return rep;
  }

  if (solution.Z.size() != problem.blockDims.size()) return rep;
  rep.constraintResiduals.resize(m);
  for (int i = 0; i < m; ++i) {
    rep.constraintResiduals[i] =
        constraintValue(solution.Z, problem.constraints[i]) -
        problem.constraints[i].rhs;
    rep.maxConstraintResidual = std::max(rep.maxConstraintResidual,
                                         std::abs(rep.constraintResiduals[i]));
  }
  rep.minEig = minEigOverBlocks(solution.Z);
  rep.primalObjective = blockDot(F, solution.Z);
  if (static_cast<int>(solution.y.size()) == m) {
    for (int i = 0; i < m; ++i) {
      rep.dualObjective += problem.constraints[i].rhs * solution.y[i];
    }
    rep.dualityGap = rep.primalObjective - rep.dualObjective;
    if (solution.S.size() == problem.blockDims.size()) {
      Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(
          solution.y.data(), solution.y.size());
      BlockMat R = adjointApply(problem, y);
      axpy(1.0, solution.S, R);
      axpy(-1.0, F, R);
      double mx = 0;
      for (const auto& B : R) {
        if (B.size() > 0) mx = std::max(mx, B.cwiseAbs().maxCoeff());
      }
      rep.dualResidual = mx;
      rep.dualSlackMinEig = minEigOverBlocks(solution.S);
    }
  }
  return rep;
}

std::string exportSdpa(const SdpProblem& problem) {
  problem.validate();
  std::ostringstream out;
  char buf[128];
  out << problem.numConstraints() << "\n";
  out << problem.numBlocks() << "\n";
  for (int i = 0; i < problem.numBlocks(); ++i) {
    if (i) out << " ";
    out << problem.blockDims[i];
  }
  out << "\n";
  for (int i = 0; i < problem.numConstraints(); ++i) {
    if (i) out << " ";
    std::snprintf(buf, sizeof(buf), "%.17g", problem.constraints[i].rhs);
    out << buf;
  }
  out << "\n";
  auto emit = [&](int matno, const std::vector<Entry>& entries) {
    for (const Entry& e : entries) {
      if (e.value == 0.0) continue;
      std::snprintf(buf, sizeof(buf), "%d %d %d %d %.17g", matno, e.block + 1,
                    e.row + 1, e.col + 1, e.value);
      out << buf << "\n";
    }
  };
  // Matrix 0 is -F so that the SDPA dual (max tr(F0 Y), tr(Fi Y) = c_i)
  // matches this problem up to the sign of the objective.
  std::vector<Entry> f0 = problem.objective;
  for (Entry& e : f0) e.value = -e.value;
  emit(0, f0);
  for (int i = 0; i < problem.numConstraints(); ++i) {
    emit(i + 1, problem.constraints[i].entries);
  }
  return out.str();
}

}  // namespace ncsos::sdp
