#include "ncsos/certify.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <tuple>

namespace ncsos::certify {

namespace {

struct CoeffKey {
  Word m;
  int a, b;
  bool operator<(const CoeffKey& o) const {
    if (m != o.m) return m < o.m;
    if (a != o.a) return a < o.a;
    return b < o.b;
  }
  bool operator==(const CoeffKey& o) const {
    return m == o.m && a == o.a && b == o.b;
  }
};

CoeffKey canonicalKey(const Word& m, int a, int b) {
  CoeffKey k{m, a, b};
  CoeffKey mirror{m.reversed(), b, a};
  return mirror < k ? mirror : k;
}

using PosMap = std::map<std::tuple<int, int, int>, double>;

void emitSymmetrized(const PosMap& raw, sdp::Constraint& con) {
  // raw holds entries of E at ordered positions; the constraint matrix is
  // (E + E^T)/2, emitted on the upper triangle.
  std::map<std::pair<std::pair<int, int>, int>, double> upper;  // ((b,r),c)
  for (const auto& [key, v] : raw) {
    auto [blk, r, c] = key;
    const int rr = std::min(r, c), cc = std::max(r, c);
    upper[{{blk, rr}, cc}] += (rr == cc) ? v : v / 2.0;
  }
  for (const auto& [key, v] : upper) {
    if (v != 0.0) {
      con.entries.push_back({key.first.first, key.first.second, key.second, v});
    }
  }
}

double minEigOf(const Eigen::MatrixXd& M) {
  if (M.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M,
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

int QuadModuleSpec::maxConstraintDegree() const {
  int a = 0;
  for (const auto& q : constraints) a = std::max(a, q.degree());
  return a;
}

int QuadModuleSpec::kappa() const {
  return std::max(2 * alpha, 2 * beta + maxConstraintDegree());
}

MembershipSdp assembleMembershipSdp(const MatPoly& p,
                                    const QuadModuleSpec& spec) {
  if (p.rows() != spec.nu || p.cols() != spec.nu) {
    throw std::invalid_argument("target must be nu x nu");
  }
  if (p.nvars() != spec.nvars) {
    throw std::invalid_argument("variable counts differ");
  }
  if (!p.isSymmetric(1e-10)) {
    throw std::invalid_argument("target must be symmetric");
  }
  if (spec.alpha < 0 || spec.beta < 0) {
    throw std::invalid_argument("degree bounds must be nonnegative");
  }
  if (p.degree() > spec.kappa()) {
    throw std::invalid_argument(
        "degree overflow: deg p = " + std::to_string(p.degree()) +
        " exceeds kappa = " + std::to_string(spec.kappa()));
  }
  for (const auto& q : spec.constraints) {
    if (q.rows() != q.cols() || !q.isSymmetric(1e-10)) {
      throw std::invalid_argument("constraints must be symmetric and square");
    }
    if (q.nvars() != spec.nvars) {
      throw std::invalid_argument("constraint variable count differs");
    }
  }

  MembershipSdp ms;
  ms.spec = spec;
  ms.sosBasis = enumerateBasis(spec.nvars, spec.alpha);
  ms.wtBasis = enumerateBasis(spec.nvars, spec.beta);
  const int nu = spec.nu;
  const int S = static_cast<int>(ms.sosBasis.size());
  const int W = static_cast<int>(ms.wtBasis.size());

  ms.problem.blockDims.push_back(S * nu);
  for (const auto& q : spec.constraints) {
    ms.problem.blockDims.push_back(W * q.rows() * nu);
  }

  // Coefficient-matching rows, one per canonical (word, entry) key. Each
  // ordered Gram position feeds exactly the key it realizes; mirrored keys
  // describe the transposed constraint and are skipped.
  std::map<CoeffKey, PosMap> rows;
  for (int vi = 0; vi < S; ++vi) {
    const Word vr = ms.sosBasis[vi].reversed();
    for (int ui = 0; ui < S; ++ui) {
      const Word m = vr.concat(ms.sosBasis[ui]);
      for (int a = 0; a < nu; ++a) {
        for (int b = 0; b < nu; ++b) {
          CoeffKey key{m, a, b};
          if (!(canonicalKey(m, a, b) == key)) continue;
          rows[key][{0, vi * nu + a, ui * nu + b}] += 1.0;
        }
      }
    }
  }
  for (std::size_t qi = 0; qi < spec.constraints.size(); ++qi) {
    const MatPoly& q = spec.constraints[qi];
    const int lq = q.rows();
    for (int vi = 0; vi < W; ++vi) {
      const Word vr = ms.wtBasis[vi].reversed();
      for (int ui = 0; ui < W; ++ui) {
        for (const auto& [w, Qw] : q.terms()) {
          const Word m = vr.concat(w).concat(ms.wtBasis[ui]);
          for (int c = 0; c < lq; ++c) {
            for (int d = 0; d < lq; ++d) {
              if (Qw(c, d) == 0.0) continue;
              for (int a = 0; a < nu; ++a) {
                for (int b = 0; b < nu; ++b) {
                  CoeffKey key{m, a, b};
                  if (!(canonicalKey(m, a, b) == key)) continue;
                  rows[key][{static_cast<int>(qi) + 1, (vi * lq + c) * nu + a,
                             (ui * lq + d) * nu + b}] += Qw(c, d);
                }
              }
            }
          }
        }
      }
    }
  }

  // Coefficients of p outside every generated word cannot be matched.
  for (const auto& [w, B] : p.terms()) {
    for (int a = 0; a < nu; ++a) {
      for (int b = 0; b < nu; ++b) {
        if (std::abs(B(a, b)) <= 1e-12) continue;
        if (rows.find(canonicalKey(w, a, b)) == rows.end()) {
          ms.problem.triviallyInfeasible = true;
        }
      }
    }
  }

  for (const auto& [key, raw] : rows) {
    sdp::Constraint con;
    emitSymmetrized(raw, con);
    con.rhs = p.coeff(key.m)(key.a, key.b);
    ms.problem.constraints.push_back(std::move(con));
  }

  // Feasibility with a min-trace objective for numerical centering.
  for (int blk = 0; blk < ms.problem.numBlocks(); ++blk) {
    for (int r = 0; r < ms.problem.blockDims[blk]; ++r) {
      ms.problem.objective.push_back({blk, r, r, 1.0});
    }
  }
  return ms;
}

Certificate extractCertificate(const sdp::SdpSolution& sol,
                               const MembershipSdp& ms, double rankTol) {
  if (sol.status != sdp::SdpStatus::Optimal) {
    throw std::invalid_argument("certificate extraction needs a solved SDP");
  }
  const QuadModuleSpec& spec = ms.spec;
  const int nu = spec.nu;
  Certificate cert(nu, spec.nvars, spec.constraints.size());

  auto factorBlock = [&](const Eigen::MatrixXd& G, auto&& makeFactor) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        ((G + G.transpose()) / 2.0).eval());
    const Eigen::VectorXd ev = es.eigenvalues();
    if (ev.size() == 0) return;
    const double top = ev.maxCoeff();
    if (ev.minCoeff() < -rankTol * std::max(1.0, std::abs(top)) - 1e-9) {
      throw std::invalid_argument("Gram block is indefinite beyond tolerance");
    }
    const double cutoff = rankTol * std::max(0.0, top);
    for (int i = 0; i < ev.size(); ++i) {
      if (ev[i] > cutoff) {
        makeFactor(std::sqrt(ev[i]) * es.eigenvectors().col(i));
      }
    }
  };

  factorBlock(sol.Z[0], [&](const Eigen::VectorXd& vec) {
    MatPoly s(1, nu, spec.nvars);
    for (std::size_t ui = 0; ui < ms.sosBasis.size(); ++ui) {
      Eigen::MatrixXd row(1, nu);
      for (int b = 0; b < nu; ++b) row(0, b) = vec[ui * nu + b];
      s.addTerm(ms.sosBasis[ui], row);
    }
    if (!s.isZero()) cert.sos.push_back(std::move(s));
  });

  for (std::size_t qi = 0; qi < spec.constraints.size(); ++qi) {
    const int lq = spec.constraints[qi].rows();
    factorBlock(sol.Z[qi + 1], [&](const Eigen::VectorXd& vec) {
      MatPoly f(lq, nu, spec.nvars);
      for (std::size_t ui = 0; ui < ms.wtBasis.size(); ++ui) {
        Eigen::MatrixXd B(lq, nu);
        for (int c = 0; c < lq; ++c) {
          for (int b = 0; b < nu; ++b) {
            B(c, b) = vec[(ui * lq + c) * nu + b];
          }
        }
        f.addTerm(ms.wtBasis[ui], B);
      }
      if (!f.isZero()) cert.weighted[qi].push_back(std::move(f));
    });
  }
  return cert;
}

double verifyCertificate(const MatPoly& p, const QuadModuleSpec& spec,
                         const Certificate& cert) {
  return (cert.reconstruct(spec.constraints) - p).maxAbsCoeff();
}

namespace {

CertifyResult certifyAgainstPencil(const MatPoly& p, const MonicPencil& L,
                                   const MatPoly& originalQ,
                                   const ConcaveDecomposition* dec, int d,
                                   const CertifyOptions& opts) {
  CertifyResult out;
  out.d = d;
  out.modeUsed = dec ? DomainMode::Concave : DomainMode::Linear;

  QuadModuleSpec spec;
  spec.constraints = {L.toPoly()};
  spec.alpha = dec ? d + 1 : d;
  spec.beta = d;
  spec.nu = p.rows();
  spec.nvars = p.nvars();

  MembershipSdp ms = assembleMembershipSdp(p, spec);
  sdp::SdpOptions sopts = opts.sdp;
  sopts.feasTol = std::min(sopts.feasTol, 1e-9);
  sopts.gapTol = std::min(sopts.gapTol, 1e-9);
  sdp::SdpSolution sol = sdp::solve(ms.problem, sopts);
  if (sol.status == sdp::SdpStatus::Indeterminate &&
      opts.sdp.feasTol > sopts.feasTol) {
    // Degenerate instances can stall just above the tightened target;
    // retry at the caller's tolerance before giving up.
    sol = sdp::solve(ms.problem, opts.sdp);
  }

  if (sol.status == sdp::SdpStatus::Optimal) {
    Certificate cert = extractCertificate(sol, ms, opts.rankTol);
    if (dec) cert = pullbackCertificate(cert, *dec);
    QuadModuleSpec target;
    target.constraints = {originalQ};
    target.alpha = d + (dec ? 1 : 0);
    target.beta = d;
    target.nu = p.rows();
    target.nvars = p.nvars();
    const double residual = verifyCertificate(p, target, cert);
    if (residual <= opts.verifyTol) {
      out.status = CertifyStatus::Certificate;
      out.certificate = std::move(cert);
      out.certificateResidual = residual;
      return out;
    }
    out.status = CertifyStatus::Indeterminate;
    std::ostringstream msg;
    msg << "membership solved but the certificate residual " << residual
        << " exceeds " << opts.verifyTol;
    out.message = msg.str();
    return out;
  }

  if (sol.status == sdp::SdpStatus::Infeasible) {
    moment::RefuteOptions ropts;
    ropts.witnessTol = opts.witnessTol;
    ropts.seed = opts.seed;
    ropts.sdp = opts.sdp;
    moment::RefuteResult ref = moment::refute(p, L, d, ropts);
    out.refutationOptimum = ref.optimum;
    if (ref.status == moment::RefuteStatus::Witness) {
      // The witness lives in the pencil domain; confirm against the original
      // q as well (they agree for the Schur-complement linearization).
      const double qEig = minEigOf(originalQ.evaluate(ref.witness->X));
      if (qEig >= -1e-8) {
        out.status = CertifyStatus::Witness;
        out.witnessValue = ref.witness->value;
        out.witnessDomainMinEig = qEig;
        out.witnessMomentResidual = ref.momentResidual;
        out.witness = std::move(ref.witness);
        return out;
      }
      out.status = CertifyStatus::Indeterminate;
      std::ostringstream msg;
      msg << "witness leaves the original domain (min eig q(X) = " << qEig
          << ")";
      out.message = msg.str();
      return out;
    }
    if (ref.status == moment::RefuteStatus::NoRefutation) {
      out.status = CertifyStatus::Indeterminate;
      std::ostringstream msg;
      msg << "membership SDP infeasible yet no refutation (optimum "
          << ref.optimum << "); boundary case";
      out.message = msg.str();
      return out;
    }
    out.status = CertifyStatus::Indeterminate;
    out.message = "refutation failed: " + ref.message;
    return out;
  }

  out.status = CertifyStatus::Indeterminate;
  out.message = "membership SDP ended " + sdp::statusName(sol.status);
  return out;
}

}  // namespace

CertifyResult certifyNonneg(const MatPoly& p, const MatPoly& q,
                            const CertifyOptions& opts) {
  if (p.rows() != p.cols() || !p.isSymmetric(1e-10)) {
    throw std::invalid_argument("p must be symmetric and square");
  }
  if (q.rows() != q.cols() || !q.isSymmetric(1e-8)) {
    throw std::invalid_argument("q must be symmetric and square");
  }
  if (p.nvars() != q.nvars()) {
    throw std::invalid_argument("p and q must share the variable count");
  }
  const Eigen::MatrixXd q0 = q.coeff(Word::empty());
  if ((q0 - Eigen::MatrixXd::Identity(q.rows(), q.rows()))
          .cwiseAbs()
          .maxCoeff() > 1e-10) {
    throw NotMonicError(
        "q(0) != I: the domain is not monic and positivity on it need not "
        "admit a weighted sum-of-squares certificate; normalize q first");
  }

  DomainMode mode = opts.mode;
  if (mode == DomainMode::Auto) {
    mode = q.degree() <= 1 ? DomainMode::Linear : DomainMode::Concave;
  }
  const int dp = p.degree();
  const int d = opts.degree >= 0 ? opts.degree : std::max(0, dp) / 2;
  if (dp > 2 * d + 1) {
    throw std::invalid_argument("deg p exceeds 2d+1 for the requested d");
  }

  if (mode == DomainMode::Linear) {
    if (q.degree() > 1) {
      throw std::invalid_argument("linear mode needs a pencil of degree 1");
    }
    MonicPencil L = MonicPencil::fromPoly(q);
    return certifyAgainstPencil(p, L, q, nullptr, d, opts);
  }

  ConcaveDecomposition dec = concaveDecompose(q);  // throws NotConcaveError
  MonicPencil Q = linearize(dec);
  return certifyAgainstPencil(p, Q, q, &dec, d, opts);
}

GeneralResult certifyGeneral(const MatPoly& p,
                             const std::vector<MatPoly>& constraints, int d,
                             int beta, const CertifyOptions& opts) {
  GeneralResult out;
  if (beta >= d) {
    throw std::invalid_argument("certifyGeneral needs beta < d");
  }
  if (p.degree() > 2 * d) {
    throw std::invalid_argument("certifyGeneral treats deg p <= 2d");
  }
  QuadModuleSpec spec;
  spec.constraints = constraints;
  spec.nu = p.rows();
  spec.nvars = p.nvars();
  spec.beta = beta;
  spec.alpha = d + spec.maxConstraintDegree();

  MembershipSdp ms = assembleMembershipSdp(p, spec);
  sdp::SdpOptions sopts = opts.sdp;
  sopts.feasTol = std::min(sopts.feasTol, 1e-9);
  sopts.gapTol = std::min(sopts.gapTol, 1e-9);
  sdp::SdpSolution sol = sdp::solve(ms.problem, sopts);
  if (sol.status == sdp::SdpStatus::Optimal) {
    Certificate cert = extractCertificate(sol, ms, opts.rankTol);
    out.residual = verifyCertificate(p, spec, cert);
    if (out.residual <= opts.verifyTol) {
      out.status = GeneralStatus::InModule;
      out.certificate = std::move(cert);
      return out;
    }
    out.status = GeneralStatus::Indeterminate;
    return out;
  }
  if (sol.status == sdp::SdpStatus::Infeasible) {
    out.status = GeneralStatus::NotInModule;
    return out;
  }
  out.status = GeneralStatus::Indeterminate;
  return out;
}

bool projectedLocalizingCheck(const MatTuple& X, const Eigen::VectorXd& zeta,
                              int beta, const std::vector<MatPoly>& S,
                              double tol) {
  if (zeta.size() != X.level() || zeta.norm() == 0.0) {
    throw std::invalid_argument("zeta must be a nonzero vector of dim(X)");
  }
  const int n = X.level();
  auto basis = enumerateBasis(X.nvars(), beta);
  Eigen::MatrixXd V(n, basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i) {
    V.col(i) = X.wordEval(basis[i]) * zeta;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(V);
  qr.setThreshold(1e-10);
  const int rank = static_cast<int>(qr.rank());
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, rank);

  for (const auto& s : S) {
    if (s.cols() != 1) {
      throw std::invalid_argument("constraints must be column-shaped: s* s");
    }
    MatPoly m = MatPoly::identity(1, s.nvars()) - s.adjoint() * s;
    Eigen::MatrixXd Ms = m.evaluate(X);
    Eigen::MatrixXd C = Q.transpose() * Ms * Q;
    if (minEigOf(C) < -tol) return false;
  }
  return true;
}

RandomEvalReport randomEvalCheck(const MatPoly& p, const MatPoly& q,
                                 int trials, std::uint64_t seed) {
  RandomEvalReport rep;
  rep.requested = trials;
  if (trials <= 0) {
    rep.minEig = std::numeric_limits<double>::infinity();
    return rep;
  }
  if (q.rows() != q.cols()) {
    throw std::invalid_argument("q must be square");
  }
  if (minEigOf(q.coeff(Word::empty())) < 1e-9) {
    throw std::invalid_argument(
        "sampling needs q(0) positive definite (a monic-type domain)");
  }
  const int g = p.nvars();
  const int dp = std::max(0, p.degree());
  const int d = dp / 2;
  const int cap = static_cast<int>(
      std::min<std::int64_t>(p.rows() * sigmaDim(g, d + 1), 12));

  Rng rng(seed);
  int failures = 0;
  for (int t = 0; t < trials; ++t) {
    const int n = 1 + t % cap;
    bool found = false;
    for (int attempt = 0; attempt < 40 && !found; ++attempt) {
      std::vector<Eigen::MatrixXd> Xs;
      double norm2 = 0;
      for (int j = 0; j < g; ++j) {
        Xs.push_back(rng.gaussianSymmetric(n));
        norm2 += Xs.back().squaredNorm();
      }
      for (auto& Xj : Xs) Xj /= std::sqrt(std::max(norm2, 1e-300));
      MatTuple direction(std::move(Xs));

      // Largest step along the ray staying inside; the domain contains a
      // neighborhood of zero, so bisection on [0, tmax] applies.
      auto inside = [&](double tt) {
        std::vector<Eigen::MatrixXd> Ys;
        for (int j = 0; j < g; ++j) Ys.push_back(tt * direction[j]);
        return minEigOf(q.evaluate(MatTuple(std::move(Ys)))) >= 0.0;
      };
      double lo = 0.0, hi = 8.0;
      if (inside(hi)) {
        lo = hi;
      } else {
        for (int it = 0; it < 30; ++it) {
          const double mid = (lo + hi) / 2;
          (inside(mid) ? lo : hi) = mid;
        }
      }
      if (lo <= 1e-8) {
        ++failures;
        continue;
      }
      const double tt = 0.9 * lo * rng.uniform(0.3, 1.0);
      std::vector<Eigen::MatrixXd> Ys;
      for (int j = 0; j < g; ++j) Ys.push_back(tt * direction[j]);
      MatTuple X(std::move(Ys));
      found = true;
      ++rep.accepted;
      const double me = minEigOf(p.evaluate(X));
      if (me < rep.minEig) {
        rep.minEig = me;
        rep.worst = X;
      }
    }
    if (!found) ++failures;
  }
  if (rep.accepted == 0) {
    throw std::runtime_error("sampling failed: the domain appears thin");
  }
  rep.falsified = rep.minEig < -1e-7;
  return rep;
}

}  // namespace ncsos::certify
