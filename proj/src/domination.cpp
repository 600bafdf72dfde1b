#include "ncsos/domination.hpp"

#include <cmath>
#include <sstream>

namespace ncsos::domination {

namespace {

double minEigOf(const Eigen::MatrixXd& M) {
  if (M.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M,
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double certificateResidual(const MonicPencil& L, const MonicPencil& Lp,
                           const Eigen::MatrixXd& S,
                           const std::vector<Eigen::MatrixXd>& V) {
  const int g = L.nvars();
  MatPoly rhs = MatPoly::constant(S, g);
  const MatPoly Lpoly = L.toPoly();
  for (const auto& Vj : V) {
    MatPoly Vp = MatPoly::constant(Vj, g);
    rhs = rhs + Vp.adjoint() * Lpoly * Vp;
  }
  return (Lp.toPoly() - rhs).maxAbsCoeff();
}

}  // namespace

DominationResult checkDomination(const MonicPencil& L, const MonicPencil& Lp,
                                 const certify::CertifyOptions& opts) {
  if (L.nvars() != Lp.nvars()) {
    throw std::invalid_argument("pencils must share the variable count");
  }
  DominationResult out;
  const int g = L.nvars();
  const int lp = Lp.size();

  certify::QuadModuleSpec spec;
  spec.constraints = {L.toPoly()};
  spec.alpha = 0;
  spec.beta = 0;
  spec.nu = lp;
  spec.nvars = g;
  certify::MembershipSdp ms =
      certify::assembleMembershipSdp(Lp.toPoly(), spec);
  sdp::SdpOptions sopts = opts.sdp;
  sopts.feasTol = std::min(sopts.feasTol, 1e-10);
  sopts.gapTol = std::min(sopts.gapTol, 1e-10);
  sdp::SdpSolution sol = sdp::solve(ms.problem, sopts);

  if (sol.status == sdp::SdpStatus::Optimal) {
    Certificate cert = certify::extractCertificate(sol, ms, opts.rankTol);
    DominationCertificate dc;
    dc.S = Eigen::MatrixXd::Zero(lp, lp);
    for (const auto& s : cert.sos) {
      Eigen::MatrixXd c = s.coeff(Word::empty());
      dc.S += c.transpose() * c;
    }
    for (const auto& f : cert.weighted[0]) {
      dc.V.push_back(f.coeff(Word::empty()));
    }
    dc.residual = certificateResidual(L, Lp, dc.S, dc.V);
    if (dc.residual <= opts.verifyTol) {
      out.status = DominationStatus::Dominates;
      out.certificate = std::move(dc);
      return out;
    }
    out.status = DominationStatus::Indeterminate;
    std::ostringstream msg;
    msg << "membership solved but the identity residual " << dc.residual
        << " exceeds " << opts.verifyTol;
    out.message = msg.str();
    return out;
  }

  if (sol.status == sdp::SdpStatus::Infeasible) {
    moment::RefuteOptions ropts;
    ropts.witnessTol = opts.witnessTol;
    ropts.seed = opts.seed;
    ropts.sdp = opts.sdp;
    moment::RefuteResult ref = moment::refute(Lp.toPoly(), L, 0, ropts);
    if (ref.status == moment::RefuteStatus::Witness) {
      out.witnessDomainMinEig = minEigOf(L.evaluate(ref.witness->X));
      out.witnessTargetMinEig = minEigOf(Lp.evaluate(ref.witness->X));
      if (out.witnessTargetMinEig <= -opts.witnessTol) {
        out.status = DominationStatus::Refuted;
        out.witness = std::move(ref.witness);
        return out;
      }
      out.status = DominationStatus::Indeterminate;
      out.message = "refutation point failed to make the target indefinite";
      return out;
    }
    out.status = DominationStatus::Indeterminate;
    out.message = ref.message.empty()
                      ? "membership infeasible but no refutation found"
                      : ref.message;
    return out;
  }

  out.status = DominationStatus::Indeterminate;
  out.message = "membership SDP ended " + sdp::statusName(sol.status);
  return out;
}

StrengthenResult strengthenBounded(const MonicPencil& L,
                                   const DominationCertificate& cert) {
  StrengthenResult out;
  out.V = cert.V;
  const double snorm =
      cert.S.size() > 0 ? cert.S.cwiseAbs().maxCoeff() : 0.0;
  const int lp = static_cast<int>(cert.S.rows());

  if (snorm > 1e-12) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cert.S);
    const Eigen::VectorXd ev = es.eigenvalues();
    std::vector<int> kept;
    for (int i = 0; i < ev.size(); ++i) {
      if (ev[i] > 1e-12 * std::max(1.0, ev.maxCoeff())) kept.push_back(i);
    }
    const int r = static_cast<int>(kept.size());
    Eigen::MatrixXd C(r, lp);
    for (int k = 0; k < r; ++k) {
      C.row(k) =
          std::sqrt(ev[kept[k]]) * es.eigenvectors().col(kept[k]).transpose();
    }
    UnitCertificate uc = unitCertificate(L, r);
    if (uc.status == UnitCertStatus::NotExists) {
      std::ostringstream msg;
      msg << "S cannot be absorbed: span{A_j} contains a positive definite "
             "combination (min eigenvalue "
          << uc.evidenceMinEig << ")";
      throw NoUnitCertificateError(msg.str());
    }
    if (uc.status != UnitCertStatus::Exists) {
      throw std::runtime_error("unit certificate search was indeterminate");
    }
    for (const auto& W : uc.W) {
      out.V.push_back(W * C);
    }
  }

  // Residual against what the input certificate certifies.
  const int g = L.nvars();
  MatPoly target = MatPoly::constant(cert.S, g);
  const MatPoly Lpoly = L.toPoly();
  for (const auto& Vj : cert.V) {
    MatPoly Vp = MatPoly::constant(Vj, g);
    target = target + Vp.adjoint() * Lpoly * Vp;
  }
  MatPoly pure(lp, lp, g);
  for (const auto& Vj : out.V) {
    MatPoly Vp = MatPoly::constant(Vj, g);
    pure = pure + Vp.adjoint() * Lpoly * Vp;
  }
  out.residual = (target - pure).maxAbsCoeff();
  return out;
}

}  // namespace ncsos::domination
