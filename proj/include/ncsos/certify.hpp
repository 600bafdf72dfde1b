#pragma once

#include "ncsos/certificate.hpp"
#include "ncsos/freealg.hpp"
#include "ncsos/moment.hpp"
#include "ncsos/pencil.hpp"
#include "ncsos/sdp.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ncsos::certify {

class NotMonicError : public std::runtime_error {
 public:
  explicit NotMonicError(const std::string& what)
      : std::runtime_error(what) {}
};

/// The truncated quadratic module M_{alpha,beta}(Q): sums of squares of
/// degree <= alpha plus weighted terms f* q f with deg f <= beta, producing
/// nu x nu polynomials of degree <= kappa().
struct QuadModuleSpec {
  std::vector<MatPoly> constraints;
  int alpha = 0;
  int beta = 0;
  int nu = 1;
  int nvars = 1;

  int maxConstraintDegree() const;
  int kappa() const;
};

/// Assembled Gram SDP plus the index layout needed to read factors back:
/// block 0 is the sos Gram over (word <= alpha, column), block 1+qi the
/// constraint Gram over (word <= beta, constraint row, column), word-major.
struct MembershipSdp {
  QuadModuleSpec spec;
  std::vector<Word> sosBasis;
  std::vector<Word> wtBasis;
  sdp::SdpProblem problem;
};

/// One equality constraint per canonical (word, entry) coefficient of degree
/// <= kappa. Marks the problem trivially infeasible when p carries a
/// coefficient no Gram position can generate.
MembershipSdp assembleMembershipSdp(const MatPoly& p,
                                    const QuadModuleSpec& spec);

/// Eigen-factorization of the Gram blocks into polynomial factors; the rank
/// cutoff is relative to each block's largest eigenvalue.
Certificate extractCertificate(const sdp::SdpSolution& sol,
                               const MembershipSdp& ms,
                               double rankTol = 1e-9);

/// Max-abs coefficient of p - reconstruct(cert), by exact symbolic
/// expansion; independent of any solver output.
double verifyCertificate(const MatPoly& p, const QuadModuleSpec& spec,
                         const Certificate& cert);

enum class DomainMode { Auto, Linear, Concave };
enum class CertifyStatus { Certificate, Witness, Indeterminate };

struct CertifyOptions {
  DomainMode mode = DomainMode::Auto;
  /// Degree parameter d; -1 derives it from deg p (deg p <= 2d+1).
  int degree = -1;
  double witnessTol = 1e-7;
  double rankTol = 1e-9;
  /// Residual bound a certificate must meet before it is reported.
  double verifyTol = 1e-6;
  std::uint64_t seed = moment::kDefaultSeed;
  sdp::SdpOptions sdp;
};

struct CertifyResult {
  CertifyStatus status = CertifyStatus::Indeterminate;
  int d = 0;
  DomainMode modeUsed = DomainMode::Linear;

  std::optional<Certificate> certificate;
  double certificateResidual = 0.0;

  std::optional<moment::Witness> witness;
  double witnessValue = 0.0;        // <p(X) gamma, gamma>
  double witnessDomainMinEig = 0.0; // min eig q(X)
  double witnessMomentResidual = 0.0;
  double refutationOptimum = 0.0;

  std::string message;
};

/// The certify-or-refute entry point over the domain of a monic q: for
/// linear q solves membership in M_{d,d}(q); for concave q linearizes,
/// solves M_{d+1,d} against the pencil and pulls the certificate back. On an
/// infeasible membership SDP delegates to the moment refuter and returns a
/// verified witness. Exactly one of certificate/witness on clean runs.
CertifyResult certifyNonneg(const MatPoly& p, const MatPoly& q,
                            const CertifyOptions& opts = {});

enum class GeneralStatus { InModule, NotInModule, Indeterminate };

struct GeneralResult {
  GeneralStatus status = GeneralStatus::Indeterminate;
  std::optional<Certificate> certificate;
  double residual = 0.0;
};

/// Membership in M_{d+a,beta}(Q) for a general constraint set of degree <= a
/// (no witness extraction on the failure side).
GeneralResult certifyGeneral(const MatPoly& p,
                             const std::vector<MatPoly>& constraints, int d,
                             int beta, const CertifyOptions& opts = {});

/// Compresses each 1 - s*s onto the subspace spanned by {f(X) zeta : deg f
/// <= beta} and checks positive semidefiniteness of all compressions.
bool projectedLocalizingCheck(const MatTuple& X, const Eigen::VectorXd& zeta,
                              int beta, const std::vector<MatPoly>& S,
                              double tol = 1e-9);

struct RandomEvalReport {
  int requested = 0;
  int accepted = 0;
  double minEig = std::numeric_limits<double>::infinity();
  bool falsified = false;
  std::optional<MatTuple> worst;
};

/// Samples points of the domain of q (rejection plus shrink-toward-zero) at
/// levels up to min(nu*sigma(d+1), 12) and evaluates p there; reports the
/// most negative eigenvalue seen and, when negative beyond tolerance, the
/// offending tuple as an informal witness.
RandomEvalReport randomEvalCheck(const MatPoly& p, const MatPoly& q,
                                 int trials,
                                 std::uint64_t seed = moment::kDefaultSeed);

}  // namespace ncsos::certify
