#pragma once

#include "ncsos/certify.hpp"
#include "ncsos/moment.hpp"
#include "ncsos/pencil.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ncsos::domination {

/// L'(x) = S + sum_j V_j* L(x) V_j with S >= 0: an inclusion certificate for
/// the positivity domains.
struct DominationCertificate {
  Eigen::MatrixXd S;
  std::vector<Eigen::MatrixXd> V;
  double residual = 0.0;  // max coefficient of L' - S - sum V* L V
};

enum class DominationStatus { Dominates, Refuted, Indeterminate };

struct DominationResult {
  DominationStatus status = DominationStatus::Indeterminate;
  std::optional<DominationCertificate> certificate;
  std::optional<moment::Witness> witness;
  double witnessDomainMinEig = 0.0;  // min eig L(X)
  double witnessTargetMinEig = 0.0;  // min eig L'(X)
  std::string message;
};

/// Decides whether the domain of L is contained in the domain of Lp by
/// membership of Lp in the constant-degree module of L; a failed inclusion
/// produces a point of the L-domain where Lp evaluates indefinite.
DominationResult checkDomination(const MonicPencil& L, const MonicPencil& Lp,
                                 const certify::CertifyOptions& opts = {});

class NoUnitCertificateError : public std::runtime_error {
 public:
  explicit NoUnitCertificateError(const std::string& what)
      : std::runtime_error(what) {}
};

struct StrengthenResult {
  std::vector<Eigen::MatrixXd> V;
  double residual = 0.0;
};

/// Removes the constant S from a domination certificate by writing
/// S = sum_j (W_j C)* L(x) (W_j C) through the unit certificate of L; only
/// possible when span{A_j} contains no positive definite matrix (always the
/// case for bounded domains). Throws NoUnitCertificateError otherwise.
StrengthenResult strengthenBounded(const MonicPencil& L,
                                   const DominationCertificate& cert);

}  // namespace ncsos::domination
