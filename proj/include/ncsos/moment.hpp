#pragma once

#include "ncsos/freealg.hpp"
#include "ncsos/pencil.hpp"
#include "ncsos/rng.hpp"
#include "ncsos/sdp.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ncsos::moment {

/// Default seed used by every sampling entry point.
inline constexpr std::uint64_t kDefaultSeed = 1729;

/// A linear functional on nu x nu matrix polynomials up to degreeBound,
/// tabulated as lambda(E_st (x) w) for every word w and entry pair (s,t).
/// Words up to the bound are always present (zero until set).
class MomentFunctional {
 public:
  MomentFunctional(int nvars, int nu, int degreeBound);

  int nvars() const { return nvars_; }
  int nu() const { return nu_; }
  int degreeBound() const { return degreeBound_; }

  double value(const Word& w, int s, int t) const;
  /// V(s,t) = lambda(E_st (x) w).
  const Eigen::MatrixXd& valueMatrix(const Word& w) const;
  void setValue(const Word& w, int s, int t, double v);
  void setValueMatrix(const Word& w, const Eigen::MatrixXd& V);

  /// lambda applied to a nu x nu polynomial of degree <= degreeBound.
  double apply(const MatPoly& f) const;

  /// Enforces lambda(E_st (x) w) = lambda(E_ts (x) w*) by averaging.
  void symmetrize();
  double maxSymmetryViolation() const;

  /// this + mu * other (equal shapes and bounds).
  MomentFunctional scaledAdd(double mu, const MomentFunctional& other) const;

 private:
  int nvars_, nu_, degreeBound_;
  std::map<Word, Eigen::MatrixXd> values_;
};

/// Block moment matrix over words of degree <= k, flattened (word, column):
/// entry [(v,t),(u,s)] = lambda(E_st (x) v* u). Needs moments to degree 2k.
Eigen::MatrixXd momentMatrix(const MomentFunctional& lam, int k);

/// Localizing matrix for a symmetric constraint q over words of degree <= k,
/// flattened (word, constraint-row, column): entry [(v,c,a),(u,d,b)] =
/// sum_w (Q_w)_{cd} lambda(E_ab (x) v* w u). Needs moments to 2k + deg q.
Eigen::MatrixXd localizingMatrix(const MomentFunctional& lam, const MatPoly& q,
                                 int k);

/// Tabulates lambda(E_st (x) w) = <w(X) gamma_t, gamma_s> up to degree
/// 2*kmax + 2; gamma carries nu stacked blocks of dim(X).
MomentFunctional functionalFromWitness(const MatTuple& X,
                                       const Eigen::VectorXd& gamma, int nu,
                                       int kmax);

/// The strictly positive reference functional: an average of trace
/// evaluations sum_i 2^{-i} tr(.(X_i)) over points sampled in the ball of
/// radius 1/(2 sum_j |A_j|_2) at level k+1, retried until the degree-k
/// moment block is positive definite.
MomentFunctional referenceFunctional(const MonicPencil& L, int nu, int k,
                                     int nsamples,
                                     std::uint64_t seed = kDefaultSeed);

/// A finite-dimensional refutation: symmetric matrices X with vector gamma.
struct Witness {
  MatTuple X;
  Eigen::VectorXd gamma;  // nu stacked blocks, length nu * dim(X)
  int nu = 1;
  double value = 0.0;  // <p(X) gamma, gamma> once a target p is known

  double pairing(const MatPoly& p) const;
};

/// Refutation SDP over moments to degree 2d+2: moment matrix at d+1 and
/// localizing matrix at d both PSD, lambda(I (x) 1) = 1, trace cap, and
/// objective min lambda(p). Keeps the index maps needed to read the moments
/// back out of a solution.
struct RefutationSdp {
  sdp::SdpProblem problem;
  int d = 0;
  int nu = 1;
  int nvars = 1;
  double traceBound = 0;
  std::vector<Word> momBasis;  // degree <= d+1
  std::vector<Word> locBasis;  // degree <= d
  /// canonical (word, s, t) -> representative upper-triangle position in the
  /// moment block.
  struct Key {
    Word w;
    int s, t;
    bool operator<(const Key& o) const {
      if (w != o.w) return w < o.w;
      if (s != o.s) return s < o.s;
      return t < o.t;
    }
  };
  std::map<Key, std::pair<int, int>> repPosition;

  Key canonical(const Word& w, int s, int t) const;
};

RefutationSdp assembleRefutationSdp(const MatPoly& p, const MonicPencil& L,
                                    int d, double traceBound);

/// Reads the moment functional out of a solved refutation SDP.
MomentFunctional extractFunctional(const RefutationSdp& rsdp,
                                   const sdp::SdpSolution& sol);

struct MixResult {
  bool ok = false;
  double mu = 0.0;
  double blockMinEig = 0.0;
  std::string message;
  std::optional<MomentFunctional> mixed;
};

/// lambda + mu * ref. With mu unset, picks the smallest power of ten
/// >= 1e-8 whose degree-k moment block has min eigenvalue >= 1e-9 while, if
/// margin is given, keeping lambda(margin) below half its original value.
/// A domain pencil, when supplied, additionally requires the localizing
/// matrix at k to clear -1e-8 times the moment-block minimum eigenvalue;
/// that ratio is what bounds how far a GNS point can leave the domain.
MixResult mix(const MomentFunctional& lam, const MomentFunctional& ref,
              std::optional<double> mu, int k,
              const MatPoly* margin = nullptr,
              const MonicPencil* domain = nullptr);

class SingularMomentError : public std::runtime_error {
 public:
  explicit SingularMomentError(const std::string& what)
      : std::runtime_error(what) {}
};

/// GNS extraction at degree k: factors M_k = R^T R, builds the compressed
/// multiplication operators X_j = R^{-T} S_j R^{-1} and gamma from the empty
/// word. Requires the degree-k block PD (min eigenvalue >= 1e-10) and
/// moments to 2k+2; the result reproduces lambda on words of degree <= 2k+1.
Witness gnsExtract(const MomentFunctional& lam, int k);

struct WitnessCheck {
  double residualLow = 0.0;  // max mismatch over degrees <= 2k+1
  double residualTop = 0.0;  // the informational degree-(2k+2) mismatch
};

WitnessCheck verifyWitness(const MomentFunctional& lam, const Witness& w,
                           int k);

struct FlatnessReport {
  bool flat = false;
  int rankK = 0;
  int rankK1 = 0;
};

/// Numerical ranks of M_k and M_{k+1} at rankTol * max eigenvalue.
FlatnessReport flatnessCheck(const MomentFunctional& lam, int k,
                             double rankTol = 1e-6);

enum class RefuteStatus { Witness, NoRefutation, Indeterminate };

struct RefuteOptions {
  double witnessTol = 1e-7;
  double traceBound = 0.0;  // 0 = 1e3 * nu * sigmaDim(d+1)
  std::uint64_t seed = kDefaultSeed;
  sdp::SdpOptions sdp;
};

struct RefuteResult {
  RefuteStatus status = RefuteStatus::Indeterminate;
  std::optional<Witness> witness;
  double optimum = 0.0;         // refutation SDP optimum, lambda(p)
  double domainMinEig = 0.0;    // min eigenvalue of L(X)
  double momentResidual = 0.0;  // GNS match over degrees <= 2d+1
  double mixWeight = 0.0;
  bool nearBoundary = false;  // optimum in (-witnessTol, 0)
  bool traceCapped = false;
  std::string message;
};

/// The refutation pipeline: solve the moment SDP, bail out when the optimum
/// is >= -witnessTol, otherwise mix with the reference functional, extract by
/// GNS and verify. Verification failures surface as Indeterminate, never as
/// an unverified witness.
RefuteResult refute(const MatPoly& p, const MonicPencil& L, int d,
                    const RefuteOptions& opts = {});

}  // namespace ncsos::moment
