#pragma once

#include "ncsos/certificate.hpp"
#include "ncsos/freealg.hpp"
#include "ncsos/sdp.hpp"

#include <stdexcept>
#include <vector>

namespace ncsos {

/// L(x) = I_size - sum_j A_j x_j with symmetric coefficients A_j.
class MonicPencil {
 public:
  MonicPencil(std::vector<Eigen::MatrixXd> A);
  /// From a symmetric polynomial of degree <= 1 with q(0) = I.
  static MonicPencil fromPoly(const MatPoly& q);

  int size() const { return size_; }
  int nvars() const { return static_cast<int>(A_.size()); }
  const std::vector<Eigen::MatrixXd>& coeffs() const { return A_; }
  const Eigen::MatrixXd& coeff(int j) const { return A_.at(j); }

  MatPoly toPoly() const;
  Eigen::MatrixXd evaluate(const MatTuple& X) const;

  /// sum_j |A_j|_2 (spectral norms); sets the sampling radius elsewhere.
  double coeffNormSum() const;

 private:
  std::vector<Eigen::MatrixXd> A_;
  int size_ = 0;
};

class NotConcaveError : public std::runtime_error {
 public:
  explicit NotConcaveError(const std::string& what)
      : std::runtime_error(what) {}
};

/// q = I - Lambda - s* s for a monic concave q of degree <= 2.
/// lambda is the degree-1 part (ell x ell), s is homogeneous degree-1 of
/// shape ell' x ell where ell' is the rank of the quadratic block (possibly
/// zero).
struct ConcaveDecomposition {
  MatPoly lambda;
  MatPoly s;

  int ell() const { return lambda.rows(); }
  int ellPrime() const { return s.rows(); }
};

/// Extracts the concave normal form; throws NotConcaveError when deg q > 2
/// or the quadratic block fails to be negative semidefinite (min eigenvalue
/// of the negated block below -1e-9).
ConcaveDecomposition concaveDecompose(const MatPoly& q);

/// The Schur-complement linearization
///   Q = [[I, s], [s*, I - Lambda]],
/// a monic pencil of size ell + ell' whose positivity domain equals the one
/// of q. With ell' = 0 this is just I - Lambda.
MonicPencil linearize(const ConcaveDecomposition& dec);
MonicPencil linearize(const MatPoly& q);

/// Converts a certificate relative to linearize(q) into one relative to q:
/// each weighted factor [f; g] splits into a new sos factor f + s g and a
/// weighted factor g against q. Degrees grow by at most one.
Certificate pullbackCertificate(const Certificate& cert,
                                const ConcaveDecomposition& dec);

struct BoundednessResult {
  bool determinate = false;
  bool bounded = false;
  /// Largest recession-cone coordinate found across the 2g probes.
  double maxRecession = 0.0;
};

/// Decides boundedness of the positivity domain of L through the level-1
/// recession cone {x : -Lambda_A(x) >= 0}: the domain is bounded iff the
/// cone is {0}. Probes via 2g small SDPs maximizing +-x_j over the cone
/// intersected with the unit box.
BoundednessResult isBounded(const MonicPencil& L, double tol = 1e-6,
                            const sdp::SdpOptions& opts = {});

enum class UnitCertStatus { Exists, NotExists, Indeterminate };

/// Result of the search for I = sum_j W_j* L(x) W_j.
struct UnitCertificate {
  UnitCertStatus status = UnitCertStatus::Indeterminate;
  std::vector<Eigen::MatrixXd> W;  // size x targetSize each
  double residual = 0.0;           // max coefficient of sum W*LW - I
  /// On NotExists: coefficients c with sum_j c_j A_j positive definite,
  /// which rules the identity out.
  Eigen::VectorXd evidence;
  double evidenceMinEig = 0.0;
};

/// Feasibility SDP for H >= 0, tr H = 1, tr(A_j H) = 0; factors H into the
/// W_j on success. Exists iff span{A_1..A_g} contains no positive definite
/// matrix.
UnitCertificate unitCertificate(const MonicPencil& L, int targetSize = 1,
                                const sdp::SdpOptions& opts = {});

}  // namespace ncsos
