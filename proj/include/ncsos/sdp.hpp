#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace ncsos::sdp {

/// One entry of a symmetric constraint/objective coefficient matrix.
/// Requires row <= col; stands for C(row,col) = C(col,row) = value, so the
/// entry contributes value*Z(row,row) on the diagonal and 2*value*Z(row,col)
/// off it to tr(C Z).
struct Entry {
  int block = 0;
  int row = 0;
  int col = 0;
  double value = 0.0;
};

struct Constraint {
  std::vector<Entry> entries;
  double rhs = 0.0;
};

/// Equality-form problem over a block-diagonal PSD variable Z:
///   min tr(F Z)  subject to  tr(C_i Z) = b_i (i = 1..m),  Z >= 0.
/// An empty objective means a pure feasibility problem (F = 0).
struct SdpProblem {
  std::vector<int> blockDims;
  std::vector<Constraint> constraints;
  std::vector<Entry> objective;

  /// Set by assemblers when a constraint has an empty support but nonzero
  /// right-hand side; such problems are infeasible with no solver run.
  bool triviallyInfeasible = false;

  int numBlocks() const { return static_cast<int>(blockDims.size()); }
  int numConstraints() const { return static_cast<int>(constraints.size()); }
  int totalDim() const;

  /// Throws std::invalid_argument on malformed data (bad indices,
  /// lower-triangle entries, non-positive block sizes, oversized problems).
  void validate() const;
};

enum class SdpStatus { Optimal, Infeasible, Unbounded, Indeterminate };

std::string statusName(SdpStatus s);

struct SdpResiduals {
  double primal = 0.0;  // |A(Z) - b| / (1 + |b|)
  double dual = 0.0;    // |A*(y) + S - F| / (1 + |F|)
  double gap = 0.0;     // |tr(FZ) - b'y| / (1 + max(|tr(FZ)|, |b'y|))
};

struct SdpSolution {
  SdpStatus status = SdpStatus::Indeterminate;
  std::vector<Eigen::MatrixXd> Z;  // primal blocks (PSD)
  std::vector<double> y;           // dual vector
  std::vector<Eigen::MatrixXd> S;  // dual slack blocks (PSD)
  double primalObjective = 0.0;
  double dualObjective = 0.0;
  SdpResiduals residuals;
  int iterations = 0;

  /// On Infeasible: y with b'y = 1 and sum_i y_i C_i <= 0 (a Farkas
  /// certificate); farkasS is the PSD slack with A*(y) + S ~ 0.
  std::vector<double> farkasY;
  std::vector<Eigen::MatrixXd> farkasS;

  /// On Unbounded: an improving ray X >= 0 with A(X) ~ 0, tr(F X) = -1.
  std::vector<Eigen::MatrixXd> ray;
};

struct SdpOptions {
  double feasTol = 1e-8;
  double gapTol = 1e-8;
  int maxIter = 200;
  /// Fraction-to-boundary step damping.
  double stepFrac = 0.98;
  /// Per-iteration trace on stderr.
  bool verbose = false;
};

/// Primal-dual interior-point solve of the homogeneous self-dual embedding.
/// Returns Optimal with certified residuals, Infeasible with a Farkas
/// certificate, Unbounded with an improving ray, or Indeterminate after
/// maxIter iterations.
SdpSolution solve(const SdpProblem& problem, const SdpOptions& opts = {});

/// Residuals recomputed from scratch, independently of the solver.
struct ResidualReport {
  std::vector<double> constraintResiduals;
  double maxConstraintResidual = 0.0;
  double minEig = 0.0;        // most negative eigenvalue over primal blocks
  double primalObjective = 0.0;
  double dualObjective = 0.0;
  double dualityGap = 0.0;         // tr(FZ) - b'y (weak duality: >= -tol)
  double dualSlackMinEig = 0.0;
  double dualResidual = 0.0;       // |A*(y) + S - F|_max

  /// On Infeasible solutions: quality of the Farkas certificate.
  double farkasByMinusOne = 0.0;   // b'y - 1 for the normalized certificate
  double farkasMaxEig = 0.0;       // largest eigenvalue of sum y_i C_i
};

ResidualReport checkSolution(const SdpProblem& problem,
                             const SdpSolution& solution);

/// SDPA sparse ".dat-s" text. Layout: m / nblocks / block sizes / b vector /
/// "matno blkno i j value" lines with 1-based upper-triangle indices, where
/// matrix 0 holds -F and matrix i holds C_i.
std::string exportSdpa(const SdpProblem& problem);

/// Helpers shared by assemblers and verifiers.
double constraintValue(const std::vector<Eigen::MatrixXd>& Z,
                       const Constraint& c);
double entriesValue(const std::vector<Eigen::MatrixXd>& Z,
                    const std::vector<Entry>& entries);
std::vector<Eigen::MatrixXd> entriesToMatrices(const SdpProblem& problem,
                                               const std::vector<Entry>& e);

}  // namespace ncsos::sdp
