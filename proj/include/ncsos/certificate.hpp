#pragma once

#include "ncsos/freealg.hpp"

#include <vector>

namespace ncsos {

/// A weighted sum-of-squares certificate:
///   p = sum_j s_j* s_j + sum_q sum_j f_{q,j}* q_q f_{q,j},
/// with sos factors s_j of shape (anything) x nu and weighted factors f_{q,j}
/// of shape rows(q_q) x nu.
struct Certificate {
  int nu = 1;
  int nvars = 1;
  std::vector<MatPoly> sos;
  std::vector<std::vector<MatPoly>> weighted;  // one list per constraint

  Certificate() = default;
  Certificate(int nu_, int nvars_, std::size_t numConstraints)
      : nu(nu_), nvars(nvars_), weighted(numConstraints) {}

  int maxSosDegree() const;
  int maxWeightedDegree() const;

  /// Symbolic expansion of the right-hand side against the given constraint
  /// polynomials (one per weighted list).
  MatPoly reconstruct(const std::vector<MatPoly>& constraints) const;
};

}  // namespace ncsos
