#include "ncsos/certificate.hpp"

#include <algorithm>
#include <stdexcept>

namespace ncsos {

int Certificate::maxSosDegree() const {
  int d = kZeroDegree;
  for (const auto& s : sos) d = std::max(d, s.degree());
  return d;
}

int Certificate::maxWeightedDegree() const {
  int d = kZeroDegree;
  for (const auto& list : weighted) {
    for (const auto& f : list) d = std::max(d, f.degree());
  }
  return d;
}

MatPoly Certificate::reconstruct(
    const std::vector<MatPoly>& constraints) const {
  if (constraints.size() != weighted.size()) {
    throw std::invalid_argument(
        "certificate carries a weighted list per constraint");
  }
  MatPoly acc(nu, nu, nvars);
  for (const auto& s : sos) {
    if (s.cols() != nu) throw std::invalid_argument("sos factor width != nu");
    acc = acc + s.adjoint() * s;
  }
  for (std::size_t qi = 0; qi < weighted.size(); ++qi) {
    for (const auto& f : weighted[qi]) {
      if (f.cols() != nu || f.rows() != constraints[qi].rows()) {
        throw std::invalid_argument("weighted factor shape mismatch");
      }
      acc = acc + f.adjoint() * constraints[qi] * f;
    }
  }
  return acc;
}

}  // namespace ncsos
