#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace ncsos {

/// Degree reported for the zero polynomial. A large negative sentinel (rather
/// than a throw) so that degree bounds compose under sums and products.
inline constexpr int kZeroDegree = std::numeric_limits<int>::min() / 4;

/// Coefficient matrices with all entries below this threshold are dropped
/// after every arithmetic operation.
inline constexpr double kCoeffPruneTol = 1e-14;

/// Symmetry tolerance for matrix inputs (tuples, pencil coefficients).
inline constexpr double kSymmetryTol = 1e-12;

/// A word in the free monoid on letters x1..xg. Letters are 1-based indices.
/// The empty word is the monoid identity.
class Word {
 public:
  Word() = default;
  explicit Word(std::vector<int> letters);

  static Word empty() { return Word{}; }
  static Word letter(int j) { return Word{{j}}; }

  int degree() const { return static_cast<int>(letters_.size()); }
  bool isEmpty() const { return letters_.empty(); }
  const std::vector<int>& letters() const { return letters_; }
  int maxLetter() const;

  Word concat(const Word& rhs) const;
  /// The involution: reverses the order of letters.
  Word reversed() const;
  bool isSelfAdjoint() const { return *this == reversed(); }

  /// Graded lexicographic order: shorter words first, ties broken by letter
  /// sequence. This is the canonical monomial order used everywhere.
  bool operator<(const Word& rhs) const;
  bool operator==(const Word& rhs) const { return letters_ == rhs.letters_; }
  bool operator!=(const Word& rhs) const { return !(*this == rhs); }

  /// "1" for the empty word, otherwise "x1*x2*..." in the polynomial grammar.
  std::string str() const;

 private:
  std::vector<int> letters_;
};

/// dim R<x>_d = sum_{j=0}^{d} g^j.
std::int64_t sigmaDim(int nvars, int degree);

/// All words of degree <= maxDegree in graded lexicographic order.
/// The result has length sigmaDim(nvars, maxDegree).
std::vector<Word> enumerateBasis(int nvars, int maxDegree);

/// A tuple of g symmetric n x n matrices: the evaluation points.
class MatTuple {
 public:
  MatTuple(std::vector<Eigen::MatrixXd> entries);
  static MatTuple zero(int nvars, int level);

  int nvars() const { return static_cast<int>(entries_.size()); }
  int level() const { return level_; }
  const Eigen::MatrixXd& operator[](int j) const { return entries_.at(j); }
  const std::vector<Eigen::MatrixXd>& entries() const { return entries_; }

  /// Evaluation of the word: the ordered product of the letter matrices.
  Eigen::MatrixXd wordEval(const Word& w) const;

  /// sqrt(sum_j |X_j|_F^2), the norm used for ball sampling.
  double norm() const;

 private:
  std::vector<Eigen::MatrixXd> entries_;
  int level_ = 0;
};

/// A matrix-valued noncommutative polynomial: a finite map from words to
/// dense real rows x cols coefficient matrices, in nvars letters.
/// Zero rows or cols are allowed (the empty polynomial of that shape), which
/// keeps block constructions uniform.
class MatPoly {
 public:
  MatPoly(int rows, int cols, int nvars);

  static MatPoly constant(const Eigen::MatrixXd& c, int nvars);
  static MatPoly identity(int n, int nvars);
  /// The scalar polynomial x_j.
  static MatPoly variable(int j, int nvars);
  static MatPoly monomial(const Word& w, const Eigen::MatrixXd& coeff,
                          int nvars);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int nvars() const { return nvars_; }

  const std::map<Word, Eigen::MatrixXd>& terms() const { return terms_; }
  /// Coefficient of w; the zero matrix when absent.
  Eigen::MatrixXd coeff(const Word& w) const;
  bool hasTerm(const Word& w) const { return terms_.count(w) != 0; }

  /// Max degree over stored words; kZeroDegree for the zero polynomial.
  int degree() const;
  bool isZero() const { return terms_.empty(); }
  double maxAbsCoeff() const;
  bool isSymmetric(double tol = kSymmetryTol) const;

  MatPoly operator+(const MatPoly& rhs) const;
  MatPoly operator-(const MatPoly& rhs) const;
  MatPoly operator*(const MatPoly& rhs) const;
  MatPoly operator*(double scale) const;
  MatPoly operator-() const { return *this * -1.0; }
  /// The involution: transposes coefficients and reverses words.
  MatPoly adjoint() const;

  /// The polynomial formed by rows [start, start+count) of every coefficient.
  MatPoly middleRows(int start, int count) const;

  /// Adds coeff to the w term (pruning tiny results). The building block for
  /// assemblers; arithmetic operators are implemented on top of it.
  void addTerm(const Word& w, const Eigen::MatrixXd& coeff);

  /// Evaluation at a matrix tuple: sum_w B_w (x) w(X), an (rows*n) x (cols*n)
  /// matrix. The empty word maps to B (x) I_n.
  Eigen::MatrixXd evaluate(const MatTuple& X) const;

 private:
  int rows_, cols_, nvars_;
  std::map<Word, Eigen::MatrixXd> terms_;
};

inline MatPoly operator*(double scale, const MatPoly& p) { return p * scale; }

/// Stacks two polynomials of equal column count vertically.
MatPoly vstack(const MatPoly& top, const MatPoly& bottom);

/// Parse error with 1-based line/column position.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, int line, int column);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_, column_;
};

/// Parses the scalar polynomial grammar
///   poly   := ['+'|'-'] term (('+'|'-') term)*
///   term   := coeff ['*' factor ('*' factor)*] | factor ('*' factor)*
///   factor := var | '(' poly ')' | factor "'"
///   var    := 'x' digits        (1-based index, at most nvars)
/// or, when the text starts with '[', a JSON 2-D array of such strings for a
/// matrix-valued polynomial.
MatPoly parsePoly(const std::string& text, int nvars);

/// Inverse of parsePoly: scalar polynomials render in the grammar, matrix
/// polynomials as a JSON 2-D array of grammar strings. Coefficients print
/// with enough digits to round-trip exactly.
std::string formatPoly(const MatPoly& p);

}  // namespace ncsos
