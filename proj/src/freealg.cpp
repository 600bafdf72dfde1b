#include "ncsos/freealg.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace ncsos {

namespace {

std::string shapeStr(int r, int c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

Word::Word(std::vector<int> letters) : letters_(std::move(letters)) {
  for (int j : letters_) {
    if (j < 1) {
      throw std::invalid_argument("word letters are 1-based, got " +
                                  std::to_string(j));
    }
  }
}

int Word::maxLetter() const {
  int m = 0;
  for (int j : letters_) m = std::max(m, j);
  return m;
}

Word Word::concat(const Word& rhs) const {
  std::vector<int> out = letters_;
  out.insert(out.end(), rhs.letters_.begin(), rhs.letters_.end());
  return Word{std::move(out)};
}

Word Word::reversed() const {
  std::vector<int> out(letters_.rbegin(), letters_.rend());
  return Word{std::move(out)};
}

bool Word::operator<(const Word& rhs) const {
  if (letters_.size() != rhs.letters_.size())
    return letters_.size() < rhs.letters_.size();
  return letters_ < rhs.letters_;
}

std::string Word::str() const {
  if (letters_.empty()) return "1";
  std::string out;
  for (std::size_t i = 0; i < letters_.size(); ++i) {
    if (i) out += '*';
    out += 'x';
    out += std::to_string(letters_[i]);
  }
  return out;
}

std::int64_t sigmaDim(int nvars, int degree) {
  if (nvars < 1 || degree < 0) {
    throw std::invalid_argument("sigmaDim requires nvars >= 1, degree >= 0");
  }
  std::int64_t total = 0, power = 1;
  for (int j = 0; j <= degree; ++j) {
    total += power;
    power *= nvars;
  }
  return total;
}

std::vector<Word> enumerateBasis(int nvars, int maxDegree) {
  if (nvars < 1 || maxDegree < 0) {
    throw std::invalid_argument(
        "enumerateBasis requires nvars >= 1, maxDegree >= 0");
  }
  std::vector<Word> basis;
  basis.reserve(static_cast<std::size_t>(sigmaDim(nvars, maxDegree)));
  basis.push_back(Word::empty());
  std::size_t levelBegin = 0;
  for (int d = 1; d <= maxDegree; ++d) {
    const std::size_t levelEnd = basis.size();
    for (std::size_t i = levelBegin; i < levelEnd; ++i) {
      for (int j = 1; j <= nvars; ++j) {
        basis.push_back(basis[i].concat(Word::letter(j)));
      }
    }
    levelBegin = levelEnd;
  }
  return basis;
}

MatTuple::MatTuple(std::vector<Eigen::MatrixXd> entries)
    : entries_(std::move(entries)) {
  if (entries_.empty()) {
    throw std::invalid_argument("a matrix tuple needs at least one entry");
  }
  level_ = static_cast<int>(entries_[0].rows());
  for (auto& X : entries_) {
    if (X.rows() != level_ || X.cols() != level_) {
      throw std::invalid_argument("tuple entries must be square of one size");
    }
    if ((X - X.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol) {
      throw std::invalid_argument("tuple entries must be symmetric");
    }
    X = ((X + X.transpose()) / 2.0).eval();
  }
}

MatTuple MatTuple::zero(int nvars, int level) {
  return MatTuple(std::vector<Eigen::MatrixXd>(
      nvars, Eigen::MatrixXd::Zero(level, level)));
}

Eigen::MatrixXd MatTuple::wordEval(const Word& w) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Identity(level_, level_);
  for (int j : w.letters()) {
    if (j > nvars()) {
      throw std::invalid_argument("word letter exceeds tuple arity");
    }
    out = out * entries_[j - 1];
  }
  return out;
}

double MatTuple::norm() const {
  double sq = 0;
  for (const auto& X : entries_) sq += X.squaredNorm();
  return std::sqrt(sq);
}

MatPoly::MatPoly(int rows, int cols, int nvars)
    : rows_(rows), cols_(cols), nvars_(nvars) {
  if (rows < 0 || cols < 0 || nvars < 1) {
    throw std::invalid_argument("bad MatPoly shape " + shapeStr(rows, cols));
  }
}

MatPoly MatPoly::constant(const Eigen::MatrixXd& c, int nvars) {
  MatPoly p(static_cast<int>(c.rows()), static_cast<int>(c.cols()), nvars);
  p.addTerm(Word::empty(), c);
  return p;
}

MatPoly MatPoly::identity(int n, int nvars) {
  return constant(Eigen::MatrixXd::Identity(n, n), nvars);
}

MatPoly MatPoly::variable(int j, int nvars) {
  if (j < 1 || j > nvars) {
    throw std::invalid_argument("variable index out of range");
  }
  MatPoly p(1, 1, nvars);
  p.addTerm(Word::letter(j), Eigen::MatrixXd::Ones(1, 1));
  return p;
}

MatPoly MatPoly::monomial(const Word& w, const Eigen::MatrixXd& coeff,
                          int nvars) {
  if (w.maxLetter() > nvars) {
    throw std::invalid_argument("word letter exceeds nvars");
  }
  MatPoly p(static_cast<int>(coeff.rows()), static_cast<int>(coeff.cols()),
            nvars);
  p.addTerm(w, coeff);
  return p;
}

Eigen::MatrixXd MatPoly::coeff(const Word& w) const {
  auto it = terms_.find(w);
  if (it == terms_.end()) return Eigen::MatrixXd::Zero(rows_, cols_);
  return it->second;
}

int MatPoly::degree() const {
  if (terms_.empty()) return kZeroDegree;
  return terms_.rbegin()->first.degree();
}

double MatPoly::maxAbsCoeff() const {
  double m = 0;
  for (const auto& [w, B] : terms_) {
    if (B.size() > 0) m = std::max(m, B.cwiseAbs().maxCoeff());
  }
  return m;
}

bool MatPoly::isSymmetric(double tol) const {
  if (rows_ != cols_) return false;
  for (const auto& [w, B] : terms_) {
    Eigen::MatrixXd mirror = coeff(w.reversed());
    if ((B - mirror.transpose()).cwiseAbs().maxCoeff() > tol) return false;
  }
  return true;
}

void MatPoly::addTerm(const Word& w, const Eigen::MatrixXd& coeff) {
  if (coeff.rows() != rows_ || coeff.cols() != cols_) {
    throw std::invalid_argument("coefficient shape mismatch: expected " +
                                shapeStr(rows_, cols_) + ", got " +
                                shapeStr(static_cast<int>(coeff.rows()),
                                         static_cast<int>(coeff.cols())));
  }
  if (w.maxLetter() > nvars_) {
    throw std::invalid_argument("word letter exceeds nvars");
  }
  auto [it, inserted] = terms_.try_emplace(w, coeff);
  if (!inserted) it->second += coeff;
  if (it->second.size() == 0 ||
      it->second.cwiseAbs().maxCoeff() < kCoeffPruneTol) {
    terms_.erase(it);
  }
}

MatPoly MatPoly::operator+(const MatPoly& rhs) const {
  if (rows_ != rhs.rows_ || cols_ != rhs.cols_ || nvars_ != rhs.nvars_) {
    throw std::invalid_argument("shape mismatch in polynomial sum");
  }
  MatPoly out = *this;
  for (const auto& [w, B] : rhs.terms_) out.addTerm(w, B);
  return out;
}

MatPoly MatPoly::operator-(const MatPoly& rhs) const {
  return *this + (rhs * -1.0);
}

MatPoly MatPoly::operator*(const MatPoly& rhs) const {
  if (cols_ != rhs.rows_ || nvars_ != rhs.nvars_) {
    throw std::invalid_argument("shape mismatch in polynomial product: " +
                                shapeStr(rows_, cols_) + " * " +
                                shapeStr(rhs.rows_, rhs.cols_));
  }
  MatPoly out(rows_, rhs.cols_, nvars_);
  for (const auto& [w1, B1] : terms_) {
    for (const auto& [w2, B2] : rhs.terms_) {
      out.addTerm(w1.concat(w2), B1 * B2);
    }
  }
  return out;
}

MatPoly MatPoly::operator*(double scale) const {
  MatPoly out(rows_, cols_, nvars_);
  for (const auto& [w, B] : terms_) out.addTerm(w, B * scale);
  return out;
}

MatPoly MatPoly::adjoint() const {
  MatPoly out(cols_, rows_, nvars_);
  for (const auto& [w, B] : terms_) {
    out.addTerm(w.reversed(), B.transpose());
  }
  return out;
}

MatPoly MatPoly::middleRows(int start, int count) const {
  if (start < 0 || count < 0 || start + count > rows_) {
    throw std::invalid_argument("row block out of range");
  }
  MatPoly out(count, cols_, nvars_);
  for (const auto& [w, B] : terms_) {
    out.addTerm(w, B.middleRows(start, count));
  }
  return out;
}

MatPoly vstack(const MatPoly& top, const MatPoly& bottom) {
  if (top.cols() != bottom.cols() || top.nvars() != bottom.nvars()) {
    throw std::invalid_argument("vstack shape mismatch");
  }
  MatPoly out(top.rows() + bottom.rows(), top.cols(), top.nvars());
  for (const auto& [w, B] : top.terms()) {
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(out.rows(), out.cols());
    C.topRows(top.rows()) = B;
    out.addTerm(w, C);
  }
  for (const auto& [w, B] : bottom.terms()) {
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(out.rows(), out.cols());
    C.bottomRows(bottom.rows()) = B;
    out.addTerm(w, C);
  }
  return out;
}

Eigen::MatrixXd MatPoly::evaluate(const MatTuple& X) const {
  if (nvars_ != X.nvars()) {
    throw std::invalid_argument("evaluation arity mismatch");
  }
  const int n = X.level();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows_ * n, cols_ * n);
  for (const auto& [w, B] : terms_) {
    const Eigen::MatrixXd wx = X.wordEval(w);
    for (int r = 0; r < rows_; ++r) {
      for (int c = 0; c < cols_; ++c) {
        if (B(r, c) != 0.0) {
          out.block(r * n, c * n, n, n) += B(r, c) * wx;
        }
      }
    }
  }
  return out;
}

ParseError::ParseError(const std::string& message, int line, int column)
    : std::runtime_error(message + " (line " + std::to_string(line) +
                         ", column " + std::to_string(column) + ")"),
      line_(line),
      column_(column) {}

namespace {

// Recursive-descent parser for the scalar grammar.
class PolyParser {
 public:
  PolyParser(const std::string& text, int nvars)
      : text_(text), nvars_(nvars) {}

  MatPoly parse() {
    MatPoly p = parsePolySum();
    skipSpace();
    if (pos_ < text_.size()) fail("trailing input after polynomial");
    return p;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, line_, col_);
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  char advance() {
    char c = text_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skipSpace() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(
                                      text_[pos_]))) {
      advance();
    }
  }

  bool consume(char c) {
    skipSpace();
    if (peek() == c) {
      advance();
      return true;
    }
    return false;
  }

  MatPoly parsePolySum() {
    skipSpace();
    double sign = 1.0;
    if (consume('-')) sign = -1.0;
    else consume('+');
    MatPoly p = parseTerm() * sign;
    for (;;) {
      skipSpace();
      if (consume('+')) {
        p = p + parseTerm();
      } else if (consume('-')) {
        p = p - parseTerm();
      } else {
        break;
      }
    }
    return p;
  }

  MatPoly parseTerm() {
    skipSpace();
    MatPoly p = MatPoly::constant(Eigen::MatrixXd::Ones(1, 1), nvars_);
    bool sawAnything = false;
    if (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.') {
      p = p * parseNumber();
      sawAnything = true;
      if (!consume('*')) return p;
    }
    for (;;) {
      p = p * parseFactor();
      sawAnything = true;
      if (!consume('*')) break;
    }
    if (!sawAnything) fail("expected a term");
    return p;
  }

  MatPoly parseFactor() {
    skipSpace();
    MatPoly p(1, 1, nvars_);
    if (consume('(')) {
      p = parsePolySum();
      if (!consume(')')) fail("expected ')'");
    } else if (peek() == 'x') {
      advance();
      if (!std::isdigit(static_cast<unsigned char>(peek()))) {
        fail("expected a variable index after 'x'");
      }
      long idx = 0;
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        idx = idx * 10 + (advance() - '0');
        if (idx > 1'000'000) fail("variable index too large");
      }
      if (idx < 1 || idx > nvars_) {
        fail("variable index " + std::to_string(idx) + " out of range [1, " +
             std::to_string(nvars_) + "]");
      }
      p = MatPoly::variable(static_cast<int>(idx), nvars_);
    } else {
      fail(peek() == '\0' ? "unexpected end of input"
                          : std::string("unexpected character '") + peek() +
                                "'");
    }
    while (consume('\'')) p = p.adjoint();
    return p;
  }

  double parseNumber() {
    skipSpace();
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
            text_[pos_] == '.')) {
      advance();
    }
    // Exponent part, e.g. 1.5e-3.
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t mark = pos_;
      advance();
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) {
        advance();
      }
      if (pos_ < text_.size() &&
          std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        while (pos_ < text_.size() &&
               std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
          advance();
        }
      } else {
        pos_ = mark;  // 'e' belonged to something else; not a valid exponent
      }
    }
    const std::string token = text_.substr(start, pos_ - start);
    try {
      std::size_t used = 0;
      double v = std::stod(token, &used);
      if (used != token.size()) fail("malformed number '" + token + "'");
      return v;
    } catch (const std::exception&) {
      fail("malformed number '" + token + "'");
    }
  }

  const std::string& text_;
  int nvars_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

std::string formatScalar(const MatPoly& p);

std::string formatCoeff(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string formatScalar(const MatPoly& p) {
  if (p.terms().empty()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [w, B] : p.terms()) {
    const double c = B(0, 0);
    const double a = std::abs(c);
    std::string piece;
    if (w.isEmpty()) {
      piece = formatCoeff(a);
    } else if (a == 1.0) {
      piece = w.str();
    } else {
      piece = formatCoeff(a) + "*" + w.str();
    }
    if (first) {
      out = (c < 0 ? "-" : "") + piece;
      first = false;
    } else {
      out += (c < 0 ? " - " : " + ") + piece;
    }
  }
  return out;
}

}  // namespace

MatPoly parsePoly(const std::string& text, int nvars) {
  if (nvars < 1) throw std::invalid_argument("nvars must be >= 1");
  std::size_t i = 0;
  while (i < text.size() &&
         std::isspace(static_cast<unsigned char>(text[i]))) {
    ++i;
  }
  if (i < text.size() && text[i] == '[') {
    nlohmann::json grid;
    try {
      grid = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("bad JSON polynomial grid: ") + e.what(), 1,
                       1);
    }
    if (!grid.is_array() || grid.empty()) {
      throw ParseError("polynomial grid must be a non-empty 2-D array", 1, 1);
    }
    const int rows = static_cast<int>(grid.size());
    int cols = -1;
    MatPoly out(1, 1, nvars);
    std::vector<std::vector<MatPoly>> cells;
    for (const auto& row : grid) {
      if (!row.is_array() || (cols >= 0 && static_cast<int>(row.size()) != cols)) {
        throw ParseError("polynomial grid rows must be arrays of equal length",
                         1, 1);
      }
      cols = static_cast<int>(row.size());
      std::vector<MatPoly> cellRow;
      for (const auto& cell : row) {
        if (!cell.is_string()) {
          throw ParseError("polynomial grid entries must be strings", 1, 1);
        }
        cellRow.push_back(PolyParser(cell.get<std::string>(), nvars).parse());
      }
      cells.push_back(std::move(cellRow));
    }
    if (cols < 1) {
      throw ParseError("polynomial grid must have at least one column", 1, 1);
    }
    MatPoly result(rows, cols, nvars);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        for (const auto& [w, B] : cells[r][c].terms()) {
          Eigen::MatrixXd coeff = Eigen::MatrixXd::Zero(rows, cols);
          coeff(r, c) = B(0, 0);
          result.addTerm(w, coeff);
        }
      }
    }
    return result;
  }
  return PolyParser(text, nvars).parse();
}

std::string formatPoly(const MatPoly& p) {
  if (p.rows() == 1 && p.cols() == 1) return formatScalar(p);
  nlohmann::json grid = nlohmann::json::array();
  for (int r = 0; r < p.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < p.cols(); ++c) {
      MatPoly cell(1, 1, p.nvars());
      for (const auto& [w, B] : p.terms()) {
        if (B(r, c) != 0.0) {
          cell.addTerm(w, Eigen::MatrixXd::Constant(1, 1, B(r, c)));
        }
      }
      row.push_back(formatScalar(cell));
    }
    grid.push_back(std::move(row));
  }
  return grid.dump();
}

}  // namespace ncsos
