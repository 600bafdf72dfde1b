#include "ncsos/jsonio.hpp"

#include <cstdio>
#include <cstdlib>
#include <set>

namespace ncsos::jsonio {

namespace {

Word wordFromString(const std::string& text, int nvars) {
  if (text == "1") return Word::empty();
  std::vector<int> letters;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != 'x') {
      throw std::invalid_argument("bad word string '" + text + "'");
    }
    ++i;
    int idx = 0;
    if (i >= text.size() || !std::isdigit(static_cast<unsigned char>(text[i]))) {
      throw std::invalid_argument("bad word string '" + text + "'");
    }
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
      idx = idx * 10 + (text[i++] - '0');
    }
    if (idx < 1 || idx > nvars) {
      throw std::invalid_argument("word letter out of range in '" + text +
                                  "'");
    }
    letters.push_back(idx);
    if (i < text.size()) {
      if (text[i] != '*') {
        throw std::invalid_argument("bad word string '" + text + "'");
      }
      ++i;
    }
  }
  return Word{std::move(letters)};
}

}  // namespace

json matrixToJson(const Eigen::MatrixXd& M) {
  json arr = json::array();
  for (int r = 0; r < M.rows(); ++r) {
    for (int c = 0; c < M.cols(); ++c) arr.push_back(M(r, c));
  }
  return arr;
}

Eigen::MatrixXd matrixFromJson(const json& j, int rows, int cols) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows * cols) {
    throw std::invalid_argument("matrix array has the wrong length");
  }
  Eigen::MatrixXd M(rows, cols);
  int k = 0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) M(r, c) = j[k++].get<double>();
  }
  return M;
}

json toJson(const MatPoly& p) {
  json terms = json::object();
  for (const auto& [w, B] : p.terms()) {
    terms[w.str()] = matrixToJson(B);
  }
  return json{{"shape", {p.rows(), p.cols()}},
              {"nvars", p.nvars()},
              {"terms", std::move(terms)}};
}

MatPoly matPolyFromJson(const json& j) {
  const auto& shape = j.at("shape");
  const int rows = shape.at(0).get<int>();
  const int cols = shape.at(1).get<int>();
  const int nvars = j.at("nvars").get<int>();
  MatPoly p(rows, cols, nvars);
  for (const auto& [key, val] : j.at("terms").items()) {
    p.addTerm(wordFromString(key, nvars), matrixFromJson(val, rows, cols));
  }
  return p;
}

json toJson(const MonicPencil& L) {
  json A = json::array();
  for (const auto& Aj : L.coeffs()) A.push_back(matrixToJson(Aj));
  return json{{"size", L.size()}, {"nvars", L.nvars()}, {"A", std::move(A)}};
}

MonicPencil pencilFromJson(const json& j) {
  const int size = j.at("size").get<int>();
  const int nvars = j.at("nvars").get<int>();
  const auto& A = j.at("A");
  if (!A.is_array() || static_cast<int>(A.size()) != nvars) {
    throw std::invalid_argument("pencil needs one coefficient per variable");
  }
  std::vector<Eigen::MatrixXd> coeffs;
  for (const auto& a : A) coeffs.push_back(matrixFromJson(a, size, size));
  return MonicPencil(std::move(coeffs));
}

json toJson(const Certificate& c) {
  json sos = json::array();
  for (const auto& s : c.sos) sos.push_back(toJson(s));
  json weighted = json::object();
  for (std::size_t qi = 0; qi < c.weighted.size(); ++qi) {
    json list = json::array();
    for (const auto& f : c.weighted[qi]) list.push_back(toJson(f));
    weighted[std::to_string(qi)] = std::move(list);
  }
  return json{{"nu", c.nu},
              {"nvars", c.nvars},
              {"sos", std::move(sos)},
              {"weighted", std::move(weighted)}};
}

Certificate certificateFromJson(const json& j) {
  Certificate c(j.at("nu").get<int>(), j.at("nvars").get<int>(),
                j.at("weighted").size());
  for (const auto& s : j.at("sos")) c.sos.push_back(matPolyFromJson(s));
  for (const auto& [key, list] : j.at("weighted").items()) {
    const std::size_t qi = std::stoul(key);
    if (qi >= c.weighted.size()) {
      throw std::invalid_argument("weighted constraint index out of range");
    }
    for (const auto& f : list) c.weighted[qi].push_back(matPolyFromJson(f));
  }
  return c;
}

json toJson(const moment::Witness& w) {
  json X = json::array();
  for (const auto& Xj : w.X.entries()) X.push_back(matrixToJson(Xj));
  json gamma = json::array();
  for (Eigen::Index i = 0; i < w.gamma.size(); ++i) gamma.push_back(w.gamma[i]);
  return json{{"n", w.X.level()},
              {"X", std::move(X)},
              {"gamma", std::move(gamma)},
              {"value", w.value}};
}

moment::Witness witnessFromJson(const json& j) {
  const int n = j.at("n").get<int>();
  std::vector<Eigen::MatrixXd> X;
  for (const auto& x : j.at("X")) X.push_back(matrixFromJson(x, n, n));
  const auto& g = j.at("gamma");
  Eigen::VectorXd gamma(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) gamma[i] = g[i].get<double>();
  if (gamma.size() % n != 0) {
    throw std::invalid_argument("gamma length must be a multiple of n");
  }
  moment::Witness w{MatTuple(std::move(X)), std::move(gamma),
                    static_cast<int>(gamma.size() / n),
                    j.value("value", 0.0)};
  return w;
}

json toJson(const moment::MomentFunctional& lam) {
  json values = json::object();
  for (const Word& w : enumerateBasis(lam.nvars(), lam.degreeBound())) {
    values[w.str()] = matrixToJson(lam.valueMatrix(w));
  }
  return json{{"nvars", lam.nvars()},
              {"nu", lam.nu()},
              {"degree_bound", lam.degreeBound()},
              {"values", std::move(values)}};
}

moment::MomentFunctional functionalFromJson(const json& j) {
  const int nvars = j.at("nvars").get<int>();
  const int nu = j.at("nu").get<int>();
  const int bound = j.at("degree_bound").get<int>();
  moment::MomentFunctional lam(nvars, nu, bound);
  for (const auto& [key, val] : j.at("values").items()) {
    lam.setValueMatrix(wordFromString(key, nvars),
                       matrixFromJson(val, nu, nu));
  }
  return lam;
}

json roundForReport(const json& j) {
  switch (j.type()) {
    case json::value_t::number_float: {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.12g", j.get<double>());
      return json(std::strtod(buf, nullptr));
    }
    case json::value_t::object: {
      json out = json::object();
      for (const auto& [key, val] : j.items()) out[key] = roundForReport(val);
      return out;
    }
    case json::value_t::array: {
      json out = json::array();
      for (const auto& val : j) out.push_back(roundForReport(val));
      return out;
    }
    default:
      return j;
  }
}

std::string dumpReport(const json& report) {
  return roundForReport(report).dump(2) + "\n";
}

std::vector<std::string> validateReport(const json& report) {
  std::vector<std::string> bad;
  auto need = [&](const char* key) {
    if (!report.contains(key)) bad.push_back(std::string("missing '") + key + "'");
    return report.contains(key);
  };
  if (!report.is_object()) {
    bad.push_back("report is not an object");
    return bad;
  }
  need("residuals");
  if (report.contains("residuals") && !report["residuals"].is_object()) {
    bad.push_back("'residuals' is not an object");
  }
  if (!need("command") || !need("status")) return bad;
  const std::string cmd = report["command"].get<std::string>();
  const std::string status = report["status"].get<std::string>();

  auto expectStatus = [&](std::set<std::string> allowed) {
    if (!allowed.count(status)) {
      bad.push_back("status '" + status + "' invalid for command '" + cmd +
                    "'");
    }
  };
  auto needOnStatus = [&](const std::string& when, const char* key) {
    if (status == when && !report.contains(key)) {
      bad.push_back(std::string("missing '") + key + "' for status '" + when +
                    "'");
    }
  };

  if (cmd == "certify") {
    expectStatus({"certificate", "witness", "indeterminate"});
    needOnStatus("certificate", "certificate");
    needOnStatus("witness", "witness");
  } else if (cmd == "refute") {
    expectStatus({"witness", "no-refutation", "indeterminate"});
    needOnStatus("witness", "witness");
  } else if (cmd == "dominate") {
    expectStatus({"dominates", "refuted", "indeterminate"});
    needOnStatus("dominates", "certificate");
    needOnStatus("refuted", "witness");
  } else if (cmd == "normalize") {
    expectStatus({"linearized", "not-concave"});
    needOnStatus("linearized", "pencil");
  } else if (cmd == "bounded") {
    expectStatus({"bounded", "unbounded", "indeterminate"});
  } else if (cmd == "unitcert") {
    expectStatus({"exists", "nonexistent", "indeterminate"});
    needOnStatus("exists", "W");
    needOnStatus("nonexistent", "evidence");
  } else if (cmd == "gns") {
    expectStatus({"extracted", "singular"});
    needOnStatus("extracted", "witness");
  } else if (cmd == "eval") {
    expectStatus({"evaluated"});
    needOnStatus("evaluated", "value");
    needOnStatus("evaluated", "min_eig");
  } else if (cmd == "export-sdpa") {
    expectStatus({"written"});
    needOnStatus("written", "path");
  } else {
    bad.push_back("unknown command '" + cmd + "'");
  }
  return bad;
}

}  // namespace ncsos::jsonio
