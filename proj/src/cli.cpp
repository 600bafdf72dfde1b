#include "ncsos/cli.hpp"

#include "ncsos/certify.hpp"
#include "ncsos/domination.hpp"
#include "ncsos/jsonio.hpp"
#include "ncsos/moment.hpp"
#include "ncsos/pencil.hpp"
#include "ncsos/sdp.hpp"

#include <CLI11.hpp>

#include <cctype>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace ncsos::cli {

namespace {

using jsonio::json;

struct RunConfig {
  int degree = -1;
  double feasTol = 1e-8;
  double witnessTol = 1e-7;
  double rankTol = 1e-9;
  std::uint64_t seed = moment::kDefaultSeed;
  std::string format = "json";
  int maxIter = 200;
};

void addCommonFlags(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--degree", cfg.degree, "degree parameter d override");
  cmd->add_option("--tol", cfg.feasTol, "SDP feasibility tolerance");
  cmd->add_option("--witness-tol", cfg.witnessTol, "witness value tolerance");
  cmd->add_option("--rank-tol", cfg.rankTol, "Gram factorization rank cutoff");
  cmd->add_option("--seed", cfg.seed, "seed for all sampling");
  cmd->add_option("--max-iter", cfg.maxIter, "SDP iteration cap");
  cmd->add_option("--format", cfg.format, "report format (json)")
      ->check(CLI::IsMember({"json"}));
}

void applyConfig(const RunConfig& cfg, certify::CertifyOptions& opts) {
  opts.degree = cfg.degree;
  opts.witnessTol = cfg.witnessTol;
  opts.rankTol = cfg.rankTol;
  opts.seed = cfg.seed;
  opts.sdp.feasTol = cfg.feasTol;
  opts.sdp.maxIter = cfg.maxIter;
}

json tolerancesJson(const RunConfig& cfg) {
  return json{{"feas_tol", cfg.feasTol},
              {"witness_tol", cfg.witnessTol},
              {"rank_tol", cfg.rankTol}};
}

json paramsJson(const RunConfig& cfg) {
  return json{{"degree", cfg.degree},
              {"seed", cfg.seed},
              {"tolerances", tolerancesJson(cfg)}};
}

/// File contents when the argument names a readable file, else the literal.
std::string loadArg(const std::string& arg) {
  std::error_code ec;
  if (std::filesystem::is_regular_file(arg, ec)) {
    std::ifstream in(arg);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  return arg;
}

/// Largest variable index mentioned as x<digits> anywhere in the text.
int scanMaxVar(const std::string& text) {
  int best = 0;
  for (std::size_t i = 0; i + 1 < text.size(); ++i) {
    if (text[i] == 'x' &&
        std::isdigit(static_cast<unsigned char>(text[i + 1]))) {
      int v = 0;
      std::size_t j = i + 1;
      while (j < text.size() &&
             std::isdigit(static_cast<unsigned char>(text[j]))) {
        v = v * 10 + (text[j++] - '0');
      }
      best = std::max(best, v);
    }
  }
  return best;
}

bool looksLikeJsonObject(const std::string& text) {
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    return c == '{';
  }
  return false;
}

MonicPencil loadPencil(const std::string& arg, int minVars) {
  const std::string text = loadArg(arg);
  if (looksLikeJsonObject(text)) {
    return jsonio::pencilFromJson(json::parse(text));
  }
  const int g = std::max({1, minVars, scanMaxVar(text)});
  return MonicPencil::fromPoly(parsePoly(text, g));
}

MatTuple tupleFromJson(const json& j) {
  const int n = j.at("n").get<int>();
  std::vector<Eigen::MatrixXd> X;
  for (const auto& x : j.at("X")) {
    X.push_back(jsonio::matrixFromJson(x, n, n));
  }
  return MatTuple(std::move(X));
}

double minEigOf(const Eigen::MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M,
                                                    Eigen::EigenvaluesOnly);
  return M.rows() ? es.eigenvalues().minCoeff() : 0.0;
}

int emit(std::ostream& out, const json& report, int code) {
  out << jsonio::dumpReport(report);
  return code;
}

int runCertify(const std::string& pArg, const std::string& qArg,
               const std::string& lArg, const std::string& modeArg,
               const RunConfig& cfg, std::ostream& out) {
  certify::CertifyOptions opts;
  applyConfig(cfg, opts);
  if (modeArg == "linear") opts.mode = certify::DomainMode::Linear;
  if (modeArg == "concave") opts.mode = certify::DomainMode::Concave;

  const std::string pText = loadArg(pArg);
  MatPoly q = [&]() {
    if (!lArg.empty()) {
      MonicPencil L = loadPencil(lArg, scanMaxVar(pText));
      return L.toPoly();
    }
    const std::string qText = loadArg(qArg);
    const int g = std::max({1, scanMaxVar(pText), scanMaxVar(qText)});
    return parsePoly(qText, g);
  }();
  MatPoly p = parsePoly(pText, q.nvars());

  certify::CertifyResult res = certify::certifyNonneg(p, q, opts);
  json report{{"command", "certify"}, {"params", paramsJson(cfg)}};
  report["params"]["degree"] = res.d;
  report["params"]["mode"] =
      res.modeUsed == certify::DomainMode::Concave ? "concave" : "linear";
  switch (res.status) {
    case certify::CertifyStatus::Certificate:
      report["status"] = "certificate";
      report["certificate"] = jsonio::toJson(*res.certificate);
      report["residuals"] =
          json{{"certificate_residual", res.certificateResidual}};
      return emit(out, report, 0);
    case certify::CertifyStatus::Witness:
      report["status"] = "witness";
      report["witness"] = jsonio::toJson(*res.witness);
      report["residuals"] = json{{"value", res.witnessValue},
                                 {"domain_min_eig", res.witnessDomainMinEig},
                                 {"moment_residual",
                                  res.witnessMomentResidual},
                                 {"refutation_optimum",
                                  res.refutationOptimum}};
      return emit(out, report, 1);
    default:
      report["status"] = "indeterminate";
      report["message"] = res.message;
      report["residuals"] = json::object();
      return emit(out, report, 2);
  }
}

int runRefute(const std::string& pArg, const std::string& lArg,
              const RunConfig& cfg, std::ostream& out) {
  const std::string pText = loadArg(pArg);
  MonicPencil L = loadPencil(lArg, scanMaxVar(pText));
  MatPoly p = parsePoly(pText, L.nvars());
  const int d = cfg.degree >= 0 ? cfg.degree : std::max(0, p.degree()) / 2;

  moment::RefuteOptions opts;
  opts.witnessTol = cfg.witnessTol;
  opts.seed = cfg.seed;
  opts.sdp.feasTol = cfg.feasTol;
  opts.sdp.maxIter = cfg.maxIter;
  moment::RefuteResult res = moment::refute(p, L, d, opts);

  json report{{"command", "refute"}, {"params", paramsJson(cfg)}};
  report["params"]["degree"] = d;
  json residuals{{"optimum", res.optimum}};
  if (res.traceCapped) residuals["trace_capped"] = true;
  switch (res.status) {
    case moment::RefuteStatus::Witness:
      report["status"] = "witness";
      report["witness"] = jsonio::toJson(*res.witness);
      residuals["value"] = res.witness->value;
      residuals["domain_min_eig"] = res.domainMinEig;
      residuals["moment_residual"] = res.momentResidual;
      residuals["mix_weight"] = res.mixWeight;
      report["residuals"] = residuals;
      return emit(out, report, 1);
    case moment::RefuteStatus::NoRefutation:
      report["status"] = "no-refutation";
      if (res.nearBoundary) report["message"] = res.message;
      report["residuals"] = residuals;
      return emit(out, report, 0);
    default:
      report["status"] = "indeterminate";
      report["message"] = res.message;
      report["residuals"] = residuals;
      return emit(out, report, 2);
  }
}

int runDominate(const std::string& lArg, const std::string& pArg,
                const RunConfig& cfg, std::ostream& out) {
  MonicPencil L = loadPencil(lArg, 0);
  MonicPencil Lp = loadPencil(pArg, L.nvars());
  certify::CertifyOptions opts;
  applyConfig(cfg, opts);
  domination::DominationResult res = domination::checkDomination(L, Lp, opts);

  json report{{"command", "dominate"}, {"params", paramsJson(cfg)}};
  switch (res.status) {
    case domination::DominationStatus::Dominates: {
      report["status"] = "dominates";
      json V = json::array();
      for (const auto& Vj : res.certificate->V) {
        V.push_back(jsonio::matrixToJson(Vj));
      }
      report["certificate"] = json{{"ell", L.size()},
                                   {"ell_prime", Lp.size()},
                                   {"S", jsonio::matrixToJson(res.certificate->S)},
                                   {"V", std::move(V)}};
      report["residuals"] =
          json{{"identity_residual", res.certificate->residual}};
      return emit(out, report, 0);
    }
    case domination::DominationStatus::Refuted:
      report["status"] = "refuted";
      report["witness"] = jsonio::toJson(*res.witness);
      report["residuals"] = json{{"domain_min_eig", res.witnessDomainMinEig},
                                 {"target_min_eig", res.witnessTargetMinEig}};
      return emit(out, report, 1);
    default:
      report["status"] = "indeterminate";
      report["message"] = res.message;
      report["residuals"] = json::object();
      return emit(out, report, 2);
  }
}

int runNormalize(const std::string& qArg, const RunConfig& cfg,
                 std::ostream& out) {
  const std::string qText = loadArg(qArg);
  MatPoly q = parsePoly(qText, std::max(1, scanMaxVar(qText)));
  json report{{"command", "normalize"}, {"params", paramsJson(cfg)}};
  try {
    ConcaveDecomposition dec = concaveDecompose(q);
    MonicPencil Q = linearize(dec);
    MatPoly back = MatPoly::identity(q.rows(), q.nvars()) - dec.lambda -
                   dec.s.adjoint() * dec.s;
    report["status"] = "linearized";
    report["lambda"] = jsonio::toJson(dec.lambda);
    report["s"] = jsonio::toJson(dec.s);
    report["pencil"] = jsonio::toJson(Q);
    report["residuals"] =
        json{{"reconstruction_residual", (back - q).maxAbsCoeff()}};
    return emit(out, report, 0);
  } catch (const NotConcaveError& e) {
    report["status"] = "not-concave";
    report["message"] = e.what();
    report["residuals"] = json::object();
    return emit(out, report, 1);
  }
}

int runBounded(const std::string& lArg, const RunConfig& cfg,
               std::ostream& out) {
  MonicPencil L = loadPencil(lArg, 0);
  sdp::SdpOptions sopts;
  sopts.feasTol = cfg.feasTol;
  sopts.maxIter = cfg.maxIter;
  BoundednessResult res = isBounded(L, 1e-6, sopts);
  json report{{"command", "bounded"},
              {"params", paramsJson(cfg)},
              {"residuals", json{{"max_recession", res.maxRecession}}}};
  if (!res.determinate) {
    report["status"] = "indeterminate";
    return emit(out, report, 2);
  }
  report["status"] = res.bounded ? "bounded" : "unbounded";
  return emit(out, report, res.bounded ? 0 : 1);
}

int runUnitCert(const std::string& lArg, int targetSize, const RunConfig& cfg,
                std::ostream& out) {
  MonicPencil L = loadPencil(lArg, 0);
  sdp::SdpOptions sopts;
  sopts.feasTol = cfg.feasTol;
  sopts.maxIter = cfg.maxIter;
  UnitCertificate uc = unitCertificate(L, targetSize, sopts);
  json report{{"command", "unitcert"}, {"params", paramsJson(cfg)}};
  switch (uc.status) {
    case UnitCertStatus::Exists: {
      json W = json::array();
      for (const auto& Wj : uc.W) W.push_back(jsonio::matrixToJson(Wj));
      report["status"] = "exists";
      report["W"] = std::move(W);
      report["target_size"] = targetSize;
      report["residuals"] = json{{"identity_residual", uc.residual}};
      return emit(out, report, 0);
    }
    case UnitCertStatus::NotExists: {
      json ev = json::array();
      for (Eigen::Index i = 0; i < uc.evidence.size(); ++i) {
        ev.push_back(uc.evidence[i]);
      }
      report["status"] = "nonexistent";
      report["evidence"] = std::move(ev);
      report["residuals"] = json{{"evidence_min_eig", uc.evidenceMinEig}};
      return emit(out, report, 1);
    }
    default:
      report["status"] = "indeterminate";
      report["residuals"] = json::object();
      return emit(out, report, 2);
  }
}

int runGns(const std::string& fArg, int level, const RunConfig& cfg,
           std::ostream& out) {
  moment::MomentFunctional lam =
      jsonio::functionalFromJson(json::parse(loadArg(fArg)));
  json report{{"command", "gns"}, {"params", paramsJson(cfg)}};
  report["params"]["level"] = level;
  try {
    moment::Witness w = moment::gnsExtract(lam, level);
    moment::WitnessCheck wc = moment::verifyWitness(lam, w, level);
    report["status"] = "extracted";
    report["witness"] = jsonio::toJson(w);
    report["residuals"] = json{{"moment_residual_low", wc.residualLow},
                               {"moment_residual_top", wc.residualTop}};
    return emit(out, report, 0);
  } catch (const moment::SingularMomentError& e) {
    report["status"] = "singular";
    report["message"] = e.what();
    report["residuals"] = json::object();
    return emit(out, report, 2);
  }
}

int runEval(const std::string& pArg, const std::string& xArg,
            const RunConfig& cfg, std::ostream& out) {
  MatTuple X = tupleFromJson(json::parse(loadArg(xArg)));
  const std::string pText = loadArg(pArg);
  MatPoly p = parsePoly(pText, X.nvars());
  Eigen::MatrixXd val = p.evaluate(X);
  json report{{"command", "eval"},
              {"params", paramsJson(cfg)},
              {"status", "evaluated"},
              {"value", jsonio::matrixToJson(val)},
              {"rows", val.rows()},
              {"cols", val.cols()},
              {"min_eig", val.rows() == val.cols()
                              ? minEigOf(((val + val.transpose()) / 2).eval())
                              : 0.0},
              {"residuals", json::object()}};
  return emit(out, report, 0);
}

int runExportSdpa(const std::string& pArg, const std::string& qArg,
                  const std::string& lArg, int alpha, int beta,
                  const std::string& outPath, const RunConfig& cfg,
                  std::ostream& out) {
  const std::string pText = loadArg(pArg);
  MatPoly q = [&]() {
    if (!lArg.empty()) return loadPencil(lArg, scanMaxVar(pText)).toPoly();
    const std::string qText = loadArg(qArg);
    const int g = std::max({1, scanMaxVar(pText), scanMaxVar(qText)});
    return parsePoly(qText, g);
  }();
  MatPoly p = parsePoly(pText, q.nvars());

  certify::QuadModuleSpec spec;
  spec.constraints = {q};
  spec.nu = p.rows();
  spec.nvars = p.nvars();
  if (alpha >= 0 && beta >= 0) {
    spec.alpha = alpha;
    spec.beta = beta;
  } else {
    const int d = cfg.degree >= 0 ? cfg.degree : std::max(0, p.degree()) / 2;
    spec.alpha = spec.beta = d;
  }
  certify::MembershipSdp ms = certify::assembleMembershipSdp(p, spec);
  const std::string text = sdp::exportSdpa(ms.problem);
  if (outPath == "-") {
    out << text;
    return 0;
  }
  std::ofstream file(outPath);
  if (!file) throw std::runtime_error("cannot write " + outPath);
  file << text;
  json report{{"command", "export-sdpa"},
              {"params", paramsJson(cfg)},
              {"status", "written"},
              {"path", outPath},
              {"m", ms.problem.numConstraints()},
              {"blocks", ms.problem.blockDims},
              {"residuals", json::object()}};
  return emit(out, report, 0);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"certify-or-refute engine for matrix polynomial positivity "
               "on LMI and concave domains"};
  app.require_subcommand(1);
  RunConfig cfg;

  std::string pArg, qArg, lArg, xArg, fArg, modeArg = "auto", sdpaOut = "-";
  int targetSize = 1, level = 0, alpha = -1, beta = -1;

  auto* certifyCmd =
      app.add_subcommand("certify", "certificate or witness for p on the "
                         "domain of q");
  certifyCmd->add_option("-p", pArg, "target polynomial (text or file)")
      ->required();
  certifyCmd->add_option("-q", qArg, "domain polynomial (monic, concave)");
  certifyCmd->add_option("-L", lArg, "domain pencil (JSON or linear text)");
  certifyCmd->add_option("--mode", modeArg, "auto|linear|concave")
      ->check(CLI::IsMember({"auto", "linear", "concave"}));
  addCommonFlags(certifyCmd, cfg);

  auto* refuteCmd =
      app.add_subcommand("refute", "search for a counterexample tuple");
  refuteCmd->add_option("-p", pArg, "target polynomial")->required();
  refuteCmd->add_option("-L", lArg, "domain pencil")->required();
  addCommonFlags(refuteCmd, cfg);

  auto* dominateCmd =
      app.add_subcommand("dominate", "decide domain inclusion of -L in -p");
  dominateCmd->add_option("-L", lArg, "the dominating pencil")->required();
  dominateCmd->add_option("-p", pArg, "the dominated pencil")->required();
  addCommonFlags(dominateCmd, cfg);

  auto* normalizeCmd = app.add_subcommand(
      "normalize", "concave decomposition and linearization of -q");
  normalizeCmd->add_option("-q", qArg, "monic concave polynomial")
      ->required();
  addCommonFlags(normalizeCmd, cfg);

  auto* boundedCmd =
      app.add_subcommand("bounded", "decide boundedness of the pencil domain");
  boundedCmd->add_option("-L", lArg, "pencil")->required();
  addCommonFlags(boundedCmd, cfg);

  auto* unitCmd = app.add_subcommand(
      "unitcert", "identity representation I = sum W* L W");
  unitCmd->add_option("-L", lArg, "pencil")->required();
  unitCmd->add_option("--target-size", targetSize, "size of the identity");
  addCommonFlags(unitCmd, cfg);

  auto* gnsCmd = app.add_subcommand(
      "gns", "extract a witness tuple from a moment functional");
  gnsCmd->add_option("--functional", fArg, "moment functional (JSON)")
      ->required();
  gnsCmd->add_option("--level", level, "extraction degree k")->required();
  addCommonFlags(gnsCmd, cfg);

  auto* evalCmd = app.add_subcommand("eval", "evaluate -p at a tuple");
  evalCmd->add_option("-p", pArg, "polynomial")->required();
  evalCmd->add_option("-X", xArg, "tuple JSON {\"n\":..,\"X\":[..]}")
      ->required();
  addCommonFlags(evalCmd, cfg);

  auto* exportCmd =
      app.add_subcommand("export-sdpa", "write the membership SDP in sparse "
                         "SDPA format");
  exportCmd->add_option("-p", pArg, "target polynomial")->required();
  exportCmd->add_option("-q", qArg, "domain polynomial");
  exportCmd->add_option("-L", lArg, "domain pencil");
  exportCmd->add_option("--alpha", alpha, "sos degree bound");
  exportCmd->add_option("--beta", beta, "weight degree bound");
  exportCmd->add_option("--sdpa-out", sdpaOut, "output path or -");
  addCommonFlags(exportCmd, cfg);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 64;
  }

  try {
    if (certifyCmd->parsed()) {
      if (qArg.empty() == lArg.empty()) {
        err << "usage error: certify needs exactly one of -q or -L\n";
        return 64;
      }
      return runCertify(pArg, qArg, lArg, modeArg, cfg, out);
    }
    if (refuteCmd->parsed()) return runRefute(pArg, lArg, cfg, out);
    if (dominateCmd->parsed()) return runDominate(lArg, pArg, cfg, out);
    if (normalizeCmd->parsed()) return runNormalize(qArg, cfg, out);
    if (boundedCmd->parsed()) return runBounded(lArg, cfg, out);
    if (unitCmd->parsed()) return runUnitCert(lArg, targetSize, cfg, out);
    if (gnsCmd->parsed()) return runGns(fArg, level, cfg, out);
    if (evalCmd->parsed()) return runEval(pArg, xArg, cfg, out);
    if (exportCmd->parsed()) {
      if (qArg.empty() == lArg.empty()) {
        err << "usage error: export-sdpa needs exactly one of -q or -L\n";
        return 64;
      }
      return runExportSdpa(pArg, qArg, lArg, alpha, beta, sdpaOut, cfg, out);
    }
  } catch (const ParseError& e) {
    err << "input error: " << e.what() << "\n";
    return 64;
  } catch (const certify::NotMonicError& e) {
    err << "input error: " << e.what() << "\n";
    return 64;
  } catch (const NotConcaveError& e) {
    err << "input error: " << e.what() << "\n";
    return 64;
  } catch (const json::exception& e) {
    err << "input error: " << e.what() << "\n";
    return 64;
  } catch (const std::invalid_argument& e) {
    err << "input error: " << e.what() << "\n";
    return 64;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  err << "usage error: no command\n";
  return 64;
}

}  // namespace ncsos::cli
