#pragma once

#include "ncsos/certificate.hpp"
#include "ncsos/domination.hpp"
#include "ncsos/freealg.hpp"
#include "ncsos/moment.hpp"
#include "ncsos/pencil.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace ncsos::jsonio {

using nlohmann::json;

json matrixToJson(const Eigen::MatrixXd& M);  // flat, row-major
Eigen::MatrixXd matrixFromJson(const json& j, int rows, int cols);

/// {"shape": [rows, cols], "nvars": g, "terms": {"x1*x2": [row-major], ...}}
/// with "1" keying the empty word.
json toJson(const MatPoly& p);
MatPoly matPolyFromJson(const json& j);

/// {"size": l, "nvars": g, "A": [row-major matrix per variable]}
json toJson(const MonicPencil& L);
MonicPencil pencilFromJson(const json& j);

/// {"nu": ..., "nvars": ..., "sos": [matpoly...],
///  "weighted": {"0": [matpoly...], ...}}
json toJson(const Certificate& c);
Certificate certificateFromJson(const json& j);

/// {"n": N, "X": [row-major matrices], "gamma": [...], "value": v}
json toJson(const moment::Witness& w);
moment::Witness witnessFromJson(const json& j);

/// {"nvars": g, "nu": nu, "degree_bound": 2k+2,
///  "values": {"word": [nu x nu row-major], ...}}
json toJson(const moment::MomentFunctional& lam);
moment::MomentFunctional functionalFromJson(const json& j);

/// Every number rounded to 12 significant digits so identical inputs print
/// byte-identical reports.
json roundForReport(const json& j);
std::string dumpReport(const json& report);

/// Checks the report envelope (command/status/residuals plus per-command
/// payload fields); returns the list of violations, empty when valid.
std::vector<std::string> validateReport(const json& report);

}  // namespace ncsos::jsonio
