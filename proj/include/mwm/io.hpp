#pragma once

// JSON conversions: matrices as {"rows", "cols", "data"} with row-major
// data, watermark bank files, and conic program dumps.

#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "mwm/sdp.hpp"
#include "mwm/watermark.hpp"

namespace mwm {

using Json = nlohmann::json;

inline Json matrix_to_json(const Matrix& m) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline Matrix matrix_from_json(const Json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data"))
    throw ConfigError(where + ": matrix must be an object with rows, cols and data");
  if (!j["rows"].is_number_integer() || !j["cols"].is_number_integer() || !j["data"].is_array())
    throw ConfigError(where + ": rows/cols must be integers and data an array");
  const auto r = j["rows"].get<long>(), c = j["cols"].get<long>();
  if (r < 0 || c < 0) throw ConfigError(where + ": negative dimension");
  const auto& d = j["data"];
  if (static_cast<long>(d.size()) != r * c)
    throw ConfigError(where + ": expected " + std::to_string(r * c) + " entries, got " + std::to_string(d.size()));
  Matrix m(r, c);
  for (long i = 0; i < r; ++i)
    for (long k = 0; k < c; ++k) {
      const auto& v = d[static_cast<std::size_t>(i * c + k)];
      if (!v.is_number()) throw ConfigError(where + ": non-numeric entry");
      m(i, k) = v.get<double>();
    }
  if (!m.allFinite()) throw ConfigError(where + ": non-finite entry");
  return m;
}

inline Json model_to_json(const StateSpaceModel& g) {
  return {{"A", matrix_to_json(g.A())}, {"B", matrix_to_json(g.B())}, {"C", matrix_to_json(g.C())},
          {"D", matrix_to_json(g.D())}};
}

inline StateSpaceModel model_from_json(const Json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object with A, B, C, D");
  for (const char* k : {"A", "B", "C", "D"})
    if (!j.contains(k)) throw ConfigError(where + ": missing matrix " + k);
  try {
    return StateSpaceModel(matrix_from_json(j["A"], where + ".A"), matrix_from_json(j["B"], where + ".B"),
                           matrix_from_json(j["C"], where + ".C"), matrix_from_json(j["D"], where + ".D"));
  } catch (const DimensionError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

/// Bank file: {"epoch", "h": {A,B,C,D}, "q": {A,B,C,D}} plus free-form metadata.
inline Json bank_to_json(const WatermarkBank& bank) {
  return {{"epoch", bank.epoch}, {"h", model_to_json(bank.h.filter)}, {"q", model_to_json(bank.q.filter)}};
}

inline WatermarkBank bank_from_json(const Json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("h") || !j.contains("q")) throw ConfigError(where + ": bank needs h and q");
  const int epoch = j.value("epoch", 0);
  return make_bank(model_from_json(j["h"], where + ".h"), model_from_json(j["q"], where + ".q"), epoch);
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return Json::parse(in, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline void write_json_file(const Json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

/// Dense dump of an LMI-form program:
///   minimize objective' y  s.t.  F0_j + sum_i y_i F_ij >= 0 for every block j.
/// Only nonzero coefficients are listed.
inline Json conic_program_to_json(const sdp::ConicProgram& cp) {
  Json blocks = Json::array();
  for (const auto& b : cp.blocks) {
    Json coeffs = Json::array();
    for (Eigen::Index i = 0; i < b.variables(); ++i) {
      if (b.terms(i).empty()) continue;
      coeffs.push_back({{"variable", i}, {"F", matrix_to_json(b.coefficient(i))}});
    }
    blocks.push_back({{"dim", b.dim()}, {"F0", matrix_to_json(b.constant())}, {"coefficients", std::move(coeffs)}});
  }
  Json obj = Json::array();
  for (Eigen::Index i = 0; i < cp.variables(); ++i) obj.push_back(cp.objective(i));
  return {{"format", "lmi-sdp"},
          {"sense", "minimize"},
          {"form", "minimize c'y subject to F0 + sum_i y_i F_i >= 0 (PSD) for each block"},
          {"variables", cp.variables()},
          {"variable_names", cp.variable_names},
          {"objective", std::move(obj)},
          {"blocks", std::move(blocks)}};
}

}  // namespace mwm
