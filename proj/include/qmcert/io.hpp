#pragma once

// JSON (de)serialization for module descriptions, matrix tuples, problem
// files, and result records. Parsers are strict: unknown fields are rejected
// and every error message names the offending field, so the CLI can surface
// actionable diagnostics. Printers round-trip with the parsers.

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qmcert/certify.hpp"
#include "qmcert/freealg.hpp"
#include "qmcert/qmodule.hpp"
#include "qmcert/sdp.hpp"

namespace qmcert::io {

using json = nlohmann::ordered_json;
using freealg::Complex;
using freealg::FreePoly;
using freealg::Matrix;
using freealg::MatrixTuple;
using freealg::Signature;
using freealg::Word;

namespace detail {

[[noreturn]] inline void fail(const std::string& field, const std::string& msg) {
  throw std::invalid_argument(field + ": " + msg);
}

// Strict object access: every key must be consumed by the caller's schema.
inline void check_keys(const json& j, const std::string& path, const std::vector<std::string>& allowed) {
  if (!j.is_object()) fail(path, "expected an object");
  for (auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto& a : allowed)
      if (key == a) {
        ok = true;
        break;
      }
    if (!ok) fail(path + "." + key, "unknown field");
  }
}

inline const json& need(const json& j, const std::string& path, const std::string& key) {
  if (!j.contains(key)) fail(path + "." + key, "missing required field");
  return j.at(key);
}

inline int need_int(const json& j, const std::string& path, const std::string& key) {
  const json& v = need(j, path, key);
  if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
  return v.get<int>();
}

inline double need_double(const json& j, const std::string& path, const std::string& key) {
  const json& v = need(j, path, key);
  if (!v.is_number()) fail(path + "." + key, "expected a number");
  return v.get<double>();
}

inline std::string need_string(const json& j, const std::string& path, const std::string& key) {
  const json& v = need(j, path, key);
  if (!v.is_string()) fail(path + "." + key, "expected a string");
  return v.get<std::string>();
}

}  // namespace detail

// ---------- numbers, matrices, tuples ----------

// Complex scalars serialize as [re, im]; reals may stand alone.
inline json complex_to_json(Complex c) {
  if (c.imag() == 0.0) return json(c.real());
  return json::array({c.real(), c.imag()});
}

inline Complex complex_from_json(const json& j, const std::string& path) {
  if (j.is_number()) return Complex(j.get<double>(), 0.0);
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return Complex(j[0].get<double>(), j[1].get<double>());
  detail::fail(path, "expected a number or [re, im] pair");
}

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(complex_to_json(m(i, k)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) detail::fail(path, "expected a non-empty array of rows");
  const size_t rows = j.size();
  size_t cols = 0;
  if (!j[0].is_array() || j[0].empty()) detail::fail(path + "[0]", "expected a non-empty row array");
  cols = j[0].size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (size_t i = 0; i < rows; ++i) {
    const json& row = j[i];
    std::string rp = path + "[" + std::to_string(i) + "]";
    if (!row.is_array() || row.size() != cols) detail::fail(rp, "ragged row");
    for (size_t k = 0; k < cols; ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          complex_from_json(row[k], rp + "[" + std::to_string(k) + "]");
  }
  return m;
}

inline json tuple_to_json(const MatrixTuple& x, const Signature& sig) {
  json j = json::object();
  j["dim"] = x.dim;
  json mats = json::object();
  for (int v = 0; v < sig.nvars; ++v) mats[sig.names[static_cast<size_t>(v)]] = matrix_to_json(x.mats[static_cast<size_t>(v)]);
  j["matrices"] = std::move(mats);
  return j;
}

inline MatrixTuple tuple_from_json(const json& j, const Signature& sig, const std::string& path = "tuple") {
  detail::check_keys(j, path, {"dim", "matrices"});
  MatrixTuple x;
  x.dim = detail::need_int(j, path, "dim");
  if (x.dim < 1) detail::fail(path + ".dim", "expected a positive integer");
  const json& mats = detail::need(j, path, "matrices");
  detail::check_keys(mats, path + ".matrices", sig.names);
  for (int v = 0; v < sig.nvars; ++v) {
    const std::string& nm = sig.names[static_cast<size_t>(v)];
    if (!mats.contains(nm)) detail::fail(path + ".matrices." + nm, "missing required field");
    x.mats.push_back(matrix_from_json(mats.at(nm), path + ".matrices." + nm));
  }
  x.validate(sig);
  return x;
}

// ---------- signatures and module descriptions ----------

inline json signature_to_json(const Signature& sig) {
  json j = json::object();
  j["nvars"] = sig.nvars;
  json herm = json::array();
  for (bool h : sig.hermitian) herm.push_back(h);
  j["hermitian"] = std::move(herm);
  j["names"] = sig.names;
  return j;
}

inline Signature signature_from_json(const json& j, const std::string& path = "signature") {
  detail::check_keys(j, path, {"nvars", "hermitian", "names"});
  int n = detail::need_int(j, path, "nvars");
  if (n < 1) detail::fail(path + ".nvars", "expected a positive integer");
  Signature sig;
  sig.nvars = n;
  if (j.contains("hermitian")) {
    const json& h = j.at("hermitian");
    if (h.is_boolean()) {
      sig.hermitian.assign(static_cast<size_t>(n), h.get<bool>());
    } else if (h.is_array() && static_cast<int>(h.size()) == n) {
      for (int v = 0; v < n; ++v) {
        if (!h[static_cast<size_t>(v)].is_boolean())
          detail::fail(path + ".hermitian[" + std::to_string(v) + "]", "expected a boolean");
        sig.hermitian.push_back(h[static_cast<size_t>(v)].get<bool>());
      }
    } else {
      detail::fail(path + ".hermitian", "expected a boolean or an array of nvars booleans");
    }
  } else {
    sig.hermitian.assign(static_cast<size_t>(n), false);
  }
  if (j.contains("names")) {
    const json& nm = j.at("names");
    if (!nm.is_array() || static_cast<int>(nm.size()) != n)
      detail::fail(path + ".names", "expected an array of nvars strings");
    for (int v = 0; v < n; ++v) {
      if (!nm[static_cast<size_t>(v)].is_string())
        detail::fail(path + ".names[" + std::to_string(v) + "]", "expected a string");
      sig.names.push_back(nm[static_cast<size_t>(v)].get<std::string>());
    }
  } else {
    for (int v = 0; v < n; ++v) sig.names.push_back("z" + std::to_string(v + 1));
  }
  return sig;
}

inline json generator_to_json(const qmodule::Generator& g) {
  json j = json::object();
  if (g.kind == qmodule::GenKind::matrix_pencil) {
    j["kind"] = "pencil";
    j["label"] = g.label;
    json rows = json::array();
    for (auto& row : g.matpoly) {
      json r = json::array();
      for (auto& e : row) r.push_back(e.str());
      rows.push_back(std::move(r));
    }
    j["entries"] = std::move(rows);
  } else {
    j["kind"] = "scalar";
    j["label"] = g.label;
    j["poly"] = g.poly.str();
  }
  return j;
}

inline json module_to_json(const qmodule::ModuleDescription& q) {
  json j = json::object();
  j["name"] = q.name;
  j["signature"] = signature_to_json(q.sig);
  json gens = json::array();
  json rels = json::array();
  for (auto& g : q.gens) {
    if (g.kind == qmodule::GenKind::ideal_pair) {
      json r = json::object();
      r["label"] = g.label;
      r["poly"] = g.poly.str();
      rels.push_back(std::move(r));
    } else {
      gens.push_back(generator_to_json(g));
    }
  }
  j["generators"] = std::move(gens);
  j["relations"] = std::move(rels);
  j["archimedean_bound"] = q.arch_known ? json(q.arch_bound) : json(nullptr);
  return j;
}

inline qmodule::ModuleDescription module_from_json(const json& j, const std::string& path = "module") {
  detail::check_keys(j, path, {"name", "signature", "generators", "relations", "archimedean_bound"});
  qmodule::ModuleDescription q;
  q.sig = signature_from_json(detail::need(j, path, "signature"), path + ".signature");
  if (j.contains("name")) {
    if (!j.at("name").is_string()) detail::fail(path + ".name", "expected a string");
    q.name = j.at("name").get<std::string>();
  }

  auto parse_entry_poly = [&](const json& v, const std::string& p) {
    if (!v.is_string()) detail::fail(p, "expected a polynomial string");
    try {
      return freealg::parse_poly(v.get<std::string>(), q.sig);
    } catch (const std::invalid_argument& e) {
      detail::fail(p, e.what());
    }
  };

  if (j.contains("generators")) {
    const json& gens = j.at("generators");
    if (!gens.is_array()) detail::fail(path + ".generators", "expected an array");
    for (size_t i = 0; i < gens.size(); ++i) {
      std::string gp = path + ".generators[" + std::to_string(i) + "]";
      const json& gj = gens[i];
      detail::check_keys(gj, gp, {"kind", "label", "poly", "entries"});
      std::string kind = gj.contains("kind") ? detail::need_string(gj, gp, "kind") : "scalar";
      qmodule::Generator g;
      g.label = gj.contains("label") ? detail::need_string(gj, gp, "label") : ("g" + std::to_string(i + 1));
      if (kind == "scalar") {
        g.kind = qmodule::GenKind::scalar_poly;
        g.poly = parse_entry_poly(detail::need(gj, gp, "poly"), gp + ".poly");
      } else if (kind == "pencil") {
        g.kind = qmodule::GenKind::matrix_pencil;
        const json& rows = detail::need(gj, gp, "entries");
        if (!rows.is_array() || rows.empty()) detail::fail(gp + ".entries", "expected a non-empty array of rows");
        for (size_t r = 0; r < rows.size(); ++r) {
          std::string rp = gp + ".entries[" + std::to_string(r) + "]";
          if (!rows[r].is_array() || rows[r].size() != rows.size()) detail::fail(rp, "pencil entries must be square");
          std::vector<FreePoly> row;
          for (size_t c = 0; c < rows[r].size(); ++c)
            row.push_back(parse_entry_poly(rows[r][c], rp + "[" + std::to_string(c) + "]"));
          g.matpoly.push_back(std::move(row));
        }
      } else {
        detail::fail(gp + ".kind", "expected \"scalar\" or \"pencil\"");
      }
      try {
        g.validate();
      } catch (const std::invalid_argument& e) {
        detail::fail(gp, e.what());
      }
      q.gens.push_back(std::move(g));
    }
  }

  if (j.contains("relations")) {
    const json& rels = j.at("relations");
    if (!rels.is_array()) detail::fail(path + ".relations", "expected an array");
    for (size_t i = 0; i < rels.size(); ++i) {
      std::string rp = path + ".relations[" + std::to_string(i) + "]";
      const json& rj = rels[i];
      qmodule::Generator g;
      g.kind = qmodule::GenKind::ideal_pair;
      if (rj.is_string()) {
        g.poly = parse_entry_poly(rj, rp);
        g.label = "r" + std::to_string(i + 1);
      } else {
        detail::check_keys(rj, rp, {"label", "poly"});
        g.poly = parse_entry_poly(detail::need(rj, rp, "poly"), rp + ".poly");
        g.label = rj.contains("label") ? detail::need_string(rj, rp, "label") : ("r" + std::to_string(i + 1));
      }
      q.gens.push_back(std::move(g));
    }
  }

  const json& ab = detail::need(j, path, "archimedean_bound");
  if (ab.is_null()) {
    q.arch_known = false;
  } else if (ab.is_number()) {
    double v = ab.get<double>();
    if (!(v > 0)) detail::fail(path + ".archimedean_bound", "expected a positive number or null");
    q.arch_known = true;
    q.arch_bound = v;
    // ell - sum z_i^* z_i in Q bounds each letter by sqrt(ell) in every
    // representation of the level set.
    q.letter_bound = std::sqrt(v);
    q.letter_bound_sound = true;
  } else {
    detail::fail(path + ".archimedean_bound", "expected a positive number or null");
  }
  return q;
}

// ---------- preset resolution ----------

struct PresetInfo {
  std::string syntax;
  std::string description;
};

inline std::vector<PresetInfo> preset_catalog() {
  return {
      {"free_group:m", "m unitary generators (ideal relations u^*u = uu^* = 1); archimedean bound m"},
      {"ball:n", "row ball 1 - sum z_i^* z_i >= 0; archimedean bound 1"},
      {"contractions:n", "independent contractions 1 - z_i^* z_i >= 0; archimedean bound n"},
      {"isometry:n", "row isometry relation sum z_i^* z_i = 1; archimedean bound 1"},
      {"heisenberg", "discrete Heisenberg group: unitaries a, b, c with ab = c ba and c central"},
      {"toeplitz", "single isometry z^* z = 1 (shift algebra); archimedean bound 1"},
  };
}

// Accepts "name" or "name:count" per the catalog above.
inline qmodule::ModuleDescription resolve_preset(const std::string& text) {
  std::string name = text;
  int count = -1;
  auto colon = text.find(':');
  if (colon != std::string::npos) {
    name = text.substr(0, colon);
    std::string num = text.substr(colon + 1);
    try {
      size_t used = 0;
      count = std::stoi(num, &used);
      if (used != num.size()) throw std::invalid_argument("trailing");
    } catch (...) {
      detail::fail("preset", "'" + text + "' has a malformed count (expected name:integer)");
    }
    if (count < 1) detail::fail("preset", "'" + text + "' count must be positive");
  }
  auto need_count = [&](const char* who) {
    if (count < 0) detail::fail("preset", std::string("'") + who + "' requires a count, e.g. " + who + ":2");
    return count;
  };
  auto no_count = [&](const char* who) {
    if (count >= 0) detail::fail("preset", std::string("'") + who + "' does not take a count");
  };
  if (name == "free_group") return qmodule::group_module(qmodule::GroupPreset::free_group, need_count("free_group"));
  if (name == "ball") return qmodule::ball_module(qmodule::BallKind::row_ball, need_count("ball"));
  if (name == "contractions")
    return qmodule::ball_module(qmodule::BallKind::column_contractions, need_count("contractions"));
  if (name == "isometry") return qmodule::isometry_module(need_count("isometry"));
  if (name == "heisenberg") {
    no_count("heisenberg");
    return qmodule::group_module(qmodule::GroupPreset::heisenberg);
  }
  if (name == "toeplitz") {
    no_count("toeplitz");
    return qmodule::group_module(qmodule::GroupPreset::toeplitz);
  }
  detail::fail("preset", "unknown preset '" + name + "' (run the presets subcommand for the catalog)");
}

// ---------- problem files ----------

// A problem file bundles the module (preset name or inline description), the
// query kind, the target polynomial, and numeric parameters. Flags on the
// command line override file values. `tuple` feeds dilate, `map` feeds ucp.
struct ProblemFile {
  std::string query;  // norm | member | ucp | hull | search | dilate | butterfly
  std::optional<std::string> preset;
  std::optional<json> module_inline;
  std::optional<std::string> poly;
  std::optional<json> tuple;
  std::optional<json> map;
  json params = json::object();
};

inline json problem_to_json(const ProblemFile& p) {
  json j = json::object();
  j["query"] = p.query;
  if (p.preset)
    j["module"] = *p.preset;
  else if (p.module_inline)
    j["module"] = *p.module_inline;
  if (p.poly) j["poly"] = *p.poly;
  if (p.tuple) j["tuple"] = *p.tuple;
  if (p.map) j["map"] = *p.map;
  j["params"] = p.params;
  return j;
}

inline ProblemFile problem_from_json(const json& j, const std::string& path = "problem") {
  detail::check_keys(j, path, {"query", "module", "poly", "tuple", "map", "params"});
  ProblemFile p;
  p.query = detail::need_string(j, path, "query");
  const std::vector<std::string> kinds = {"norm", "member", "ucp", "hull", "search", "dilate", "butterfly"};
  bool known = false;
  for (auto& k : kinds) known = known || (p.query == k);
  if (!known) detail::fail(path + ".query", "unknown query kind '" + p.query + "'");
  if (j.contains("module")) {
    const json& m = j.at("module");
    if (m.is_string()) {
      p.preset = m.get<std::string>();
      resolve_preset(*p.preset);  // validate eagerly so errors carry the field name
    } else if (m.is_object()) {
      module_from_json(m, path + ".module");  // validate
      p.module_inline = m;
    } else {
      detail::fail(path + ".module", "expected a preset name or an inline module object");
    }
  }
  if (j.contains("poly")) {
    if (!j.at("poly").is_string()) detail::fail(path + ".poly", "expected a string");
    p.poly = j.at("poly").get<std::string>();
  }
  if (j.contains("tuple")) {
    if (!j.at("tuple").is_object()) detail::fail(path + ".tuple", "expected an object");
    p.tuple = j.at("tuple");
  }
  if (j.contains("map")) {
    if (!j.at("map").is_object()) detail::fail(path + ".map", "expected an object");
    p.map = j.at("map");
  }
  if (j.contains("params")) {
    const json& pa = j.at("params");
    detail::check_keys(pa, path + ".params",
                       {"d", "eps", "n", "restarts", "iterations", "step", "beta", "topk", "seed", "jobs", "tol",
                        "max_iter", "qmax", "grid", "point", "coords", "central", "circle", "radius", "letter_bound",
                        "kind"});
    for (auto& [key, val] : pa.items()) {
      if (key == "kind") {
        if (!val.is_string()) detail::fail(path + ".params.kind", "expected a string");
      } else if (key == "central") {
        if (!val.is_boolean()) detail::fail(path + ".params.central", "expected a boolean");
      } else if (key == "point" || key == "coords") {
        if (!val.is_array()) detail::fail(path + ".params." + key, "expected an array");
      } else if (!val.is_number()) {
        detail::fail(path + ".params." + key, "expected a number");
      }
    }
    p.params = pa;
  }
  return p;
}

// Linear-map data for complete-positivity queries: spanning polynomials and
// their images, one square matrix per basis element.
inline certify::MapSpec map_spec_from_json(const json& j, const Signature& sig, const std::string& path = "map") {
  detail::check_keys(j, path, {"V", "values"});
  certify::MapSpec spec;
  const json& vj = detail::need(j, path, "V");
  const json& mj = detail::need(j, path, "values");
  if (!vj.is_array() || vj.empty()) detail::fail(path + ".V", "expected a non-empty array of polynomial strings");
  if (!mj.is_array() || mj.size() != vj.size()) detail::fail(path + ".values", "expected one matrix per V entry");
  Eigen::Index n = -1;
  for (size_t i = 0; i < vj.size(); ++i) {
    std::string vp = path + ".V[" + std::to_string(i) + "]";
    if (!vj[i].is_string()) detail::fail(vp, "expected a polynomial string");
    try {
      spec.V.push_back(freealg::parse_poly(vj[i].get<std::string>(), sig));
    } catch (const std::invalid_argument& e) {
      detail::fail(vp, e.what());
    }
    Matrix m = matrix_from_json(mj[i], path + ".values[" + std::to_string(i) + "]");
    if (m.rows() != m.cols()) detail::fail(path + ".values[" + std::to_string(i) + "]", "expected a square matrix");
    if (n < 0) n = m.rows();
    if (m.rows() != n) detail::fail(path + ".values[" + std::to_string(i) + "]", "inconsistent matrix size");
    spec.values.push_back(std::move(m));
  }
  return spec;
}

// ---------- files ----------

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) detail::fail("file", "cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    detail::fail("file", "'" + path + "' is not valid JSON: " + e.what());
  }
  return j;
}

inline qmodule::ModuleDescription module_from_file(const std::string& path) {
  return module_from_json(load_json_file(path), "module-file");
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) detail::fail("file", "cannot write '" + path + "'");
  out << text;
}

// ---------- result records ----------

inline std::string word_str(const Word& w, const Signature& sig) {
  if (w.ls.empty()) return "1";
  std::string s;
  for (size_t i = 0; i < w.ls.size(); ++i) {
    if (i) s += "*";
    s += sig.letter_name(w.ls[i]);
  }
  return s;
}

// Solver diagnostics attached to every SDP-backed record.
inline json sdp_info_to_json(const sdp::SdpResult& r) {
  json j = json::object();
  j["status"] = sdp::to_string(r.status);
  j["iterations"] = r.iterations;
  j["primal_residual"] = r.primal_res;
  j["dual_residual"] = r.dual_res;
  j["gap"] = r.gap;
  return j;
}

// Exact cone element: one PSD Gram per generator block plus ideal-pair
// coefficients; enough to re-expand the certificate independently.
inline json certificate_to_json(const certify::GramCertificate& cert, const qmodule::ModuleDescription& q) {
  json j = json::object();
  j["residual_norm1"] = cert.residual_norm1;
  json blocks = json::array();
  for (size_t b = 0; b < cert.plan.blocks.size(); ++b) {
    const auto& bp = cert.plan.blocks[b];
    json bj = json::object();
    bj["generator"] = bp.gen_index < 0 ? std::string("1") : q.gens[static_cast<size_t>(bp.gen_index)].label;
    bj["pencil_size"] = bp.pencil_size;
    json words = json::array();
    for (auto& w : bp.words) words.push_back(word_str(w, q.sig));
    bj["words"] = std::move(words);
    bj["gram"] = matrix_to_json(cert.vals.gram[b]);
    blocks.push_back(std::move(bj));
  }
  j["blocks"] = std::move(blocks);
  json ideals = json::array();
  for (size_t i = 0; i < cert.plan.ideals.size(); ++i) {
    const auto& ip = cert.plan.ideals[i];
    json ij = json::object();
    ij["relation"] = q.gens[static_cast<size_t>(ip.gen_index)].label;
    json terms = json::array();
    for (size_t p = 0; p < ip.pairs.size(); ++p) {
      Complex c = cert.vals.ideal[i][p];
      if (std::abs(c) < 1e-14) continue;
      json tj = json::object();
      tj["left"] = word_str(ip.words[static_cast<size_t>(ip.pairs[p].first)], q.sig);
      tj["right"] = word_str(ip.words[static_cast<size_t>(ip.pairs[p].second)], q.sig);
      tj["coeff"] = json::array({c.real(), c.imag()});
      terms.push_back(std::move(tj));
    }
    ij["terms"] = std::move(terms);
    ideals.push_back(std::move(ij));
  }
  j["ideal_terms"] = std::move(ideals);
  return j;
}

// CSV cell with 12 significant digits, matching the butterfly table format.
inline std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace qmcert::io
