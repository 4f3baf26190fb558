// Command-line front end: resolves modules and problem files, runs certified
// positivity/norm computations and representation searches, and emits
// deterministic JSON or CSV records. Exit codes: 0 = computed result
// (including not_found/violated verdicts), 2 = input error, 3 = numerical
// failure.

#include <cmath>
#include <complex>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <qmcert/certify.hpp>
#include <qmcert/freealg.hpp>
#include <qmcert/heisenberg.hpp>
#include <qmcert/io.hpp>
#include <qmcert/qmodule.hpp>
#include <qmcert/repsearch.hpp>
#include <qmcert/sdp.hpp>

namespace {

using namespace qmcert;
using freealg::FreePoly;
using freealg::Matrix;
using freealg::MatrixTuple;
using freealg::Signature;
using io::json;

// ---------- shared plumbing ----------

// Module + problem-file sources shared by the subcommands. Explicit flags win
// over problem-file values, which win over defaults.
struct Sources {
  std::string preset;
  std::string module_file;
  std::string file;
  io::ProblemFile pf;
  bool have_file = false;

  void add_flags(CLI::App* sub, bool with_module = true) {
    sub->add_option("--file", file, "problem file (JSON); explicit flags override its values");
    if (with_module) {
      sub->add_option("--preset", preset, "module preset, e.g. free_group:2 (see `presets`)");
      sub->add_option("--module-file", module_file, "module description JSON file");
    }
  }

  void load(const std::string& subname) {
    if (file.empty()) return;
    pf = io::problem_from_json(io::load_json_file(file), "problem");
    have_file = true;
    if (pf.query != subname)
      throw std::invalid_argument("problem.query: '" + pf.query + "' does not match subcommand '" + subname + "'");
  }

  bool has_module() const {
    return !preset.empty() || !module_file.empty() || (have_file && (pf.preset || pf.module_inline));
  }

  qmodule::ModuleDescription module() const {
    if (!preset.empty() && !module_file.empty())
      throw std::invalid_argument("preset/module-file: give exactly one module source");
    if (!preset.empty()) return io::resolve_preset(preset);
    if (!module_file.empty()) return io::module_from_file(module_file);
    if (have_file && pf.preset) return io::resolve_preset(*pf.preset);
    if (have_file && pf.module_inline) return io::module_from_json(*pf.module_inline, "problem.module");
    throw std::invalid_argument("module: missing (use --preset, --module-file, or a problem file module field)");
  }

  json module_source() const {
    if (!preset.empty()) return json(preset);
    if (!module_file.empty()) return json(module_file);
    if (have_file && pf.preset) return json(*pf.preset);
    if (have_file && pf.module_inline) return json("inline");
    return json(nullptr);
  }
};

// Overlay a problem-file parameter onto a flag variable unless the flag was
// given explicitly.
template <typename T>
void fuse(CLI::App* sub, const char* flag, const Sources& src, const char* key, T& var) {
  if (sub->count(flag) > 0) return;
  if (src.have_file && src.pf.params.contains(key)) {
    try {
      var = src.pf.params.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw std::invalid_argument(std::string("problem.params.") + key + ": wrong type");
    }
  }
}

std::string resolve_poly(const Sources& src, const std::string& flag_val) {
  if (!flag_val.empty()) return flag_val;
  if (src.have_file && src.pf.poly) return *src.pf.poly;
  throw std::invalid_argument("poly: missing (use --poly or the problem file poly field)");
}

FreePoly parse_target(const std::string& text, const Signature& sig) {
  try {
    return freealg::parse_poly(text, sig);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("poly: ") + e.what());
  }
}

void emit(const json& rec) { std::cout << rec.dump(2) << "\n"; }

void emit_text(const std::string& text, const std::string& out_path) {
  if (out_path.empty())
    std::cout << text;
  else
    io::write_text_file(out_path, text);
}

// ---------- norm ----------

struct NormOpts {
  Sources src;
  std::string poly;
  int d = 2, n = 0, restarts = 32, iterations = 150, topk = 3, jobs = 1, max_iter = 200;
  double step = 0.25, beta = 200.0, tol = 1e-8, letter_bound = 0.0;
  uint64_t seed = 0;
  bool no_certificate = false;
};

void run_norm(NormOpts& o, CLI::App* sub) {
  o.src.load("norm");
  fuse(sub, "--d", o.src, "d", o.d);
  fuse(sub, "--n", o.src, "n", o.n);
  fuse(sub, "--restarts", o.src, "restarts", o.restarts);
  fuse(sub, "--iterations", o.src, "iterations", o.iterations);
  fuse(sub, "--step", o.src, "step", o.step);
  fuse(sub, "--beta", o.src, "beta", o.beta);
  fuse(sub, "--topk", o.src, "topk", o.topk);
  fuse(sub, "--seed", o.src, "seed", o.seed);
  fuse(sub, "--jobs", o.src, "jobs", o.jobs);
  fuse(sub, "--tol", o.src, "tol", o.tol);
  fuse(sub, "--max-iter", o.src, "max_iter", o.max_iter);
  fuse(sub, "--letter-bound", o.src, "letter_bound", o.letter_bound);

  qmodule::ModuleDescription q = o.src.module();
  std::string ptext = resolve_poly(o.src, o.poly);
  FreePoly a = parse_target(ptext, q.sig);

  certify::CertifyOptions co;
  co.sdp.tol = o.tol;
  co.sdp.max_iter = o.max_iter;
  std::optional<double> lb;
  if (o.letter_bound > 0) lb = o.letter_bound;
  certify::NormUpperResult up = certify::norm_upper(q, a, o.d, co, lb);
  if (!std::isfinite(up.value))
    throw std::runtime_error("norm upper bound failed (solver status " + std::string(sdp::to_string(up.status)) + ")");

  std::optional<repsearch::SearchResult> lo;
  if (o.n >= 1) {
    repsearch::SearchConfig sc;
    sc.n = o.n;
    sc.restarts = o.restarts;
    sc.iterations = o.iterations;
    sc.step = o.step;
    sc.seed = o.seed;
    sc.jobs = o.jobs;
    sc.beta = o.beta;
    sc.topk = o.topk;
    lo = repsearch::search_lower(q, a, sc);
  }

  json rec = json::object();
  rec["query"] = "norm";
  rec["d"] = o.d;
  rec["status"] = "certified";
  rec["value"] = up.value;
  rec["upper"] = up.value;
  rec["mode"] = up.mode;
  rec["sdp_value"] = up.sdp_value;
  if (lo) {
    rec["lower"] = lo->value;
    rec["width"] = up.value - lo->value;
  }
  if (!o.no_certificate && !up.certificates.empty()) {
    if (up.certificates.size() == 1) {
      rec["certificate"] = io::certificate_to_json(up.certificates.front(), q);
    } else {
      json c = json::object();
      c["ell_minus_a"] = io::certificate_to_json(up.certificates[0], q);
      c["ell_plus_a"] = io::certificate_to_json(up.certificates[1], q);
      rec["certificate"] = std::move(c);
    }
  }
  if (lo) rec["witness"] = io::tuple_to_json(lo->tuple, q.sig);
  json residuals = json::object();
  residuals["inflation"] = up.residual_inflation;
  if (lo) residuals["search_feasibility"] = lo->feasibility;
  rec["residuals"] = residuals;

  json cfg = json::object();
  cfg["module"] = o.src.module_source();
  cfg["module_name"] = q.name;
  cfg["poly"] = ptext;
  cfg["d"] = o.d;
  cfg["n"] = o.n;
  cfg["restarts"] = o.restarts;
  cfg["iterations"] = o.iterations;
  cfg["step"] = o.step;
  cfg["beta"] = o.beta;
  cfg["topk"] = o.topk;
  cfg["tol"] = o.tol;
  cfg["max_iter"] = o.max_iter;
  cfg["letter_bound"] = o.letter_bound > 0 ? json(o.letter_bound) : json(nullptr);
  cfg["seed"] = o.seed;
  cfg["jobs"] = o.jobs;
  rec["config"] = cfg;
  emit(rec);
}

// ---------- member ----------

struct MemberOpts {
  Sources src;
  std::string poly;
  int d = 2, max_iter = 200;
  double eps = 1e-6, tol = 1e-8;
  bool no_certificate = false;
};

void run_member(MemberOpts& o, CLI::App* sub) {
  o.src.load("member");
  fuse(sub, "--d", o.src, "d", o.d);
  fuse(sub, "--eps", o.src, "eps", o.eps);
  fuse(sub, "--tol", o.src, "tol", o.tol);
  fuse(sub, "--max-iter", o.src, "max_iter", o.max_iter);

  qmodule::ModuleDescription q = o.src.module();
  std::string ptext = resolve_poly(o.src, o.poly);
  FreePoly a = parse_target(ptext, q.sig);

  certify::CertifyOptions co;
  co.feas_tol = o.eps;
  co.sdp.tol = o.tol;
  co.sdp.max_iter = o.max_iter;
  certify::MemberResult mr = certify::member_eps(q, a, o.d, co);

  json rec = json::object();
  rec["query"] = "member";
  rec["d"] = o.d;
  rec["status"] = certify::to_string(mr.status);
  rec["value"] = mr.phase1_slack;
  if (!o.no_certificate && mr.certificate) rec["certificate"] = io::certificate_to_json(*mr.certificate, q);
  json residuals = json::object();
  residuals["residual_norm1"] = mr.residual_norm1;
  residuals["sdp"] = io::sdp_info_to_json(mr.sdp);
  rec["residuals"] = residuals;

  json cfg = json::object();
  cfg["module"] = o.src.module_source();
  cfg["module_name"] = q.name;
  cfg["poly"] = ptext;
  cfg["d"] = o.d;
  cfg["eps"] = o.eps;
  cfg["tol"] = o.tol;
  cfg["max_iter"] = o.max_iter;
  cfg["seed"] = uint64_t{0};
  rec["config"] = cfg;
  emit(rec);
}

// ---------- ucp ----------

struct UcpOpts {
  Sources src;
  std::string map_file;
  int d = 2, max_iter = 200;
  double tol = 1e-8;
};

void run_ucp(UcpOpts& o, CLI::App* sub) {
  o.src.load("ucp");
  fuse(sub, "--d", o.src, "d", o.d);
  fuse(sub, "--tol", o.src, "tol", o.tol);
  fuse(sub, "--max-iter", o.src, "max_iter", o.max_iter);

  qmodule::ModuleDescription q = o.src.module();
  json mj;
  if (!o.map_file.empty())
    mj = io::load_json_file(o.map_file);
  else if (o.src.have_file && o.src.pf.map)
    mj = *o.src.pf.map;
  else
    throw std::invalid_argument("map: missing (use --map-file or the problem file map field)");
  certify::MapSpec spec = io::map_spec_from_json(mj, q.sig, "map");

  certify::CertifyOptions co;
  co.sdp.tol = o.tol;
  co.sdp.max_iter = o.max_iter;
  certify::UcpResult ur = certify::ucp_check(q, spec, o.d, co);

  json rec = json::object();
  rec["query"] = "ucp";
  rec["d"] = o.d;
  rec["status"] = certify::to_string(ur.status);
  rec["value"] = ur.min_value;
  rec["verified_value"] = ur.verified_value;
  if (ur.status == certify::UcpStatus::violated && !ur.witness.empty()) {
    json w = json::object();
    json rows = json::array();
    for (auto& row : ur.witness) {
      json r = json::array();
      for (auto& e : row) r.push_back(e.str());
      rows.push_back(std::move(r));
    }
    w["entries"] = std::move(rows);
    json coeffs = json::array();
    for (Eigen::Index i = 0; i < ur.witness_coeffs.size(); ++i)
      coeffs.push_back(json::array({ur.witness_coeffs[i].real(), ur.witness_coeffs[i].imag()}));
    w["coeffs"] = std::move(coeffs);
    rec["witness"] = std::move(w);
  }
  json residuals = json::object();
  residuals["span_residual"] = ur.span_residual;
  residuals["sdp"] = io::sdp_info_to_json(ur.sdp);
  rec["residuals"] = residuals;

  json cfg = json::object();
  cfg["module"] = o.src.module_source();
  cfg["module_name"] = q.name;
  cfg["map"] = o.map_file.empty() ? json("inline") : json(o.map_file);
  cfg["d"] = o.d;
  cfg["tol"] = o.tol;
  cfg["max_iter"] = o.max_iter;
  cfg["seed"] = uint64_t{0};
  rec["config"] = cfg;
  emit(rec);
}

// ---------- hull ----------

struct HullOpts {
  Sources src;
  std::vector<std::string> coords;
  std::vector<double> point;
  std::string out;
  int d = 2, circle = 0, max_iter = 200;
  double radius = 1.0, tol = 1e-8;
  bool central = false;
};

void run_hull(HullOpts& o, CLI::App* sub) {
  o.src.load("hull");
  fuse(sub, "--d", o.src, "d", o.d);
  fuse(sub, "--tol", o.src, "tol", o.tol);
  fuse(sub, "--max-iter", o.src, "max_iter", o.max_iter);
  fuse(sub, "--coord", o.src, "coords", o.coords);
  fuse(sub, "--point", o.src, "point", o.point);
  fuse(sub, "--central", o.src, "central", o.central);
  fuse(sub, "--circle", o.src, "circle", o.circle);
  fuse(sub, "--radius", o.src, "radius", o.radius);

  certify::CertifyOptions co;
  co.sdp.tol = o.tol;
  co.sdp.max_iter = o.max_iter;

  // Exact central mode works in the group algebra and needs no module; the
  // projected mode needs the module plus coordinate polynomials.
  qmodule::ModuleDescription q;
  std::vector<FreePoly> coords;
  if (o.central) {
    if (o.src.has_module() && o.src.module().name != "heisenberg")
      throw std::invalid_argument("central: only meaningful for the heisenberg preset");
  } else {
    q = o.src.module();
    if (o.coords.empty()) throw std::invalid_argument("coord: missing (repeat --coord for each projection)");
    for (size_t i = 0; i < o.coords.size(); ++i) {
      try {
        coords.push_back(freealg::parse_poly(o.coords[i], q.sig));
      } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("coord[" + std::to_string(i) + "]: " + e.what());
      }
    }
  }

  auto run_point = [&](double x, double y, const std::vector<double>& pt) -> certify::HullResult {
    if (o.central) return heisenberg::central_hull_membership(x, y, o.d, co);
    Eigen::VectorXd v(static_cast<Eigen::Index>(pt.size()));
    for (size_t i = 0; i < pt.size(); ++i) v[static_cast<Eigen::Index>(i)] = pt[i];
    return certify::hull_project_membership(q, coords, v, o.d, co);
  };

  json cfg = json::object();
  cfg["module"] = o.central ? json(nullptr) : o.src.module_source();
  cfg["module_name"] = o.central ? json("heisenberg (exact)") : json(q.name);
  cfg["coords"] = o.coords;
  cfg["central"] = o.central;
  cfg["d"] = o.d;
  cfg["tol"] = o.tol;
  cfg["max_iter"] = o.max_iter;
  cfg["seed"] = uint64_t{0};

  if (o.circle > 0) {
    // CSV scan over equally spaced boundary angles at the given radius.
    if (!o.central && coords.size() != 2)
      throw std::invalid_argument("circle: scan mode needs exactly two --coord projections");
    std::string csv = "index,theta,x,y,status,min_value\n";
    for (int t = 0; t < o.circle; ++t) {
      double theta = 2.0 * M_PI * t / o.circle;
      double x = o.radius * std::cos(theta), y = o.radius * std::sin(theta);
      certify::HullResult hr = run_point(x, y, {x, y});
      csv += std::to_string(t) + "," + io::csv_number(theta) + "," + io::csv_number(x) + "," + io::csv_number(y) +
             "," + certify::to_string(hr.status) + "," + io::csv_number(hr.min_value) + "\n";
    }
    emit_text(csv, o.out);
    return;
  }

  if (o.point.empty()) throw std::invalid_argument("point: missing (--point x,y,... or problem file)");
  if (o.central && o.point.size() != 2) throw std::invalid_argument("point: central mode expects two coordinates");
  if (!o.central && o.point.size() != coords.size())
    throw std::invalid_argument("point: dimension does not match the number of --coord projections");
  certify::HullResult hr = run_point(o.point.size() == 2 ? o.point[0] : 0.0,
                                     o.point.size() == 2 ? o.point[1] : 0.0, o.point);

  json rec = json::object();
  rec["query"] = "hull";
  rec["d"] = o.d;
  rec["status"] = certify::to_string(hr.status);
  rec["value"] = hr.min_value;
  rec["point"] = o.point;
  if (hr.functional.size() > 0) {
    json f = json::array();
    for (Eigen::Index i = 0; i < hr.functional.size(); ++i) f.push_back(hr.functional[i]);
    json w = json::object();
    w["functional"] = std::move(f);
    w["separator"] = hr.witness.str();
    rec["witness"] = std::move(w);
  }
  json residuals = json::object();
  residuals["sdp"] = io::sdp_info_to_json(hr.sdp);
  rec["residuals"] = residuals;
  cfg["point"] = o.point;
  rec["config"] = cfg;
  emit(rec);
}

// ---------- search ----------

struct SearchOpts {
  Sources src;
  std::string poly;
  int n = 2, restarts = 32, iterations = 150, topk = 3, jobs = 1;
  double step = 0.25, beta = 200.0;
  uint64_t seed = 0;
  bool no_witness = false;
};

void run_search(SearchOpts& o, CLI::App* sub) {
  o.src.load("search");
  fuse(sub, "--n", o.src, "n", o.n);
  fuse(sub, "--restarts", o.src, "restarts", o.restarts);
  fuse(sub, "--iterations", o.src, "iterations", o.iterations);
  fuse(sub, "--step", o.src, "step", o.step);
  fuse(sub, "--beta", o.src, "beta", o.beta);
  fuse(sub, "--topk", o.src, "topk", o.topk);
  fuse(sub, "--seed", o.src, "seed", o.seed);
  fuse(sub, "--jobs", o.src, "jobs", o.jobs);

  qmodule::ModuleDescription q = o.src.module();
  std::string ptext = resolve_poly(o.src, o.poly);
  FreePoly a = parse_target(ptext, q.sig);

  repsearch::SearchConfig sc;
  sc.n = o.n;
  sc.restarts = o.restarts;
  sc.iterations = o.iterations;
  sc.step = o.step;
  sc.seed = o.seed;
  sc.jobs = o.jobs;
  sc.beta = o.beta;
  sc.topk = o.topk;
  repsearch::SearchResult sr = repsearch::search_lower(q, a, sc);

  json rec = json::object();
  rec["query"] = "search";
  rec["d"] = nullptr;
  rec["status"] = "computed";
  rec["value"] = sr.value;
  rec["best_restart"] = sr.best_restart;
  json rv = json::array();
  for (double v : sr.restart_values) rv.push_back(v);
  rec["restart_values"] = std::move(rv);
  if (!o.no_witness) rec["witness"] = io::tuple_to_json(sr.tuple, q.sig);
  json residuals = json::object();
  residuals["feasibility"] = sr.feasibility;
  rec["residuals"] = residuals;

  json cfg = json::object();
  cfg["module"] = o.src.module_source();
  cfg["module_name"] = q.name;
  cfg["poly"] = ptext;
  cfg["n"] = o.n;
  cfg["restarts"] = o.restarts;
  cfg["iterations"] = o.iterations;
  cfg["step"] = o.step;
  cfg["beta"] = o.beta;
  cfg["topk"] = o.topk;
  cfg["seed"] = o.seed;
  cfg["jobs"] = o.jobs;
  rec["config"] = cfg;
  emit(rec);
}

// ---------- dilate ----------

struct DilateOpts {
  Sources src;
  std::string kind = "unitary";
  std::string tuple_file;
};

Signature tuple_signature(const json& tj, const Sources& src) {
  if (src.has_module()) return src.module().sig;
  if (!tj.is_object() || !tj.contains("matrices") || !tj.at("matrices").is_object())
    throw std::invalid_argument("tuple.matrices: missing or not an object");
  std::vector<std::string> names;
  for (auto& [k, v] : tj.at("matrices").items()) names.push_back(k);
  if (names.empty()) throw std::invalid_argument("tuple.matrices: empty");
  return Signature::make(static_cast<int>(names.size()), false, names);
}

void run_dilate(DilateOpts& o, CLI::App* sub) {
  o.src.load("dilate");
  fuse(sub, "--kind", o.src, "kind", o.kind);

  json tj;
  if (!o.tuple_file.empty())
    tj = io::load_json_file(o.tuple_file);
  else if (o.src.have_file && o.src.pf.tuple)
    tj = *o.src.pf.tuple;
  else
    throw std::invalid_argument("tuple: missing (use --tuple-file or the problem file tuple field)");
  Signature sig = tuple_signature(tj, o.src);
  MatrixTuple x = io::tuple_from_json(tj, sig, "tuple");

  MatrixTuple out;
  double residual = 0;
  if (o.kind == "unitary") {
    // Halmos dilation applied per variable: each contraction becomes a
    // unitary on the doubled space.
    out.dim = 2 * x.dim;
    for (int v = 0; v < sig.nvars; ++v) {
      Matrix u;
      try {
        u = repsearch::unitary_dilate(x.mats[static_cast<size_t>(v)]);
      } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("tuple.matrices." + sig.names[static_cast<size_t>(v)] + ": " + e.what());
      }
      residual = std::max(residual,
                          (u.adjoint() * u - Matrix::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff());
      out.mats.push_back(std::move(u));
    }
  } else if (o.kind == "isometry") {
    try {
      out = repsearch::isometry_extend(x);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(std::string("tuple: ") + e.what());
    }
    Matrix gram = Matrix::Zero(out.dim, out.dim);
    for (const auto& m : out.mats) gram += m.adjoint() * m;
    residual = (gram - Matrix::Identity(out.dim, out.dim)).cwiseAbs().maxCoeff();
  } else {
    throw std::invalid_argument("kind: expected \"unitary\" or \"isometry\"");
  }

  json rec = json::object();
  rec["query"] = "dilate";
  rec["d"] = nullptr;
  rec["status"] = "computed";
  rec["value"] = residual;
  rec["witness"] = io::tuple_to_json(out, sig);
  json residuals = json::object();
  residuals[o.kind == "unitary" ? "unitarity" : "isometry_defect"] = residual;
  rec["residuals"] = residuals;

  json cfg = json::object();
  cfg["kind"] = o.kind;
  cfg["tuple"] = o.tuple_file.empty() ? json("inline") : json(o.tuple_file);
  cfg["module"] = o.src.has_module() ? o.src.module_source() : json(nullptr);
  cfg["seed"] = uint64_t{0};
  rec["config"] = cfg;
  emit(rec);
}

// ---------- butterfly ----------

struct ButterflyOpts {
  Sources src;
  std::string out;
  int qmax = 8, grid = 64, jobs = 1;
};

void run_butterfly(ButterflyOpts& o, CLI::App* sub) {
  o.src.load("butterfly");
  fuse(sub, "--qmax", o.src, "qmax", o.qmax);
  fuse(sub, "--grid", o.src, "grid", o.grid);
  fuse(sub, "--jobs", o.src, "jobs", o.jobs);
  emit_text(heisenberg::butterfly_csv(heisenberg::butterfly(o.qmax, o.grid, o.jobs)), o.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"certified norms, positivity certificates, and representation searches in archimedean quadratic modules"};
  app.require_subcommand(1);

  NormOpts N;
  auto* norm = app.add_subcommand("norm", "certified norm upper bound, optional representation lower bound");
  N.src.add_flags(norm);
  norm->add_option("--poly", N.poly, "target polynomial, e.g. \"z1+z1^*\"");
  norm->add_option("--d", N.d, "truncation degree");
  norm->add_option("--n", N.n, "lower-bound representation dimension (0 skips the search)");
  norm->add_option("--restarts", N.restarts, "search restarts");
  norm->add_option("--iterations", N.iterations, "ascent iterations per restart");
  norm->add_option("--step", N.step, "initial ascent step");
  norm->add_option("--beta", N.beta, "softmax sharpness");
  norm->add_option("--topk", N.topk, "singular values in the smoothed objective");
  norm->add_option("--seed", N.seed, "search seed");
  norm->add_option("--jobs", N.jobs, "parallel restarts");
  norm->add_option("--tol", N.tol, "interior-point tolerance");
  norm->add_option("--max-iter", N.max_iter, "interior-point iteration cap");
  norm->add_option("--letter-bound", N.letter_bound, "override per-letter norm bound for residual absorption");
  norm->add_flag("--no-certificate", N.no_certificate, "omit Gram certificates from the record");
  norm->callback([&] { run_norm(N, norm); });

  MemberOpts M;
  auto* member = app.add_subcommand("member", "degree-d membership certificate for a hermitian polynomial");
  M.src.add_flags(member);
  member->add_option("--poly", M.poly, "hermitian polynomial to certify");
  member->add_option("--d", M.d, "truncation degree");
  member->add_option("--eps", M.eps, "accepted relative phase-1 slack");
  member->add_option("--tol", M.tol, "interior-point tolerance");
  member->add_option("--max-iter", M.max_iter, "interior-point iteration cap");
  member->add_flag("--no-certificate", M.no_certificate, "omit the Gram certificate from the record");
  member->callback([&] { run_member(M, member); });

  UcpOpts U;
  auto* ucp = app.add_subcommand("ucp", "n-positivity test of a linear map against the truncated cone");
  U.src.add_flags(ucp);
  ucp->add_option("--map-file", U.map_file, "JSON file {V: [poly...], values: [matrix...]}");
  ucp->add_option("--d", U.d, "truncation degree");
  ucp->add_option("--tol", U.tol, "interior-point tolerance");
  ucp->add_option("--max-iter", U.max_iter, "interior-point iteration cap");
  ucp->callback([&] { run_ucp(U, ucp); });

  HullOpts H;
  auto* hull = app.add_subcommand("hull", "membership in the projected matrix convex hull");
  H.src.add_flags(hull);
  hull->add_option("--coord", H.coords, "projection polynomial (repeat per coordinate)");
  hull->add_option("--point", H.point, "query point")->delimiter(',');
  hull->add_option("--d", H.d, "truncation degree");
  hull->add_flag("--central", H.central, "exact group-basis mode for the heisenberg central generator");
  hull->add_option("--circle", H.circle, "scan this many circle points (CSV output)");
  hull->add_option("--radius", H.radius, "circle radius for --circle");
  hull->add_option("--out", H.out, "write CSV to this file instead of stdout");
  hull->add_option("--tol", H.tol, "interior-point tolerance");
  hull->add_option("--max-iter", H.max_iter, "interior-point iteration cap");
  hull->callback([&] { run_hull(H, hull); });

  SearchOpts S;
  auto* search = app.add_subcommand("search", "representation search maximizing ||p(X)|| over the level set");
  S.src.add_flags(search);
  search->add_option("--poly", S.poly, "target polynomial");
  search->add_option("--n", S.n, "representation dimension");
  search->add_option("--restarts", S.restarts, "search restarts");
  search->add_option("--iterations", S.iterations, "ascent iterations per restart");
  search->add_option("--step", S.step, "initial ascent step");
  search->add_option("--beta", S.beta, "softmax sharpness");
  search->add_option("--topk", S.topk, "singular values in the smoothed objective");
  search->add_option("--seed", S.seed, "search seed");
  search->add_option("--jobs", S.jobs, "parallel restarts");
  search->add_flag("--no-witness", S.no_witness, "omit the maximizing tuple from the record");
  search->callback([&] { run_search(S, search); });

  DilateOpts D;
  auto* dilate = app.add_subcommand("dilate", "unitary dilation / isometry completion of a matrix tuple");
  D.src.add_flags(dilate);
  dilate->add_option("--kind", D.kind, "unitary (per-matrix Halmos) or isometry (joint completion)");
  dilate->add_option("--tuple-file", D.tuple_file, "JSON tuple {dim, matrices:{name: [[..]]}}");
  dilate->callback([&] { run_dilate(D, dilate); });

  ButterflyOpts B;
  auto* butterfly = app.add_subcommand("butterfly", "norms of the almost Mathieu family over Farey fractions (CSV)");
  B.src.add_flags(butterfly, /*with_module=*/false);
  butterfly->add_option("--qmax", B.qmax, "largest denominator");
  butterfly->add_option("--grid", B.grid, "phase grid per fraction");
  butterfly->add_option("--jobs", B.jobs, "parallel fractions");
  butterfly->add_option("--out", B.out, "write CSV to this file instead of stdout");
  butterfly->callback([&] { run_butterfly(B, butterfly); });

  auto* presets = app.add_subcommand("presets", "list the built-in module presets");
  presets->callback([&] {
    std::cout << "available module presets (use with --preset):\n";
    for (const auto& info : io::preset_catalog())
      std::cout << "  " << info.syntax << std::string(info.syntax.size() < 16 ? 16 - info.syntax.size() : 1, ' ')
                << info.description << "\n";
    std::cout << "custom modules: --module-file with fields {signature, generators[], relations[], archimedean_bound}\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
