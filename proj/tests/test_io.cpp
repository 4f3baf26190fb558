#include <qmcert/io.hpp>

#include <catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "test_util.hpp"

using namespace qmcert;
using freealg::Complex;
using freealg::FreePoly;
using freealg::Matrix;
using freealg::MatrixTuple;
using freealg::Signature;
using io::json;

namespace {

// JSON -> module -> JSON must be the identity on printer output.
void check_module_roundtrip(const qmodule::ModuleDescription& q) {
  json j1 = io::module_to_json(q);
  qmodule::ModuleDescription back = io::module_from_json(j1);
  json j2 = io::module_to_json(back);
  CHECK(j1 == j2);
  CHECK(back.sig == q.sig);
  CHECK(back.gens.size() == q.gens.size());
  for (size_t i = 0; i < q.gens.size(); ++i) {
    CHECK(back.gens[i].kind == q.gens[i].kind);
    CHECK(back.gens[i].label == q.gens[i].label);
    if (q.gens[i].kind != qmodule::GenKind::matrix_pencil)
      CHECK((back.gens[i].poly - q.gens[i].poly).coeff_norm1() < 1e-15);
  }
  CHECK(back.arch_known == q.arch_known);
  if (q.arch_known) CHECK(back.arch_bound == q.arch_bound);
  // Textual round-trip as well: dump, reparse, compare.
  json j3 = json::parse(j1.dump(2));
  CHECK(j3 == j1);
}

}  // namespace

TEST_CASE("module descriptions round-trip through JSON for every preset", "[io]") {
  check_module_roundtrip(qmodule::ball_module(qmodule::BallKind::row_ball, 2));
  check_module_roundtrip(qmodule::ball_module(qmodule::BallKind::column_contractions, 3));
  check_module_roundtrip(qmodule::isometry_module(2));
  check_module_roundtrip(qmodule::group_module(qmodule::GroupPreset::free_group, 2));
  check_module_roundtrip(qmodule::group_module(qmodule::GroupPreset::heisenberg));
  check_module_roundtrip(qmodule::group_module(qmodule::GroupPreset::toeplitz));

  // A pencil module exercises the entries[][] path.
  std::vector<Matrix> coeffs;
  Matrix a(2, 2), b(2, 2);
  a << 1, 0, 0, -1;
  b << 0, Complex(0, -1), Complex(0, 1), 0;
  coeffs.push_back(a);
  coeffs.push_back(b);
  qmodule::ModuleDescription pm = qmodule::pencil_module(coeffs);
  check_module_roundtrip(pm);
}

TEST_CASE("module parser rejects unknown and malformed fields by name", "[io]") {
  json good = io::module_to_json(qmodule::ball_module(qmodule::BallKind::row_ball, 1));

  json j = good;
  j["surprise"] = 1;
  CHECK_THROWS_WITH(io::module_from_json(j), Catch::Matchers::ContainsSubstring("module.surprise"));

  j = good;
  j["signature"]["extra"] = true;
  CHECK_THROWS_WITH(io::module_from_json(j), Catch::Matchers::ContainsSubstring("signature.extra"));

  j = good;
  j.erase("signature");
  CHECK_THROWS_WITH(io::module_from_json(j), Catch::Matchers::ContainsSubstring("module.signature"));

  j = good;
  j.erase("archimedean_bound");
  CHECK_THROWS_WITH(io::module_from_json(j), Catch::Matchers::ContainsSubstring("archimedean_bound"));

  j = good;
  j["archimedean_bound"] = -2.0;
  CHECK_THROWS_WITH(io::module_from_json(j), Catch::Matchers::ContainsSubstring("archimedean_bound"));

  j = good;
  j["generators"][0]["poly"] = "1 - q7";
  CHECK_THROWS_WITH(io::module_from_json(j), Catch::Matchers::ContainsSubstring("generators[0].poly"));

  // Non-hermitian scalar generators are invalid module data.
  j = good;
  j["generators"][0]["poly"] = "z1";
  CHECK_THROWS_WITH(io::module_from_json(j), Catch::Matchers::ContainsSubstring("generators[0]"));

  j = good;
  j["signature"]["nvars"] = 0;
  CHECK_THROWS_WITH(io::module_from_json(j), Catch::Matchers::ContainsSubstring("signature.nvars"));

  // Ragged pencils are rejected with the row index.
  json pj = json::object();
  pj["signature"] = {{"nvars", 1}, {"hermitian", true}, {"names", {"x"}}};
  pj["generators"] = json::array();
  json gen = json::object();
  gen["kind"] = "pencil";
  gen["entries"] = json::array({json::array({"1", "x"})});
  pj["generators"].push_back(gen);
  pj["archimedean_bound"] = nullptr;
  CHECK_THROWS_WITH(io::module_from_json(pj), Catch::Matchers::ContainsSubstring("entries[0]"));
}

TEST_CASE("relations accept string shorthand and hermitian flags broadcast", "[io]") {
  json j = json::object();
  j["signature"] = {{"nvars", 1}, {"hermitian", false}};
  j["relations"] = json::array({"z1^**z1 - 1"});
  j["archimedean_bound"] = 1.0;
  qmodule::ModuleDescription q = io::module_from_json(j);
  REQUIRE(q.gens.size() == 1);
  CHECK(q.gens[0].kind == qmodule::GenKind::ideal_pair);
  CHECK(q.sig.names[0] == "z1");
  CHECK(q.arch_known);
  CHECK(q.letter_bound == 1.0);
  CHECK(q.letter_bound_sound);

  // Broadcast hermitian: true gives a selfadjoint alphabet.
  json h = json::object();
  h["signature"] = {{"nvars", 2}, {"hermitian", true}, {"names", {"x", "y"}}};
  h["archimedean_bound"] = nullptr;
  qmodule::ModuleDescription qh = io::module_from_json(h);
  CHECK(qh.sig.hermitian == std::vector<bool>{true, true});
  CHECK_FALSE(qh.arch_known);
  CHECK_FALSE(qh.letter_bound_sound);
}

TEST_CASE("matrices and tuples round-trip exactly through dumped JSON", "[io]") {
  std::mt19937_64 rng(7);
  for (int round = 0; round < 10; ++round) {
    Matrix m = testutil::random_matrix(rng, 3, 2);
    json j = json::parse(io::matrix_to_json(m).dump());
    Matrix back = io::matrix_from_json(j, "m");
    REQUIRE(back.rows() == 3);
    REQUIRE(back.cols() == 2);
    CHECK((back - m).cwiseAbs().maxCoeff() == 0.0);  // binary-exact round-trip
  }

  Signature sig = Signature::make(2, false, {"s", "t"});
  MatrixTuple x = testutil::random_tuple(rng, sig, 3);
  json tj = json::parse(io::tuple_to_json(x, sig).dump(2));
  MatrixTuple back = io::tuple_from_json(tj, sig);
  CHECK(back.dim == 3);
  for (int v = 0; v < 2; ++v) CHECK((back.mats[v] - x.mats[v]).cwiseAbs().maxCoeff() == 0.0);

  // Strictness: missing matrix, unknown matrix, bad dim.
  json bad = tj;
  bad["matrices"].erase("t");
  CHECK_THROWS_WITH(io::tuple_from_json(bad, sig), Catch::Matchers::ContainsSubstring("matrices.t"));
  bad = tj;
  bad["matrices"]["u"] = bad["matrices"]["s"];
  CHECK_THROWS_WITH(io::tuple_from_json(bad, sig), Catch::Matchers::ContainsSubstring("matrices.u"));
  bad = tj;
  bad["dim"] = 0;
  CHECK_THROWS_WITH(io::tuple_from_json(bad, sig), Catch::Matchers::ContainsSubstring("dim"));

  // Hermitian-variable validation happens on load.
  Signature hs = Signature::make(1, true, {"x"});
  MatrixTuple hx = MatrixTuple::identity(hs, 2);
  json hj = io::tuple_to_json(hx, hs);
  hj["matrices"]["x"][0][1] = json::array({1.0, 0.0});  // breaks hermiticity
  CHECK_THROWS_AS(io::tuple_from_json(hj, hs), std::invalid_argument);
}

TEST_CASE("preset resolution covers the catalog and rejects malformed names", "[io]") {
  CHECK(io::resolve_preset("free_group:2").sig.nvars == 2);
  CHECK(io::resolve_preset("ball:1").name == "row_ball");
  CHECK(io::resolve_preset("contractions:3").sig.nvars == 3);
  CHECK(io::resolve_preset("isometry:2").gens.size() >= 1);
  CHECK(io::resolve_preset("heisenberg").sig.nvars == 3);
  CHECK(io::resolve_preset("toeplitz").sig.nvars == 1);

  CHECK_THROWS_WITH(io::resolve_preset("free_group"), Catch::Matchers::ContainsSubstring("count"));
  CHECK_THROWS_WITH(io::resolve_preset("heisenberg:2"), Catch::Matchers::ContainsSubstring("count"));
  CHECK_THROWS_WITH(io::resolve_preset("ball:x"), Catch::Matchers::ContainsSubstring("malformed"));
  CHECK_THROWS_WITH(io::resolve_preset("ball:0"), Catch::Matchers::ContainsSubstring("positive"));
  CHECK_THROWS_WITH(io::resolve_preset("banana"), Catch::Matchers::ContainsSubstring("unknown preset"));

  // Every catalog entry resolves with a representative count.
  for (auto& info : io::preset_catalog()) {
    std::string text = info.syntax;
    auto colon = text.find(':');
    if (colon != std::string::npos) text = text.substr(0, colon) + ":2";
    CHECK_NOTHROW(io::resolve_preset(text));
  }
}

TEST_CASE("problem files round-trip and reject unknown params", "[io]") {
  io::ProblemFile p;
  p.query = "norm";
  p.preset = "free_group:2";
  p.poly = "z1+z1^*+z2+z2^*";
  p.params = {{"d", 2}, {"n", 1}, {"seed", 0}};
  json j = io::problem_to_json(p);
  io::ProblemFile back = io::problem_from_json(j);
  CHECK(io::problem_to_json(back) == j);
  CHECK(back.query == "norm");
  REQUIRE(back.preset.has_value());
  CHECK(*back.preset == "free_group:2");
  REQUIRE(back.poly.has_value());

  json bad = j;
  bad["params"]["granularity"] = 3;
  CHECK_THROWS_WITH(io::problem_from_json(bad), Catch::Matchers::ContainsSubstring("params.granularity"));
  bad = j;
  bad["query"] = "solve";
  CHECK_THROWS_WITH(io::problem_from_json(bad), Catch::Matchers::ContainsSubstring("query"));
  bad = j;
  bad["module"] = "nope:1";
  CHECK_THROWS_AS(io::problem_from_json(bad), std::invalid_argument);

  // Inline module objects validate on load and round-trip untouched.
  json inline_j = j;
  inline_j["module"] = io::module_to_json(qmodule::ball_module(qmodule::BallKind::row_ball, 1));
  io::ProblemFile pin = io::problem_from_json(inline_j);
  REQUIRE(pin.module_inline.has_value());
  CHECK(io::problem_to_json(pin) == inline_j);
}

TEST_CASE("module files load from disk and errors carry the file name", "[io]") {
  qmodule::ModuleDescription q = qmodule::group_module(qmodule::GroupPreset::free_group, 1);
  std::string path = "io_test_module.json";
  io::write_text_file(path, io::module_to_json(q).dump(2));
  qmodule::ModuleDescription back = io::module_from_file(path);
  CHECK(io::module_to_json(back) == io::module_to_json(q));
  std::remove(path.c_str());

  CHECK_THROWS_WITH(io::load_json_file("does_not_exist.json"), Catch::Matchers::ContainsSubstring("does_not_exist.json"));
  io::write_text_file(path, "{ not json");
  CHECK_THROWS_WITH(io::load_json_file(path), Catch::Matchers::ContainsSubstring("not valid JSON"));
  std::remove(path.c_str());
}

TEST_CASE("certificates serialize with labelled PSD blocks", "[io]") {
  qmodule::ModuleDescription q = qmodule::ball_module(qmodule::BallKind::row_ball, 1);
  FreePoly z = FreePoly::variable(q.sig, 0);
  FreePoly a = FreePoly::constant(q.sig, 1.0) - z.adjoint() * z;  // the generator itself
  certify::MemberResult mr = certify::member_eps(q, a, 2);
  REQUIRE(mr.status == certify::CertStatus::certified);
  REQUIRE(mr.certificate.has_value());

  json cj = io::certificate_to_json(*mr.certificate, q);
  CHECK(cj.contains("blocks"));
  CHECK(cj["residual_norm1"].get<double>() < 1e-6);
  REQUIRE(cj["blocks"].size() >= 1);
  for (auto& bj : cj["blocks"]) {
    Matrix g = io::matrix_from_json(bj["gram"], "gram");
    REQUIRE(g.rows() == g.cols());
    Eigen::SelfAdjointEigenSolver<Matrix> es(g);
    CHECK(es.eigenvalues().minCoeff() >= -1e-8);
    CHECK(bj["words"].size() * (bj["pencil_size"].get<int>()) == static_cast<size_t>(g.rows()));
  }
  // Words print in parseable form.
  CHECK(cj["blocks"][0]["words"][0].get<std::string>() == "1");
}

TEST_CASE("csv numbers carry 12 significant digits", "[io]") {
  CHECK(io::csv_number(4.0) == "4");
  CHECK(io::csv_number(2.0 * std::sqrt(2.0)) == "2.82842712475");
  CHECK(io::csv_number(-0.5) == "-0.5");
  CHECK(io::csv_number(1e-3) == "0.001");
}
