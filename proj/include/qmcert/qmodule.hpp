#pragma once

// Quadratic-module descriptions: generator sets (scalar polynomials, constant
// matrix pencils, two-sided ideal relations) over a free *-algebra, the named
// presets, and degree-d truncation plans feeding the Gram/SDP pipeline.
//
// A truncation at degree d consists of one PSD Gram block per generator g over
// multiplier words w (deg w* + deg g + deg w <= d), plus free two-sided
// combinations sum_ij L_ij w_i* r w_j + adjoint for each ideal relation r.

#include <qmcert/freealg.hpp>

#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace qmcert::qmodule {

using freealg::Complex;
using freealg::FreePoly;
using freealg::Matrix;
using freealg::Signature;
using freealg::Word;

enum class GenKind { scalar_poly, matrix_pencil, ideal_pair };

struct Generator {
  GenKind kind = GenKind::scalar_poly;
  FreePoly poly;                               // scalar_poly payload, or ideal relation r
  std::vector<std::vector<FreePoly>> matpoly;  // matrix_pencil payload, s x s
  std::string label;

  int pencil_size() const { return kind == GenKind::matrix_pencil ? static_cast<int>(matpoly.size()) : 1; }

  int degree() const {
    if (kind != GenKind::matrix_pencil) return poly.degree();
    int d = 0;
    for (auto& row : matpoly)
      for (auto& e : row) d = std::max(d, e.degree());
    return d;
  }

  // scalar_poly must be hermitian; pencils hermitian as matrix polynomials.
  void validate() const {
    if (kind == GenKind::scalar_poly && !poly.is_hermitian())
      throw std::invalid_argument("generator '" + label + "': scalar payload not hermitian");
    if (kind == GenKind::matrix_pencil) {
      size_t s = matpoly.size();
      for (auto& row : matpoly)
        if (row.size() != s) throw std::invalid_argument("generator '" + label + "': pencil not square");
      for (size_t i = 0; i < s; ++i)
        for (size_t j = 0; j < s; ++j)
          if (!(matpoly[i][j].adjoint() - matpoly[j][i]).is_zero())
            throw std::invalid_argument("generator '" + label + "': pencil not hermitian");
    }
  }
};

enum class PresetKind { custom, pencil, ball_row, contractions, isometry, free_group, heisenberg, toeplitz };

struct ModuleDescription {
  Signature sig;
  std::vector<Generator> gens;  // the SOS block over 1 is always implicit
  std::string name = "custom";
  PresetKind preset = PresetKind::custom;

  // Archimedean bookkeeping: ell with ell - sum z_i^* z_i in Q, and a per-variable
  // norm bound used when absorbing reconstruction residuals into certified values.
  // letter_bound_sound marks the bound as valid for every representation in the
  // level set (true for the shipped presets; scalar-level estimates are not).
  bool arch_known = false;
  double arch_bound = 0;
  double letter_bound = 0;
  bool letter_bound_sound = false;

  std::vector<const Generator*> block_generators() const {
    std::vector<const Generator*> out;
    for (auto& g : gens)
      if (g.kind != GenKind::ideal_pair) out.push_back(&g);
    return out;
  }
  std::vector<const Generator*> ideal_generators() const {
    std::vector<const Generator*> out;
    for (auto& g : gens)
      if (g.kind == GenKind::ideal_pair) out.push_back(&g);
    return out;
  }

  void validate() const {
    for (auto& g : gens) g.validate();
  }

  // Feasibility residual of a matrix tuple against all generators: max over
  // ideal relations of ||r(X)|| and over blocks of the negative part of g(X).
  double feasibility_residual(const freealg::MatrixTuple& x) const {
    double resid = 0;
    for (auto& g : gens) {
      if (g.kind == GenKind::ideal_pair) {
        resid = std::max(resid, g.poly.evaluate(x).operatorNorm());
      } else if (g.kind == GenKind::scalar_poly) {
        Matrix m = g.poly.evaluate(x);
        Eigen::SelfAdjointEigenSolver<Matrix> es(((m + m.adjoint()) / 2.0).eval(), Eigen::EigenvaluesOnly);
        resid = std::max(resid, std::max(0.0, -es.eigenvalues().minCoeff()));
      } else {
        const int s = g.pencil_size();
        Matrix big(s * x.dim, s * x.dim);
        for (int i = 0; i < s; ++i)
          for (int j = 0; j < s; ++j)
            big.block(i * x.dim, j * x.dim, x.dim, x.dim) =
                g.matpoly[static_cast<size_t>(i)][static_cast<size_t>(j)].evaluate(x);
        Eigen::SelfAdjointEigenSolver<Matrix> es(((big + big.adjoint()) / 2.0).eval(), Eigen::EigenvaluesOnly);
        resid = std::max(resid, std::max(0.0, -es.eigenvalues().minCoeff()));
      }
    }
    return resid;
  }
};

// ---------- presets ----------

// L = I_s + sum M_i z_i over hermitian variables z_i.
inline ModuleDescription pencil_module(const std::vector<Matrix>& coeff_mats) {
  if (coeff_mats.empty()) throw std::invalid_argument("pencil_module: no coefficient matrices");
  const int n = static_cast<int>(coeff_mats.size());
  const Eigen::Index s = coeff_mats[0].rows();
  for (const auto& m : coeff_mats) {
    if (m.rows() != s || m.cols() != s) throw std::invalid_argument("pencil_module: size mismatch");
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + m.cwiseAbs().maxCoeff()))
      throw std::invalid_argument("pencil_module: non-hermitian coefficient");
  }
  ModuleDescription q;
  q.sig = Signature::make(n, true);
  q.name = "pencil";
  q.preset = PresetKind::pencil;
  Generator g;
  g.kind = GenKind::matrix_pencil;
  g.label = "L";
  g.matpoly.assign(static_cast<size_t>(s), std::vector<FreePoly>(static_cast<size_t>(s), FreePoly::zero(q.sig)));
  for (Eigen::Index i = 0; i < s; ++i)
    for (Eigen::Index j = 0; j < s; ++j) {
      FreePoly e = FreePoly::constant(q.sig, i == j ? 1.0 : 0.0);
      for (int v = 0; v < n; ++v)
        e += coeff_mats[static_cast<size_t>(v)](i, j) * FreePoly::variable(q.sig, v);
      g.matpoly[static_cast<size_t>(i)][static_cast<size_t>(j)] = e;
    }
  q.gens.push_back(std::move(g));
  // archimedean-ness is a property of the level-1 set; left unknown here and
  // optionally filled by level1_bounded_estimate below.
  return q;
}

// Heuristic level-1 boundedness probe for pencils: search for a recession
// direction v with sum v_i M_i >= 0; none found on the grid => bounded, and the
// level-1 radius bound max_u 1/lambda_max(-sum u_i M_i) is returned.
inline std::optional<double> level1_bounded_estimate(const std::vector<Matrix>& coeff_mats, int grid = 4000) {
  const int n = static_cast<int>(coeff_mats.size());
  const Eigen::Index s = coeff_mats[0].rows();
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double radius = 0;
  for (int it = 0; it < grid; ++it) {
    Eigen::VectorXd u(n);
    for (int i = 0; i < n; ++i) u[i] = gauss(rng);
    u.normalize();
    Matrix t = Matrix::Zero(s, s);
    for (int i = 0; i < n; ++i) t += u[i] * coeff_mats[static_cast<size_t>(i)];
    Eigen::SelfAdjointEigenSolver<Matrix> es(t, Eigen::EigenvaluesOnly);
    double lmin = es.eigenvalues().minCoeff();
    if (lmin >= -1e-12) return std::nullopt;  // recession direction: unbounded
    radius = std::max(radius, 1.0 / -lmin);
  }
  return radius;
}

enum class BallKind { row_ball, column_contractions };

inline ModuleDescription ball_module(BallKind kind, int n) {
  ModuleDescription q;
  q.sig = Signature::make(n, false);
  q.preset = kind == BallKind::row_ball ? PresetKind::ball_row : PresetKind::contractions;
  q.name = kind == BallKind::row_ball ? "row_ball" : "column_contractions";
  if (kind == BallKind::row_ball) {
    FreePoly g = FreePoly::one(q.sig);
    for (int i = 0; i < n; ++i)
      g -= FreePoly::variable(q.sig, i, true) * FreePoly::variable(q.sig, i);
    Generator gen;
    gen.poly = g;
    gen.label = "1-sum(z^*z)";
    q.gens.push_back(std::move(gen));
    q.arch_bound = 1;
  } else {
    for (int i = 0; i < n; ++i) {
      Generator gen;
      gen.poly = FreePoly::one(q.sig) - FreePoly::variable(q.sig, i, true) * FreePoly::variable(q.sig, i);
      gen.label = "1-z" + std::to_string(i + 1) + "^*z" + std::to_string(i + 1);
      q.gens.push_back(std::move(gen));
    }
    q.arch_bound = n;
  }
  q.arch_known = true;
  q.letter_bound = 1;
  q.letter_bound_sound = true;
  return q;
}

// Columns of an isometry: the two-sided ideal generated by sum z_i^* z_i - 1.
inline ModuleDescription isometry_module(int n) {
  ModuleDescription q;
  q.sig = Signature::make(n, false);
  q.preset = PresetKind::isometry;
  q.name = "isometry";
  FreePoly r = FreePoly::constant(q.sig, -1.0);
  for (int i = 0; i < n; ++i)
    r += FreePoly::variable(q.sig, i, true) * FreePoly::variable(q.sig, i);
  Generator gen;
  gen.kind = GenKind::ideal_pair;
  gen.poly = r;
  gen.label = "sum(z^*z)-1";
  q.gens.push_back(std::move(gen));
  q.arch_known = true;
  q.arch_bound = 1;
  q.letter_bound = 1;
  q.letter_bound_sound = true;
  return q;
}

enum class GroupPreset { free_group, heisenberg, toeplitz };

inline ModuleDescription group_module(GroupPreset preset, int m = 1) {
  ModuleDescription q;
  auto add_relation = [&q](const FreePoly& r, const std::string& label) {
    Generator g;
    g.kind = GenKind::ideal_pair;
    g.poly = r;
    g.label = label;
    q.gens.push_back(std::move(g));
  };
  auto unitarity = [&](int v, const std::string& nm) {
    FreePoly z = FreePoly::variable(q.sig, v), zs = FreePoly::variable(q.sig, v, true);
    add_relation(zs * z - FreePoly::one(q.sig), nm + "^*" + nm + "-1");
    add_relation(z * zs - FreePoly::one(q.sig), nm + nm + "^*-1");
  };
  switch (preset) {
    case GroupPreset::free_group: {
      q.sig = Signature::make(m, false);
      q.name = "free_group(" + std::to_string(m) + ")";
      q.preset = PresetKind::free_group;
      for (int i = 0; i < m; ++i) unitarity(i, q.sig.names[static_cast<size_t>(i)]);
      q.arch_bound = m;
      break;
    }
    case GroupPreset::heisenberg: {
      q.sig = Signature::make(3, false, {"a", "b", "c"});
      q.name = "heisenberg";
      q.preset = PresetKind::heisenberg;
      FreePoly a = FreePoly::variable(q.sig, 0), b = FreePoly::variable(q.sig, 1), c = FreePoly::variable(q.sig, 2);
      add_relation(a * b - c * b * a, "ab-cba");
      add_relation(c * a - a * c, "ca-ac");
      add_relation(c * b - b * c, "cb-bc");
      for (int i = 0; i < 3; ++i) unitarity(i, q.sig.names[static_cast<size_t>(i)]);
      q.arch_bound = 3;
      break;
    }
    case GroupPreset::toeplitz: {
      q.sig = Signature::make(1, false);
      q.name = "toeplitz";
      q.preset = PresetKind::toeplitz;
      FreePoly z = FreePoly::variable(q.sig, 0), zs = FreePoly::variable(q.sig, 0, true);
      add_relation(z * zs - FreePoly::one(q.sig), "zz^*-1");  // z^*z stays free
      q.arch_bound = 1;
      break;
    }
  }
  q.arch_known = true;
  q.letter_bound = 1;
  q.letter_bound_sound = true;
  return q;
}

// ---------- truncation ----------

struct BlockPlan {
  int gen_index = -1;  // -1 = implicit SOS generator 1
  int pencil_size = 1;
  std::vector<Word> words;  // multiplier words; Gram dimension = pencil_size * words
  int gram_dim() const { return pencil_size * static_cast<int>(words.size()); }
};

struct IdealPlan {
  int gen_index = 0;
  std::vector<Word> words;                 // multiplier pool, deg <= d - deg r
  std::vector<std::pair<int, int>> pairs;  // (left, right) with deg_l + deg_r + deg(r) <= d
};

struct TruncationPlan {
  int d = 0;
  std::vector<BlockPlan> blocks;
  std::vector<IdealPlan> ideals;

  int total_gram_dim() const {
    int s = 0;
    for (auto& b : blocks) s += b.gram_dim();
    return s;
  }
  int total_free_vars() const {  // real count: one complex pair per (i,j)
    int s = 0;
    for (auto& i : ideals) s += 2 * static_cast<int>(i.pairs.size());
    return s;
  }
};

inline std::vector<Word> words_up_to(const Signature& sig, int maxdeg) {
  return freealg::monomial_basis(sig, std::max(0, maxdeg));
}

inline TruncationPlan truncate(const ModuleDescription& q, int d) {
  int maxgen = 0;
  for (auto& g : q.gens) maxgen = std::max(maxgen, g.degree());
  if (d < maxgen) throw std::invalid_argument("truncate: degree below maximum generator degree");

  TruncationPlan plan;
  plan.d = d;
  BlockPlan sos;
  sos.gen_index = -1;
  sos.words = words_up_to(q.sig, d / 2);
  plan.blocks.push_back(std::move(sos));

  for (size_t gi = 0; gi < q.gens.size(); ++gi) {
    const Generator& g = q.gens[gi];
    if (g.kind == GenKind::ideal_pair) {
      IdealPlan ip;
      ip.gen_index = static_cast<int>(gi);
      int budget = d - g.degree();
      ip.words = words_up_to(q.sig, budget);
      for (int i = 0; i < static_cast<int>(ip.words.size()); ++i)
        for (int j = 0; j < static_cast<int>(ip.words.size()); ++j)
          if (ip.words[static_cast<size_t>(i)].degree() + ip.words[static_cast<size_t>(j)].degree() <= budget)
            ip.pairs.emplace_back(i, j);
      plan.ideals.push_back(std::move(ip));
    } else {
      BlockPlan bp;
      bp.gen_index = static_cast<int>(gi);
      bp.pencil_size = g.pencil_size();
      bp.words = words_up_to(q.sig, (d - g.degree()) / 2);
      plan.blocks.push_back(std::move(bp));
    }
  }
  return plan;
}

// Symbolic localizing block B[i][j] = w_i^* g w_j; pencils expand blockwise to
// dimension s*N with index (sigma, i) -> sigma * N + ... laid out word-major:
// index = i * s + sigma, so scalar generators (s = 1) keep their word indexing.
inline std::vector<std::vector<FreePoly>> localizing_block(const ModuleDescription& q, const BlockPlan& bp) {
  const Signature& sig = q.sig;
  const int n = static_cast<int>(bp.words.size());
  const int s = bp.pencil_size;
  std::vector<std::vector<FreePoly>> out(static_cast<size_t>(n * s),
                                         std::vector<FreePoly>(static_cast<size_t>(n * s), FreePoly::zero(sig)));
  auto word_poly = [&sig](const Word& w) { return FreePoly::monomial(sig, w); };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      FreePoly left = word_poly(bp.words[static_cast<size_t>(i)].adjoint(sig));
      FreePoly right = word_poly(bp.words[static_cast<size_t>(j)]);
      if (bp.gen_index < 0) {
        out[static_cast<size_t>(i)][static_cast<size_t>(j)] = left * right;
      } else {
        const Generator& g = q.gens[static_cast<size_t>(bp.gen_index)];
        if (g.kind == GenKind::scalar_poly) {
          out[static_cast<size_t>(i)][static_cast<size_t>(j)] = left * g.poly * right;
        } else {
          for (int si = 0; si < s; ++si)
            for (int sj = 0; sj < s; ++sj)
              out[static_cast<size_t>(i * s + si)][static_cast<size_t>(j * s + sj)] =
                  left * g.matpoly[static_cast<size_t>(si)][static_cast<size_t>(sj)] * right;
        }
      }
    }
  return out;
}

// Values for the truncation's variables: one PSD Gram per block plan and one
// complex coefficient per ideal pair.
struct TruncationValues {
  std::vector<Matrix> gram;                    // per plan.blocks
  std::vector<std::vector<Complex>> ideal;     // per plan.ideals, aligned with pairs
};

// The polynomial the variables represent: sum_blocks sum_ij G_ij w_i^* g w_j
// plus sum_ideals sum_pairs (L w_l^* r w_r + adjoint).
inline FreePoly reconstruct(const ModuleDescription& q, const TruncationPlan& plan, const TruncationValues& vals) {
  const Signature& sig = q.sig;
  FreePoly acc(sig);
  for (size_t bi = 0; bi < plan.blocks.size(); ++bi) {
    auto block = localizing_block(q, plan.blocks[bi]);
    const Matrix& g = vals.gram[bi];
    for (size_t i = 0; i < block.size(); ++i)
      for (size_t j = 0; j < block.size(); ++j)
        if (std::abs(g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) > 1e-16)
          acc += g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * block[i][j];
  }
  for (size_t ii = 0; ii < plan.ideals.size(); ++ii) {
    const IdealPlan& ip = plan.ideals[ii];
    const FreePoly& r = q.gens[static_cast<size_t>(ip.gen_index)].poly;
    for (size_t pi = 0; pi < ip.pairs.size(); ++pi) {
      auto [li, ri] = ip.pairs[pi];
      Complex lam = vals.ideal[ii][pi];
      if (std::abs(lam) < 1e-18) continue;
      FreePoly term = FreePoly::monomial(sig, ip.words[static_cast<size_t>(li)].adjoint(sig)) * r *
                      FreePoly::monomial(sig, ip.words[static_cast<size_t>(ri)]);
      FreePoly contrib = lam * term;
      acc += contrib + contrib.adjoint();
    }
  }
  return acc.normalize();
}

}  // namespace qmcert::qmodule
