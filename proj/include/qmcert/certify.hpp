#pragma once

// Positivity certificates over truncated quadratic modules. A membership
// question "a in Q_d" becomes a linear system on Gram blocks (PSD) and ideal
// coefficients (free): matching the word-by-word coefficients of
//   sum_g w_i^* g w_j G_ij + sum_r (L w^* r w + h.c.)  =  a.
// Each complex word equation splits into real rows; conjugate words give
// identical information (everything in sight is hermitian), so only one
// representative per {w, w^*} is emitted.
//
// On top of that: phase-1 membership tests, norm upper bounds (direct square
// mode and two-sided hermitian mode) with residual inflation against the
// per-letter norm bound, and matrix-level positivity checks for linear maps
// given on a spanning set (u.c.p.-style tests and convex hull membership).

#include <qmcert/freealg.hpp>
#include <qmcert/qmodule.hpp>
#include <qmcert/sdp.hpp>

#include <cstdio>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace qmcert::certify {

using freealg::Complex;
using freealg::FreePoly;
using freealg::Matrix;
using freealg::Word;
using Eigen::VectorXd;

namespace detail {

constexpr Complex kI{0.0, 1.0};

// Complex-linear functional of the SDP variables: sum c * G_ij over hermitian
// Gram entries plus sum c * x_k over real free variables.
struct Lin {
  std::vector<std::tuple<int, int, int, Complex>> gram;  // (block, i, j, c)
  std::vector<std::pair<int, Complex>> freec;            // (var, c)
  bool empty() const { return gram.empty() && freec.empty(); }
};

// Collects real constraint rows / objective from complex functionals. The real
// part of <c, G_ij> needs A(i,j) += conj(c)/2, A(j,i) += c/2 so that the
// hermitian pairing Re tr(A^* G) reproduces Re(sum c_ij G_ij); the imaginary
// part uses A(i,j) += i conj(c)/2, A(j,i) += -i c/2.
class EquationBuilder {
 public:
  EquationBuilder(std::vector<int> dims, int nfree) : dims_(std::move(dims)), nfree_(nfree) {}

  void add_row(const Lin& lin, Complex rhs, bool selfadjoint) {
    emit(lin, false, rhs.real());
    if (!selfadjoint) emit(lin, true, rhs.imag());
  }

  void set_objective(const Lin& lin) {
    obj_mats_ = sdp::BlockMatrix::zero(dims_);
    obj_free_ = VectorXd::Zero(nfree_);
    fill(lin, false, obj_mats_, obj_free_);
  }

  int rows() const { return static_cast<int>(rows_.size()); }

  sdp::SdpProblem take() {
    sdp::SdpProblem p;
    p.block_dims = dims_;
    const int m = rows();
    p.b = VectorXd(m);
    p.free_coeffs = Eigen::MatrixXd(m, nfree_);
    for (int k = 0; k < m; ++k) {
      p.constraints.push_back(std::move(rows_[static_cast<size_t>(k)].mats));
      p.b[k] = rows_[static_cast<size_t>(k)].rhs;
      p.free_coeffs.row(k) = rows_[static_cast<size_t>(k)].frow.transpose();
    }
    if (obj_mats_.blocks.empty()) obj_mats_ = sdp::BlockMatrix::zero(dims_);
    if (obj_free_.size() == 0) obj_free_ = VectorXd::Zero(nfree_);
    p.objective = std::move(obj_mats_);
    p.free_obj = std::move(obj_free_);
    rows_.clear();
    p.finish();
    return p;
  }

 private:
  struct Row {
    sdp::BlockMatrix mats;
    VectorXd frow;
    double rhs = 0;
  };

  void fill(const Lin& lin, bool imag, sdp::BlockMatrix& mats, VectorXd& frow) const {
    for (auto& [b, i, j, c] : lin.gram) {
      Matrix& m = mats.blocks[static_cast<size_t>(b)];
      if (!imag) {
        m(i, j) += std::conj(c) / 2.0;
        m(j, i) += c / 2.0;
      } else {
        m(i, j) += kI * std::conj(c) / 2.0;
        m(j, i) += -kI * c / 2.0;
      }
    }
    for (auto& [k, c] : lin.freec) frow[k] += imag ? c.imag() : c.real();
  }

  void emit(const Lin& lin, bool imag, double rhs) {
    Row r;
    r.mats = sdp::BlockMatrix::zero(dims_);
    r.frow = VectorXd::Zero(nfree_);
    fill(lin, imag, r.mats, r.frow);
    r.rhs = rhs;
    rows_.push_back(std::move(r));
  }

  std::vector<int> dims_;
  int nfree_ = 0;
  std::vector<Row> rows_;
  sdp::BlockMatrix obj_mats_;
  VectorXd obj_free_;
};

// Per-word coefficient data of one truncated module section, with indices
// relative to the section (block index into plan.blocks, pair index into the
// flattened ideal pair list).
struct SectionData {
  qmodule::TruncationPlan plan;
  struct WordLin {
    std::vector<std::tuple<int, int, int, Complex>> gram;  // (plan block, i, j, c)
    std::vector<std::pair<int, Complex>> t_terms;          // (pair, coeff of w in w_l^* r w_m)
    std::vector<std::pair<int, Complex>> ta_terms;         // (pair, coeff of w in the adjoint)
  };
  std::map<Word, WordLin> coeff;
  int num_pairs = 0;  // complex ideal coefficients; 2 * num_pairs real vars

  std::vector<int> gram_dims() const {
    std::vector<int> d;
    for (auto& b : plan.blocks) d.push_back(b.gram_dim());
    return d;
  }
};

// Exact basis reduction. If some word of the diagonal product w_i^* g w_i is
// produced by no other block product, no ideal term, and no allowed
// right-hand-side word, every feasible Gram must have G_ii = 0, so row i can
// be dropped. Restores strict feasibility lost to unreachable monomials and
// never changes the optimum. Pencil blocks only block removals elsewhere
// (their rows are (word, pencil index) pairs, not words).
inline void prune_plan(const qmodule::ModuleDescription& q, qmodule::TruncationPlan& plan,
                       const std::set<Word>& allowed) {
  auto gen_poly = [&](int gen_index) -> const FreePoly* {
    if (gen_index < 0) return nullptr;  // implicit SOS generator 1
    return &q.gens[static_cast<size_t>(gen_index)].poly;
  };
  bool changed = true;
  while (changed) {
    changed = false;
    // how many distinct product entries hit each word, remembering the sole one
    std::map<Word, std::pair<int, std::tuple<int, int, int>>> hits;
    auto record = [&](const Word& w, int b, int i, int j) {
      auto& h = hits[w];
      if (h.first == 0) h.second = {b, i, j};
      h.first += 1;
    };
    for (size_t b = 0; b < plan.blocks.size(); ++b) {
      auto& bp = plan.blocks[b];
      const int nw = static_cast<int>(bp.words.size());
      for (int i = 0; i < nw; ++i)
        for (int j = 0; j < nw; ++j) {
          FreePoly left = FreePoly::monomial(q.sig, bp.words[static_cast<size_t>(i)].adjoint(q.sig));
          FreePoly right = FreePoly::monomial(q.sig, bp.words[static_cast<size_t>(j)]);
          if (bp.pencil_size == 1) {
            const FreePoly* g = gen_poly(bp.gen_index);
            FreePoly prod = g ? left * (*g) * right : left * right;
            for (auto& [w, c] : prod.terms) record(w, static_cast<int>(b), i, j);
          } else {
            const auto& g = q.gens[static_cast<size_t>(bp.gen_index)];
            for (auto& row : g.matpoly)
              for (auto& e : row) {
                FreePoly prod = left * e * right;
                for (auto& [w, c] : prod.terms) record(w, static_cast<int>(b), -1, -1);  // unremovable
              }
          }
        }
    }
    for (auto& ip : plan.ideals) {
      const FreePoly& r = q.gens[static_cast<size_t>(ip.gen_index)].poly;
      for (auto [li, mi] : ip.pairs) {
        FreePoly t = FreePoly::monomial(q.sig, ip.words[static_cast<size_t>(li)].adjoint(q.sig)) * r *
                     FreePoly::monomial(q.sig, ip.words[static_cast<size_t>(mi)]);
        for (auto& [w, c] : t.terms) record(w, -1, -1, -1);
        for (auto& [w, c] : t.adjoint().terms) record(w, -1, -1, -1);
      }
    }

    for (size_t b = 0; b < plan.blocks.size(); ++b) {
      auto& bp = plan.blocks[b];
      if (bp.pencil_size != 1) continue;
      const FreePoly* g = gen_poly(bp.gen_index);
      std::vector<Word> kept;
      for (int i = 0; i < static_cast<int>(bp.words.size()); ++i) {
        FreePoly left = FreePoly::monomial(q.sig, bp.words[static_cast<size_t>(i)].adjoint(q.sig));
        FreePoly right = FreePoly::monomial(q.sig, bp.words[static_cast<size_t>(i)]);
        FreePoly diag = g ? left * (*g) * right : left * right;
        bool removable = false;
        for (auto& [w, c] : diag.terms) {
          if (allowed.count(w)) continue;
          auto it = hits.find(w);
          if (it != hits.end() && it->second.first == 1 &&
              it->second.second == std::make_tuple(static_cast<int>(b), i, i)) {
            removable = true;
            break;
          }
        }
        if (!removable) kept.push_back(bp.words[static_cast<size_t>(i)]);
      }
      if (kept.size() != bp.words.size()) {
        bp.words = std::move(kept);
        changed = true;
      }
    }
    std::erase_if(plan.blocks, [](const qmodule::BlockPlan& bp) { return bp.words.empty(); });
  }
}

inline SectionData build_section(const qmodule::ModuleDescription& q, int d,
                                 const std::vector<const FreePoly*>& rhs_polys = {}) {
  SectionData sec;
  sec.plan = qmodule::truncate(q, d);
  std::set<Word> allowed;
  for (const FreePoly* p : rhs_polys)
    for (auto& [w, c] : p->terms) {
      allowed.insert(w);
      allowed.insert(w.adjoint(q.sig));
    }
  prune_plan(q, sec.plan, allowed);
  for (size_t bi = 0; bi < sec.plan.blocks.size(); ++bi) {
    auto block = qmodule::localizing_block(q, sec.plan.blocks[bi]);
    for (size_t i = 0; i < block.size(); ++i)
      for (size_t j = 0; j < block.size(); ++j)
        for (auto& [w, c] : block[i][j].terms)
          sec.coeff[w].gram.emplace_back(static_cast<int>(bi), static_cast<int>(i), static_cast<int>(j), c);
  }
  int pair = 0;
  for (auto& ip : sec.plan.ideals) {
    const FreePoly& r = q.gens[static_cast<size_t>(ip.gen_index)].poly;
    for (auto [li, mi] : ip.pairs) {
      FreePoly t = FreePoly::monomial(q.sig, ip.words[static_cast<size_t>(li)].adjoint(q.sig)) * r *
                   FreePoly::monomial(q.sig, ip.words[static_cast<size_t>(mi)]);
      FreePoly ta = t.adjoint();
      for (auto& [w, c] : t.terms) sec.coeff[w].t_terms.emplace_back(pair, c);
      for (auto& [w, c] : ta.terms) sec.coeff[w].ta_terms.emplace_back(pair, c);
      ++pair;
    }
  }
  sec.num_pairs = pair;
  return sec;
}

// Emit the equations "section variables reproduce `target`" into `eb`. The
// section's Gram blocks start at SDP block `block_offset`, its ideal pair
// variables at real index `pair_offset`; `extras` are shared real scalars
// entering with a fixed polynomial coefficient (e.g. t * 1).
inline void append_target_rows(EquationBuilder& eb, const qmodule::ModuleDescription& q, const SectionData& sec,
                               const FreePoly& target, int block_offset, int pair_offset,
                               const std::vector<std::pair<int, FreePoly>>& extras) {
  std::set<Word> reps;
  auto add_rep = [&](const Word& w) {
    Word ws = w.adjoint(q.sig);
    reps.insert(ws < w ? ws : w);
  };
  for (auto& [w, lin] : sec.coeff) add_rep(w);
  for (auto& [w, c] : target.terms) add_rep(w);
  for (auto& [var, p] : extras)
    for (auto& [w, c] : p.terms) add_rep(w);

  for (const Word& w : reps) {
    bool selfadj = w.adjoint(q.sig) == w;
    Lin lin;
    if (auto it = sec.coeff.find(w); it != sec.coeff.end()) {
      for (auto& [b, i, j, c] : it->second.gram) lin.gram.emplace_back(block_offset + b, i, j, c);
      // lambda t + conj(lambda) t^* with lambda = x_a + i x_b
      for (auto& [p, c] : it->second.t_terms) {
        lin.freec.emplace_back(pair_offset + 2 * p, c);
        lin.freec.emplace_back(pair_offset + 2 * p + 1, kI * c);
      }
      for (auto& [p, c] : it->second.ta_terms) {
        lin.freec.emplace_back(pair_offset + 2 * p, c);
        lin.freec.emplace_back(pair_offset + 2 * p + 1, -kI * c);
      }
    }
    for (auto& [var, p] : extras)
      if (Complex c = p.coeff(w); std::abs(c) > 0) lin.freec.emplace_back(var, c);
    Complex rhs = target.coeff(w);
    if (lin.empty() && std::abs(rhs) < 1e-15) continue;
    eb.add_row(lin, rhs, selfadj);
  }
}

inline Matrix psd_clip(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(((m + m.adjoint()) / 2.0).eval());
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

// Read PSD-clipped Gram blocks and ideal coefficients for one section out of
// an SDP solution.
inline qmodule::TruncationValues extract_values(const SectionData& sec, const sdp::SdpResult& res, int block_offset,
                                                int pair_offset) {
  qmodule::TruncationValues vals;
  for (size_t bi = 0; bi < sec.plan.blocks.size(); ++bi)
    vals.gram.push_back(psd_clip(res.G.blocks[static_cast<size_t>(block_offset) + bi]));
  vals.ideal.resize(sec.plan.ideals.size());
  int pair = 0;
  for (size_t ii = 0; ii < sec.plan.ideals.size(); ++ii)
    for (size_t pi = 0; pi < sec.plan.ideals[ii].pairs.size(); ++pi) {
      vals.ideal[ii].push_back(
          Complex(res.x[pair_offset + 2 * pair], res.x[pair_offset + 2 * pair + 1]));
      ++pair;
    }
  return vals;
}

}  // namespace detail

struct CertifyOptions {
  sdp::SdpOptions sdp;
  double feas_tol = 1e-6;      // accepted phase-1 slack (relative)
  double residual_tol = 1e-7;  // accepted certificate reconstruction error (relative)
};

enum class CertStatus { certified, not_found, inconclusive };

inline std::string to_string(CertStatus s) {
  switch (s) {
    case CertStatus::certified: return "certified";
    case CertStatus::not_found: return "not_found";
    default: return "inconclusive";
  }
}

// Exact cone element: PSD Grams + ideal coefficients, its symbolic expansion,
// and how far that expansion is from the query (1-norm over coefficients).
struct GramCertificate {
  qmodule::TruncationPlan plan;
  qmodule::TruncationValues vals;
  FreePoly reconstruction;
  double residual_norm1 = 0;
};

struct MemberResult {
  CertStatus status = CertStatus::inconclusive;
  double phase1_slack = std::numeric_limits<double>::quiet_NaN();
  double residual_norm1 = std::numeric_limits<double>::quiet_NaN();
  std::optional<GramCertificate> certificate;
  sdp::SdpResult sdp;
};

// Searches for a degree-d certificate of a in Q. Phase-1 form: the equality
// system A(G) + Bx = b gets one slack column s >= 0 with coefficients
// b_k - A_k(I), so (G, x, s) = (I, 0, 1) is exactly feasible and min s probes
// feasibility of s = 0.
inline MemberResult member_eps(const qmodule::ModuleDescription& q, const FreePoly& a, int d,
                               const CertifyOptions& opts = {}) {
  if (!a.is_hermitian(1e-9)) throw std::invalid_argument("member_eps: query polynomial must be hermitian");
  detail::SectionData sec = detail::build_section(q, d, {&a});
  detail::EquationBuilder eb(sec.gram_dims(), 2 * sec.num_pairs);
  detail::append_target_rows(eb, q, sec, a, 0, 0, {});
  sdp::SdpProblem base = eb.take();

  sdp::SdpProblem phase1 = base;
  phase1.block_dims.push_back(1);
  for (int k = 0; k < base.num_constraints(); ++k) {
    double ak_id = 0;
    for (auto& blk : base.constraints[static_cast<size_t>(k)].blocks) ak_id += blk.trace().real();
    phase1.constraints[static_cast<size_t>(k)].blocks.push_back(Matrix::Constant(1, 1, base.b[k] - ak_id));
  }
  phase1.objective.blocks.push_back(Matrix::Constant(1, 1, 1.0));
  phase1.finish();

  MemberResult out;
  out.sdp = sdp::solve(phase1, opts.sdp);
  // A stalled iterate is still usable: the certificate below is residual-gated
  // and sound regardless of solver status. Claiming not_found needs optimality.
  const bool usable = out.sdp.status == sdp::SdpStatus::optimal ||
                      (out.sdp.status == sdp::SdpStatus::max_iter && !out.sdp.G.blocks.empty());
  if (!usable) return out;  // inconclusive

  double scale = 1.0 + (base.b.size() ? base.b.cwiseAbs().maxCoeff() : 0.0);
  out.phase1_slack = out.sdp.G.blocks.back()(0, 0).real();
  if (out.phase1_slack > 10 * opts.feas_tol * scale) {
    if (out.sdp.status == sdp::SdpStatus::optimal) out.status = CertStatus::not_found;
    return out;
  }
  if (out.phase1_slack > opts.feas_tol * scale) return out;  // gray zone

  GramCertificate cert;
  cert.plan = sec.plan;
  cert.vals = detail::extract_values(sec, out.sdp, 0, 0);
  cert.reconstruction = qmodule::reconstruct(q, cert.plan, cert.vals);
  cert.residual_norm1 = (cert.reconstruction - a).coeff_norm1();
  out.residual_norm1 = cert.residual_norm1;
  if (cert.residual_norm1 <= opts.residual_tol * (1.0 + a.coeff_norm1())) {
    out.status = CertStatus::certified;
    out.certificate = std::move(cert);
  }
  return out;
}

struct NormUpperResult {
  sdp::SdpStatus status = sdp::SdpStatus::max_iter;
  double value = std::numeric_limits<double>::infinity();      // certified upper bound
  double sdp_value = std::numeric_limits<double>::infinity();  // raw optimum of winning mode
  double residual_inflation = 0;                               // absorbed into `value`
  std::string mode;                                            // "square" | "plus_minus" | "coefficient"
  bool inflation_sound = false;
  std::vector<GramCertificate> certificates;  // square: one; plus_minus: ell-a then ell+a
};

// Certified norm upper bound at truncation degree d. Square mode minimizes t
// with t - a^* a in Q_d; two-sided mode (hermitian a) minimizes ell with
// ell -+ a in Q_d. Numerical residuals delta are absorbed using the per-letter
// bound R: every residual word w contributes |delta_w| R^deg(w).
inline NormUpperResult norm_upper(const qmodule::ModuleDescription& q, const FreePoly& a, int d,
                                  const CertifyOptions& opts = {},
                                  std::optional<double> letter_bound_override = {}) {
  double R;
  bool sound;
  if (letter_bound_override) {
    R = *letter_bound_override;
    sound = true;  // caller asserts the bound
  } else if (q.arch_known) {
    R = q.letter_bound;
    sound = q.letter_bound_sound;
  } else {
    throw std::invalid_argument(
        "norm_upper: module has no archimedean bound on its letters; pass an explicit override");
  }
  auto inflate = [&](const FreePoly& delta) {
    double s = 0;
    for (auto& [w, c] : delta.terms) s += std::abs(c) * std::pow(R, w.degree());
    return s;
  };

  NormUpperResult out;
  out.inflation_sound = sound;
  // coefficient (triangle inequality) fallback, always valid
  out.mode = "coefficient";
  out.value = inflate(a);
  out.sdp_value = out.value;
  out.status = sdp::SdpStatus::optimal;

  const bool herm = a.is_hermitian(1e-9);
  if (d < a.degree() || (!herm && d < 2 * a.degree()))
    throw std::invalid_argument("norm_upper: truncation degree too small for the polynomial");

  if (d >= 2 * a.degree()) {  // square mode
    FreePoly target = FreePoly::zero(q.sig) - a.adjoint() * a;
    FreePoly tcoef = FreePoly::constant(q.sig, -1.0);
    detail::SectionData sec = detail::build_section(q, d, {&target, &tcoef});
    const int t_var = 2 * sec.num_pairs;
    detail::EquationBuilder eb(sec.gram_dims(), t_var + 1);
    detail::append_target_rows(eb, q, sec, target, 0, 0, {{t_var, tcoef}});
    detail::Lin obj;
    obj.freec.emplace_back(t_var, 1.0);
    eb.set_objective(obj);
    sdp::SdpProblem prob = eb.take();
    sdp::SdpResult res = sdp::solve(prob, opts.sdp);
    // max_iter iterates are admissible: the value below is certified through
    // reconstruction + inflation, independent of solver convergence.
    if ((res.status == sdp::SdpStatus::optimal || res.status == sdp::SdpStatus::max_iter) &&
        res.x.size() > t_var) {
      GramCertificate cert;
      cert.plan = sec.plan;
      cert.vals = detail::extract_values(sec, res, 0, 0);
      cert.reconstruction = qmodule::reconstruct(q, cert.plan, cert.vals);
      double t = res.x[t_var];
      FreePoly delta = (FreePoly::constant(q.sig, t) - a.adjoint() * a) - cert.reconstruction;
      cert.residual_norm1 = delta.coeff_norm1();
      double infl = inflate(delta);
      double val = std::sqrt(std::max(0.0, t + infl));
      if (val < out.value) {
        out.value = val;
        out.sdp_value = std::sqrt(std::max(0.0, t));
        out.residual_inflation = infl;
        out.mode = "square";
        out.status = res.status;
        out.certificates = {std::move(cert)};
      }
    }
  }

  if (herm) {  // two-sided mode
    FreePoly one = FreePoly::one(q.sig);
    detail::SectionData sec = detail::build_section(q, d, {&a, &one});
    auto dims = sec.gram_dims();
    std::vector<int> dims2 = dims;
    dims2.insert(dims2.end(), dims.begin(), dims.end());
    const int nb = static_cast<int>(dims.size());
    const int pair_vars = 2 * sec.num_pairs;
    const int ell_var = 2 * pair_vars;
    detail::EquationBuilder eb(dims2, ell_var + 1);
    FreePoly minus_a = FreePoly::zero(q.sig) - a;
    std::vector<std::pair<int, FreePoly>> extras = {{ell_var, FreePoly::constant(q.sig, -1.0)}};
    detail::append_target_rows(eb, q, sec, minus_a, 0, 0, extras);          // ell - a
    detail::append_target_rows(eb, q, sec, a, nb, pair_vars, extras);       // ell + a
    detail::Lin obj;
    obj.freec.emplace_back(ell_var, 1.0);
    eb.set_objective(obj);
    sdp::SdpProblem prob = eb.take();
    sdp::SdpResult res = sdp::solve(prob, opts.sdp);
    if ((res.status == sdp::SdpStatus::optimal || res.status == sdp::SdpStatus::max_iter) &&
        res.x.size() > ell_var) {
      double ell = res.x[ell_var];
      GramCertificate cminus, cplus;
      cminus.plan = sec.plan;
      cminus.vals = detail::extract_values(sec, res, 0, 0);
      cminus.reconstruction = qmodule::reconstruct(q, cminus.plan, cminus.vals);
      FreePoly dminus = (FreePoly::constant(q.sig, ell) - a) - cminus.reconstruction;
      cminus.residual_norm1 = dminus.coeff_norm1();
      cplus.plan = sec.plan;
      cplus.vals = detail::extract_values(sec, res, nb, pair_vars);
      cplus.reconstruction = qmodule::reconstruct(q, cplus.plan, cplus.vals);
      FreePoly dplus = (FreePoly::constant(q.sig, ell) + a) - cplus.reconstruction;
      cplus.residual_norm1 = dplus.coeff_norm1();
      double infl = std::max(inflate(dminus), inflate(dplus));
      double val = ell + infl;
      if (val < out.value) {
        out.value = val;
        out.sdp_value = ell;
        out.residual_inflation = infl;
        out.mode = "plus_minus";
        out.status = res.status;
        out.certificates = {std::move(cminus), std::move(cplus)};
      }
    }
  }
  return out;
}

// Human-readable sum-of-squares expansion of a certificate.
inline std::string certificate_text(const qmodule::ModuleDescription& q, const GramCertificate& cert) {
  std::string out;
  for (size_t bi = 0; bi < cert.plan.blocks.size(); ++bi) {
    const auto& bp = cert.plan.blocks[bi];
    std::string gname = bp.gen_index < 0 ? "1" : q.gens[static_cast<size_t>(bp.gen_index)].label;
    Eigen::SelfAdjointEigenSolver<Matrix> es(cert.vals.gram[bi]);
    const int dim = static_cast<int>(cert.vals.gram[bi].rows());
    const int s = bp.pencil_size;
    for (int r = dim - 1; r >= 0; --r) {
      double lam = es.eigenvalues()[r];
      if (lam <= 1e-10) continue;
      // square coefficients c = sqrt(lambda) conj(v)
      Eigen::VectorXcd c = std::sqrt(lam) * es.eigenvectors().col(r).conjugate();
      std::string vec;
      for (int k = 0; k < dim; ++k) {
        if (std::abs(c[k]) < 1e-9) continue;
        const Word& w = bp.words[static_cast<size_t>(k / s)];
        std::string ws = FreePoly::monomial(q.sig, w).str();
        std::string entry = freealg::detail::fmt_complex(c[k]) + "*" + ws;
        if (s > 1) entry += " [row " + std::to_string(k % s) + "]";
        vec += (vec.empty() ? "" : " + ") + entry;
      }
      out += "  (" + vec + ")^* [" + gname + "] (...)\n";
    }
  }
  int pair = 0;
  for (size_t ii = 0; ii < cert.plan.ideals.size(); ++ii) {
    const auto& ip = cert.plan.ideals[ii];
    const auto& label = q.gens[static_cast<size_t>(ip.gen_index)].label;
    for (size_t pi = 0; pi < ip.pairs.size(); ++pi, ++pair) {
      Complex lam = cert.vals.ideal[ii][pi];
      if (std::abs(lam) < 1e-9) continue;
      auto [li, mi] = ip.pairs[pi];
      out += "  " + freealg::detail::fmt_complex(lam) + " * (" +
             FreePoly::monomial(q.sig, ip.words[static_cast<size_t>(li)].adjoint(q.sig)).str() + ")(" + label + ")(" +
             FreePoly::monomial(q.sig, ip.words[static_cast<size_t>(mi)]).str() + ") + h.c.\n";
    }
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "  residual 1-norm: %.3e\n", cert.residual_norm1);
  out += buf;
  return out;
}

// ---------- matrix-level positivity (u.c.p.-style) checks ----------

enum class UcpStatus { consistent, violated, inconclusive };

inline std::string to_string(UcpStatus s) {
  switch (s) {
    case UcpStatus::consistent: return "consistent";
    case UcpStatus::violated: return "violated";
    default: return "inconclusive";
  }
}

// A linear map given on a spanning set: phi(V[i]) = values[i] (n x n). The set
// should be adjoint-closed with phi(v^*) = phi(v)^* for the pairing below to
// be real on hermitian elements.
struct MapSpec {
  std::vector<FreePoly> V;
  std::vector<Matrix> values;
};

struct UcpResult {
  UcpStatus status = UcpStatus::inconclusive;
  double min_value = std::numeric_limits<double>::quiet_NaN();  // SDP optimum of the pairing
  double verified_value = std::numeric_limits<double>::quiet_NaN();
  double span_residual = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::vector<FreePoly>> witness;  // [a_rs] on violation
  Eigen::VectorXcd witness_coeffs;             // coefficients of a_00 in the V basis
  sdp::SdpResult sdp;
};

// Tests n-positivity of phi against the degree-d truncated cone: minimizes the
// maximally-entangled pairing sum_rs phi(a_rs)_{sr} over trace-normalized
// [a_rs] in M_n(Q_d) with every entry in span(V). Nonnegative minimum is the
// positivity criterion; a strictly negative verified minimum exhibits a
// violating matrix element.
inline UcpResult ucp_check(const qmodule::ModuleDescription& q, const MapSpec& spec, int d,
                           const CertifyOptions& opts = {}) {
  const size_t k = spec.V.size();
  if (k == 0 || spec.values.size() != k) throw std::invalid_argument("ucp_check: V/value size mismatch");
  const int n = static_cast<int>(spec.values[0].rows());
  for (auto& m : spec.values)
    if (m.rows() != n || m.cols() != n) throw std::invalid_argument("ucp_check: value size mismatch");
  for (auto& v : spec.V)
    if (v.degree() > d) throw std::invalid_argument("ucp_check: spanning polynomial exceeds degree budget");

  std::vector<const FreePoly*> vpolys;
  for (auto& v : spec.V) vpolys.push_back(&v);
  detail::SectionData sec = detail::build_section(q, d, vpolys);

  // coefficient pool: section support plus V support, closed under adjoints
  std::set<Word> pool_set;
  for (auto& [w, lin] : sec.coeff) {
    pool_set.insert(w);
    pool_set.insert(w.adjoint(q.sig));
  }
  for (auto& v : spec.V)
    for (auto& [w, c] : v.terms) {
      pool_set.insert(w);
      pool_set.insert(w.adjoint(q.sig));
    }
  std::vector<Word> pool(pool_set.begin(), pool_set.end());
  std::map<Word, int> pool_index;
  for (size_t i = 0; i < pool.size(); ++i) pool_index[pool[i]] = static_cast<int>(i);

  Eigen::MatrixXcd vmat = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(pool.size()), static_cast<Eigen::Index>(k));
  for (size_t m = 0; m < k; ++m)
    for (auto& [w, c] : spec.V[m].terms) vmat(pool_index.at(w), static_cast<Eigen::Index>(m)) = c;

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(vmat, Eigen::ComputeFullU | Eigen::ComputeThinV);
  const double svtol = 1e-10 * (svd.singularValues().size() ? svd.singularValues()[0] : 1.0);
  int rank = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > svtol) ++rank;
  Eigen::MatrixXcd pinv = vmat.completeOrthogonalDecomposition().pseudoInverse();  // k x pool

  // SDP layout: per plan block a Gram of dimension n * N (index i*n + r);
  // per ideal pair and ordered channel (r,s) one complex coefficient.
  std::vector<int> dims;
  for (int gd : sec.gram_dims()) dims.push_back(n * gd);
  const int nfree = 2 * sec.num_pairs * n * n;
  auto lam_var = [&](int pair, int r, int s) { return 2 * (pair * n * n + r * n + s); };
  detail::EquationBuilder eb(dims, nfree);

  // channel (r,s) functional at word u: grams G_{(i r),(j s)} c_ij + lambda_{p,rs} t_p(u)
  // + conj(lambda_{p,sr}) t_p^*(u)
  auto channel_lin = [&](int r, int s, const Word& u, Complex weight, detail::Lin& lin) {
    auto it = sec.coeff.find(u);
    if (it == sec.coeff.end()) return;
    for (auto& [b, i, j, c] : it->second.gram) lin.gram.emplace_back(b, i * n + r, j * n + s, weight * c);
    for (auto& [p, c] : it->second.t_terms) {
      lin.freec.emplace_back(lam_var(p, r, s), weight * c);
      lin.freec.emplace_back(lam_var(p, r, s) + 1, detail::kI * weight * c);
    }
    for (auto& [p, c] : it->second.ta_terms) {
      lin.freec.emplace_back(lam_var(p, s, r), weight * c);
      lin.freec.emplace_back(lam_var(p, s, r) + 1, -detail::kI * weight * c);
    }
  };

  // span constraints: <phi_m, a_rs> = 0 for the orthocomplement of V
  for (int r = 0; r < n; ++r)
    for (int s = r; s < n; ++s)
      for (Eigen::Index m = rank; m < svd.matrixU().cols(); ++m) {
        detail::Lin lin;
        for (size_t u = 0; u < pool.size(); ++u) {
          Complex phi = svd.matrixU()(static_cast<Eigen::Index>(u), m);
          if (std::abs(phi) < 1e-14) continue;
          channel_lin(r, s, pool[u], std::conj(phi), lin);
        }
        if (!lin.empty()) eb.add_row(lin, 0.0, false);
      }

  // normalization: total Gram trace 1
  {
    detail::Lin lin;
    for (size_t b = 0; b < dims.size(); ++b)
      for (int i = 0; i < dims[b]; ++i) lin.gram.emplace_back(static_cast<int>(b), i, i, 1.0);
    eb.add_row(lin, 1.0, true);
  }

  // objective: sum_rs phi(a_rs)_{sr} with phi read off through the pseudoinverse
  {
    detail::Lin obj;
    for (int r = 0; r < n; ++r)
      for (int s = 0; s < n; ++s)
        for (size_t u = 0; u < pool.size(); ++u) {
          Complex w = 0;
          for (size_t m = 0; m < k; ++m)
            w += pinv(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(u)) * spec.values[m](s, r);
          if (std::abs(w) < 1e-14) continue;
          channel_lin(r, s, pool[u], w, obj);
        }
    eb.set_objective(obj);
  }

  UcpResult out;
  sdp::SdpProblem prob = eb.take();
  out.sdp = sdp::solve(prob, opts.sdp);
  if (out.sdp.status != sdp::SdpStatus::optimal) return out;
  out.min_value = out.sdp.primal_obj;

  double vscale = 1.0;
  for (auto& m : spec.values) vscale = std::max(vscale, m.cwiseAbs().maxCoeff());
  if (out.min_value >= -1e-7 * vscale) {
    out.status = UcpStatus::consistent;
    return out;
  }

  // candidate violation: rebuild [a_rs] from clipped Grams + ideal vars,
  // project on span(V), recompute the pairing
  std::vector<Matrix> grams;
  for (auto& g : out.sdp.G.blocks) grams.push_back(detail::psd_clip(g));
  out.witness.assign(static_cast<size_t>(n), std::vector<FreePoly>(static_cast<size_t>(n), FreePoly::zero(q.sig)));
  for (auto& [u, lin] : sec.coeff) {
    for (auto& [b, i, j, c] : lin.gram)
      for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s)
          out.witness[static_cast<size_t>(r)][static_cast<size_t>(s)] +=
              FreePoly::monomial(q.sig, u, grams[static_cast<size_t>(b)](i * n + r, j * n + s) * c);
    for (auto& [p, c] : lin.t_terms)
      for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s) {
          Complex lam(out.sdp.x[lam_var(p, r, s)], out.sdp.x[lam_var(p, r, s) + 1]);
          out.witness[static_cast<size_t>(r)][static_cast<size_t>(s)] += FreePoly::monomial(q.sig, u, lam * c);
        }
    for (auto& [p, c] : lin.ta_terms)
      for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s) {
          Complex lam(out.sdp.x[lam_var(p, s, r)], out.sdp.x[lam_var(p, s, r) + 1]);
          out.witness[static_cast<size_t>(r)][static_cast<size_t>(s)] +=
              FreePoly::monomial(q.sig, u, std::conj(lam) * c);
        }
  }
  double verified = 0, span_resid = 0;
  for (int r = 0; r < n; ++r)
    for (int s = 0; s < n; ++s) {
      FreePoly& ars = out.witness[static_cast<size_t>(r)][static_cast<size_t>(s)];
      ars.normalize();
      Eigen::VectorXcd coeffs = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(pool.size()));
      for (auto& [w, c] : ars.terms) {
        auto it = pool_index.find(w);
        if (it == pool_index.end()) {
          span_resid += std::abs(c);  // outside the pool entirely
          continue;
        }
        coeffs[it->second] = c;
      }
      Eigen::VectorXcd alpha = pinv * coeffs;
      span_resid += (vmat * alpha - coeffs).cwiseAbs().sum();
      Complex contrib = 0;
      for (size_t m = 0; m < k; ++m) contrib += alpha[static_cast<Eigen::Index>(m)] * spec.values[m](s, r);
      verified += contrib.real();
      if (r == 0 && s == 0) out.witness_coeffs = alpha;
    }
  out.verified_value = verified;
  out.span_residual = span_resid;
  if (verified < -1e-6 * vscale && span_resid < 1e-6) {
    out.status = UcpStatus::violated;
  }
  return out;
}

struct HullResult {
  UcpStatus status = UcpStatus::inconclusive;
  double min_value = std::numeric_limits<double>::quiet_NaN();
  VectorXd functional;  // alpha_0 + sum alpha_i y_i >= 0 on the projected set; negative at the point
  FreePoly witness;     // the separating cone element alpha_0 + sum alpha_i b_i
  sdp::SdpResult sdp;
};

// Membership of `point` in the closed convex hull of the coordinate projection
// X -> (b_1(X), ..., b_k(X)) of the level set, tested through the scalar case
// of ucp_check: phi(1) = 1, phi(b_i) = point_i.
inline HullResult hull_project_membership(const qmodule::ModuleDescription& q, const std::vector<FreePoly>& coords,
                                  const VectorXd& point, int d, const CertifyOptions& opts = {}) {
  if (static_cast<size_t>(point.size()) != coords.size())
    throw std::invalid_argument("hull_project_membership: point dimension mismatch");
  MapSpec spec;
  spec.V.push_back(FreePoly::one(q.sig));
  spec.values.push_back(Matrix::Constant(1, 1, 1.0));
  for (size_t i = 0; i < coords.size(); ++i) {
    if (!coords[i].is_hermitian(1e-9)) throw std::invalid_argument("hull_project_membership: coordinates must be hermitian");
    spec.V.push_back(coords[i]);
    spec.values.push_back(Matrix::Constant(1, 1, point[static_cast<Eigen::Index>(i)]));
  }
  UcpResult u = ucp_check(q, spec, d, opts);
  HullResult out;
  out.status = u.status;
  out.min_value = u.min_value;
  out.sdp = std::move(u.sdp);
  if (u.status == UcpStatus::violated) {
    out.functional = VectorXd::Zero(static_cast<Eigen::Index>(coords.size()) + 1);
    for (Eigen::Index i = 0; i < u.witness_coeffs.size(); ++i) out.functional[i] = u.witness_coeffs[i].real();
    out.witness = u.witness[0][0];
  }
  return out;
}

}  // namespace qmcert::certify
