#pragma once

// Dense semidefinite solver for small block-diagonal Hermitian problems.
//
//   primal:  min <C,G> + c_f'x   s.t.  <A_k,G> + (Bx)_k = b_k,  G >= 0, x free
//   dual:    max b'y             s.t.  C - sum_k y_k A_k = S >= 0,  B'y = c_f
//
// <A,B> = Re sum_blocks tr(A* B).  Primal-dual interior point with
// Nesterov-Todd scaling and a Mehrotra predictor-corrector; free variables are
// eliminated from the Schur system by a bordered block solve.  Infeasibility is
// reported through a dual improving ray (B'y = 0, sum y_k A_k <= 0, b'y > 0).
// A singular Schur system falls back to alternating projection onto the affine
// and PSD sets (feasibility only).

#include <qmcert/freealg.hpp>

#include <Eigen/Dense>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace qmcert::sdp {

using freealg::Complex;
using freealg::Matrix;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct BlockMatrix {
  std::vector<Matrix> blocks;

  static BlockMatrix zero(const std::vector<int>& dims) {
    BlockMatrix m;
    for (int d : dims) m.blocks.push_back(Matrix::Zero(d, d));
    return m;
  }
  static BlockMatrix identity(const std::vector<int>& dims) {
    BlockMatrix m;
    for (int d : dims) m.blocks.push_back(Matrix::Identity(d, d));
    return m;
  }

  int num_blocks() const { return static_cast<int>(blocks.size()); }

  BlockMatrix& operator+=(const BlockMatrix& o) {
    for (size_t i = 0; i < blocks.size(); ++i) blocks[i] += o.blocks[i];
    return *this;
  }
  BlockMatrix& operator-=(const BlockMatrix& o) {
    for (size_t i = 0; i < blocks.size(); ++i) blocks[i] -= o.blocks[i];
    return *this;
  }
  BlockMatrix& operator*=(double s) {
    for (auto& b : blocks) b *= s;
    return *this;
  }
  friend BlockMatrix operator+(BlockMatrix a, const BlockMatrix& b) { return a += b; }
  friend BlockMatrix operator-(BlockMatrix a, const BlockMatrix& b) { return a -= b; }
  friend BlockMatrix operator*(double s, BlockMatrix a) { return a *= s; }

  void hermitize() {
    for (auto& b : blocks) b = ((b + b.adjoint()) / 2.0).eval();
  }

  double inner(const BlockMatrix& o) const {  // Re sum tr(this* o)
    double s = 0;
    for (size_t i = 0; i < blocks.size(); ++i) s += (blocks[i].adjoint() * o.blocks[i]).trace().real();
    return s;
  }

  double trace() const {
    double s = 0;
    for (auto& b : blocks) s += b.trace().real();
    return s;
  }

  double max_abs() const {
    double s = 0;
    for (auto& b : blocks)
      if (b.size() > 0) s = std::max(s, b.cwiseAbs().maxCoeff());
    return s;
  }

  double min_eigenvalue() const {
    double m = std::numeric_limits<double>::infinity();
    for (auto& b : blocks) {
      if (b.rows() == 0) continue;
      Eigen::SelfAdjointEigenSolver<Matrix> es(b, Eigen::EigenvaluesOnly);
      m = std::min(m, es.eigenvalues().minCoeff());
    }
    return m;
  }

  double max_eigenvalue() const {
    double m = -std::numeric_limits<double>::infinity();
    for (auto& b : blocks) {
      if (b.rows() == 0) continue;
      Eigen::SelfAdjointEigenSolver<Matrix> es(b, Eigen::EigenvaluesOnly);
      m = std::max(m, es.eigenvalues().maxCoeff());
    }
    return m;
  }

  // Eigenvalue clipping at the given floor (0 => PSD projection).
  BlockMatrix clipped(double floor = 0.0) const {
    BlockMatrix out = *this;
    for (auto& b : out.blocks) {
      if (b.rows() == 0) continue;
      Eigen::SelfAdjointEigenSolver<Matrix> es(b);
      Eigen::VectorXd ev = es.eigenvalues().cwiseMax(floor);
      b = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
    }
    return out;
  }
};

struct SdpProblem {
  std::vector<int> block_dims;
  std::vector<BlockMatrix> constraints;  // A_k, hermitian blockwise
  VectorXd b;                            // right-hand sides
  MatrixXd free_coeffs;                  // m x f coefficients of free variables
  BlockMatrix objective;                 // C
  VectorXd free_obj;                     // c_f

  int num_constraints() const { return static_cast<int>(constraints.size()); }
  int num_free() const { return free_coeffs.cols() > 0 ? static_cast<int>(free_coeffs.cols()) : 0; }

  void finish() {  // fill defaults for optional fields
    int m = num_constraints();
    if (b.size() == 0) b = VectorXd::Zero(m);
    if (free_coeffs.size() == 0) free_coeffs = MatrixXd::Zero(m, 0);
    if (objective.blocks.empty()) objective = BlockMatrix::zero(block_dims);
    if (free_obj.size() == 0) free_obj = VectorXd::Zero(num_free());
  }

  void validate() const {
    if (static_cast<int>(b.size()) != num_constraints()) throw std::invalid_argument("sdp: b size mismatch");
    if (free_coeffs.rows() != num_constraints()) throw std::invalid_argument("sdp: free coeff rows mismatch");
    for (const auto& a : constraints) {
      if (static_cast<int>(a.blocks.size()) != static_cast<int>(block_dims.size()))
        throw std::invalid_argument("sdp: constraint block count mismatch");
      for (size_t i = 0; i < a.blocks.size(); ++i) {
        const Matrix& blk = a.blocks[i];
        if (blk.rows() != block_dims[i] || blk.cols() != block_dims[i])
          throw std::invalid_argument("sdp: constraint block dimension mismatch");
        if (blk.size() > 0 && (blk - blk.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + blk.cwiseAbs().maxCoeff()))
          throw std::invalid_argument("sdp: non-hermitian constraint block");
      }
    }
  }
};

enum class SdpStatus { optimal, infeasible, max_iter, singular };

inline const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::optimal: return "optimal";
    case SdpStatus::infeasible: return "infeasible";
    case SdpStatus::max_iter: return "max_iter";
    case SdpStatus::singular: return "singular";
  }
  return "?";
}

struct SdpResult {
  SdpStatus status = SdpStatus::max_iter;
  BlockMatrix G, S;
  VectorXd x, y;
  double primal_obj = 0, dual_obj = 0;
  double primal_res = 0, dual_res = 0, gap = 0;  // relative residuals
  VectorXd ray;                                  // dual improving ray (infeasible only)
  double ray_violation = 0;                      // normalized b'ray margin
  int iterations = 0;
};

struct SdpOptions {
  double tol = 1e-8;
  int max_iter = 200;
  bool verbose = false;
};

namespace detail {

// Real isometric embedding of the hermitian block space plus free columns,
// used for rank filtering and affine projection: inner products are preserved.
class ConstraintEmbedding {
 public:
  explicit ConstraintEmbedding(const SdpProblem& p) : p_(&p) {
    dim_ = 0;
    for (int d : p.block_dims) dim_ += d * d;  // d real diag + 2*(d(d-1)/2) off-diag
    dim_ += p.num_free();
  }

  int dim() const { return dim_; }

  VectorXd embed(const BlockMatrix& a, const Eigen::Ref<const VectorXd>& free_row) const {
    VectorXd v(dim_);
    int at = 0;
    const double r2 = std::sqrt(2.0);
    for (size_t bi = 0; bi < a.blocks.size(); ++bi) {
      const Matrix& blk = a.blocks[bi];
      int d = p_->block_dims[bi];
      for (int i = 0; i < d; ++i) v[at++] = blk(i, i).real();
      for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
          v[at++] = r2 * blk(i, j).real();
          v[at++] = r2 * blk(i, j).imag();
        }
    }
    for (int f = 0; f < p_->num_free(); ++f) v[at++] = free_row[f];
    return v;
  }

  // Inverse of embed on the block part; free part returned separately.
  void unembed(const VectorXd& v, BlockMatrix& a, VectorXd& free_part) const {
    a = BlockMatrix::zero(p_->block_dims);
    int at = 0;
    const double r2 = std::sqrt(2.0);
    for (size_t bi = 0; bi < a.blocks.size(); ++bi) {
      int d = p_->block_dims[bi];
      for (int i = 0; i < d; ++i) a.blocks[bi](i, i) = v[at++];
      for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
          double re = v[at++] / r2, im = v[at++] / r2;
          a.blocks[bi](i, j) = Complex(re, im);
          a.blocks[bi](j, i) = Complex(re, -im);
        }
    }
    free_part.resize(p_->num_free());
    for (int f = 0; f < p_->num_free(); ++f) free_part[f] = v[at++];
  }

 private:
  const SdpProblem* p_;
  int dim_;
};

struct Preprocessed {
  SdpProblem reduced;           // independent constraint subset
  std::vector<int> kept;        // indices into the original constraints
  bool inconsistent = false;    // dropped rows conflict with kept ones
  VectorXd inconsistency_ray;   // combination certifying the conflict (original index space)
};

// Pivoted-QR rank filter over constraint rows; threshold 1e-10 relative.
inline Preprocessed preprocess(const SdpProblem& p) {
  Preprocessed out;
  const int m = p.num_constraints();
  ConstraintEmbedding emb(p);
  MatrixXd K(emb.dim(), m);
  for (int k = 0; k < m; ++k) K.col(k) = emb.embed(p.constraints[k], p.free_coeffs.row(k));

  Eigen::ColPivHouseholderQR<MatrixXd> qr(K);
  qr.setThreshold(1e-10);
  const int rank = static_cast<int>(qr.rank());
  std::vector<int> kept, dropped;
  for (int i = 0; i < m; ++i) {
    int col = static_cast<int>(qr.colsPermutation().indices()[i]);
    (i < rank ? kept : dropped).push_back(col);
  }
  std::sort(kept.begin(), kept.end());
  std::sort(dropped.begin(), dropped.end());

  out.kept = kept;
  out.reduced.block_dims = p.block_dims;
  out.reduced.objective = p.objective;
  out.reduced.free_obj = p.free_obj;
  out.reduced.b.resize(static_cast<Eigen::Index>(kept.size()));
  out.reduced.free_coeffs.resize(static_cast<Eigen::Index>(kept.size()), p.num_free());
  for (size_t i = 0; i < kept.size(); ++i) {
    out.reduced.constraints.push_back(p.constraints[static_cast<size_t>(kept[i])]);
    out.reduced.b[static_cast<Eigen::Index>(i)] = p.b[kept[i]];
    out.reduced.free_coeffs.row(static_cast<Eigen::Index>(i)) = p.free_coeffs.row(kept[i]);
  }
  out.reduced.finish();

  if (!dropped.empty()) {
    MatrixXd Kk(emb.dim(), static_cast<Eigen::Index>(kept.size()));
    for (size_t i = 0; i < kept.size(); ++i) Kk.col(static_cast<Eigen::Index>(i)) = K.col(kept[i]);
    auto lsq = Kk.colPivHouseholderQr();
    double scale = 1.0 + p.b.cwiseAbs().maxCoeff();
    for (int d : dropped) {
      VectorXd lam = lsq.solve(K.col(d));
      double mismatch = lam.dot(out.reduced.b) - p.b[d];
      if (std::abs(mismatch) > 1e-8 * scale) {
        out.inconsistent = true;
        out.inconsistency_ray = VectorXd::Zero(m);
        for (size_t i = 0; i < kept.size(); ++i)
          out.inconsistency_ray[kept[i]] = -lam[static_cast<Eigen::Index>(i)];
        out.inconsistency_ray[d] = 1.0;
        if (mismatch > 0) out.inconsistency_ray = -out.inconsistency_ray;
        out.inconsistency_ray /= out.inconsistency_ray.norm();
        break;
      }
    }
  }
  return out;
}

inline Matrix herm_sqrt(const Matrix& a, Matrix* inv_sqrt = nullptr, Matrix* inv = nullptr) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  VectorXd ev = es.eigenvalues();
  double floor = std::max(1e-14, 1e-14 * ev.cwiseAbs().maxCoeff());
  ev = ev.cwiseMax(floor);
  Matrix v = es.eigenvectors();
  Matrix r = v * ev.cwiseSqrt().asDiagonal() * v.adjoint();
  if (inv_sqrt) *inv_sqrt = v * ev.cwiseSqrt().cwiseInverse().asDiagonal() * v.adjoint();
  if (inv) *inv = v * ev.cwiseInverse().asDiagonal() * v.adjoint();
  return r;
}

// Largest step alpha with Z + alpha*dZ >= 0, via lambda_min of L^-1 dZ L^-*.
inline double step_to_boundary(const BlockMatrix& Z, const BlockMatrix& dZ) {
  double alpha = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < Z.blocks.size(); ++i) {
    if (Z.blocks[i].rows() == 0) continue;
    Eigen::LLT<Matrix> llt(Z.blocks[i]);
    Matrix Linv_d;
    if (llt.info() == Eigen::Success) {
      Matrix L = llt.matrixL();
      Linv_d = L.triangularView<Eigen::Lower>().solve(dZ.blocks[i]);
      Linv_d = L.triangularView<Eigen::Lower>().solve(Linv_d.adjoint()).adjoint();
    } else {
      Matrix zi_sqrt_inv;
      herm_sqrt(Z.blocks[i], &zi_sqrt_inv);
      Linv_d = zi_sqrt_inv * dZ.blocks[i] * zi_sqrt_inv;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(((Linv_d + Linv_d.adjoint()) / 2.0).eval(), Eigen::EigenvaluesOnly);
    double lmin = es.eigenvalues().minCoeff();
    if (lmin < -1e-14) alpha = std::min(alpha, -1.0 / lmin);
  }
  return alpha;
}

}  // namespace detail

// Alternating projection onto the affine set and the PSD cone (feasibility
// fallback for singular Schur systems).
inline SdpResult solve_altproj(const SdpProblem& prob, const SdpOptions& opt = {}) {
  SdpProblem p = prob;
  p.finish();
  p.validate();
  detail::ConstraintEmbedding emb(p);
  const int m = p.num_constraints();
  MatrixXd K(m, emb.dim());
  for (int k = 0; k < m; ++k) K.row(k) = emb.embed(p.constraints[k], p.free_coeffs.row(k)).transpose();
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(K);

  BlockMatrix G = BlockMatrix::identity(p.block_dims);
  VectorXd x = VectorXd::Zero(p.num_free());
  const double bscale = 1.0 + p.b.cwiseAbs().maxCoeff();
  SdpResult res;
  for (int it = 0; it < 5000; ++it) {
    VectorXd v = emb.embed(G, x);
    VectorXd resid = p.b - K * v;
    v += cod.solve(resid);  // minimal-norm affine correction
    emb.unembed(v, G, x);
    G.hermitize();
    double min_eig = G.min_eigenvalue();
    double aff_res = (p.b - K * emb.embed(G, x)).cwiseAbs().maxCoeff() / bscale;
    if (min_eig > -opt.tol && aff_res < opt.tol) {
      res.status = SdpStatus::optimal;
      res.G = G.clipped(0.0);
      res.x = x;
      res.primal_res = aff_res;
      res.iterations = it + 1;
      res.primal_obj = p.objective.inner(res.G) + p.free_obj.dot(x);
      return res;
    }
    G = G.clipped(0.0);
    res.primal_res = aff_res;
    res.iterations = it + 1;
  }
  res.status = SdpStatus::max_iter;
  res.G = G;
  res.x = x;
  return res;
}

inline SdpResult solve(const SdpProblem& prob, const SdpOptions& opt = {}) {
  SdpProblem input = prob;
  input.finish();
  input.validate();

  detail::Preprocessed pre = detail::preprocess(input);
  if (pre.inconsistent) {
    SdpResult res;
    res.status = SdpStatus::infeasible;
    res.ray = pre.inconsistency_ray;
    res.ray_violation = input.b.dot(pre.inconsistency_ray);
    return res;
  }
  const SdpProblem& p = pre.reduced;
  const int m = p.num_constraints();
  const int f = p.num_free();
  const int nblk = static_cast<int>(p.block_dims.size());
  double total_dim = 0;
  for (int d : p.block_dims) total_dim += d;

  const double bscale = 1.0 + p.b.cwiseAbs().maxCoeff();
  double cscale = 1.0 + p.objective.max_abs();
  if (f > 0 && p.free_obj.size() > 0) cscale = std::max(cscale, 1.0 + p.free_obj.cwiseAbs().maxCoeff());
  double ascale = 1.0;
  for (const auto& a : p.constraints) ascale = std::max(ascale, a.max_abs());

  // Interior but typically infeasible start.
  BlockMatrix G = BlockMatrix::identity(p.block_dims);
  G *= 10.0 * bscale;
  BlockMatrix S = BlockMatrix::identity(p.block_dims);
  S *= 10.0 * std::max(cscale, ascale);
  VectorXd y = VectorXd::Zero(m);
  VectorXd x = VectorXd::Zero(f);

  SdpResult res;
  auto finalize = [&](SdpStatus st) {
    res.status = st;
    res.G = G;
    res.S = S;
    res.x = x;
    res.y = VectorXd::Zero(input.num_constraints());
    for (size_t i = 0; i < pre.kept.size(); ++i) res.y[pre.kept[i]] = y[static_cast<Eigen::Index>(i)];
    res.primal_obj = p.objective.inner(G) + (f > 0 ? p.free_obj.dot(x) : 0.0);
    res.dual_obj = p.b.dot(y);
    return res;
  };

  if (m == 0) {  // unconstrained: G = 0 (or unbounded if C has negative directions)
    G = BlockMatrix::zero(p.block_dims);
    S = p.objective;
    return finalize(p.objective.min_eigenvalue() >= -opt.tol ? SdpStatus::optimal : SdpStatus::max_iter);
  }

  std::vector<BlockMatrix> WAW(static_cast<size_t>(m), BlockMatrix::zero(p.block_dims));

  for (int iter = 1; iter <= opt.max_iter; ++iter) {
    // Residuals.
    VectorXd rp = p.b;
    for (int k = 0; k < m; ++k) rp[k] -= p.constraints[static_cast<size_t>(k)].inner(G);
    if (f > 0) rp -= p.free_coeffs * x;
    BlockMatrix Rd = p.objective;
    Rd -= S;
    for (int k = 0; k < m; ++k) {
      BlockMatrix t = p.constraints[static_cast<size_t>(k)];
      t *= y[k];
      Rd -= t;
    }
    VectorXd rf = f > 0 ? VectorXd(p.free_obj - p.free_coeffs.transpose() * y) : VectorXd::Zero(0);

    double mu = G.inner(S) / total_dim;
    double pobj = p.objective.inner(G) + (f > 0 ? p.free_obj.dot(x) : 0.0);
    double dobj = p.b.dot(y);
    res.primal_res = rp.cwiseAbs().maxCoeff() / bscale;
    res.dual_res = Rd.max_abs() / cscale;
    if (f > 0 && rf.size() > 0) res.dual_res = std::max(res.dual_res, rf.cwiseAbs().maxCoeff() / cscale);
    res.gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    res.iterations = iter;

    if (res.primal_res <= opt.tol && res.dual_res <= opt.tol && res.gap <= opt.tol)
      return finalize(SdpStatus::optimal);

    // Dual improving ray => primal infeasible.
    if (iter > 3) {
      double yn = y.norm();
      if (yn > 1e3 * bscale || (res.primal_res > 1e3 * opt.tol && yn > 100)) {
        VectorXd yr = y / yn;
        double viol = p.b.dot(yr);
        BlockMatrix Ay = BlockMatrix::zero(p.block_dims);
        for (int k = 0; k < m; ++k) {
          BlockMatrix t = p.constraints[static_cast<size_t>(k)];
          t *= yr[k];
          Ay += t;
        }
        double lmax = Ay.max_eigenvalue();
        double fres = f > 0 ? (p.free_coeffs.transpose() * yr).cwiseAbs().maxCoeff() : 0.0;
        if (viol >= 1e-8 && lmax <= 1e-9 * ascale && fres <= 1e-9 * ascale) {
          finalize(SdpStatus::infeasible);
          res.ray = VectorXd::Zero(input.num_constraints());
          for (size_t i = 0; i < pre.kept.size(); ++i) res.ray[pre.kept[i]] = yr[static_cast<Eigen::Index>(i)];
          res.ray_violation = viol;
          return res;
        }
      }
    }

    // NT scaling W = S^-1/2 (S^1/2 G S^1/2)^1/2 S^-1/2 per block, plus S^-1.
    BlockMatrix W = BlockMatrix::zero(p.block_dims);
    BlockMatrix Sinv = BlockMatrix::zero(p.block_dims);
    for (int bi = 0; bi < nblk; ++bi) {
      if (p.block_dims[static_cast<size_t>(bi)] == 0) continue;
      Matrix s_half, s_half_inv, s_inv;
      s_half = detail::herm_sqrt(S.blocks[static_cast<size_t>(bi)], &s_half_inv, &s_inv);
      Matrix t = s_half * G.blocks[static_cast<size_t>(bi)] * s_half;
      Matrix t_half = detail::herm_sqrt(((t + t.adjoint()) / 2.0).eval());
      W.blocks[static_cast<size_t>(bi)] = s_half_inv * t_half * s_half_inv;
      W.blocks[static_cast<size_t>(bi)] =
          ((W.blocks[static_cast<size_t>(bi)] + W.blocks[static_cast<size_t>(bi)].adjoint()) / 2.0).eval();
      Sinv.blocks[static_cast<size_t>(bi)] = s_inv;
    }

    // Schur matrix M_kl = <A_k, W A_l W>.
    for (int k = 0; k < m; ++k) {
      for (int bi = 0; bi < nblk; ++bi)
        WAW[static_cast<size_t>(k)].blocks[static_cast<size_t>(bi)] =
            W.blocks[static_cast<size_t>(bi)] * p.constraints[static_cast<size_t>(k)].blocks[static_cast<size_t>(bi)] *
            W.blocks[static_cast<size_t>(bi)];
    }
    MatrixXd M(m, m);
    for (int k = 0; k < m; ++k)
      for (int l = k; l < m; ++l) {
        double v = p.constraints[static_cast<size_t>(l)].inner(WAW[static_cast<size_t>(k)]);
        M(k, l) = v;
        M(l, k) = v;
      }

    Eigen::LLT<MatrixXd> Mllt;
    double jitter = 0.0;
    for (int attempt = 0; attempt < 4; ++attempt) {
      MatrixXd Mj = M;
      if (jitter > 0) Mj += jitter * MatrixXd::Identity(m, m);
      Mllt.compute(Mj);
      if (Mllt.info() == Eigen::Success) break;
      jitter = (jitter == 0.0) ? 1e-12 * (1.0 + M.trace() / m) : jitter * 100;
    }
    if (Mllt.info() != Eigen::Success) {
      // Schur system numerically singular: report, fall back to feasibility mode.
      SdpResult fb = solve_altproj(input, opt);
      if (fb.status == SdpStatus::optimal) return fb;
      finalize(SdpStatus::singular);
      return res;
    }

    MatrixXd MinvB;
    Eigen::LDLT<MatrixXd> Fldlt;
    if (f > 0) {
      MinvB = Mllt.solve(p.free_coeffs);
      MatrixXd F = p.free_coeffs.transpose() * MinvB;
      F += 1e-13 * (1.0 + F.trace()) * MatrixXd::Identity(f, f);
      Fldlt.compute(F);
    }

    // One Newton solve for given sigma; fills directions.
    BlockMatrix dG = BlockMatrix::zero(p.block_dims), dS = BlockMatrix::zero(p.block_dims);
    VectorXd dy(m), dx(f);
    auto newton = [&](double sigma_mu, const BlockMatrix* corr) {
      BlockMatrix Rc = BlockMatrix::zero(p.block_dims);
      for (int bi = 0; bi < nblk; ++bi)
        Rc.blocks[static_cast<size_t>(bi)] =
            sigma_mu * Sinv.blocks[static_cast<size_t>(bi)] - G.blocks[static_cast<size_t>(bi)];
      if (corr) Rc -= *corr;
      // M dy + B dx = rp - A(Rc) + A(W Rd W);  B' dy = rf
      VectorXd h = rp;
      BlockMatrix WRdW = BlockMatrix::zero(p.block_dims);
      for (int bi = 0; bi < nblk; ++bi)
        WRdW.blocks[static_cast<size_t>(bi)] = W.blocks[static_cast<size_t>(bi)] * Rd.blocks[static_cast<size_t>(bi)] *
                                               W.blocks[static_cast<size_t>(bi)];
      for (int k = 0; k < m; ++k)
        h[k] += p.constraints[static_cast<size_t>(k)].inner(WRdW) - p.constraints[static_cast<size_t>(k)].inner(Rc);
      if (f > 0) {
        VectorXd rhs_x = p.free_coeffs.transpose() * Mllt.solve(h) - rf;
        dx = Fldlt.solve(rhs_x);
        dy = Mllt.solve(h - p.free_coeffs * dx);
      } else {
        dy = Mllt.solve(h);
      }
      // dS = Rd - A*(dy); dG = Rc + W (A*(dy) - Rd) W  (so that dG + W dS W = Rc)
      BlockMatrix Ady = BlockMatrix::zero(p.block_dims);
      for (int k = 0; k < m; ++k) {
        BlockMatrix t = p.constraints[static_cast<size_t>(k)];
        t *= dy[k];
        Ady += t;
      }
      dS = Rd;
      dS -= Ady;
      for (int bi = 0; bi < nblk; ++bi)
        dG.blocks[static_cast<size_t>(bi)] =
            Rc.blocks[static_cast<size_t>(bi)] - W.blocks[static_cast<size_t>(bi)] * dS.blocks[static_cast<size_t>(bi)] *
                                                     W.blocks[static_cast<size_t>(bi)];
      dG.hermitize();
      dS.hermitize();
    };

    // Predictor (sigma = 0).
    newton(0.0, nullptr);
    double ap = std::min(1.0, 0.98 * detail::step_to_boundary(G, dG));
    double ad = std::min(1.0, 0.98 * detail::step_to_boundary(S, dS));
    BlockMatrix Ga = G, Sa = S;
    for (int bi = 0; bi < nblk; ++bi) {
      Ga.blocks[static_cast<size_t>(bi)] += ap * dG.blocks[static_cast<size_t>(bi)];
      Sa.blocks[static_cast<size_t>(bi)] += ad * dS.blocks[static_cast<size_t>(bi)];
    }
    double mu_aff = Ga.inner(Sa) / total_dim;
    double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 1e-8, 1.0);

    // Corrector with second-order term sym(dG_aff dS_aff S^-1).
    BlockMatrix corr = BlockMatrix::zero(p.block_dims);
    for (int bi = 0; bi < nblk; ++bi) {
      Matrix t = dG.blocks[static_cast<size_t>(bi)] * dS.blocks[static_cast<size_t>(bi)] *
                 Sinv.blocks[static_cast<size_t>(bi)];
      corr.blocks[static_cast<size_t>(bi)] = (t + t.adjoint()) / 2.0;
    }
    newton(sigma * mu, &corr);
    ap = std::min(1.0, 0.98 * detail::step_to_boundary(G, dG));
    ad = std::min(1.0, 0.98 * detail::step_to_boundary(S, dS));
    if (std::min(ap, ad) < 1e-3 && sigma < 0.5) {  // stalled: boost centering
      newton(0.5 * mu, nullptr);
      ap = std::min(1.0, 0.98 * detail::step_to_boundary(G, dG));
      ad = std::min(1.0, 0.98 * detail::step_to_boundary(S, dS));
    }

    for (int bi = 0; bi < nblk; ++bi) {
      G.blocks[static_cast<size_t>(bi)] += ap * dG.blocks[static_cast<size_t>(bi)];
      S.blocks[static_cast<size_t>(bi)] += ad * dS.blocks[static_cast<size_t>(bi)];
    }
    G.hermitize();
    S.hermitize();
    y += ad * dy;
    if (f > 0) x += ap * dx;
  }

  return finalize(SdpStatus::max_iter);
}

// ---------- real symmetric embedding ----------

struct RealifiedSdp {
  SdpProblem problem;
  double trace_factor = 2.0;  // tr over the embedding doubles the complex value
};

// Hermitian s x s  ->  real symmetric 2s x 2s  [[X, -Y], [Y, X]]; PSD preserved
// both ways, traces doubled.
inline RealifiedSdp realify(const SdpProblem& prob) {
  SdpProblem p = prob;
  p.finish();
  auto embed_block = [](const Matrix& h) {
    const Eigen::Index s = h.rows();
    Matrix out = Matrix::Zero(2 * s, 2 * s);
    Eigen::MatrixXd X = h.real(), Y = h.imag();
    out.topLeftCorner(s, s) = X.cast<Complex>();
    out.bottomRightCorner(s, s) = X.cast<Complex>();
    out.topRightCorner(s, s) = (-Y).cast<Complex>();
    out.bottomLeftCorner(s, s) = Y.cast<Complex>();
    return out;
  };
  RealifiedSdp out;
  out.problem.block_dims.clear();
  for (int d : p.block_dims) out.problem.block_dims.push_back(2 * d);
  for (const auto& a : p.constraints) {
    BlockMatrix ra;
    for (const auto& blk : a.blocks) ra.blocks.push_back(embed_block(blk));
    out.problem.constraints.push_back(std::move(ra));
  }
  out.problem.b = 2.0 * p.b;  // <realify(A), realify(G)> = 2 <A, G>
  out.problem.free_coeffs = 2.0 * p.free_coeffs;
  out.problem.free_obj = 2.0 * p.free_obj;  // objective also doubles: scale free part to match
  for (const auto& blk : p.objective.blocks) out.problem.objective.blocks.push_back(embed_block(blk));
  out.problem.finish();
  return out;
}

// Sparse text dump (documented in README): block sizes, then objective and
// constraint entries as (constraint, block, i, j, re, im) with 0 = objective.
inline void dump_sparse(const SdpProblem& prob, std::ostream& os) {
  SdpProblem p = prob;
  p.finish();
  os << "qmcert-sdp 1\n";
  os << "blocks";
  for (int d : p.block_dims) os << ' ' << d;
  os << "\nfree " << p.num_free() << "\n";
  os << "rhs";
  for (int k = 0; k < p.num_constraints(); ++k) os << ' ' << freealg::detail::fmt_double(p.b[k]);
  os << "\n";
  auto emit = [&os](int cons, const BlockMatrix& a) {
    for (size_t bi = 0; bi < a.blocks.size(); ++bi) {
      const Matrix& blk = a.blocks[bi];
      for (Eigen::Index i = 0; i < blk.rows(); ++i)
        for (Eigen::Index j = i; j < blk.cols(); ++j)
          if (std::abs(blk(i, j)) > 0)
            os << cons << ' ' << bi << ' ' << i << ' ' << j << ' '
               << freealg::detail::fmt_double(blk(i, j).real()) << ' '
               << freealg::detail::fmt_double(blk(i, j).imag()) << "\n";
    }
  };
  emit(0, p.objective);
  for (int k = 0; k < p.num_constraints(); ++k) emit(k + 1, p.constraints[static_cast<size_t>(k)]);
  for (int k = 0; k < p.num_constraints(); ++k)
    for (int fcol = 0; fcol < p.num_free(); ++fcol)
      if (p.free_coeffs(k, fcol) != 0.0)
        os << "f " << k + 1 << ' ' << fcol << ' ' << freealg::detail::fmt_double(p.free_coeffs(k, fcol)) << "\n";
  os << "end\n";
}

}  // namespace qmcert::sdp
