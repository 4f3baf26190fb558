#pragma once

// Random feasibility instances with margins, plus a brute-force status oracle
// that shares no code path with the interior-point solver: feasibility is
// certified by concave lambda_min maximization over the affine solution space,
// infeasibility by exhaustive dual-ray search over a grid of the <=3-dim dual
// sphere.  Used by the sdp unit tests and the acceptance suite.

#include <qmcert/sdp.hpp>

#include <numbers>
#include <optional>
#include <random>

#include "test_util.hpp"

namespace sdporacle {

using qmcert::sdp::BlockMatrix;
using qmcert::sdp::SdpProblem;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using qmcert::freealg::Matrix;

struct Instance {
  SdpProblem problem;
  bool feasible = false;  // ground truth by construction
};

inline Instance random_instance(std::mt19937_64& rng, bool feasible, double margin = 0.3) {
  std::uniform_int_distribution<int> nblkd(2, 3), dimd(1, 6), md(1, 3);
  Instance inst;
  inst.feasible = feasible;
  SdpProblem& p = inst.problem;
  int nblk = nblkd(rng);
  for (int i = 0; i < nblk; ++i) p.block_dims.push_back(dimd(rng));
  int m = md(rng);
  for (int k = 0; k < m; ++k) {
    BlockMatrix a;
    for (int d : p.block_dims) a.blocks.push_back(testutil::random_hermitian(rng, d));
    p.constraints.push_back(std::move(a));
  }
  p.b = VectorXd::Zero(m);

  if (feasible) {
    // b = A(G*) for a PSD G* with lambda_min >= margin.
    BlockMatrix gstar;
    for (int d : p.block_dims) {
      Matrix h = testutil::random_hermitian(rng, d);
      Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
      gstar.blocks.push_back(h + (margin - es.eigenvalues().minCoeff()) * Matrix::Identity(d, d));
    }
    for (int k = 0; k < m; ++k) p.b[k] = p.constraints[static_cast<size_t>(k)].inner(gstar);
  } else {
    // Shift A_1 so that sum_k y*_k A_k has lambda_max = -margin, then pick b
    // with b'y* = 1: every PSD G violates <A(G),y*> <= 0 < 1.
    std::normal_distribution<double> g(0.0, 1.0);
    VectorXd ystar(m);
    do {
      for (int k = 0; k < m; ++k) ystar[k] = g(rng);
      ystar.normalize();
    } while (std::abs(ystar[0]) < 0.3);
    BlockMatrix T = BlockMatrix::zero(p.block_dims);
    for (int k = 0; k < m; ++k) {
      BlockMatrix t = p.constraints[static_cast<size_t>(k)];
      t *= ystar[k];
      T += t;
    }
    double shift = (T.max_eigenvalue() + margin) / ystar[0];
    for (size_t bi = 0; bi < p.block_dims.size(); ++bi)
      p.constraints[0].blocks[bi] -= shift * Matrix::Identity(p.block_dims[bi], p.block_dims[bi]);
    for (int k = 0; k < m; ++k) p.b[k] = g(rng);
    p.b += ystar * (1.0 - p.b.dot(ystar)) / ystar.squaredNorm();
  }
  p.finish();
  return inst;
}

enum class OracleStatus { feasible, infeasible, undecided };

// Dual-ray search over a fine grid of the unit sphere in R^m (m <= 3).
inline std::optional<VectorXd> find_dual_ray(const SdpProblem& p, double delta) {
  const int m = p.num_constraints();
  std::vector<VectorXd> dirs;
  if (m == 1) {
    dirs.push_back(VectorXd::Constant(1, 1.0));
    dirs.push_back(VectorXd::Constant(1, -1.0));
  } else if (m == 2) {
    for (int i = 0; i < 720; ++i) {
      double t = 2 * std::numbers::pi * i / 720;
      VectorXd v(2);
      v << std::cos(t), std::sin(t);
      dirs.push_back(v);
    }
  } else {
    const int n = 20000;  // Fibonacci sphere
    const double ga = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
      double z = 1.0 - 2.0 * (i + 0.5) / n;
      double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      VectorXd v(3);
      v << r * std::cos(ga * i), r * std::sin(ga * i), z;
      dirs.push_back(v);
    }
  }
  for (const auto& y : dirs) {
    if (p.b.dot(y) < delta) continue;
    BlockMatrix T = BlockMatrix::zero(p.block_dims);
    for (int k = 0; k < m; ++k) {
      BlockMatrix t = p.constraints[static_cast<size_t>(k)];
      t *= y[k];
      T += t;
    }
    if (T.max_eigenvalue() <= -delta) return y;
  }
  return std::nullopt;
}

// Searches for a primal witness by cycling projections between the affine set
// and the PSD cone (written here, independent of the library solver paths).
// The outcome does not trust the search: a candidate counts only if its
// constraint residual and minimum eigenvalue verify directly.
inline bool find_primal_witness(const SdpProblem& p, int iters = 3000) {
  qmcert::sdp::detail::ConstraintEmbedding emb(p);
  const int m = p.num_constraints();
  MatrixXd K(m, emb.dim());
  for (int k = 0; k < m; ++k)
    K.row(k) = emb.embed(p.constraints[static_cast<size_t>(k)], VectorXd::Zero(0)).transpose();
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(K);
  const double scale = 1.0 + p.b.cwiseAbs().maxCoeff();

  VectorXd v = cod.solve(p.b);  // least-squares affine point
  if ((K * v - p.b).cwiseAbs().maxCoeff() > 1e-7 * scale) return false;  // affine part inconsistent

  BlockMatrix G;
  VectorXd dummy;
  for (int it = 0; it < iters; ++it) {
    v += cod.solve(p.b - K * v);  // minimal-norm affine correction
    emb.unembed(v, G, dummy);
    double resid = (K * v - p.b).cwiseAbs().maxCoeff();
    double lmin = G.min_eigenvalue();
    if (resid <= 1e-8 * scale && lmin >= -1e-9) return true;  // verified witness
    G = G.clipped(0.0);
    v = emb.embed(G, dummy);
  }
  return false;
}

inline OracleStatus status_oracle(const SdpProblem& p) {
  double scale = 1.0 + p.b.cwiseAbs().maxCoeff();
  if (find_dual_ray(p, 1e-6 * scale)) return OracleStatus::infeasible;
  if (find_primal_witness(p)) return OracleStatus::feasible;
  return OracleStatus::undecided;
}

}  // namespace sdporacle
