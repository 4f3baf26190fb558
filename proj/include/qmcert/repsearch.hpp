#pragma once

// Finite-dimensional lower bounds: gradient ascent for ||p(X)|| over feasible
// matrix tuples of a module, with per-preset retractions. Any feasible tuple
// is a representation of the level set, so the exact spectral norm at the
// final (exactly projected) tuple is a valid lower bound for the module norm.
//
// Also the dilation toolkit: Halmos unitary dilation of a contraction,
// completion of a column-contractive tuple to exact isometry columns,
// compression by an isometry, and sampled scalar points of the level set.

#include <qmcert/freealg.hpp>
#include <qmcert/qmodule.hpp>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

namespace qmcert::repsearch {

using freealg::Complex;
using freealg::FreePoly;
using freealg::Matrix;
using freealg::MatrixTuple;
using qmodule::GenKind;
using qmodule::ModuleDescription;
using qmodule::PresetKind;

namespace detail {

// splitmix64 stream; used to derive independent, reproducible restart seeds.
inline uint64_t splitmix64(uint64_t& s) {
  s += 0x9E3779B97F4A7C15ull;
  uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::mt19937_64 restart_rng(uint64_t seed, int restart) {
  uint64_t s = seed ^ (0x9E3779B97F4A7C15ull * static_cast<uint64_t>(restart) + 0x3C6EF372FE94F82Aull);
  uint64_t a = splitmix64(s), b = splitmix64(s);
  std::seed_seq sq{static_cast<uint32_t>(a), static_cast<uint32_t>(a >> 32), static_cast<uint32_t>(b),
                   static_cast<uint32_t>(b >> 32)};
  return std::mt19937_64(sq);
}

inline Matrix psd_sqrt(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(((a + a.adjoint()) / 2.0).eval());
  Eigen::VectorXd d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace detail

// ---------- random matrices ----------

inline Matrix ginibre(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = Complex(g(rng), g(rng)) / std::sqrt(2.0);
  return m;
}

// Haar-distributed unitary: QR of a Ginibre matrix with the R-diagonal phases
// folded into Q (plain QR is not Haar without this fix).
inline Matrix haar_unitary(int n, std::mt19937_64& rng) {
  Matrix z = ginibre(n, n, rng);
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < n; ++i) {
    Complex d = r(i, i);
    q.col(i) *= std::abs(d) > 0 ? d / std::abs(d) : Complex(1.0);
  }
  return q;
}

inline Eigen::VectorXcd random_unit_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) v[i] = Complex(g(rng), g(rng));
  return v / v.norm();
}

// omega = exp(2 pi i / n); clock = diag(1, omega, ...), shift: e_j -> e_{j+1}.
// They satisfy clock * shift = omega * shift * clock.
inline Matrix clock_matrix(int n) {
  Matrix d = Matrix::Zero(n, n);
  for (int j = 0; j < n; ++j) d(j, j) = std::polar(1.0, 2.0 * M_PI * j / n);
  return d;
}

inline Matrix shift_matrix(int n) {
  Matrix s = Matrix::Zero(n, n);
  for (int j = 0; j < n; ++j) s((j + 1) % n, j) = 1.0;
  return s;
}

// ---------- retractions ----------

// Nearest unitary (polar factor). Zero-ish input falls back to the identity.
inline Matrix polar_unitary(const Matrix& x) {
  Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.singularValues().size() == 0 || svd.singularValues()[0] < 1e-14) return Matrix::Identity(x.rows(), x.cols());
  return svd.matrixU() * svd.matrixV().adjoint();
}

// Projects a tuple onto the feasible set of the module:
//   contractions        per-variable singular value clip at 1
//   ball (one block)    stack [X_1; ...; X_m], clip the stack's singular values
//   isometry columns    stack and snap all singular values to 1 (polar factor)
//   free group, toeplitz  polar factor per variable (unitaries)
//   heisenberg          nearest member of the phased clock/shift family
//   pencil              scale toward 0 until L(tX) is PSD (L has constant I)
//   custom w/o ideals   hermitize + bisect the scale on the residual
// Custom modules with ideal relations have no generic retraction.
inline MatrixTuple project_feasible(const ModuleDescription& q, const MatrixTuple& x) {
  if (static_cast<int>(x.mats.size()) != q.sig.nvars)
    throw std::invalid_argument("project_feasible: tuple arity mismatch");
  const int n = x.dim;
  MatrixTuple y = x;
  for (int v = 0; v < q.sig.nvars; ++v)
    if (q.sig.hermitian[static_cast<size_t>(v)])
      y.mats[static_cast<size_t>(v)] = ((y.mats[static_cast<size_t>(v)] + y.mats[static_cast<size_t>(v)].adjoint()) / 2.0).eval();

  auto clip_stack = [&](bool snap_to_one) {
    const int m = q.sig.nvars;
    Matrix stack(m * n, n);
    for (int v = 0; v < m; ++v) stack.block(v * n, 0, n, n) = y.mats[static_cast<size_t>(v)];
    Eigen::JacobiSVD<Matrix> svd(stack, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::VectorXd sv = svd.singularValues();
    for (Eigen::Index i = 0; i < sv.size(); ++i) sv[i] = snap_to_one ? 1.0 : std::min(sv[i], 1.0);
    Matrix clipped = svd.matrixU().leftCols(n) * sv.asDiagonal() * svd.matrixV().adjoint();
    for (int v = 0; v < m; ++v) y.mats[static_cast<size_t>(v)] = clipped.block(v * n, 0, n, n);
  };

  switch (q.preset) {
    case PresetKind::contractions:
      for (auto& m : y.mats) {
        Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
        Eigen::VectorXd sv = svd.singularValues().cwiseMin(1.0);
        m = svd.matrixU() * sv.asDiagonal() * svd.matrixV().adjoint();
      }
      return y;
    case PresetKind::ball_row:
      clip_stack(false);
      return y;
    case PresetKind::isometry:
      clip_stack(true);
      return y;
    case PresetKind::free_group:
    case PresetKind::toeplitz:
      for (auto& m : y.mats) m = polar_unitary(m);
      return y;
    case PresetKind::heisenberg: {
      // family a = e^{ik1} clock, b = e^{ik2} shift, c = omega I; the phases
      // are fitted by trace overlap, everything else is discarded.
      Matrix d = clock_matrix(n), s = shift_matrix(n);
      Complex ta = (d.adjoint() * y.mats[0]).trace();
      Complex tb = (s.adjoint() * y.mats[1]).trace();
      double k1 = std::abs(ta) > 1e-15 ? std::arg(ta) : 0.0;
      double k2 = std::abs(tb) > 1e-15 ? std::arg(tb) : 0.0;
      y.mats[0] = std::polar(1.0, k1) * d;
      y.mats[1] = std::polar(1.0, k2) * s;
      y.mats[2] = std::polar(1.0, 2.0 * M_PI / n) * Matrix::Identity(n, n);
      return y;
    }
    case PresetKind::pencil: {
      // L(tX) = (1-t) I + t L(X), so t = 1/(1 - lambda_min) is exactly feasible.
      const auto& g = q.gens[0];
      const int s = g.pencil_size();
      Matrix big(s * n, s * n);
      for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j)
          big.block(i * n, j * n, n, n) = g.matpoly[static_cast<size_t>(i)][static_cast<size_t>(j)].evaluate(y);
      Eigen::SelfAdjointEigenSolver<Matrix> es(((big + big.adjoint()) / 2.0).eval(), Eigen::EigenvaluesOnly);
      double lmin = es.eigenvalues().minCoeff();
      if (lmin < 0) {
        double t = 1.0 / (1.0 - lmin);
        for (auto& m : y.mats) m *= t;
      }
      return y;
    }
    default: {
      if (!q.ideal_generators().empty())
        throw std::invalid_argument("project_feasible: no generic retraction onto ideal relations");
      if (q.feasibility_residual(y) <= 1e-12) return y;
      // scale toward the (assumed interior) origin until feasible
      double lo = 0.0, hi = 1.0;
      MatrixTuple zero = y;
      for (auto& m : zero.mats) m.setZero();
      if (q.feasibility_residual(zero) > 1e-12)
        throw std::invalid_argument("project_feasible: origin infeasible for custom module");
      for (int it = 0; it < 60; ++it) {
        double mid = (lo + hi) / 2.0;
        MatrixTuple t = y;
        for (auto& m : t.mats) m *= mid;
        (q.feasibility_residual(t) <= 1e-12 ? lo : hi) = mid;
      }
      for (auto& m : y.mats) m *= lo;
      return y;
    }
  }
}

inline MatrixTuple random_feasible(const ModuleDescription& q, int n, std::mt19937_64& rng) {
  MatrixTuple x;
  x.dim = n;
  for (int v = 0; v < q.sig.nvars; ++v) x.mats.push_back(0.7 * ginibre(n, n, rng));
  return project_feasible(q, x);
}

// ---------- smoothed spectral norm and its gradient ----------

struct SmoothedNorm {
  double value = 0;  // log-sum-exp of the top singular values
  double exact = 0;  // sigma_max
  Matrix J;          // subgradient: softmax-weighted sum of u_i v_i^H
};

inline SmoothedNorm smoothed_norm(const Matrix& p, double beta, int topk) {
  SmoothedNorm out;
  Eigen::JacobiSVD<Matrix> svd(p, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) {
    out.J = Matrix::Zero(p.rows(), p.cols());
    return out;
  }
  const int k = std::min<int>(topk, static_cast<int>(sv.size()));
  const double s0 = sv[0];
  double denom = 0;
  for (int i = 0; i < k; ++i) denom += std::exp(beta * (sv[i] - s0));
  out.value = s0 + std::log(denom) / beta;
  out.exact = s0;
  out.J = Matrix::Zero(p.rows(), p.cols());
  for (int i = 0; i < k; ++i)
    out.J += (std::exp(beta * (sv[i] - s0)) / denom) * svd.matrixU().col(i) * svd.matrixV().col(i).adjoint();
  return out;
}

// Ascent direction of Re<J, p(X)> in each variable. For a word w = A z_v B the
// occurrence contributes conj(c_w) A^H J B^H; for w = A z_v^* B it contributes
// c_w B J^H A. Hermitian variables keep the hermitian part (their retraction
// ignores the rest).
inline std::vector<Matrix> norm_gradient(const FreePoly& p, const MatrixTuple& x, const Matrix& J) {
  const auto& sig = p.sig;
  const int s = x.dim;
  std::vector<Matrix> grad(static_cast<size_t>(sig.nvars), Matrix::Zero(s, s));
  for (const auto& [w, c] : p.terms) {
    const int len = w.degree();
    if (len == 0) continue;
    auto letter = [&](int t) -> Matrix {
      int l = w.ls[static_cast<size_t>(t)];
      const Matrix& base = x.mats[static_cast<size_t>(sig.var_of_letter(l))];
      return sig.letter_starred(l) ? base.adjoint() : base;
    };
    std::vector<Matrix> prefix(static_cast<size_t>(len) + 1), suffix(static_cast<size_t>(len) + 1);
    prefix[0] = Matrix::Identity(s, s);
    for (int t = 0; t < len; ++t) prefix[static_cast<size_t>(t) + 1] = prefix[static_cast<size_t>(t)] * letter(t);
    suffix[static_cast<size_t>(len)] = Matrix::Identity(s, s);
    for (int t = len - 1; t >= 0; --t) suffix[static_cast<size_t>(t)] = letter(t) * suffix[static_cast<size_t>(t) + 1];
    for (int t = 0; t < len; ++t) {
      const Matrix& a = prefix[static_cast<size_t>(t)];
      const Matrix& b = suffix[static_cast<size_t>(t) + 1];
      int l = w.ls[static_cast<size_t>(t)];
      int v = sig.var_of_letter(l);
      if (!sig.letter_starred(l))
        grad[static_cast<size_t>(v)] += std::conj(c) * a.adjoint() * J * b.adjoint();
      else
        grad[static_cast<size_t>(v)] += c * b * J.adjoint() * a;
    }
  }
  for (int v = 0; v < sig.nvars; ++v)
    if (sig.hermitian[static_cast<size_t>(v)]) {
      Matrix h = (grad[static_cast<size_t>(v)] + grad[static_cast<size_t>(v)].adjoint()) / 2.0;
      grad[static_cast<size_t>(v)] = h;
    }
  return grad;
}

// ---------- the search ----------

struct SearchConfig {
  int n = 2;             // representation dimension
  int restarts = 32;
  int iterations = 150;  // ascent steps per restart
  double step = 0.25;    // initial normalized step length
  uint64_t seed = 0;
  int jobs = 1;          // restarts run in parallel; results independent of jobs
  double beta = 200.0;   // softmax sharpness over the top singular values
  int topk = 3;
};

struct SearchResult {
  double value = 0;  // sigma_max of p at the best tuple: a certified lower bound
  MatrixTuple tuple;
  int best_restart = -1;
  std::vector<double> restart_values;
  double feasibility = 0;  // module residual of the returned tuple
};

// Maximizes ||p(X)|| by projected gradient ascent with backtracking from
// `restarts` random feasible starts. Deterministic for a fixed seed: each
// restart draws its own generator and ties prefer the lower restart index.
inline SearchResult search_lower(const ModuleDescription& q, const FreePoly& p, const SearchConfig& cfg = {}) {
  if (!(p.sig == q.sig)) throw std::invalid_argument("search_lower: polynomial signature differs from module");
  if (cfg.n < 1) throw std::invalid_argument("search_lower: dimension must be positive");
  const int nrestart = std::max(1, cfg.restarts);
  std::vector<double> values(static_cast<size_t>(nrestart), 0.0);
  std::vector<MatrixTuple> tuples(static_cast<size_t>(nrestart));

  auto run_one = [&](int r) {
    std::mt19937_64 rng = detail::restart_rng(cfg.seed, r);
    MatrixTuple x = random_feasible(q, cfg.n, rng);
    SmoothedNorm cur = smoothed_norm(p.evaluate(x), cfg.beta, cfg.topk);
    double step = cfg.step;
    for (int it = 0; it < cfg.iterations; ++it) {
      std::vector<Matrix> grad = norm_gradient(p, x, cur.J);
      double gn = 0;
      for (const auto& g : grad) gn += g.squaredNorm();
      gn = std::sqrt(gn);
      if (gn < 1e-12) break;
      bool accepted = false;
      while (step > 1e-9 * cfg.step) {
        MatrixTuple trial = x;
        for (int v = 0; v < q.sig.nvars; ++v) trial.mats[static_cast<size_t>(v)] += (step / gn) * grad[static_cast<size_t>(v)];
        trial = project_feasible(q, trial);
        SmoothedNorm sn = smoothed_norm(p.evaluate(trial), cfg.beta, cfg.topk);
        if (sn.value > cur.value + 1e-14) {
          x = std::move(trial);
          cur = sn;
          step = std::min(step * 1.4, 16.0 * cfg.step);
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;
    }
    values[static_cast<size_t>(r)] = smoothed_norm(p.evaluate(x), cfg.beta, cfg.topk).exact;
    tuples[static_cast<size_t>(r)] = std::move(x);
  };

  const int jobs = std::clamp(cfg.jobs, 1, nrestart);
  if (jobs == 1) {
    for (int r = 0; r < nrestart; ++r) run_one(r);
  } else {
    std::vector<std::thread> pool;
    for (int tid = 0; tid < jobs; ++tid)
      pool.emplace_back([&, tid] {
        for (int r = tid; r < nrestart; r += jobs) run_one(r);
      });
    for (auto& t : pool) t.join();
  }

  SearchResult out;
  out.restart_values = values;
  for (int r = 0; r < nrestart; ++r)
    if (out.best_restart < 0 || values[static_cast<size_t>(r)] > out.value) {
      out.value = values[static_cast<size_t>(r)];
      out.best_restart = r;
    }
  out.tuple = tuples[static_cast<size_t>(out.best_restart)];
  out.feasibility = q.feasibility_residual(out.tuple);
  return out;
}

// ---------- dilations and compressions ----------

// Halmos dilation [[T, D_{T^*}], [D_T, -T^*]] of a contraction; unitary because
// T D_T = D_{T^*} T. Both defect roots come from one SVD T = W S V^* (so
// D_T = V c(S) V^*, D_{T^*} = W c(S) W^* with c(s) = sqrt(1-s^2)), which keeps
// the intertwining identity at machine precision instead of coupling two
// independent matrix square roots.
inline Matrix unitary_dilate(const Matrix& t) {
  const int n = static_cast<int>(t.rows());
  if (t.cols() != n) throw std::invalid_argument("unitary_dilate: square matrix required");
  Eigen::JacobiSVD<Matrix> svd(t, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (n > 0 && svd.singularValues()(0) > 1.0 + 1e-10)
    throw std::invalid_argument("unitary_dilate: not a contraction");
  Eigen::VectorXcd c =
      (1.0 - svd.singularValues().array().square()).max(0.0).sqrt().matrix().cast<Complex>();
  Matrix dt = svd.matrixV() * c.asDiagonal() * svd.matrixV().adjoint();
  Matrix dts = svd.matrixU() * c.asDiagonal() * svd.matrixU().adjoint();
  Matrix u(2 * n, 2 * n);
  u.topLeftCorner(n, n) = t;
  u.topRightCorner(n, n) = dts;
  u.bottomLeftCorner(n, n) = dt;
  u.bottomRightCorner(n, n) = -t.adjoint();
  return u;
}

// Column-contractive tuple (sum X_i^* X_i <= I on C^n) extended to 2n x 2n
// matrices with sum Y_i^* Y_i = I exactly and Y_i's top-left corner X_i: the
// stacked defect column is completed to an isometry by orthogonal columns.
inline MatrixTuple isometry_extend(const MatrixTuple& x) {
  const int n = x.dim;
  const int m = static_cast<int>(x.mats.size());
  if (m == 0) throw std::invalid_argument("isometry_extend: empty tuple");
  const int big = 2 * n;
  Matrix gram = Matrix::Zero(n, n);
  for (const auto& mat : x.mats) gram += mat.adjoint() * mat;
  Eigen::SelfAdjointEigenSolver<Matrix> es(((gram + gram.adjoint()) / 2.0).eval(), Eigen::EigenvaluesOnly);
  if (es.eigenvalues().maxCoeff() > 1.0 + 1e-10)
    throw std::invalid_argument("isometry_extend: tuple is not column contractive");
  Matrix defect = detail::psd_sqrt(Matrix::Identity(n, n) - gram);

  // first block column: [X_1; D; X_2; 0; ...], orthonormal by construction
  Matrix col = Matrix::Zero(m * big, n);
  for (int v = 0; v < m; ++v) col.block(v * big, 0, n, n) = x.mats[static_cast<size_t>(v)];
  col.block(n, 0, n, n) = defect;

  Eigen::HouseholderQR<Matrix> qr(col);
  Matrix qfull = qr.householderQ();
  // align Q's leading columns with col (QR determines them up to phases)
  Matrix rest = qfull.rightCols(m * big - n).leftCols(big - n);

  MatrixTuple out;
  out.dim = big;
  for (int v = 0; v < m; ++v) {
    Matrix y(big, big);
    y.leftCols(n) = col.block(v * big, 0, big, n);
    y.rightCols(big - n) = rest.block(v * big, 0, big, big - n);
    out.mats.push_back(std::move(y));
  }
  return out;
}

// V^H X V for an isometry V (columns orthonormal).
inline MatrixTuple compress(const MatrixTuple& x, const Matrix& v) {
  if (v.rows() != x.dim) throw std::invalid_argument("compress: isometry row count mismatch");
  if ((v.adjoint() * v - Matrix::Identity(v.cols(), v.cols())).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("compress: columns are not orthonormal");
  MatrixTuple out;
  out.dim = static_cast<int>(v.cols());
  for (const auto& m : x.mats) out.mats.push_back(v.adjoint() * m * v);
  return out;
}

// Scalar points of the level set: coordinates v^* X_i v at random feasible
// tuples X and Haar unit vectors v. Deterministic in the seed.
inline std::vector<Eigen::VectorXcd> mconv_sample(const ModuleDescription& q, int n, int count, uint64_t seed) {
  std::vector<Eigen::VectorXcd> out;
  std::mt19937_64 rng = detail::restart_rng(seed, -7);
  for (int c = 0; c < count; ++c) {
    MatrixTuple x = random_feasible(q, n, rng);
    Eigen::VectorXcd v = random_unit_vector(n, rng);
    Eigen::VectorXcd pt(q.sig.nvars);
    for (int i = 0; i < q.sig.nvars; ++i) pt[i] = (v.adjoint() * x.mats[static_cast<size_t>(i)] * v)(0, 0);
    out.push_back(std::move(pt));
  }
  return out;
}

}  // namespace qmcert::repsearch
