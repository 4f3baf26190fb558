#pragma once

// The discrete Heisenberg group <a, b, c | ab = c ba, ca = ac, cb = bc> as a
// computational object: integer normal forms a^i b^j c^k, clock/shift
// representations at rational angles, Harper operator norms maximized over
// Bloch phases, butterfly boundary records over Farey fractions, roots-of-unity
// representations, and an exact group-basis membership test for the projection
// onto the central coordinates ((c+c^*)/2, (c-c^*)/2i).

#include <qmcert/certify.hpp>
#include <qmcert/freealg.hpp>
#include <qmcert/qmodule.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace qmcert::heisenberg {

using freealg::Complex;
using freealg::FreePoly;
using freealg::Matrix;
using freealg::MatrixTuple;
using freealg::Signature;
using freealg::Word;

// Letter order of the group preset: a, b, c and their inverses as stars.
inline const Signature& signature() {
  static const Signature sig = qmodule::group_module(qmodule::GroupPreset::heisenberg).sig;
  return sig;
}

// Normal form a^i b^j c^k. Group products and inverses are exact integer
// arithmetic; the unit phase only picks up values when c is evaluated as a
// scalar, never during group reduction.
struct HeisenbergWord {
  long long i = 0, j = 0, k = 0;
  Complex phase{1.0, 0.0};

  // (a^i b^j c^k)(a^i' b^j' c^k'): moving b^j across a^i' costs c^{-j i'}
  friend HeisenbergWord operator*(const HeisenbergWord& x, const HeisenbergWord& y) {
    return {x.i + y.i, x.j + y.j, x.k + y.k - x.j * y.i, x.phase * y.phase};
  }

  HeisenbergWord inverse() const { return {-i, -j, -k - i * j, std::conj(phase)}; }

  bool same_element(const HeisenbergWord& o) const { return i == o.i && j == o.j && k == o.k; }

  friend bool operator<(const HeisenbergWord& x, const HeisenbergWord& y) {
    return std::tie(x.i, x.j, x.k) < std::tie(y.i, y.j, y.k);
  }
  friend bool operator==(const HeisenbergWord& x, const HeisenbergWord& y) {
    return x.same_element(y) && x.phase == y.phase;
  }

  long long length() const { return std::abs(i) + std::abs(j) + std::abs(k); }
};

namespace detail {

inline HeisenbergWord generator(int letter) {
  switch (letter) {
    case 0: return {1, 0, 0};
    case 1: return {0, 1, 0};
    case 2: return {0, 0, 1};
    case 3: return {-1, 0, 0};
    case 4: return {0, -1, 0};
    case 5: return {0, 0, -1};
    default: throw std::invalid_argument("heisenberg: letter out of range");
  }
}

}  // namespace detail

// Reduces a word over the letters a, b, c and their inverses (the module
// signature's starred letters) to its normal form.
inline HeisenbergWord normal_form(const Word& w) {
  HeisenbergWord h;
  for (int l : w.ls) h = h * detail::generator(l);
  return h;
}

// The normal form as an element of the free *-algebra on a, b, c (inverses
// become stars; sound because the group letters are unitary in every module
// representation).
inline FreePoly to_poly(const HeisenbergWord& h) {
  const Signature& sig = signature();
  Word w;
  auto push = [&](int var, long long count) {
    int l = count >= 0 ? var : var + 3;
    for (long long t = 0; t < std::llabs(count); ++t) w.ls.push_back(l);
  };
  push(0, h.i);
  push(1, h.j);
  push(2, h.k);
  return FreePoly::monomial(sig, w, h.phase);
}

// omega = exp(2 pi i p / q): clock = diag(1, omega, ..., omega^{q-1}) and the
// cyclic shift e_j -> e_{j+1} satisfy clock*shift = omega * shift*clock.
inline Matrix clock_matrix(int p, int q) {
  Matrix d = Matrix::Zero(q, q);
  for (int j = 0; j < q; ++j) d(j, j) = std::polar(1.0, 2.0 * M_PI * p * j / q);
  return d;
}

inline Matrix shift_matrix(int q) {
  Matrix s = Matrix::Zero(q, q);
  for (int j = 0; j < q; ++j) s((j + 1) % q, j) = 1.0;
  return s;
}

// q-dimensional representation at angle theta = 2 pi p / q with Bloch phases:
// a -> e^{ik1} clock, b -> e^{ik2} shift, c -> e^{i theta} I. All three
// defining relations hold exactly (the phases cancel in the commutator).
inline MatrixTuple irrep(int p, int q, double k1 = 0.0, double k2 = 0.0) {
  if (q < 1) throw std::invalid_argument("irrep: q must be positive");
  if (std::gcd(static_cast<long long>(std::abs(p)), static_cast<long long>(q)) != 1)
    throw std::invalid_argument("irrep: p and q must be coprime");
  MatrixTuple x;
  x.dim = q;
  x.mats.push_back(std::polar(1.0, k1) * clock_matrix(p, q));
  x.mats.push_back(std::polar(1.0, k2) * shift_matrix(q));
  x.mats.push_back(std::polar(1.0, 2.0 * M_PI * p / q) * Matrix::Identity(q, q));
  return x;
}

// Evaluates a normal form under a unitary tuple (negative powers as adjoints).
inline Matrix evaluate(const HeisenbergWord& h, const MatrixTuple& x) {
  const int n = x.dim;
  auto pow_u = [&](const Matrix& u, long long e) {
    Matrix acc = Matrix::Identity(n, n);
    const Matrix base = e >= 0 ? u : Matrix(u.adjoint());
    for (long long t = 0; t < std::llabs(e); ++t) acc = acc * base;
    return acc;
  };
  return h.phase * pow_u(x.mats[0], h.i) * pow_u(x.mats[1], h.j) * pow_u(x.mats[2], h.k);
}

// ---------- Harper operator ----------

// H(k1, k2) = e^{ik1} clock + e^{ik2} shift + adjoints at angle 2 pi p / q.
inline Matrix harper_matrix(int p, int q, double k1, double k2) {
  Matrix d = std::polar(1.0, k1) * clock_matrix(p, q);
  Matrix s = std::polar(1.0, k2) * shift_matrix(q);
  return d + d.adjoint() + s + s.adjoint();
}

namespace detail {

inline double top_eig(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}
inline double bottom_eig(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// Golden-section maximization on [lo, hi]; returns (argmax, max).
template <class F>
std::pair<double, double> golden_max(F f, double lo, double hi, int iters = 70) {
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < iters; ++it) {
    if (fc < fd) {
      lo = c;
      c = d;
      fc = fd;
      d = lo + gr * (hi - lo);
      fd = f(d);
    } else {
      hi = d;
      d = c;
      fd = fc;
      c = hi - gr * (hi - lo);
      fc = f(c);
    }
  }
  return fc > fd ? std::make_pair(c, fc) : std::make_pair(d, fd);
}

}  // namespace detail

// Extreme eigenvalues of H over the Bloch torus: uniform grid scan plus one
// coordinate-wise golden-section refinement around each argmax; the reported
// value never falls below the best grid point, so lattice-attained extrema
// (theta = 0 in particular) stay exact.
inline std::pair<double, double> harper_range(int p, int q, int grid = 64) {
  if (grid < 2) throw std::invalid_argument("harper_range: grid must be at least 2");
  auto top = [&](double k1, double k2) { return detail::top_eig(harper_matrix(p, q, k1, k2)); };
  auto bottom = [&](double k1, double k2) { return detail::bottom_eig(harper_matrix(p, q, k1, k2)); };

  double best_max = -std::numeric_limits<double>::infinity();
  double best_min = std::numeric_limits<double>::infinity();
  double am1 = 0, am2 = 0, bm1 = 0, bm2 = 0;
  for (int t1 = 0; t1 < grid; ++t1)
    for (int t2 = 0; t2 < grid; ++t2) {
      double k1 = 2.0 * M_PI * t1 / grid, k2 = 2.0 * M_PI * t2 / grid;
      double hi = top(k1, k2), lo = bottom(k1, k2);
      if (hi > best_max) best_max = hi, am1 = k1, am2 = k2;
      if (lo < best_min) best_min = lo, bm1 = k1, bm2 = k2;
    }

  const double window = 2.0 * M_PI / grid;
  double r1 = am1, r2 = am2, rv = best_max;
  for (int round = 0; round < 3; ++round) {
    auto g1 = detail::golden_max([&](double k) { return top(k, r2); }, r1 - window, r1 + window);
    r1 = g1.first;
    auto g2 = detail::golden_max([&](double k) { return top(r1, k); }, r2 - window, r2 + window);
    r2 = g2.first;
    rv = std::max({rv, g1.second, g2.second});
  }
  double s1 = bm1, s2 = bm2, sv = best_min;
  for (int round = 0; round < 3; ++round) {
    auto g1 = detail::golden_max([&](double k) { return -bottom(k, s2); }, s1 - window, s1 + window);
    s1 = g1.first;
    auto g2 = detail::golden_max([&](double k) { return -bottom(s1, k); }, s2 - window, s2 + window);
    s2 = g2.first;
    sv = std::min({sv, -g1.second, -g2.second});
  }
  return {std::max(best_max, rv), std::min(best_min, sv)};
}

inline double harper_norm(int p, int q, int grid = 64) { return harper_range(p, q, grid).first; }

// ---------- butterfly boundary ----------

struct ButterflyRecord {
  double theta = 0;  // 2 pi p / q
  int p = 0, q = 1;
  double norm_plus = 0;   // max of the top eigenvalue over Bloch phases
  double norm_minus = 0;  // min of the bottom eigenvalue (negative)
};

// One record per Farey fraction p/q in [0, 1] with q <= q_max, sorted by
// theta. Records are independent, so they are computed in parallel when
// jobs > 1; the output order does not depend on the thread count.
inline std::vector<ButterflyRecord> butterfly(int q_max, int grid = 64, int jobs = 1) {
  if (q_max < 1) throw std::invalid_argument("butterfly: q_max must be positive");
  std::vector<std::pair<int, int>> fracs;
  for (int q = 1; q <= q_max; ++q)
    for (int p = 0; p <= q; ++p)
      if (std::gcd(p, q) == 1) fracs.emplace_back(p, q);
  std::sort(fracs.begin(), fracs.end(),
            [](auto a, auto b) { return a.first * static_cast<long long>(b.second) < b.first * static_cast<long long>(a.second); });

  std::vector<ButterflyRecord> out(fracs.size());
  auto run = [&](size_t idx) {
    auto [p, q] = fracs[idx];
    auto [hi, lo] = harper_range(p, q, grid);
    out[idx] = {2.0 * M_PI * p / q, p, q, hi, lo};
  };
  const int nt = std::clamp(jobs, 1, static_cast<int>(fracs.size()));
  if (nt == 1) {
    for (size_t i = 0; i < fracs.size(); ++i) run(i);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t)
      pool.emplace_back([&, t] {
        for (size_t i = static_cast<size_t>(t); i < fracs.size(); i += static_cast<size_t>(nt)) run(i);
      });
    for (auto& th : pool) th.join();
  }
  return out;
}

inline std::string butterfly_csv(const std::vector<ButterflyRecord>& records) {
  std::string out = "theta,p,q,norm_plus,norm_minus\n";
  char buf[160];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%.12g,%d,%d,%.12g,%.12g\n", r.theta, r.p, r.q, r.norm_plus, r.norm_minus);
    out += buf;
  }
  return out;
}

// ---------- roots of unity ----------

// n-dimensional representation with c -> e^{2 pi i k / n} I: reduce k/n to
// lowest terms p/q' and take n/q' copies of the clock/shift block.
inline MatrixTuple root_rep(int n, int k) {
  if (n < 1 || k < 0 || k >= n) throw std::invalid_argument("root_rep: need 0 <= k < n");
  const int g = k == 0 ? n : static_cast<int>(std::gcd(k, n));
  const int p = k / g, q = n / g;
  MatrixTuple blk = irrep(p, q);
  MatrixTuple x;
  x.dim = n;
  for (int v = 0; v < 3; ++v) {
    Matrix m = Matrix::Zero(n, n);
    for (int copy = 0; copy < g; ++copy) m.block(copy * q, copy * q, q, q) = blk.mats[static_cast<size_t>(v)];
    x.mats.push_back(std::move(m));
  }
  return x;
}

// Vertices (counterclockwise) of the convex hull of all roots of unity of
// order at most n_max; they sit on the unit circle, so every distinct root is
// extreme. Computed by monotone chain over the deduplicated points.
inline std::vector<Eigen::Vector2d> roots_hull(int n_max) {
  if (n_max < 1) throw std::invalid_argument("roots_hull: n_max must be positive");
  std::set<std::pair<int, int>> fracs;  // reduced k/n, 0 <= k < n
  for (int n = 1; n <= n_max; ++n)
    for (int k = 0; k < n; ++k) {
      int g = k == 0 ? n : static_cast<int>(std::gcd(k, n));
      fracs.emplace(k / g, n / g);
    }
  std::vector<Eigen::Vector2d> pts;
  for (auto [p, q] : fracs) pts.emplace_back(std::cos(2.0 * M_PI * p / q), std::sin(2.0 * M_PI * p / q));
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a.x() != b.x() ? a.x() < b.x() : a.y() < b.y();
  });
  auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Eigen::Vector2d> hull(2 * pts.size());
  size_t m = 0;
  for (const auto& pt : pts) {  // lower chain
    while (m >= 2 && cross(hull[m - 2], hull[m - 1], pt) <= 1e-14) --m;
    hull[m++] = pt;
  }
  for (size_t i = pts.size(), lower = m + 1; i-- > 0;) {  // upper chain
    while (m >= lower && cross(hull[m - 2], hull[m - 1], pts[i]) <= 1e-14) --m;
    hull[m++] = pts[i];
  }
  hull.resize(m > 1 ? m - 1 : m);
  return hull;
}

// ---------- exact group-basis membership for the central projection ----------

// All group elements with |i| + |j| + |k| <= radius, identity first.
inline std::vector<HeisenbergWord> group_ball(int radius) {
  std::vector<HeisenbergWord> out;
  for (long long i = -radius; i <= radius; ++i)
    for (long long j = -radius; j <= radius; ++j)
      for (long long k = -radius; k <= radius; ++k)
        if (std::llabs(i) + std::llabs(j) + std::llabs(k) <= radius) out.push_back({i, j, k});
  std::sort(out.begin(), out.end(), [](const HeisenbergWord& x, const HeisenbergWord& y) {
    return std::make_tuple(x.length(), x.i, x.j, x.k) < std::make_tuple(y.length(), y.i, y.j, y.k);
  });
  return out;
}

// Membership of (x, y) in the degree-d projection of the group-algebra state
// space onto ((c+c^*)/2, (c-c^*)/2i). Minimizes phi_{x,y}(s) over sums of
// squares s = sum_l s_l^* s_l with s_l supported on the length-(d/2) group
// ball, constrained to span{e, c, c^{-1}} and trace-normalized. Products of
// group elements are exact integer arithmetic, so the only numerics is the
// SDP itself; a violated verdict re-verifies the witness after PSD clipping.
inline certify::HullResult central_hull_membership(double x, double y, int d,
                                                   const certify::CertifyOptions& opts = {}) {
  if (d < 2) throw std::invalid_argument("central_hull_membership: degree must be at least 2");
  using certify::detail::Lin;
  const std::vector<HeisenbergWord> basis = group_ball(d / 2);
  const int nb = static_cast<int>(basis.size());
  const Complex phi_c(x, y);

  auto in_span = [](const HeisenbergWord& g) { return g.i == 0 && g.j == 0 && std::llabs(g.k) <= 1; };
  auto phi_of = [&](const HeisenbergWord& g) {
    if (g.k == 0) return Complex(1.0);
    return g.k == 1 ? phi_c : std::conj(phi_c);
  };

  std::map<std::tuple<long long, long long, long long>, std::vector<std::pair<int, int>>> products;
  for (int u = 0; u < nb; ++u)
    for (int v = 0; v < nb; ++v) {
      HeisenbergWord g = basis[static_cast<size_t>(u)].inverse() * basis[static_cast<size_t>(v)];
      products[{g.i, g.j, g.k}].emplace_back(u, v);
    }

  certify::detail::EquationBuilder eb({nb}, 0);
  Lin norm_row;
  for (int u = 0; u < nb; ++u) norm_row.gram.emplace_back(0, u, u, Complex(1.0));
  eb.add_row(norm_row, Complex(1.0), true);

  Lin objective;
  std::set<std::tuple<long long, long long, long long>> emitted;
  for (const auto& [key, pairs] : products) {
    HeisenbergWord g{std::get<0>(key), std::get<1>(key), std::get<2>(key)};
    if (in_span(g)) {
      for (auto [u, v] : pairs) objective.gram.emplace_back(0, u, v, phi_of(g));
      continue;
    }
    HeisenbergWord gi = g.inverse();
    auto rep = std::min(std::tie(g.i, g.j, g.k), std::tie(gi.i, gi.j, gi.k));
    if (!emitted.insert(rep).second) continue;
    Lin row;
    for (auto [u, v] : pairs) row.gram.emplace_back(0, u, v, Complex(1.0));
    eb.add_row(row, Complex(0.0), g.same_element(gi));
  }
  eb.set_objective(objective);

  sdp::SdpProblem prob = eb.take();
  certify::HullResult out;
  out.sdp = sdp::solve(prob, opts.sdp);
  const double vscale = 1.0 + std::abs(x) + std::abs(y);
  if (out.sdp.status != sdp::SdpStatus::optimal && out.sdp.status != sdp::SdpStatus::max_iter) return out;
  out.min_value = out.sdp.primal_obj;

  if (out.min_value >= -1e-7 * vscale && out.sdp.status == sdp::SdpStatus::optimal) {
    out.status = certify::UcpStatus::consistent;
    return out;
  }

  // candidate separation: clip the Gram, rebuild the exact coefficients, and
  // require the off-span mass to be negligible before trusting the verdict
  Matrix gram = certify::detail::psd_clip(out.sdp.G.blocks[0]);
  double tr = gram.trace().real();
  if (tr > 1e-12) gram /= tr;
  std::map<std::tuple<long long, long long, long long>, Complex> coeffs;
  for (const auto& [key, pairs] : products) {
    Complex c = 0;
    for (auto [u, v] : pairs) c += gram(u, v);
    if (std::abs(c) > 0) coeffs[key] = c;
  }
  double off_span = 0;
  Complex a_e = 0, a_c = 0;
  for (const auto& [key, c] : coeffs) {
    HeisenbergWord g{std::get<0>(key), std::get<1>(key), std::get<2>(key)};
    if (!in_span(g))
      off_span += std::abs(c);
    else if (g.k == 0)
      a_e += c;
    else if (g.k == 1)
      a_c += c;
    else
      a_c += std::conj(c);
  }
  a_c /= 2.0;  // accumulated from both the c and c^{-1} coefficients
  double verified = a_e.real() + 2.0 * (a_c.real() * x - a_c.imag() * y);

  out.functional = Eigen::VectorXd(3);
  out.functional << a_e.real(), 2.0 * a_c.real(), -2.0 * a_c.imag();
  out.witness = FreePoly::constant(signature(), a_e.real()) + to_poly({0, 0, 1, a_c}) + to_poly({0, 0, -1, std::conj(a_c)});

  if (out.min_value < -1e-6 * vscale && verified < -1e-6 * vscale / 2.0 && off_span < 1e-6) {
    out.status = certify::UcpStatus::violated;
  } else if (out.min_value >= -1e-7 * vscale && out.sdp.status == sdp::SdpStatus::optimal) {
    out.status = certify::UcpStatus::consistent;
  }
  return out;
}

}  // namespace qmcert::heisenberg
