#ifndef DCFLOW_CONE_SOLVER_HPP_
#define DCFLOW_CONE_SOLVER_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/OrderingMethods>

#include "dcflow/cone_program.hpp"
#include "dcflow/error.hpp"
#include "dcflow/presolve.hpp"

namespace dcflow
{

enum class SolveStatus
{
  optimal,
  primal_infeasible,
  dual_infeasible,
  iteration_limit,
  numerical_failure,
};

constexpr std::string_view to_string(SolveStatus s)
{
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::primal_infeasible: return "primal_infeasible";
    case SolveStatus::dual_infeasible: return "dual_infeasible";
    case SolveStatus::iteration_limit: return "iteration_limit";
    case SolveStatus::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

struct SolverSettings
{
  double tol_p = 1e-9;
  double tol_d = 1e-9;
  double tol_gap = 1e-9;
  int max_iter = 200;
  double static_reg = 1e-8;
  int refine_passes = 3;
  double step_fraction = 0.99;
  std::uint64_t seed = 0;  // 0 keeps the unit-cone start unperturbed
  bool equilibrate = true;
  bool presolve = true;
};

struct SolveReport
{
  SolveStatus status = SolveStatus::numerical_failure;
  int iterations = 0;
  double primal_residual = 0.0;  // max(|Ax-b|, |Gx+s-h|) / (1 + |rhs|), infinity norms
  double dual_residual = 0.0;    // |c + A'y + G'z| / (1 + |c|)
  double duality_gap = 0.0;      // s'z
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  std::uint64_t solve_seed = 0;
};

/// Stationarity convention: c + A'y + sum of cone terms = 0, with every cone
/// multiplier in its (self-dual) cone.
struct SolveResult
{
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> lower_dual;  // multiplier of x >= lower (0 where absent)
  std::vector<double> upper_dual;
  std::vector<std::vector<double>> cone_duals;  // per cone block, block coordinates
  SolveReport report;
};

namespace detail
{

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

struct GRowOrigin
{
  enum Kind
  {
    lower_bound,
    upper_bound,
    cone,
  } kind;
  int index;  // variable or cone block
};

// min c'x  s.t.  Ax = b,  Gx + s = h,  s in R^l_+ x SOC(d_1) x ...
struct StandardForm
{
  int n = 0;
  Vec c, b, h;
  SpMat A, G;
  int l = 0;
  std::vector<int> soc_start;
  std::vector<int> soc_dim;
  std::vector<char> soc_rot;  // block stored in rotated coordinates: 2 c0 c1 >= |c2..|^2
  std::vector<GRowOrigin> row_origin;  // per orthant row
  std::vector<int> block_first_row;    // per cone block: first G row (orthant blocks: -1)
  std::vector<std::vector<int>> block_rows;

  int m() const { return static_cast<int>(h.size()); }
  int degree() const { return l + static_cast<int>(soc_dim.size()); }
};

inline StandardForm compile(const ConeProgram& prog)
{
  StandardForm sf;
  sf.n = prog.n_vars;
  sf.c = Vec::Map(prog.objective.data(), prog.n_vars);
  sf.b = Vec::Map(prog.eq_rhs.data(), prog.n_rows());
  std::vector<Eigen::Triplet<double>> at, gt;
  for (const auto& t : prog.eq_entries) at.emplace_back(t.row, t.col, t.value);
  sf.A.resize(prog.n_rows(), prog.n_vars);
  sf.A.setFromTriplets(at.begin(), at.end());

  std::vector<double> h;
  int row = 0;
  auto add_expr_row = [&](const AffineExpr& e, double scale) {
    for (const auto& [j, a] : e.terms) gt.emplace_back(row, j, -scale * a);
    h.push_back(scale * e.constant);
    ++row;
  };
  sf.block_rows.assign(prog.cones.size(), {});
  for (int j = 0; j < prog.n_vars; ++j) {
    if (prog.lower[j]) {
      gt.emplace_back(row, j, -1.0);
      h.push_back(-*prog.lower[j]);
      sf.row_origin.push_back({GRowOrigin::lower_bound, j});
      ++row;
    }
    if (prog.upper[j]) {
      gt.emplace_back(row, j, 1.0);
      h.push_back(*prog.upper[j]);
      sf.row_origin.push_back({GRowOrigin::upper_bound, j});
      ++row;
    }
  }
  for (std::size_t k = 0; k < prog.cones.size(); ++k) {
    const auto& cb = prog.cones[k];
    if (cb.kind != ConeKind::nonneg) continue;
    for (const auto& e : cb.coords) {
      sf.block_rows[k].push_back(row);
      sf.row_origin.push_back({GRowOrigin::cone, static_cast<int>(k)});
      add_expr_row(e, 1.0);
    }
  }
  sf.l = row;
  for (std::size_t k = 0; k < prog.cones.size(); ++k) {
    const auto& cb = prog.cones[k];
    if (cb.kind == ConeKind::nonneg) continue;
    sf.soc_start.push_back(row);
    sf.soc_dim.push_back(static_cast<int>(cb.coords.size()));
    sf.soc_rot.push_back(cb.kind == ConeKind::rsoc);
    for (std::size_t c = 0; c < cb.coords.size(); ++c) sf.block_rows[k].push_back(row + static_cast<int>(c));
    if (cb.kind == ConeKind::soc) {
      for (const auto& e : cb.coords) add_expr_row(e, 1.0);
    } else {
      // u v >= |w|^2  <=>  2 u v >= |sqrt(2) w|^2, kept in rotated form so
      // a small u next to a large v is not lost to cancellation
      add_expr_row(cb.coords[0], 1.0);
      add_expr_row(cb.coords[1], 1.0);
      for (std::size_t c = 2; c < cb.coords.size(); ++c) add_expr_row(cb.coords[c], std::sqrt(2.0));
    }
  }
  sf.G.resize(row, prog.n_vars);
  sf.G.setFromTriplets(gt.begin(), gt.end());
  sf.h = Vec::Map(h.data(), static_cast<Eigen::Index>(h.size()));
  return sf;
}

// Ruiz equilibration: x = E xs, rows of A scaled by D, rows of G by F
// (uniform inside each second-order cone block).
struct Scaling
{
  Vec E, D, F;
};

inline Scaling equilibrate(StandardForm& sf, bool enabled)
{
  Scaling sc{Vec::Ones(sf.n), Vec::Ones(sf.A.rows()), Vec::Ones(sf.m())};
  if (!enabled) return sc;
  const int p = static_cast<int>(sf.A.rows());
  const int m = sf.m();
  auto clamp = [](double v) { return std::clamp(v, 1e-4, 1e4); };
  for (int pass = 0; pass < 15; ++pass) {
    Vec col = Vec::Zero(sf.n), ra = Vec::Zero(p), rg = Vec::Zero(m);
    for (int j = 0; j < sf.n; ++j) {
      for (SpMat::InnerIterator it(sf.A, j); it; ++it) {
        double a = std::abs(it.value());
        col(j) = std::max(col(j), a);
        ra(it.row()) = std::max(ra(it.row()), a);
      }
      for (SpMat::InnerIterator it(sf.G, j); it; ++it) {
        double a = std::abs(it.value());
        col(j) = std::max(col(j), a);
        rg(it.row()) = std::max(rg(it.row()), a);
      }
    }
    for (std::size_t k = 0; k < sf.soc_start.size(); ++k) {
      auto seg = rg.segment(sf.soc_start[k], sf.soc_dim[k]);
      seg.setConstant(seg.maxCoeff());
    }
    Vec dc(sf.n), da(p), dg(m);
    for (int j = 0; j < sf.n; ++j) dc(j) = col(j) > 0 ? clamp(1.0 / std::sqrt(col(j))) : 1.0;
    for (int i = 0; i < p; ++i) da(i) = ra(i) > 0 ? clamp(1.0 / std::sqrt(ra(i))) : 1.0;
    for (int i = 0; i < m; ++i) dg(i) = rg(i) > 0 ? clamp(1.0 / std::sqrt(rg(i))) : 1.0;
    sf.A = da.asDiagonal() * sf.A * dc.asDiagonal();
    sf.G = dg.asDiagonal() * sf.G * dc.asDiagonal();
    sc.E = sc.E.cwiseProduct(dc);
    sc.D = sc.D.cwiseProduct(da);
    sc.F = sc.F.cwiseProduct(dg);
  }
  sf.c = sf.c.cwiseProduct(sc.E);
  sf.b = sf.b.cwiseProduct(sc.D);
  sf.h = sf.h.cwiseProduct(sc.F);
  return sc;
}

/// Nesterov-Todd scaling of the product cone at (s, z).
struct NtScaling
{
  Vec w_orth;
  std::vector<double> eta;
  std::vector<Vec> wbar;
};

// Rotated blocks are the image of a second-order cone under the symmetric
// orthogonal map T(c0, c1, r) = ((c0 + c1)/sqrt2, (c0 - c1)/sqrt2, r).
// Determinants and step lengths are evaluated in the stored coordinates;
// the NT algebra runs in standard coordinates through T.
struct ConeOps
{
  int l = 0;
  std::vector<int> start, dim;
  std::vector<char> rot;

  int m() const { return start.empty() ? l : start.back() + dim.back(); }

  static void flip(Eigen::Ref<Vec> u)
  {
    const double a = u(0), b = u(1);
    u(0) = (a + b) * M_SQRT1_2;
    u(1) = (a - b) * M_SQRT1_2;
  }

  Vec standard(std::size_t k, const Eigen::Ref<const Vec>& u) const
  {
    Vec out = u;
    if (rot[k]) flip(out);
    return out;
  }

  // u' J u in the block's own coordinates
  double det(std::size_t k, const Eigen::Ref<const Vec>& u) const
  {
    const Eigen::Index n = u.size();
    if (rot[k]) return 2.0 * u(0) * u(1) - u.tail(n - 2).squaredNorm();
    return u(0) * u(0) - u.tail(n - 1).squaredNorm();
  }

  // u' J v
  double jdot(std::size_t k, const Eigen::Ref<const Vec>& u, const Eigen::Ref<const Vec>& v) const
  {
    const Eigen::Index n = u.size();
    if (rot[k]) return u(0) * v(1) + u(1) * v(0) - u.tail(n - 2).dot(v.tail(n - 2));
    return u(0) * v(0) - u.tail(n - 1).dot(v.tail(n - 1));
  }

  bool leading_positive(std::size_t k, const Eigen::Ref<const Vec>& u) const
  {
    return rot[k] ? u(0) > 0.0 && u(1) > 0.0 : u(0) > 0.0;
  }

  // J u in the block's own coordinates
  Vec jmul(std::size_t k, const Eigen::Ref<const Vec>& u) const
  {
    Vec out = -u;
    if (rot[k]) {
      out(0) = u(1);
      out(1) = u(0);
    } else {
      out(0) = u(0);
    }
    return out;
  }

  Vec unit(std::size_t k) const
  {
    Vec e = Vec::Zero(dim[k]);
    if (rot[k]) {
      e(0) = e(1) = M_SQRT1_2;
    } else {
      e(0) = 1.0;
    }
    return e;
  }

  // Each cone block is scaled by W = eta (2 v v' - J) with v' J v = 1,
  // evaluated in the block's own coordinates.
  // returns false when (s, z) is not strictly interior
  bool nt_scaling(const Vec& s, const Vec& z, NtScaling& nt) const
  {
    nt.w_orth.resize(l);
    for (int i = 0; i < l; ++i) {
      if (!(s(i) > 0.0) || !(z(i) > 0.0)) return false;
      nt.w_orth(i) = std::sqrt(s(i) / z(i));
    }
    nt.eta.resize(start.size());
    nt.wbar.resize(start.size());
    for (std::size_t k = 0; k < start.size(); ++k) {
      auto sk = s.segment(start[k], dim[k]);
      auto zk = z.segment(start[k], dim[k]);
      double sres = det(k, sk), zres = det(k, zk);
      if (!(sres > 0.0) || !(zres > 0.0) || !leading_positive(k, sk) || !leading_positive(k, zk)) return false;
      Vec sn = sk / std::sqrt(sres);
      Vec zn = zk / std::sqrt(zres);
      double gamma = std::sqrt(0.5 * (1.0 + sn.dot(zn)));
      Vec w = (sn + jmul(k, zn)) / (2.0 * gamma);
      Vec e = unit(k);
      nt.wbar[k] = (w + e) / std::sqrt(2.0 * (e.dot(w) + 1.0));
      nt.eta[k] = std::pow(sres / zres, 0.25);
    }
    return true;
  }

  Vec apply_w(const NtScaling& nt, const Vec& v) const
  {
    Vec out(v.size());
    out.head(l) = nt.w_orth.cwiseProduct(v.head(l));
    for (std::size_t k = 0; k < start.size(); ++k) {
      const Vec& w = nt.wbar[k];
      auto vk = v.segment(start[k], dim[k]);
      out.segment(start[k], dim[k]) = nt.eta[k] * (2.0 * w.dot(vk) * w - jmul(k, vk));
    }
    return out;
  }

  Vec apply_winv(const NtScaling& nt, const Vec& v) const
  {
    Vec out(v.size());
    out.head(l) = v.head(l).cwiseQuotient(nt.w_orth);
    for (std::size_t k = 0; k < start.size(); ++k) {
      Vec jw = jmul(k, nt.wbar[k]);
      auto vk = v.segment(start[k], dim[k]);
      out.segment(start[k], dim[k]) = (2.0 * jw.dot(vk) * jw - jmul(k, vk)) / nt.eta[k];
    }
    return out;
  }

  // dense W^2 of cone block k
  Eigen::MatrixXd w_squared(const NtScaling& nt, std::size_t k) const
  {
    const Vec& w = nt.wbar[k];
    const int d = dim[k];
    Eigen::MatrixXd Jm = Eigen::MatrixXd::Zero(d, d);
    for (int c = 0; c < d; ++c) Jm.col(c) = jmul(k, Vec::Unit(d, c));
    Eigen::MatrixXd M = 2.0 * w * w.transpose() - Jm;
    return nt.eta[k] * nt.eta[k] * (M * M);
  }

  Vec identity() const
  {
    Vec e = Vec::Zero(m());
    e.head(l).setOnes();
    for (std::size_t k = 0; k < start.size(); ++k) {
      if (rot[k]) {
        e(start[k]) = M_SQRT1_2;
        e(start[k] + 1) = M_SQRT1_2;
      } else {
        e(start[k]) = 1.0;
      }
    }
    return e;
  }

  Vec product(const Vec& u, const Vec& v) const
  {
    Vec out(u.size());
    out.head(l) = u.head(l).cwiseProduct(v.head(l));
    for (std::size_t k = 0; k < start.size(); ++k) {
      Vec uk = standard(k, u.segment(start[k], dim[k]));
      Vec vk = standard(k, v.segment(start[k], dim[k]));
      auto ok = out.segment(start[k], dim[k]);
      const int d = dim[k];
      ok(0) = uk.dot(vk);
      ok.tail(d - 1) = uk(0) * vk.tail(d - 1) + vk(0) * uk.tail(d - 1);
      if (rot[k]) flip(ok);
    }
    return out;
  }

  // x with u o x = d
  Vec divide(const Vec& u, const Vec& d) const
  {
    Vec out(u.size());
    out.head(l) = d.head(l).cwiseQuotient(u.head(l));
    for (std::size_t k = 0; k < start.size(); ++k) {
      const double dt = det(k, u.segment(start[k], dim[k]));
      Vec uk = standard(k, u.segment(start[k], dim[k]));
      Vec dk = standard(k, d.segment(start[k], dim[k]));
      auto ok = out.segment(start[k], dim[k]);
      const int n = dim[k];
      double x0 = (uk(0) * dk(0) - uk.tail(n - 1).dot(dk.tail(n - 1))) / dt;
      ok(0) = x0;
      ok.tail(n - 1) = (dk.tail(n - 1) - x0 * uk.tail(n - 1)) / uk(0);
      if (rot[k]) flip(ok);
    }
    return out;
  }

  // largest a with u + a d in the cone (u interior); +inf if unbounded
  double max_step(const Vec& u, const Vec& d) const
  {
    double alpha = std::numeric_limits<double>::infinity();
    for (int i = 0; i < l; ++i)
      if (d(i) < 0.0) alpha = std::min(alpha, -u(i) / d(i));
    for (std::size_t k = 0; k < start.size(); ++k) {
      auto uk = u.segment(start[k], dim[k]);
      auto dk = d.segment(start[k], dim[k]);
      const double a = det(k, dk);
      if (a >= 0.0 && (rot[k] ? dk(0) >= 0.0 && dk(1) >= 0.0 : dk(0) >= 0.0)) continue;
      const double b = jdot(k, uk, dk);
      const double c = det(k, uk);
      // smallest positive root of a t^2 + 2 b t + c
      double r;
      if (a < 0.0) {
        r = c / (std::sqrt(std::max(0.0, b * b - a * c)) - b);
      } else {
        // d points away from the cone along one sheet only
        double disc = b * b - a * c;
        r = (b < 0.0 && disc >= 0.0) ? c / (std::sqrt(disc) - b) : std::numeric_limits<double>::infinity();
      }
      if (!(r >= 0.0)) r = 0.0;
      alpha = std::min(alpha, r);
    }
    return alpha;
  }
};

// Sparse LDL' of a quasi-definite matrix with a fill-reducing ordering,
// carried out in extended precision. Pivots whose sign disagrees with the
// expected one, or that are too small, are replaced by +-delta; iterative
// refinement against the unperturbed matrix absorbs the change.
class QuasiDefiniteLdl
{
 public:
  using Real = long double;
  using RVec = std::vector<Real>;

  void analyze(const SpMat& lower)
  {
    n_ = static_cast<int>(lower.rows());
    SpMat full = lower.selfadjointView<Eigen::Lower>();
    Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> pinv;
    Eigen::AMDOrdering<int>()(full, pinv);
    perm_ = pinv.inverse();
  }

  // `sign` is +1 or -1 per original row.
  void factorize(const SpMat& lower, const std::vector<int>& sign, double eps, double delta)
  {
    SpMat up(n_, n_);
    up.selfadjointView<Eigen::Upper>() = lower.selfadjointView<Eigen::Lower>().twistedBy(perm_);
    up.makeCompressed();
    const int* Ap = up.outerIndexPtr();
    const int* Ai = up.innerIndexPtr();
    const double* Ax = up.valuePtr();

    std::vector<int> parent(n_), flag(n_), lnz(n_, 0);
    for (int k = 0; k < n_; ++k) {
      parent[k] = -1;
      flag[k] = k;
      for (int p = Ap[k]; p < Ap[k + 1]; ++p)
        for (int i = Ai[p]; i < k && flag[i] != k; i = parent[i]) {
          if (parent[i] == -1) parent[i] = k;
          ++lnz[i];
          flag[i] = k;
        }
    }
    Lp_.assign(n_ + 1, 0);
    for (int k = 0; k < n_; ++k) Lp_[k + 1] = Lp_[k] + lnz[k];
    Li_.assign(Lp_[n_], 0);
    Lx_.assign(Lp_[n_], 0.0L);
    D_.assign(n_, 0.0L);

    std::vector<int> psign(n_);
    for (int i = 0; i < n_; ++i) psign[perm_.indices()(i)] = sign[i];

    RVec y(n_, 0.0L);
    std::vector<int> pattern(n_);
    std::fill(lnz.begin(), lnz.end(), 0);
    for (int k = 0; k < n_; ++k) {
      int top = n_;
      flag[k] = k;
      for (int p = Ap[k]; p < Ap[k + 1]; ++p) {
        int i = Ai[p];
        y[i] += Ax[p];
        int len = 0;
        for (; flag[i] != k; i = parent[i]) {
          pattern[len++] = i;
          flag[i] = k;
        }
        while (len > 0) pattern[--top] = pattern[--len];
      }
      Real d = y[k];
      y[k] = 0.0L;
      for (; top < n_; ++top) {
        const int i = pattern[top];
        const Real yi = y[i];
        y[i] = 0.0L;
        const int end = Lp_[i] + lnz[i];
        for (int p = Lp_[i]; p < end; ++p) y[Li_[p]] -= Lx_[p] * yi;
        const Real lki = yi / D_[i];
        d -= lki * yi;
        Li_[end] = k;
        Lx_[end] = lki;
        ++lnz[i];
      }
      if (!(psign[k] * d > eps)) d = psign[k] * static_cast<Real>(delta);
      D_[k] = d;
    }
  }

  RVec solve(const RVec& rhs) const
  {
    RVec b(n_);
    for (int i = 0; i < n_; ++i) b[perm_.indices()(i)] = rhs[i];
    for (int j = 0; j < n_; ++j)
      for (int p = Lp_[j]; p < Lp_[j + 1]; ++p) b[Li_[p]] -= Lx_[p] * b[j];
    for (int j = 0; j < n_; ++j) b[j] /= D_[j];
    for (int j = n_ - 1; j >= 0; --j)
      for (int p = Lp_[j]; p < Lp_[j + 1]; ++p) b[j] -= Lx_[p] * b[Li_[p]];
    RVec out(n_);
    for (int i = 0; i < n_; ++i) out[i] = b[perm_.indices()(i)];
    return out;
  }

  bool finite() const
  {
    for (Real d : D_)
      if (!std::isfinite(d)) return false;
    for (Real x : Lx_)
      if (!std::isfinite(x)) return false;
    return true;
  }

 private:
  int n_ = 0;
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> perm_;
  std::vector<int> Lp_, Li_;
  RVec Lx_, D_;
};

class HsdSolver
{
 public:
  HsdSolver(const StandardForm& sf, const Scaling& sc, const StandardForm& orig,
            const SolverSettings& settings)
      : sf_(sf), sc_(sc), orig_(orig), set_(settings)
  {
    ops_.l = sf.l;
    ops_.start = sf.soc_start;
    ops_.dim = sf.soc_dim;
    ops_.rot = sf.soc_rot;
    n_ = sf.n;
    p_ = static_cast<int>(sf.A.rows());
    m_ = sf.m();
  }

  struct Iterate
  {
    Vec x, y, z, s;
    double tau = 1.0, kappa = 1.0;
  };

  SolveReport run(Iterate& out)
  {
    Iterate it = initial_point();
    SolveReport rep;
    rep.solve_seed = set_.seed;
    reg_ = set_.static_reg;
    build_pattern();
    int stalls = 0;
    for (int k = 0;; ++k) {
      rep.iterations = k;
      Measures ms = measure(it);
      rep.primal_residual = ms.pres;
      rep.dual_residual = ms.dres;
      rep.duality_gap = ms.gap;
      rep.primal_objective = ms.pcost;
      rep.dual_objective = ms.dcost;
      if (!ms.finite) {
        rep.status = SolveStatus::numerical_failure;
        break;
      }
      if (ms.pres <= set_.tol_p && ms.dres <= set_.tol_d && ms.gap <= set_.tol_gap) {
        rep.status = SolveStatus::optimal;
        break;
      }
      if (it.kappa > it.tau) {
        if (ms.pinf_res <= set_.tol_p) {
          rep.status = SolveStatus::primal_infeasible;
          break;
        }
        if (ms.dinf_res <= set_.tol_d) {
          rep.status = SolveStatus::dual_infeasible;
          break;
        }
      }
      if (k >= set_.max_iter) {
        rep.status = SolveStatus::iteration_limit;
        break;
      }
      double alpha = 0.0;
      if (!step(it, alpha)) {
        rep.status = SolveStatus::numerical_failure;
        break;
      }
      stalls = alpha < 1e-10 ? stalls + 1 : 0;
      if (stalls >= 5) {
        rep.status = SolveStatus::numerical_failure;
        ++rep.iterations;
        break;
      }
    }
    out = it;
    return rep;
  }

  // unscaled, un-homogenized quantities
  void recover(const Iterate& it, Vec& x, Vec& y, Vec& z, Vec& s, double div) const
  {
    x = sc_.E.cwiseProduct(it.x) / div;
    y = sc_.D.cwiseProduct(it.y) / div;
    z = sc_.F.cwiseProduct(it.z) / div;
    s = it.s.cwiseQuotient(sc_.F) / div;
  }

 private:
  struct Measures
  {
    double pres, dres, gap, pcost, dcost, pinf_res, dinf_res;
    bool finite;
  };

  Iterate initial_point() const
  {
    Iterate it;
    it.x = Vec::Zero(n_);
    it.y = Vec::Zero(p_);
    it.s = ops_.identity();
    it.z = ops_.identity();
    if (set_.seed != 0) {
      std::mt19937_64 rng(set_.seed);
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      for (int j = 0; j < n_; ++j) it.x(j) = 0.1 * u(rng);
      for (int i = 0; i < p_; ++i) it.y(i) = 0.1 * u(rng);
      for (int i = 0; i < ops_.l; ++i) {
        it.s(i) = 1.0 + 0.5 * u(rng);
        it.z(i) = 1.0 + 0.5 * u(rng);
      }
      for (std::size_t k = 0; k < ops_.start.size(); ++k) {
        const int d = ops_.dim[k];
        for (Vec* v : {&it.s, &it.z}) {
          auto seg = v->segment(ops_.start[k], d);
          seg(0) = 1.0 + 0.5 * u(rng);
          for (int c = 1; c < d; ++c) seg(c) = 0.3 * u(rng) / std::sqrt(static_cast<double>(d - 1));
          if (ops_.rot[k]) ConeOps::flip(seg);
        }
      }
      it.tau = 1.0 + 0.2 * u(rng);
      it.kappa = 1.0 + 0.2 * u(rng);
    }
    return it;
  }

  Measures measure(const Iterate& it) const
  {
    Measures ms{};
    Vec x, y, z, s;
    recover(it, x, y, z, s, it.tau);
    const auto& o = orig_;
    double nb = o.b.size() ? o.b.lpNorm<Eigen::Infinity>() : 0.0;
    double nh = o.h.size() ? o.h.lpNorm<Eigen::Infinity>() : 0.0;
    double nc = o.c.size() ? o.c.lpNorm<Eigen::Infinity>() : 0.0;
    auto inf = [](const Vec& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; };
    double pe = inf(o.A * x - o.b) / (1.0 + nb);
    double pc = inf(o.G * x + s - o.h) / (1.0 + nh);
    ms.pres = std::max(pe, pc);
    Vec rd = o.c;
    if (p_) rd += o.A.transpose() * y;
    if (m_) rd += o.G.transpose() * z;
    ms.dres = inf(rd) / (1.0 + nc);
    ms.pcost = o.c.dot(x);
    ms.dcost = -o.b.dot(y) - o.h.dot(z);
    ms.gap = std::max(0.0, s.dot(z));

    // certificates from the unnormalized ray
    Vec xr, yr, zr, sr;
    recover(it, xr, yr, zr, sr, 1.0);
    double bz = o.b.dot(yr) + o.h.dot(zr);
    Vec aty = Vec::Zero(n_);
    if (p_) aty += o.A.transpose() * yr;
    if (m_) aty += o.G.transpose() * zr;
    ms.pinf_res = bz < 0.0 ? inf(aty) / -bz : std::numeric_limits<double>::infinity();
    double cx = o.c.dot(xr);
    ms.dinf_res = cx < 0.0 ? std::max(inf(o.A * xr), inf(o.G * xr + sr)) / -cx
                           : std::numeric_limits<double>::infinity();
    ms.finite = std::isfinite(ms.pres) && std::isfinite(ms.dres) && std::isfinite(ms.gap) &&
                std::isfinite(it.tau) && std::isfinite(it.kappa);
    return ms;
  }

  // K = [[reg I, A', G'], [A, -reg I, 0], [G, 0, -W^2 - reg I]], lower triangle
  void build_pattern()
  {
    const int N = n_ + p_ + m_;
    std::vector<Eigen::Triplet<double>> t;
    for (int j = 0; j < n_; ++j) t.emplace_back(j, j, 1.0);
    for (int j = 0; j < n_; ++j) {
      for (SpMat::InnerIterator a(sf_.A, j); a; ++a) t.emplace_back(n_ + a.row(), j, a.value());
      for (SpMat::InnerIterator g(sf_.G, j); g; ++g) t.emplace_back(n_ + p_ + g.row(), j, g.value());
    }
    for (int i = 0; i < p_ + m_; ++i) t.emplace_back(n_ + i, n_ + i, -1.0);
    for (std::size_t k = 0; k < ops_.start.size(); ++k)
      for (int r = 1; r < ops_.dim[k]; ++r)
        for (int c = 0; c < r; ++c)
          t.emplace_back(n_ + p_ + ops_.start[k] + r, n_ + p_ + ops_.start[k] + c, 1.0);
    K_.resize(N, N);
    K_.setFromTriplets(t.begin(), t.end());
    K_.makeCompressed();
    ldl_.analyze(K_);
    sign_.assign(static_cast<std::size_t>(N), -1);
    std::fill(sign_.begin(), sign_.begin() + n_, 1);
  }

  bool factor(const NtScaling& nt)
  {
    fill_values(nt);
    ldl_.factorize(K_, sign_, kPivotEps, kPivotDelta);
    return ldl_.finite();
  }

  void fill_values(const NtScaling& nt)
  {
    const int off = n_ + p_;
    for (int col = 0; col < K_.outerSize(); ++col) {
      for (SpMat::InnerIterator e(K_, col); e; ++e) {
        const int r = static_cast<int>(e.row());
        if (r == col) {
          if (r < n_)
            e.valueRef() = reg_;
          else if (r < off)
            e.valueRef() = -reg_;
          else
            e.valueRef() = 0.0;  // filled below
        }
      }
    }
    for (int i = 0; i < ops_.l; ++i)
      K_.coeffRef(off + i, off + i) = -nt.w_orth(i) * nt.w_orth(i) - reg_;
    for (std::size_t k = 0; k < ops_.start.size(); ++k) {
      Eigen::MatrixXd W2 = ops_.w_squared(nt, k);
      const int s0 = off + ops_.start[k];
      for (int r = 0; r < ops_.dim[k]; ++r)
        for (int c = 0; c <= r; ++c) K_.coeffRef(s0 + r, s0 + c) = -W2(r, c) - (r == c ? reg_ : 0.0);
    }
  }

  // rhs - K u with the regularization taken back out, in extended precision
  QuasiDefiniteLdl::RVec kkt_residual(const QuasiDefiniteLdl::RVec& rhs, const QuasiDefiniteLdl::RVec& u) const
  {
    QuasiDefiniteLdl::RVec r = rhs;
    for (int col = 0; col < K_.outerSize(); ++col) {
      for (SpMat::InnerIterator e(K_, col); e; ++e) {
        const int row = static_cast<int>(e.row());
        long double v = e.value();
        if (row == col) {
          v -= sign_[row] * reg_;
          r[row] -= v * u[col];
        } else {
          r[row] -= v * u[col];
          r[col] -= v * u[row];
        }
      }
    }
    return r;
  }

  Vec kkt_solve(const Vec& rhs) const
  {
    using RVec = QuasiDefiniteLdl::RVec;
    const int N = static_cast<int>(rhs.size());
    RVec b(N);
    for (int i = 0; i < N; ++i) b[i] = rhs(i);
    RVec u = ldl_.solve(b);
    auto norm = [](const RVec& v) {
      long double m = 0.0L;
      for (long double x : v) m = std::max(m, std::abs(x));
      return m;
    };
    const long double base = norm(b);
    long double rn = norm(kkt_residual(b, u));
    for (int pass = 0; pass < set_.refine_passes; ++pass) {
      if (!(rn > 1e-18L * (1.0L + base))) break;
      RVec du = ldl_.solve(kkt_residual(b, u));
      RVec trial = u;
      for (int i = 0; i < N; ++i) trial[i] += du[i];
      const long double tn = norm(kkt_residual(b, trial));
      if (!(tn < rn)) break;
      u = std::move(trial);
      rn = tn;
    }
    Vec out(N);
    for (int i = 0; i < N; ++i) out(i) = static_cast<double>(u[i]);
    return out;
  }

  struct Direction
  {
    Vec dx, dy, dz, ds;
    double dtau = 0.0, dkappa = 0.0;
  };

  Direction direction(const Iterate& it, const NtScaling& nt, const Vec& lambda, const Vec& u2,
                      double f, const Vec& F1, const Vec& F2, const Vec& F3, double F4,
                      const Vec& ds, double dk) const
  {
    Vec t = ops_.divide(lambda, ds);
    Vec wt = ops_.apply_w(nt, t);
    Vec rhs(n_ + p_ + m_);
    rhs.head(n_) = -f * F1;
    rhs.segment(n_, p_) = -f * F2;
    rhs.tail(m_) = -f * F3 - wt;
    Vec u1 = kkt_solve(rhs);
    auto dot3 = [&](const Vec& u) {
      return sf_.c.dot(u.head(n_)) + sf_.b.dot(u.segment(n_, p_)) + sf_.h.dot(u.tail(m_));
    };
    double num = -f * F4 - dk / it.tau - dot3(u1);
    double den = dot3(u2) - it.kappa / it.tau;
    Direction d;
    d.dtau = num / den;
    Vec u = u1 + d.dtau * u2;
    d.dx = u.head(n_);
    d.dy = u.segment(n_, p_);
    d.dz = u.tail(m_);
    d.ds = ops_.apply_w(nt, t - ops_.apply_w(nt, d.dz));
    d.dkappa = (dk - it.kappa * d.dtau) / it.tau;
    return d;
  }

  double max_step(const Iterate& it, const NtScaling& nt, const Vec& lambda, const Direction& d) const
  {
    double a = std::min(ops_.max_step(lambda, ops_.apply_winv(nt, d.ds)),
                        ops_.max_step(lambda, ops_.apply_w(nt, d.dz)));
    if (d.dtau < 0.0) a = std::min(a, -it.tau / d.dtau);
    if (d.dkappa < 0.0) a = std::min(a, -it.kappa / d.dkappa);
    return a;
  }

  bool step(Iterate& it, double& alpha_out)
  {
    NtScaling nt;
    if (!ops_.nt_scaling(it.s, it.z, nt)) return false;
    Vec lambda = ops_.apply_w(nt, it.z);
    if (!factor(nt)) return false;

    Vec F1 = sf_.c * it.tau;
    if (p_) F1 += sf_.A.transpose() * it.y;
    if (m_) F1 += sf_.G.transpose() * it.z;
    Vec F2 = (p_ ? Vec(sf_.A * it.x) : Vec::Zero(0)) - sf_.b * it.tau;
    Vec F3 = (m_ ? Vec(sf_.G * it.x) : Vec::Zero(0)) + it.s - sf_.h * it.tau;
    double F4 = sf_.c.dot(it.x) + sf_.b.dot(it.y) + sf_.h.dot(it.z) + it.kappa;

    Vec rhs2(n_ + p_ + m_);
    rhs2.head(n_) = -sf_.c;
    rhs2.segment(n_, p_) = sf_.b;
    rhs2.tail(m_) = sf_.h;
    Vec u2 = kkt_solve(rhs2);

    const double mu = (it.s.dot(it.z) + it.tau * it.kappa) / (ops_.l + static_cast<double>(ops_.start.size()) + 1.0);
    Vec ll = ops_.product(lambda, lambda);

    // predictor
    Direction aff = direction(it, nt, lambda, u2, 1.0, F1, F2, F3, F4, -ll, -it.tau * it.kappa);
    double a_aff = std::min(1.0, max_step(it, nt, lambda, aff));
    double sigma = std::clamp(std::pow(1.0 - a_aff, 3), 0.0, 1.0);

    // corrector
    Vec corr = ops_.product(ops_.apply_winv(nt, aff.ds), ops_.apply_w(nt, aff.dz));
    Vec ds = sigma * mu * ops_.identity() - ll - corr;
    double dk = sigma * mu - it.tau * it.kappa - aff.dtau * aff.dkappa;
    Direction d = direction(it, nt, lambda, u2, 1.0 - sigma, F1, F2, F3, F4, ds, dk);
    double amax = max_step(it, nt, lambda, d);
    double alpha = std::min(1.0, set_.step_fraction * amax);
    if (!std::isfinite(alpha) || alpha < 0.0) return false;

    it.x += alpha * d.dx;
    it.y += alpha * d.dy;
    it.z += alpha * d.dz;
    it.s += alpha * d.ds;
    it.tau += alpha * d.dtau;
    it.kappa += alpha * d.dkappa;
    alpha_out = alpha;
    return it.tau > 0.0 && it.kappa > 0.0 && it.x.allFinite() && it.z.allFinite() && it.s.allFinite();
  }

  const StandardForm& sf_;
  const Scaling& sc_;
  const StandardForm& orig_;
  SolverSettings set_;
  ConeOps ops_;
  int n_ = 0, p_ = 0, m_ = 0;
  double reg_ = 1e-8;
  SpMat K_;
  std::vector<int> sign_;
  QuasiDefiniteLdl ldl_;
  static constexpr double kPivotEps = 1e-13;
  static constexpr double kPivotDelta = 2e-7;
};

}  // namespace detail

/// Solves a cone program. Deterministic for identical (program, settings).
inline SolveResult solve(const ConeProgram& prog, const SolverSettings& settings = {})
{
  prog.validate();
  SolveResult res;
  res.report.solve_seed = settings.seed;

  ConeProgram reduced;
  Presolution ps;
  if (settings.presolve) {
    try {
      std::tie(reduced, ps) = presolve(prog);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::proven_infeasible) throw;
      res.report.status = SolveStatus::primal_infeasible;
      res.x.assign(static_cast<std::size_t>(prog.n_vars), 0.0);
      res.y.assign(static_cast<std::size_t>(prog.n_rows()), 0.0);
      res.lower_dual.assign(static_cast<std::size_t>(prog.n_vars), 0.0);
      res.upper_dual.assign(static_cast<std::size_t>(prog.n_vars), 0.0);
      res.cone_duals.resize(prog.cones.size());
      for (std::size_t k = 0; k < prog.cones.size(); ++k) res.cone_duals[k].assign(prog.cones[k].coords.size(), 0.0);
      return res;
    }
  } else {
    reduced = prog;
    ps.n_orig = prog.n_vars;
    ps.rows_orig = prog.n_rows();
    ps.fixed.assign(static_cast<std::size_t>(prog.n_vars), std::nullopt);
    for (int j = 0; j < prog.n_vars; ++j) ps.var_map.push_back(j);
    for (int i = 0; i < prog.n_rows(); ++i) ps.row_map.push_back(i);
    for (std::size_t k = 0; k < prog.cones.size(); ++k) {
      ps.cone_map.push_back(static_cast<int>(k));
      std::vector<int> c(prog.cones[k].coords.size());
      for (std::size_t i = 0; i < c.size(); ++i) c[i] = static_cast<int>(i);
      ps.coord_map.push_back(std::move(c));
    }
  }

  detail::StandardForm orig = detail::compile(reduced);
  detail::StandardForm scaled = orig;
  detail::Scaling sc = detail::equilibrate(scaled, settings.equilibrate);
  detail::HsdSolver solver(scaled, sc, orig, settings);
  detail::HsdSolver::Iterate it;
  res.report = solver.run(it);

  Eigen::VectorXd x, y, z, s;
  double div = it.tau;
  if (res.report.status == SolveStatus::primal_infeasible) {
    Eigen::VectorXd xr, yr, zr, sr;
    solver.recover(it, xr, yr, zr, sr, 1.0);
    div = -(orig.b.dot(yr) + orig.h.dot(zr));
  } else if (res.report.status == SolveStatus::dual_infeasible) {
    Eigen::VectorXd xr, yr, zr, sr;
    solver.recover(it, xr, yr, zr, sr, 1.0);
    div = -orig.c.dot(xr);
  }
  solver.recover(it, x, y, z, s, div);

  std::vector<double> xr(x.data(), x.data() + x.size());
  std::vector<double> yr(y.data(), y.data() + y.size());
  res.x = ps.restore_x(xr);
  res.y = ps.restore_y(yr);
  if (res.report.status == SolveStatus::primal_infeasible) {
    // the certificate lives in y/z; x carries no meaning
    std::fill(res.x.begin(), res.x.end(), 0.0);
  }

  res.lower_dual.assign(static_cast<std::size_t>(prog.n_vars), 0.0);
  res.upper_dual.assign(static_cast<std::size_t>(prog.n_vars), 0.0);
  for (int r = 0; r < orig.l; ++r) {
    const auto& o = orig.row_origin[r];
    if (o.kind == detail::GRowOrigin::lower_bound) res.lower_dual[ps.var_map[o.index]] = z(r);
    if (o.kind == detail::GRowOrigin::upper_bound) res.upper_dual[ps.var_map[o.index]] = z(r);
  }
  res.cone_duals.resize(prog.cones.size());
  for (std::size_t k = 0; k < prog.cones.size(); ++k) res.cone_duals[k].assign(prog.cones[k].coords.size(), 0.0);
  for (std::size_t k = 0; k < reduced.cones.size(); ++k) {
    const auto& rows = orig.block_rows[k];
    std::vector<double> zeta(rows.size());
    for (std::size_t c = 0; c < rows.size(); ++c) zeta[c] = z(rows[c]);
    if (reduced.cones[k].kind == ConeKind::rsoc)
      for (std::size_t c = 2; c < zeta.size(); ++c) zeta[c] *= std::sqrt(2.0);
    auto& dst = res.cone_duals[ps.cone_map[k]];
    for (std::size_t c = 0; c < zeta.size(); ++c) dst[ps.coord_map[k][c]] = zeta[c];
  }
  res.report.primal_objective += reduced.objective_constant;
  res.report.dual_objective += reduced.objective_constant;
  return res;
}

}  // namespace dcflow

#endif  // DCFLOW_CONE_SOLVER_HPP_
