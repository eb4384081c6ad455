#ifndef DCFLOW_PRESOLVE_HPP_
#define DCFLOW_PRESOLVE_HPP_

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dcflow/cone_program.hpp"
#include "dcflow/error.hpp"

namespace dcflow
{

/// Maps a presolved program's solution back to the original indices.
struct Presolution
{
  int n_orig = 0;
  int rows_orig = 0;
  std::vector<int> var_map;  // reduced variable -> original variable
  std::vector<int> row_map;  // reduced row -> original row
  std::vector<std::optional<double>> fixed;  // per original variable
  std::vector<int> cone_map;  // reduced cone block -> original block
  std::vector<std::vector<int>> coord_map;  // reduced block coordinate -> original coordinate
  int folded_rows = 0;
  int dependent_rows = 0;

  std::vector<double> restore_x(const std::vector<double>& xr) const
  {
    std::vector<double> x(static_cast<std::size_t>(n_orig), 0.0);
    for (int j = 0; j < n_orig; ++j)
      if (fixed[j]) x[j] = *fixed[j];
    for (std::size_t k = 0; k < var_map.size(); ++k) x[var_map[k]] = xr[k];
    return x;
  }

  /// Folded and dropped rows get a zero multiplier.
  std::vector<double> restore_y(const std::vector<double>& yr) const
  {
    std::vector<double> y(static_cast<std::size_t>(rows_orig), 0.0);
    for (std::size_t k = 0; k < row_map.size(); ++k) y[row_map[k]] = yr[k];
    return y;
  }
};

namespace detail
{

inline double rel_tol(double v, double tol) { return tol * (1.0 + std::abs(v)); }

}  // namespace detail

/// Removes fixed variables, folds singleton equality rows into bounds and
/// drops linearly dependent rows. Throws ProvenInfeasible when a bound
/// interval becomes empty or a dropped row is inconsistent.
inline std::pair<ConeProgram, Presolution> presolve(const ConeProgram& prog)
{
  constexpr double kTol = 1e-9;
  prog.validate();
  const int n = prog.n_vars;
  const int m = prog.n_rows();

  auto infeasible = [](const std::string& what, long subject) {
    throw Error(ErrorCode::proven_infeasible, what, subject);
  };

  std::vector<std::optional<double>> lo = prog.lower, hi = prog.upper;
  std::vector<std::optional<double>> fixed(static_cast<std::size_t>(n));

  // merged row storage
  std::vector<std::map<int, double>> rows(static_cast<std::size_t>(m));
  for (const auto& t : prog.eq_entries) rows[t.row][t.col] += t.value;
  std::vector<double> rhs = prog.eq_rhs;
  std::vector<bool> row_alive(static_cast<std::size_t>(m), true);
  int folded = 0;

  auto fix = [&](int j, double value) {
    if (lo[j] && value < *lo[j] - detail::rel_tol(*lo[j], kTol))
      infeasible("fixed value below lower bound", j);
    if (hi[j] && value > *hi[j] + detail::rel_tol(*hi[j], kTol))
      infeasible("fixed value above upper bound", j);
    fixed[j] = value;
  };

  bool changed = true;
  while (changed) {
    changed = false;
    for (int j = 0; j < n; ++j) {
      if (fixed[j] || !lo[j] || !hi[j]) continue;
      double scale = std::max(std::abs(*lo[j]), std::abs(*hi[j]));
      if (*lo[j] > *hi[j] + kTol * (1.0 + scale)) infeasible("empty bound interval", j);
      if (*hi[j] - *lo[j] <= 1e-12 * (1.0 + scale)) {
        fixed[j] = *lo[j];
        changed = true;
      }
    }
    for (int i = 0; i < m; ++i) {
      if (!row_alive[i]) continue;
      double r = rhs[i];
      int live = -1, live_count = 0;
      for (const auto& [j, a] : rows[i]) {
        if (a == 0.0) continue;
        if (fixed[j]) {
          r -= a * *fixed[j];
        } else {
          live = j;
          ++live_count;
        }
      }
      if (live_count == 0) {
        if (std::abs(r) > detail::rel_tol(rhs[i], kTol)) infeasible("inconsistent equality row", i);
        row_alive[i] = false;
        ++folded;
        changed = true;
      } else if (live_count == 1) {
        fix(live, r / rows[i][live]);
        row_alive[i] = false;
        ++folded;
        changed = true;
      }
    }
  }

  Presolution ps;
  ps.n_orig = n;
  ps.rows_orig = m;
  ps.fixed = fixed;
  ps.folded_rows = folded;

  std::vector<int> new_index(static_cast<std::size_t>(n), -1);
  ConeProgram out;
  out.objective_constant = prog.objective_constant;
  for (int j = 0; j < n; ++j) {
    if (fixed[j]) {
      out.objective_constant += prog.objective[j] * *fixed[j];
      continue;
    }
    new_index[j] = out.add_variable(prog.var_names.empty() ? std::string() : prog.var_names[j],
                                    lo[j], hi[j], prog.objective[j]);
    ps.var_map.push_back(j);
  }

  // Independent subset of the surviving rows.
  std::vector<int> alive;
  for (int i = 0; i < m; ++i)
    if (row_alive[i]) alive.push_back(i);
  const int nr = out.n_vars;
  Eigen::MatrixXd R(static_cast<Eigen::Index>(alive.size()), nr);
  Eigen::VectorXd br(static_cast<Eigen::Index>(alive.size()));
  R.setZero();
  for (std::size_t k = 0; k < alive.size(); ++k) {
    int i = alive[k];
    double r = rhs[i];
    for (const auto& [j, a] : rows[i]) {
      if (fixed[j])
        r -= a * *fixed[j];
      else
        R(static_cast<Eigen::Index>(k), new_index[j]) += a;
    }
    br(static_cast<Eigen::Index>(k)) = r;
  }

  std::vector<int> keep;
  if (!alive.empty()) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(R.transpose());
    qr.setThreshold(1e-10);
    const auto rank = qr.rank();
    for (Eigen::Index c = 0; c < rank; ++c) keep.push_back(static_cast<int>(qr.colsPermutation().indices()(c)));
    std::sort(keep.begin(), keep.end());
    if (rank < static_cast<Eigen::Index>(alive.size())) {
      Eigen::MatrixXd K(nr, rank);
      Eigen::VectorXd bk(rank);
      for (Eigen::Index c = 0; c < rank; ++c) {
        K.col(c) = R.row(keep[c]).transpose();
        bk(c) = br(keep[c]);
      }
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> kqr(K);
      std::vector<bool> kept(alive.size(), false);
      for (int c : keep) kept[c] = true;
      for (std::size_t k = 0; k < alive.size(); ++k) {
        if (kept[k]) continue;
        Eigen::VectorXd row = R.row(static_cast<Eigen::Index>(k)).transpose();
        Eigen::VectorXd alpha = kqr.solve(row);
        double b_pred = alpha.dot(bk);
        double bk_scale = br(static_cast<Eigen::Index>(k));
        if (std::abs(b_pred - bk_scale) > 1e-7 * (1.0 + std::abs(bk_scale)))
          infeasible("inconsistent dependent equality row", alive[k]);
        ++ps.dependent_rows;
      }
    }
  }
  for (int c : keep) {
    std::vector<std::pair<int, double>> coefs;
    for (Eigen::Index j = 0; j < nr; ++j)
      if (R(c, j) != 0.0) coefs.emplace_back(static_cast<int>(j), R(c, j));
    out.add_row(coefs, br(c));
    ps.row_map.push_back(alive[c]);
  }

  for (std::size_t k = 0; k < prog.cones.size(); ++k) {
    const auto& cb = prog.cones[k];
    ConeBlock nb{cb.kind, {}, cb.label};
    std::vector<int> coords;
    bool all_constant = true;
    for (std::size_t c = 0; c < cb.coords.size(); ++c) {
      const auto& e = cb.coords[c];
      AffineExpr ne;
      ne.constant = e.constant;
      for (const auto& [j, a] : e.terms) {
        if (fixed[j])
          ne.constant += a * *fixed[j];
        else
          ne.terms.emplace_back(new_index[j], a);
      }
      if (!ne.terms.empty()) all_constant = false;
      if (cb.kind == ConeKind::nonneg && ne.terms.empty()) {
        if (ne.constant < -kTol) infeasible("constant cone coordinate is negative", static_cast<long>(k));
        continue;
      }
      nb.coords.push_back(std::move(ne));
      coords.push_back(static_cast<int>(c));
    }
    if (cb.kind == ConeKind::nonneg && nb.coords.empty()) continue;
    if (all_constant) {
      ConeProgram probe;
      probe.cones.push_back(nb);
      if (probe.cone_violation({}) > kTol) infeasible("constant cone block is violated", static_cast<long>(k));
      continue;
    }
    out.cones.push_back(std::move(nb));
    ps.cone_map.push_back(static_cast<int>(k));
    ps.coord_map.push_back(std::move(coords));
  }
  return {std::move(out), std::move(ps)};
}

}  // namespace dcflow

#endif  // DCFLOW_PRESOLVE_HPP_
