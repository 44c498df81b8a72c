#include "isearch/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <omp.h>

namespace isearch {

namespace {

double soft_threshold(double v, double kappa) {
  if (v > kappa) return v - kappa;
  if (v < -kappa) return v + kappa;
  return 0.0;
}

int pivot_cap(const SolverOptions& opts, Eigen::Index r, Eigen::Index m) {
  return opts.max_pivots > 0 ? opts.max_pivots : static_cast<int>(4 * (r + m));
}

// Accept a crossover vertex unless it is worse than the feasible ADMM point
// it started from (which cannot happen at a true optimum).
bool vertex_beats(const CrossoverResult& cr, double admm_objective) {
  return cr.ok && cr.objective <= admm_objective + 1e-9 * (1.0 + std::abs(admm_objective));
}

// Per-column bookkeeping shared by the reference and the batched kernels.
struct ColumnOutcome {
  Vector direction;
  double objective = 0.0;
  ColumnStats stats;
  bool done = false;
};

// Try to finish a column with a crossover from `c`. Returns true if the
// column is final (stationary vertex no worse than the ADMM point).
bool try_crossover(const DataMatrix& data, Eigen::Index target, const Vector& c,
                   double admm_objective, int max_pivots, ColumnOutcome& out) {
  CrossoverResult cr = vertex_crossover(data, target, c, max_pivots);
  out.stats.pivots += cr.pivots;
  const bool better = vertex_beats(cr, admm_objective);
  if (better && cr.objective < out.objective) {
    out.direction = cr.direction;
    out.objective = cr.objective;
  }
  if (better && cr.stationary) {
    out.stats.vertex_stationary = true;
    out.stats.degenerate = cr.degenerate;
    return true;
  }
  return false;
}

void finalize(ColumnOutcome& out) {
  out.stats.converged = out.stats.admm_converged || out.stats.vertex_stationary;
  out.done = true;
}

}  // namespace

void SolverOptions::validate() const {
  if (!(rho > 0.0)) throw InvalidSpec("admm.rho", "must be positive");
  if (!(feas_tol > 0.0)) throw InvalidSpec("admm.tol", "must be positive");
  if (!(dual_tol > 0.0)) throw InvalidSpec("admm.dual_tol", "must be positive");
  if (max_iters < 0) throw InvalidSpec("admm.max_iters", "must be >= 0");
  if (crossover_interval < 1) throw InvalidSpec("admm.crossover_interval", "must be >= 1");
  if (max_pivots < 0) throw InvalidSpec("admm.max_pivots", "must be >= 0");
  if (block_size < 1) throw InvalidSpec("admm.block_size", "must be >= 1");
}

nlohmann::json to_json(const SolverOptions& o) {
  return {{"rho", o.rho},
          {"tol", o.feas_tol},
          {"dual_tol", o.dual_tol},
          {"max_iters", o.max_iters},
          {"crossover", o.crossover},
          {"crossover_interval", o.crossover_interval},
          {"max_pivots", o.max_pivots},
          {"block_size", o.block_size}};
}

SolverOptions solver_options_from_json(const nlohmann::json& j) {
  SolverOptions o;
  if (!j.is_object()) throw InvalidSpec("admm", "expected an object");
  auto num = [&](const char* key, auto& dst) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    using T = std::decay_t<decltype(dst)>;
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw InvalidSpec(std::string("admm.") + key, "expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw InvalidSpec(std::string("admm.") + key, "expected an integer");
    } else {
      if (!v.is_number()) throw InvalidSpec(std::string("admm.") + key, "expected a number");
    }
    dst = v.get<T>();
  };
  num("rho", o.rho);
  num("tol", o.feas_tol);
  num("dual_tol", o.dual_tol);
  num("max_iters", o.max_iters);
  num("crossover", o.crossover);
  num("crossover_interval", o.crossover_interval);
  num("max_pivots", o.max_pivots);
  num("block_size", o.block_size);
  o.validate();
  return o;
}

nlohmann::json to_json(const ColumnStats& s) {
  return {{"iterations", s.iterations},
          {"primal_residual", s.primal_residual},
          {"dual_residual", s.dual_residual},
          {"admm_converged", s.admm_converged},
          {"pivots", s.pivots},
          {"vertex_stationary", s.vertex_stationary},
          {"degenerate", s.degenerate},
          {"converged", s.converged}};
}

nlohmann::json stats_to_json(const DirectionSet& dirs) {
  nlohmann::json cols = nlohmann::json::array();
  for (std::size_t i = 0; i < dirs.stats.size(); ++i) {
    nlohmann::json c = to_json(dirs.stats[i]);
    c["column"] = i;
    c["objective"] = dirs.objectives(static_cast<Eigen::Index>(i));
    cols.push_back(std::move(c));
  }
  return {{"columns", cols}, {"unconverged", dirs.unconverged_columns()}};
}

std::vector<std::size_t> DirectionSet::unconverged_columns() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < stats.size(); ++i) {
    if (!stats[i].converged) out.push_back(i);
  }
  return out;
}

Unconverged::Unconverged(DirectionResult last)
    : Error(ErrorKind::Unconverged,
            "direction search did not converge (primal residual " +
                std::to_string(last.stats.primal_residual) + ", dual residual " +
                std::to_string(last.stats.dual_residual) + ")"),
      last_(std::move(last)) {}

UnconvergedColumns::UnconvergedColumns(DirectionSet partial, std::vector<std::size_t> columns)
    : Error(ErrorKind::Unconverged,
            std::to_string(columns.size()) + " column(s) did not converge"),
      partial_(std::move(partial)),
      columns_(std::move(columns)) {}

DirectionFactor::DirectionFactor(const DataMatrix& data) : data_(data) {
  if (data.rows() < 1 || data.cols() < 1) throw InvalidInput("direction search: empty data");
  if (!data.allFinite()) throw InvalidInput("direction search: non-finite data");
  Eigen::MatrixXd gram = data * data.transpose();
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) {
    gram.diagonal().array() += 1e-10 * std::max(1.0, gram.trace() / gram.rows());
    llt.compute(gram);
    if (llt.info() != Eigen::Success) {
      throw InvalidInput("direction search: D D^T is not positive definite");
    }
  }
  gram_inv_data_ = llt.solve(data);
}

// ---------------------------------------------------------------------------
// Vertex crossover

CrossoverResult vertex_crossover(const DataMatrix& data, Eigen::Index target,
                                 const Vector& start, int max_pivots) {
  const Eigen::Index r = data.rows();
  const Eigen::Index m = data.cols();
  CrossoverResult res;

  // Basis rows: position 0 is the constraint column, positions 1..r-1 hold
  // columns k with d_k^T c = 0.
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(r), -1);
  std::vector<Eigen::Index> position(static_cast<std::size_t>(m), -1);
  basis[0] = target;
  position[static_cast<std::size_t>(target)] = 0;
  {
    const Vector p0 = data.transpose() * start;
    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return std::abs(p0(a)) < std::abs(p0(b));
    });
    Eigen::MatrixXd q(r, r);
    q.col(0) = data.col(target).normalized();
    Eigen::Index filled = 1;
    for (Eigen::Index k : order) {
      if (filled == r) break;
      if (k == target) continue;
      Vector v = data.col(k);
      const double norm = v.norm();
      if (norm == 0.0) continue;
      for (int pass = 0; pass < 2; ++pass) {
        v -= q.leftCols(filled) * (q.leftCols(filled).transpose() * v);
      }
      if (v.norm() <= 1e-8 * norm) continue;
      q.col(filled) = v.normalized();
      basis[static_cast<std::size_t>(filled)] = k;
      position[static_cast<std::size_t>(k)] = filled;
      ++filled;
    }
    if (filled < r) return res;  // data not of full row rank
  }

  auto basis_matrix = [&] {
    Eigen::MatrixXd bm(r, r);
    for (Eigen::Index i = 0; i < r; ++i) {
      bm.row(i) = data.col(basis[static_cast<std::size_t>(i)]).transpose();
    }
    return bm;
  };
  Eigen::MatrixXd w = basis_matrix().partialPivLu().inverse();
  if (!w.allFinite()) return res;
  res.ok = true;

  constexpr double kZeroTol = 1e-11;
  constexpr double kSlopeTol = 1e-9;
  Vector p(m), q(m), sigma(m), gvec(r);
  std::vector<std::pair<double, Eigen::Index>> breaks;
  std::vector<Eigen::Index> zeros;

  for (;;) {
    const Vector c = w.col(0);
    p.noalias() = data.transpose() * c;
    zeros.clear();
    for (Eigen::Index k = 0; k < m; ++k) {
      if (position[static_cast<std::size_t>(k)] >= 0) {
        sigma(k) = 0.0;
      } else if (std::abs(p(k)) <= kZeroTol) {
        sigma(k) = 0.0;
        zeros.push_back(k);
      } else {
        sigma(k) = p(k) > 0.0 ? 1.0 : -1.0;
      }
    }
    res.degenerate = !zeros.empty();
    if (r == 1) {
      res.stationary = true;
      break;
    }
    gvec.noalias() = data * sigma;
    // One-sided derivatives along +/- w_s for every basis position s >= 1.
    Vector beta = w.rightCols(r - 1).transpose() * gvec;
    Vector extra = Vector::Zero(r - 1);
    for (Eigen::Index k : zeros) {
      extra += (w.rightCols(r - 1).transpose() * data.col(k)).cwiseAbs();
    }
    Eigen::Index leave = -1;
    double slope = -kSlopeTol;
    double dir = 1.0;
    for (Eigen::Index s = 0; s < r - 1; ++s) {
      const double plus = 1.0 + beta(s) + extra(s);
      const double minus = 1.0 - beta(s) + extra(s);
      if (plus < slope) {
        slope = plus;
        leave = s + 1;
        dir = 1.0;
      }
      if (minus < slope) {
        slope = minus;
        leave = s + 1;
        dir = -1.0;
      }
    }
    if (leave < 0) {
      res.stationary = true;
      break;
    }
    if (res.pivots >= max_pivots) break;

    const Vector g = dir * w.col(leave);
    q.noalias() = data.transpose() * g;
    breaks.clear();
    for (Eigen::Index k = 0; k < m; ++k) {
      if (sigma(k) != 0.0 && p(k) * q(k) < 0.0) breaks.emplace_back(-p(k) / q(k), k);
    }
    std::sort(breaks.begin(), breaks.end());
    Eigen::Index enter = -1;
    for (const auto& [t, k] : breaks) {
      slope += 2.0 * std::abs(q(k));
      if (slope >= -1e-14) {
        enter = k;
        break;
      }
    }
    if (enter < 0) break;  // unbounded ray: cannot happen for full-rank data

    // Row `leave` of the basis matrix becomes d_enter^T (Sherman-Morrison).
    const Eigen::RowVectorXd h = data.col(enter).transpose() * w;
    const double denom = h(leave);
    if (std::abs(denom) < 1e-13) break;
    Eigen::RowVectorXd delta = h;
    delta(leave) -= 1.0;
    w -= (w.col(leave) / denom) * delta;
    position[static_cast<std::size_t>(basis[static_cast<std::size_t>(leave)])] = -1;
    basis[static_cast<std::size_t>(leave)] = enter;
    position[static_cast<std::size_t>(enter)] = leave;
    ++res.pivots;
    if (res.pivots % 32 == 0) w = basis_matrix().partialPivLu().inverse();
  }

  res.direction = w.col(0);
  res.objective = (data.transpose() * res.direction).lpNorm<1>();
  return res;
}

// ---------------------------------------------------------------------------
// Per-column (reference) ADMM

DirectionResult solve_direction_factored(const DirectionFactor& factor, Eigen::Index target,
                                         const SolverOptions& opts) {
  opts.validate();
  const DataMatrix& data = factor.data();
  const Eigen::Index r = data.rows();
  const Eigen::Index m = data.cols();
  if (target < 0 || target >= m) throw InvalidInput("solve_direction: target out of range");
  const double sqrt_m = std::sqrt(static_cast<double>(m));
  const auto& gid = factor.gram_inv_data();
  const Vector d = data.col(target);
  const Vector b = gid.col(target);
  const double s = d.dot(b);
  const double kappa = 1.0 / opts.rho;
  const int cap = pivot_cap(opts, r, m);

  Vector c = d;
  Vector z = data.transpose() * c;
  Vector u = Vector::Zero(m);
  Vector p(m), z_prev(m), a(r);

  ColumnOutcome out;
  out.direction = c;
  out.objective = z.lpNorm<1>();
  bool crossed_at_end = false;
  for (int it = 1; it <= opts.max_iters; ++it) {
    a.noalias() = gid * (z - u);
    c = a - ((d.dot(a) - 1.0) / s) * b;
    p.noalias() = data.transpose() * c;
    z_prev = z;
    z = (p + u).unaryExpr([kappa](double v) { return soft_threshold(v, kappa); });
    u += p - z;
    out.stats.iterations = it;

    const bool last = it == opts.max_iters;
    if (it % 10 == 0 || last) {
      out.stats.primal_residual = (p - z).norm() / sqrt_m;
      out.stats.dual_residual = opts.rho * (data * (z - z_prev)).norm() / sqrt_m;
      if (out.stats.primal_residual <= opts.feas_tol && out.stats.dual_residual <= opts.dual_tol) {
        out.stats.admm_converged = true;
      }
    }
    const double admm_obj = p.lpNorm<1>();
    if (out.stats.admm_converged || last) {
      out.direction = c;
      out.objective = admm_obj;
      if (opts.crossover) try_crossover(data, target, c, admm_obj, cap, out);
      crossed_at_end = true;
      break;
    }
    if (opts.crossover && it % opts.crossover_interval == 0) {
      out.direction = c;
      out.objective = admm_obj;
      if (try_crossover(data, target, c, admm_obj, cap, out)) {
        crossed_at_end = true;
        break;
      }
    }
  }
  if (!crossed_at_end && opts.crossover) {
    // max_iters == 0: crossover straight from the initial point.
    try_crossover(data, target, c, out.objective, cap, out);
  }
  finalize(out);
  return DirectionResult{std::move(out.direction), out.objective, out.stats};
}

DirectionResult solve_direction(const DirectionProblem& p, const SolverOptions& opts) {
  const DirectionFactor factor(p.data);
  DirectionResult res = solve_direction_factored(factor, p.target, opts);
  if (!res.stats.converged) throw Unconverged(std::move(res));
  return res;
}

namespace {

DirectionSet assemble(Eigen::Index r, std::vector<ColumnOutcome>& outcomes) {
  DirectionSet set;
  const auto m = static_cast<Eigen::Index>(outcomes.size());
  set.directions.resize(r, m);
  set.objectives.resize(m);
  set.stats.resize(outcomes.size());
  for (Eigen::Index i = 0; i < m; ++i) {
    auto& o = outcomes[static_cast<std::size_t>(i)];
    set.directions.col(i) = o.direction;
    set.objectives(i) = o.objective;
    set.stats[static_cast<std::size_t>(i)] = o.stats;
  }
  return set;
}

// Batched ADMM over the columns [first, first + count). All active columns
// advance together through GEMMs; a column leaves the block as soon as it
// converges, so its trajectory matches the per-column solver.
void solve_block(const DirectionFactor& factor, Eigen::Index first, Eigen::Index count,
                 const SolverOptions& opts, std::vector<ColumnOutcome>& outcomes) {
  const DataMatrix& data = factor.data();
  const auto& gid = factor.gram_inv_data();
  const Eigen::Index r = data.rows();
  const Eigen::Index m = data.cols();
  const double sqrt_m = std::sqrt(static_cast<double>(m));
  const double kappa = 1.0 / opts.rho;
  const int cap = pivot_cap(opts, r, m);

  std::vector<Eigen::Index> active(static_cast<std::size_t>(count));
  std::iota(active.begin(), active.end(), first);

  auto gather = [&](const Eigen::MatrixXd& src) {
    Eigen::MatrixXd out(src.rows(), static_cast<Eigen::Index>(active.size()));
    for (std::size_t i = 0; i < active.size(); ++i) {
      out.col(static_cast<Eigen::Index>(i)) = src.col(active[i]);
    }
    return out;
  };
  Eigen::MatrixXd dj = gather(data);
  Eigen::MatrixXd bj = gather(gid);
  Vector sj = (dj.array() * bj.array()).colwise().sum().transpose();
  Eigen::MatrixXd c = dj;
  Eigen::MatrixXd z = data.transpose() * c;
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(m, count);
  Eigen::MatrixXd w = z;
  Eigen::MatrixXd p(m, count), dz, a(r, count);

  for (Eigen::Index i = 0; i < count; ++i) {
    auto& o = outcomes[static_cast<std::size_t>(first + i)];
    o.direction = c.col(i);
    o.objective = z.col(i).lpNorm<1>();
  }

  for (int it = 1; it <= opts.max_iters && !active.empty(); ++it) {
    const bool last = it == opts.max_iters;
    const bool check = it % 10 == 0 || last;
    const bool cross = opts.crossover && it % opts.crossover_interval == 0;

    a.noalias() = gid * w;
    const Eigen::RowVectorXd mu =
        ((dj.array() * a.array()).colwise().sum() - 1.0) / sj.transpose().array();
    c = a - bj * mu.asDiagonal();
    p.noalias() = data.transpose() * c;
    // Fused z/u update; w = z - u feeds the next c-update.
    if (check) dz.resize(m, p.cols());
    for (Eigen::Index col = 0; col < p.cols(); ++col) {
      const double* pc = p.col(col).data();
      double* zc = z.col(col).data();
      double* uc = u.col(col).data();
      double* wc = w.col(col).data();
      double* dc = check ? dz.col(col).data() : nullptr;
      for (Eigen::Index i = 0; i < m; ++i) {
        const double v = pc[i] + uc[i];
        const double zn = soft_threshold(v, kappa);
        if (dc) dc[i] = zn - zc[i];
        zc[i] = zn;
        uc[i] = v - zn;
        wc[i] = zn - uc[i];
      }
    }
    if (!check && !cross) continue;

    Eigen::MatrixXd dual;
    if (check) dual.noalias() = data * dz;
    std::vector<bool> keep(active.size(), true);
    for (std::size_t i = 0; i < active.size(); ++i) {
      const auto col = static_cast<Eigen::Index>(i);
      auto& o = outcomes[static_cast<std::size_t>(active[i])];
      o.stats.iterations = it;
      if (check) {
        o.stats.primal_residual = (p.col(col) - z.col(col)).norm() / sqrt_m;
        o.stats.dual_residual = opts.rho * dual.col(col).norm() / sqrt_m;
        if (o.stats.primal_residual <= opts.feas_tol && o.stats.dual_residual <= opts.dual_tol) {
          o.stats.admm_converged = true;
        }
      }
      const double admm_obj = p.col(col).lpNorm<1>();
      if (o.stats.admm_converged || last) {
        o.direction = c.col(col);
        o.objective = admm_obj;
        if (opts.crossover) try_crossover(data, active[i], o.direction, admm_obj, cap, o);
        finalize(o);
        keep[i] = false;
      } else if (cross) {
        o.direction = c.col(col);
        o.objective = admm_obj;
        if (try_crossover(data, active[i], o.direction, admm_obj, cap, o)) {
          finalize(o);
          keep[i] = false;
        }
      }
    }
    if (std::find(keep.begin(), keep.end(), false) == keep.end()) continue;

    std::vector<Eigen::Index> idx;
    for (std::size_t i = 0; i < active.size(); ++i) {
      if (keep[i]) idx.push_back(static_cast<Eigen::Index>(i));
    }
    auto compact = [&](Eigen::MatrixXd& mat) {
      Eigen::MatrixXd out(mat.rows(), static_cast<Eigen::Index>(idx.size()));
      for (std::size_t i = 0; i < idx.size(); ++i) {
        out.col(static_cast<Eigen::Index>(i)) = mat.col(idx[i]);
      }
      mat = std::move(out);
    };
    compact(dj);
    compact(bj);
    compact(c);
    compact(z);
    compact(u);
    compact(w);
    Vector s_new(static_cast<Eigen::Index>(idx.size()));
    std::vector<Eigen::Index> active_new;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      s_new(static_cast<Eigen::Index>(i)) = sj(idx[i]);
      active_new.push_back(active[static_cast<std::size_t>(idx[i])]);
    }
    sj = std::move(s_new);
    active = std::move(active_new);
    p.resize(m, static_cast<Eigen::Index>(active.size()));
    a.resize(r, static_cast<Eigen::Index>(active.size()));
  }

  // Only reached with max_iters == 0.
  for (Eigen::Index col : active) {
    auto& o = outcomes[static_cast<std::size_t>(col)];
    if (o.done) continue;
    if (opts.crossover) try_crossover(data, col, o.direction, o.objective, cap, o);
    finalize(o);
  }
}

}  // namespace

DirectionSet solve_all_partial(const DataMatrix& data, const SolverOptions& opts) {
  opts.validate();
  const DirectionFactor factor(data);
  const Eigen::Index m = data.cols();
  const Eigen::Index block = opts.block_size;
  const Eigen::Index blocks = (m + block - 1) / block;
  std::vector<ColumnOutcome> outcomes(static_cast<std::size_t>(m));

#pragma omp parallel for schedule(dynamic, 1)
  for (Eigen::Index bi = 0; bi < blocks; ++bi) {
    const Eigen::Index first = bi * block;
    solve_block(factor, first, std::min(block, m - first), opts, outcomes);
  }
  return assemble(data.rows(), outcomes);
}

DirectionSet solve_all(const DataMatrix& data, const SolverOptions& opts) {
  DirectionSet set = solve_all_partial(data, opts);
  auto bad = set.unconverged_columns();
  if (!bad.empty()) throw UnconvergedColumns(std::move(set), std::move(bad));
  return set;
}

namespace reference {

DirectionSet solve_all(const DataMatrix& data, const SolverOptions& opts) {
  const DirectionFactor factor(data);
  std::vector<ColumnOutcome> outcomes(static_cast<std::size_t>(data.cols()));
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    DirectionResult res = solve_direction_factored(factor, j, opts);
    auto& o = outcomes[static_cast<std::size_t>(j)];
    o.direction = std::move(res.direction);
    o.objective = res.objective;
    o.stats = res.stats;
  }
  DirectionSet set = assemble(data.rows(), outcomes);
  auto bad = set.unconverged_columns();
  if (!bad.empty()) throw UnconvergedColumns(std::move(set), std::move(bad));
  return set;
}

}  // namespace reference

// ---------------------------------------------------------------------------
// Basic-solution enumeration oracle

DirectionResult lp_oracle_direction(const DirectionProblem& prob) {
  const DataMatrix& data = prob.data;
  const Eigen::Index r = data.rows();
  const Eigen::Index m = data.cols();
  if (r > 8 || m > 30) {
    throw SizeLimit("lp_oracle_direction supports r_d <= 8 and M2 <= 30 (got " +
                    std::to_string(r) + "x" + std::to_string(m) + ")");
  }
  if (r < 1 || m < 1) throw InvalidInput("lp_oracle_direction: empty data");
  const Eigen::Index j = prob.target;
  if (j < 0 || j >= m) throw InvalidInput("lp_oracle_direction: target out of range");
  if (data.col(j).norm() == 0.0) throw InvalidInput("lp_oracle_direction: zero target column");

  std::vector<Eigen::Index> others;
  for (Eigen::Index k = 0; k < m; ++k) {
    if (k != j) others.push_back(k);
  }
  const auto n = static_cast<Eigen::Index>(others.size());
  const Eigen::Index pick = r - 1;
  if (pick > n) throw InvalidInput("lp_oracle_direction: fewer columns than rows");

  DirectionResult best;
  best.objective = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd bm(r, r);
  Vector rhs = Vector::Zero(r);
  rhs(0) = 1.0;
  std::vector<Eigen::Index> comb(static_cast<std::size_t>(pick));
  std::iota(comb.begin(), comb.end(), Eigen::Index{0});
  for (;;) {
    bm.row(0) = data.col(j).transpose();
    for (Eigen::Index i = 0; i < pick; ++i) {
      bm.row(i + 1) = data.col(others[static_cast<std::size_t>(comb[static_cast<std::size_t>(i)])]).transpose();
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(bm);
    lu.setThreshold(1e-10);
    if (lu.isInvertible()) {
      const Vector c = lu.solve(rhs);
      const double obj = (data.transpose() * c).lpNorm<1>();
      if (obj < best.objective) {
        best.objective = obj;
        best.direction = c;
      }
    }
    // next combination
    Eigen::Index i = pick - 1;
    while (i >= 0 && comb[static_cast<std::size_t>(i)] == n - pick + i) --i;
    if (i < 0) break;
    ++comb[static_cast<std::size_t>(i)];
    for (Eigen::Index k = i + 1; k < pick; ++k) {
      comb[static_cast<std::size_t>(k)] = comb[static_cast<std::size_t>(k - 1)] + 1;
    }
  }
  if (!std::isfinite(best.objective)) {
    throw InvalidInput("lp_oracle_direction: data does not have full row rank");
  }
  best.stats.converged = true;
  best.stats.vertex_stationary = true;
  return best;
}

}  // namespace isearch
