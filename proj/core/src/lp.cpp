#include "ptes/lp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace ptes::lp {

int LpInstance::add_variable(double lb, double ub, double cost) {
  cost_.push_back(cost);
  var_lb_.push_back(lb);
  var_ub_.push_back(ub);
  columns_valid_ = false;
  return static_cast<int>(cost_.size()) - 1;
}

int LpInstance::add_row(double lb, double ub, const std::vector<RowEntry>& entries) {
  row_lb_.push_back(lb);
  row_ub_.push_back(ub);
  for (const RowEntry& e : entries) {
    if (e.col < 0 || e.col >= num_vars())
      throw std::out_of_range("lp: row entry references unknown variable");
    if (e.value != 0.0) {
      cols_.push_back(e.col);
      vals_.push_back(e.value);
    }
  }
  row_start_.push_back(static_cast<int>(cols_.size()));
  columns_valid_ = false;
  return static_cast<int>(row_lb_.size()) - 1;
}

void LpInstance::set_cost(int var, double cost) { cost_.at(var) = cost; }

void LpInstance::set_var_bounds(int var, double lb, double ub) {
  var_lb_.at(var) = lb;
  var_ub_.at(var) = ub;
}

void LpInstance::set_row_bounds(int row, double lb, double ub) {
  row_lb_.at(row) = lb;
  row_ub_.at(row) = ub;
}

void LpInstance::set_row_entries(int row, const std::vector<RowEntry>& entries) {
  const int begin = row_start_.at(row);
  const int nnz = row_start_.at(row + 1) - begin;
  if (static_cast<int>(entries.size()) != nnz)
    throw std::invalid_argument("lp: row pattern mismatch in set_row_entries");
  for (int k = 0; k < nnz; ++k) {
    if (cols_[begin + k] != entries[k].col)
      throw std::invalid_argument("lp: row pattern mismatch in set_row_entries");
    vals_[begin + k] = entries[k].value;
  }
  columns_valid_ = false;
}

void LpInstance::ensure_columns() const {
  if (columns_valid_) return;
  const int n = num_vars();
  const int nnz = static_cast<int>(cols_.size());
  col_start_.assign(n + 1, 0);
  for (int k = 0; k < nnz; ++k) col_start_[cols_[k] + 1]++;
  for (int j = 0; j < n; ++j) col_start_[j + 1] += col_start_[j];
  crow_.assign(nnz, 0);
  cval_.assign(nnz, 0.0);
  std::vector<int> cursor(col_start_.begin(), col_start_.end() - 1);
  for (int r = 0; r < num_rows(); ++r) {
    for (int k = row_start_[r]; k < row_start_[r + 1]; ++k) {
      const int j = cols_[k];
      crow_[cursor[j]] = r;
      cval_[cursor[j]] = vals_[k];
      ++cursor[j];
    }
  }
  columns_valid_ = true;
}

double LpInstance::row_activity(int row, const std::vector<double>& x) const {
  double s = 0.0;
  for (int k = row_start_[row]; k < row_start_[row + 1]; ++k)
    s += vals_[k] * x[cols_[k]];
  return s;
}

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kDropTol = 1e-12;
constexpr double kPivotTol = 1e-9;
constexpr double kRatioTol = 1e-11;
constexpr int kBlandTrigger = 600;  // consecutive degenerate pivots

struct SparseVec {
  std::vector<int> idx;
  std::vector<double> val;
  void clear() {
    idx.clear();
    val.clear();
  }
};

// Bounded-variable revised simplex over [A | -I][x; s] = 0.
class Simplex {
 public:
  Simplex(const LpInstance& inst, const LpOptions& opts)
      : inst_(inst), opts_(opts), n_(inst.num_vars()), m_(inst.num_rows()),
        total_(n_ + m_) {
    inst_.ensure_columns();
    obj_.assign(total_, 0.0);
    lb_.assign(total_, 0.0);
    ub_.assign(total_, 0.0);
    for (int j = 0; j < n_; ++j) {
      obj_[j] = inst_.cost()[j];
      lb_[j] = inst_.var_lb()[j];
      ub_[j] = inst_.var_ub()[j];
    }
    for (int i = 0; i < m_; ++i) {
      lb_[n_ + i] = inst_.row_lb()[i];
      ub_[n_ + i] = inst_.row_ub()[i];
    }
    work_.assign(m_, 0.0);
    work_mark_.assign(m_, 0);
    fcol_.assign(m_, 0.0);
    fcol_mark_.assign(m_, 0);
    pos_work_.assign(m_, 0.0);
    pivot_step_of_row_.assign(m_, -1);
    max_iterations_ = opts.max_iterations > 0
                          ? opts.max_iterations
                          : 20000 + 40ll * (n_ + m_);
  }

  LpResult run(const Basis* warm) {
    const auto t0 = Clock::now();
    init_basis(warm);
    refactorize_and_recompute();

    LpStatus status = LpStatus::iteration_limit;
    bool bland = false;
    int degenerate_streak = 0;

    while (true) {
      if (iterations_ >= max_iterations_) {
        status = LpStatus::iteration_limit;
        break;
      }
      if (std::isfinite(opts_.time_limit_s) && (iterations_ & 255) == 0) {
        const double el = std::chrono::duration<double>(Clock::now() - t0).count();
        if (el > opts_.time_limit_s) {
          status = LpStatus::time_limit;
          break;
        }
      }

      const bool phase1 = infeasible_count_ > 0;
      compute_duals(phase1);

      if ((iterations_ % 10000) == 0 && std::getenv("PTES_LP_TRACE")) {
        double phi = 0.0, obj = 0.0;
        for (int pos = 0; pos < m_; ++pos) {
          const int v = basic_[pos];
          phi += std::max({0.0, lb_[v] - xval_[v], xval_[v] - ub_[v]});
        }
        for (int j = 0; j < n_; ++j) obj += obj_[j] * xval_[j];
        std::fprintf(stderr,
                     "lp trace: iter=%lld phase=%d infeas_count=%d phi=%.6e "
                     "obj=%.6e updates=%d\n",
                     static_cast<long long>(iterations_), phase1 ? 1 : 2,
                     infeasible_count_, phi, obj, updates_since_refactor_);
      }

      int q = price(phase1, bland);
      if (q < 0) {
        status = phase1 ? LpStatus::infeasible : LpStatus::optimal;
        break;
      }

      // direction of the entering variable
      const double dq = reduced_cost(q, phase1);
      int sigma;
      if (vstat_[q] == VarStatus::at_lower) sigma = 1;
      else if (vstat_[q] == VarStatus::at_upper) sigma = -1;
      else sigma = dq < 0.0 ? 1 : -1;

      ftran_column(q);  // fills fcol_ (position space)

      const StepChoice step = ratio_test(q, sigma, phase1);
      if (step.kind == StepChoice::unbounded) {
        if (phase1) {
          // cannot happen for a bounded phase-1 objective; treat as stall
          status = LpStatus::infeasible;
        } else {
          status = LpStatus::unbounded;
        }
        break;
      }

      if (step.t < kRatioTol) {
        if (++degenerate_streak > kBlandTrigger) bland = true;
      } else {
        degenerate_streak = 0;
        bland = false;
      }

      apply_step(q, sigma, step);
      ++iterations_;

      if (step.kind == StepChoice::pivot) {
        if (updates_since_refactor_ >= opts_.refactor_interval ||
            update_entries_ > update_entry_budget_)
          refactorize_and_recompute();
      }
    }

    return package(status);
  }

 private:
  struct StepChoice {
    enum Kind { pivot, bound_flip, unbounded } kind = unbounded;
    double t = 0.0;
    int leave_pos = -1;
    int leave_bound = 0;  // -1 lower, +1 upper
  };

  struct RatioCand {
    int pos;
    double t_strict;
    double abs_d;
    int var;
    int bound;
  };
  std::vector<RatioCand> ratio_cands_;

  // --- setup -----------------------------------------------------------------

  void init_basis(const Basis* warm) {
    vstat_.assign(total_, VarStatus::at_lower);
    basic_.assign(m_, -1);
    pos_of_.assign(total_, -1);
    xval_.assign(total_, 0.0);

    auto default_status = [&](int j) {
      if (std::isfinite(lb_[j])) {
        vstat_[j] = VarStatus::at_lower;
        xval_[j] = lb_[j];
      } else if (std::isfinite(ub_[j])) {
        vstat_[j] = VarStatus::at_upper;
        xval_[j] = ub_[j];
      } else {
        vstat_[j] = VarStatus::free_zero;
        xval_[j] = 0.0;
      }
    };

    bool used_warm = false;
    if (warm && !warm->empty() && static_cast<int>(warm->basic.size()) <= m_) {
      const int m_old = static_cast<int>(warm->basic.size());
      const int n_old = static_cast<int>(warm->status.size()) - m_old;
      if (n_old == n_) {
        used_warm = true;
        for (int j = 0; j < total_; ++j) default_status(j);
        std::vector<char> seen(total_, 0);
        for (int p = 0; p < m_old && used_warm; ++p) {
          const int v = warm->basic[p];
          // old logical indices map 1:1 because variables were not added
          if (v < 0 || v >= total_ || seen[v]) used_warm = false;
          else seen[v] = 1;
        }
        if (used_warm) {
          for (int j = 0; j < n_ + m_old; ++j) {
            if (warm->status[j] == VarStatus::basic) continue;
            vstat_[j] = warm->status[j];
            xval_[j] = nonbasic_value(j);
          }
          for (int p = 0; p < m_old; ++p) set_basic(warm->basic[p], p);
          for (int i = m_old; i < m_; ++i) set_basic(n_ + i, i);
        }
      }
    }
    if (!used_warm) {
      for (int j = 0; j < total_; ++j) default_status(j);
      for (int i = 0; i < m_; ++i) set_basic(n_ + i, i);
    }
  }

  double nonbasic_value(int j) const {
    switch (vstat_[j]) {
      case VarStatus::at_lower: return std::isfinite(lb_[j]) ? lb_[j] : 0.0;
      case VarStatus::at_upper: return std::isfinite(ub_[j]) ? ub_[j] : 0.0;
      default: return 0.0;
    }
  }

  void set_basic(int var, int pos) {
    basic_[pos] = var;
    vstat_[var] = VarStatus::basic;
    pos_of_[var] = pos;
  }

  // --- factorization: left-looking LU with Gilbert-Peierls reach --------------

  struct EtaFile {
    std::vector<int> start{0};
    std::vector<int> rows;
    std::vector<double> vals;
    std::vector<int> pivot_row;  // per eta
    void clear() {
      start.assign(1, 0);
      rows.clear();
      vals.clear();
      pivot_row.clear();
    }
    int count() const { return static_cast<int>(pivot_row.size()); }
    void push(int prow, const std::vector<int>& r, const std::vector<double>& v) {
      pivot_row.push_back(prow);
      rows.insert(rows.end(), r.begin(), r.end());
      vals.insert(vals.end(), v.begin(), v.end());
      start.push_back(static_cast<int>(rows.size()));
    }
  };

  void load_column(int var) {
    // loads the constraint column of `var` into work_ (row space)
    if (var < n_) {
      const int* rows = inst_.col_rows(var);
      const double* vals = inst_.col_vals(var);
      const int nnz = inst_.col_nnz(var);
      for (int k = 0; k < nnz; ++k) {
        if (work_mark_[rows[k]] == 0) {
          work_mark_[rows[k]] = 1;
          work_nz_.push_back(rows[k]);
          work_[rows[k]] = 0.0;
        }
        work_[rows[k]] += vals[k];
      }
    } else {
      const int r = var - n_;
      if (work_mark_[r] == 0) {
        work_mark_[r] = 1;
        work_nz_.push_back(r);
        work_[r] = 0.0;
      }
      work_[r] += -1.0;
    }
  }

  void clear_work() {
    for (int r : work_nz_) {
      work_[r] = 0.0;
      work_mark_[r] = 0;
    }
    work_nz_.clear();
  }

  // Depth-first reach over already-placed L etas: which etas touch this
  // column, in topological (application) order via reverse postorder.
  void symbolic_reach(std::vector<int>& steps_out) {
    steps_out.clear();
    dfs_frames_.clear();
    for (int r : work_nz_) {
      const int root = pivot_step_of_row_[r];
      if (root < 0 || step_seen_[root]) continue;
      step_seen_[root] = 1;
      dfs_frames_.push_back({root, lf_.start[root]});
      while (!dfs_frames_.empty()) {
        const int step = dfs_frames_.back().first;
        int& cursor = dfs_frames_.back().second;
        if (cursor < lf_.start[step + 1]) {
          const int child = pivot_step_of_row_[lf_.rows[cursor]];
          ++cursor;
          if (child >= 0 && !step_seen_[child]) {
            step_seen_[child] = 1;
            dfs_frames_.push_back({child, lf_.start[child]});
          }
        } else {
          steps_out.push_back(step);
          dfs_frames_.pop_back();
        }
      }
    }
    std::reverse(steps_out.begin(), steps_out.end());
    for (int s : steps_out) step_seen_[s] = 0;
  }

  bool refactorize() {
    lf_.clear();
    uf_.clear();
    u_diag_.clear();
    step_pos_.clear();
    updates_.clear();
    updates_since_refactor_ = 0;
    update_entries_ = 0;
    std::fill(pivot_step_of_row_.begin(), pivot_step_of_row_.end(), -1);
    step_seen_.assign(m_, 0);

    // process short columns first; logicals pivot trivially
    std::vector<int> order(m_);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      const int va = basic_[a], vb = basic_[b];
      const int na = va < n_ ? inst_.col_nnz(va) : 1;
      const int nb = vb < n_ ? inst_.col_nnz(vb) : 1;
      return na < nb;
    });

    std::vector<int> reach;
    std::vector<int> l_rows;
    std::vector<double> l_vals;
    std::vector<int> repaired_positions;

    for (int pos : order) {
      clear_work();
      load_column(basic_[pos]);
      symbolic_reach(reach);
      // numeric: apply reached etas in elimination order
      for (int step : reach) {
        const double piv = work_[lf_.pivot_row[step]];
        if (piv == 0.0) continue;
        for (int k = lf_.start[step]; k < lf_.start[step + 1]; ++k) {
          const int r = lf_.rows[k];
          if (work_mark_[r] == 0) {
            work_mark_[r] = 1;
            work_nz_.push_back(r);
            work_[r] = 0.0;
          }
          work_[r] -= lf_.vals[k] * piv;
        }
      }
      // split into U part (pivoted rows) and active part; choose pivot row
      int pivot_row = -1;
      double pivot_val = 0.0;
      for (int r : work_nz_) {
        if (pivot_step_of_row_[r] >= 0) continue;
        const double v = work_[r];
        if (std::abs(v) > std::abs(pivot_val) + kDropTol ||
            (std::abs(std::abs(v) - std::abs(pivot_val)) <= kDropTol &&
             pivot_row >= 0 && r < pivot_row && std::abs(v) > kPivotTol)) {
          pivot_val = v;
          pivot_row = r;
        }
      }
      if (pivot_row < 0 || std::abs(pivot_val) < kPivotTol) {
        repaired_positions.push_back(pos);
        continue;
      }
      const int step = lf_.count();
      // U column: entries in pivoted rows
      {
        std::vector<int> u_steps;
        std::vector<double> u_vals;
        for (int r : work_nz_) {
          const int s = pivot_step_of_row_[r];
          if (s >= 0 && std::abs(work_[r]) > kDropTol) {
            u_steps.push_back(s);
            u_vals.push_back(work_[r]);
          }
        }
        uf_.push(step, u_steps, u_vals);  // pivot_row field stores own step id
      }
      u_diag_.push_back(pivot_val);
      // L eta: multipliers on remaining active rows
      l_rows.clear();
      l_vals.clear();
      for (int r : work_nz_) {
        if (r == pivot_row || pivot_step_of_row_[r] >= 0) continue;
        const double mult = work_[r] / pivot_val;
        if (std::abs(mult) > kDropTol) {
          l_rows.push_back(r);
          l_vals.push_back(mult);
        }
      }
      lf_.push(pivot_row, l_rows, l_vals);
      pivot_step_of_row_[pivot_row] = step;
      step_pos_.push_back(pos);
    }
    clear_work();

    if (!repaired_positions.empty()) {
      // singular basis: park the offending variables at a bound and put the
      // logicals of the unpivoted rows in their place
      std::vector<int> free_rows;
      for (int r = 0; r < m_; ++r)
        if (pivot_step_of_row_[r] < 0) free_rows.push_back(r);
      if (free_rows.size() != repaired_positions.size()) return false;
      for (std::size_t k = 0; k < repaired_positions.size(); ++k) {
        const int pos = repaired_positions[k];
        const int out = basic_[pos];
        pos_of_[out] = -1;
        if (std::isfinite(lb_[out])) {
          vstat_[out] = VarStatus::at_lower;
          xval_[out] = lb_[out];
        } else if (std::isfinite(ub_[out])) {
          vstat_[out] = VarStatus::at_upper;
          xval_[out] = ub_[out];
        } else {
          vstat_[out] = VarStatus::free_zero;
          xval_[out] = 0.0;
        }
        const int logical = n_ + free_rows[k];
        if (pos_of_[logical] >= 0) return false;  // would duplicate; give up
        set_basic(logical, pos);
      }
      return refactorize();  // one level of retry with the repaired basis
    }
    return true;
  }

  void touch_fcol(int pos) {
    if (fcol_mark_[pos] == 0) {
      fcol_mark_[pos] = 1;
      fcol_nz_.push_back(pos);
      fcol_[pos] = 0.0;
    }
  }

  // Reach of the current work_nz_ pattern over the U dependency graph
  // (edges from a step to the earlier steps its U column updates), in
  // application (descending-compatible) order via reverse postorder.
  void symbolic_reach_u(std::vector<int>& steps_out) {
    steps_out.clear();
    dfs_frames_.clear();
    for (int r : work_nz_) {
      const int root = pivot_step_of_row_[r];
      if (root < 0 || step_seen_[root]) continue;
      step_seen_[root] = 1;
      dfs_frames_.push_back({root, uf_.start[root]});
      while (!dfs_frames_.empty()) {
        const int step = dfs_frames_.back().first;
        int& cursor = dfs_frames_.back().second;
        if (cursor < uf_.start[step + 1]) {
          const int child = uf_.rows[cursor];
          ++cursor;
          if (!step_seen_[child]) {
            step_seen_[child] = 1;
            dfs_frames_.push_back({child, uf_.start[child]});
          }
        } else {
          steps_out.push_back(step);
          dfs_frames_.pop_back();
        }
      }
    }
    std::reverse(steps_out.begin(), steps_out.end());
    for (int s : steps_out) step_seen_[s] = 0;
  }

  // FTRAN: d = B^{-1} a, a loaded in work_ (row space); result in fcol_ over
  // positions, nonzeros listed (uniquely) in fcol_nz_. Both triangular passes
  // visit only the reachable part of the eta file.
  void ftran_from_work() {
    for (int pos : fcol_nz_) {
      fcol_[pos] = 0.0;
      fcol_mark_[pos] = 0;
    }
    fcol_nz_.clear();

    symbolic_reach(reach_);
    for (int k : reach_) {
      const double piv = work_[lf_.pivot_row[k]];
      if (piv == 0.0) continue;
      for (int t = lf_.start[k]; t < lf_.start[k + 1]; ++t) {
        const int r = lf_.rows[t];
        if (work_mark_[r] == 0) {
          work_mark_[r] = 1;
          work_nz_.push_back(r);
          work_[r] = 0.0;
        }
        work_[r] -= lf_.vals[t] * piv;
      }
    }
    // back substitution on U, descending over the reachable steps
    symbolic_reach_u(reach_);
    for (int k : reach_) {
      const int r = lf_.pivot_row[k];
      const double v = work_[r];
      if (v != 0.0) {
        const double t = v / u_diag_[k];
        touch_fcol(step_pos_[k]);
        fcol_[step_pos_[k]] = t;
        for (int u = uf_.start[k]; u < uf_.start[k + 1]; ++u) {
          const int step_above = uf_.rows[u];
          const int row_above = lf_.pivot_row[step_above];
          if (work_mark_[row_above] == 0) {
            work_mark_[row_above] = 1;
            work_nz_.push_back(row_above);
            work_[row_above] = 0.0;
          }
          work_[row_above] -= uf_.vals[u] * t;
        }
        work_[r] = 0.0;
      }
    }
    clear_work();
    // product-form updates, chronological
    for (const auto& up : updates_) {
      const double dq = fcol_[up.pos];
      if (dq == 0.0) continue;
      const double piv = dq / up.diag;
      for (std::size_t k = 0; k < up.vec.idx.size(); ++k) {
        const int p = up.vec.idx[k];
        if (p == up.pos) continue;
        touch_fcol(p);
        fcol_[p] -= up.vec.val[k] * piv;
      }
      fcol_[up.pos] = piv;
    }
  }

  void ftran_column(int var) {
    clear_work();
    load_column(var);
    ftran_from_work();
  }

  // BTRAN: y = B^{-T} c, c given over positions in pos_work_; result row-space
  // dense in btran_y_.
  void btran(std::vector<double>& cpos) {
    for (auto it = updates_.rbegin(); it != updates_.rend(); ++it) {
      double t = cpos[it->pos];
      for (std::size_t k = 0; k < it->vec.idx.size(); ++k) {
        const int p = it->vec.idx[k];
        if (p == it->pos) continue;
        t -= it->vec.val[k] * cpos[p];
      }
      cpos[it->pos] = t / it->diag;
    }
    const int K = lf_.count();
    btran_y_.assign(m_, 0.0);
    std::vector<double>& z = btran_z_;
    z.assign(K, 0.0);
    for (int k = 0; k < K; ++k) {
      double t = cpos[step_pos_[k]];
      for (int u = uf_.start[k]; u < uf_.start[k + 1]; ++u)
        t -= uf_.vals[u] * z[uf_.rows[u]];
      z[k] = t / u_diag_[k];
    }
    for (int k = 0; k < K; ++k) btran_y_[lf_.pivot_row[k]] = z[k];
    for (int k = K - 1; k >= 0; --k) {
      double acc = btran_y_[lf_.pivot_row[k]];
      for (int t = lf_.start[k]; t < lf_.start[k + 1]; ++t)
        acc -= lf_.vals[t] * btran_y_[lf_.rows[t]];
      btran_y_[lf_.pivot_row[k]] = acc;
    }
  }

  void refactorize_and_recompute() {
    if (!refactorize())
      throw std::runtime_error("lp: basis repair failed (singular basis)");
    update_entry_budget_ =
        8 * (static_cast<std::int64_t>(m_) +
             static_cast<std::int64_t>(lf_.rows.size() + uf_.rows.size()));
    recompute_basics();
    if (std::getenv("PTES_LP_DEBUG")) {
      std::fprintf(stderr,
                   "lp: refactor m=%d L_nnz=%zu U_nnz=%zu iters=%lld\n", m_,
                   lf_.rows.size(), uf_.rows.size(),
                   static_cast<long long>(iterations_));
    }
  }

  void recompute_basics() {
    // B xB = -N xN
    clear_work();
    for (int j = 0; j < total_; ++j) {
      if (vstat_[j] == VarStatus::basic) continue;
      const double xj = xval_[j];
      if (xj == 0.0) continue;
      if (j < n_) {
        const int* rows = inst_.col_rows(j);
        const double* vals = inst_.col_vals(j);
        for (int k = 0; k < inst_.col_nnz(j); ++k) {
          const int r = rows[k];
          if (work_mark_[r] == 0) {
            work_mark_[r] = 1;
            work_nz_.push_back(r);
            work_[r] = 0.0;
          }
          work_[r] -= vals[k] * xj;
        }
      } else {
        const int r = j - n_;
        if (work_mark_[r] == 0) {
          work_mark_[r] = 1;
          work_nz_.push_back(r);
          work_[r] = 0.0;
        }
        work_[r] += xj;  // -(-1) * xj
      }
    }
    ftran_from_work();
    for (int pos = 0; pos < m_; ++pos) xval_[basic_[pos]] = fcol_[pos];
    count_infeasible();
  }

  void count_infeasible() {
    infeasible_count_ = 0;
    for (int pos = 0; pos < m_; ++pos) {
      const int v = basic_[pos];
      if (xval_[v] < lb_[v] - opts_.feas_tol || xval_[v] > ub_[v] + opts_.feas_tol)
        ++infeasible_count_;
    }
  }

  // --- pricing ----------------------------------------------------------------

  void compute_duals(bool phase1) {
    pos_work_.assign(m_, 0.0);
    for (int pos = 0; pos < m_; ++pos) {
      const int v = basic_[pos];
      if (phase1) {
        if (xval_[v] < lb_[v] - opts_.feas_tol) pos_work_[pos] = -1.0;
        else if (xval_[v] > ub_[v] + opts_.feas_tol) pos_work_[pos] = 1.0;
      } else {
        pos_work_[pos] = obj_[v];
      }
    }
    btran(pos_work_);
  }

  double reduced_cost(int j, bool phase1) const {
    double d = phase1 ? 0.0 : obj_[j];
    if (j < n_) {
      const int* rows = inst_.col_rows(j);
      const double* vals = inst_.col_vals(j);
      for (int k = 0; k < inst_.col_nnz(j); ++k) d -= btran_y_[rows[k]] * vals[k];
    } else {
      d += btran_y_[j - n_];
    }
    return d;
  }

  bool eligible(int j, double d) const {
    if (vstat_[j] == VarStatus::basic) return false;
    if (ub_[j] - lb_[j] < kRatioTol) return false;  // fixed
    switch (vstat_[j]) {
      case VarStatus::at_lower: return d < -opts_.opt_tol;
      case VarStatus::at_upper: return d > opts_.opt_tol;
      case VarStatus::free_zero: return std::abs(d) > opts_.opt_tol;
      default: return false;
    }
  }

  bool can_enter(int j) const {
    return vstat_[j] != VarStatus::basic && ub_[j] - lb_[j] >= kRatioTol;
  }

  int price(bool phase1, bool bland) {
    if (bland) {
      for (int j = 0; j < total_; ++j) {
        if (!can_enter(j)) continue;
        if (eligible(j, reduced_cost(j, phase1))) return j;
      }
      return -1;
    }
    const int window = std::max(512, total_ / 32);
    int scanned = 0;
    int best = -1;
    double best_score = 0.0;
    int cursor = price_cursor_;
    while (scanned < total_) {
      const int stop = std::min(cursor + window, total_);
      for (int j = cursor; j < stop; ++j) {
        if (!can_enter(j)) continue;
        const double d = reduced_cost(j, phase1);
        if (!eligible(j, d)) continue;
        const double score = std::abs(d);
        if (score > best_score * (1.0 + 1e-12) ||
            (score > best_score * (1.0 - 1e-12) && (best < 0 || j < best))) {
          best_score = score;
          best = j;
        }
      }
      scanned += stop - cursor;
      cursor = stop == total_ ? 0 : stop;
      if (best >= 0) break;
    }
    price_cursor_ = cursor;
    return best;
  }

  // --- ratio test & update ------------------------------------------------------

  // Two-pass Harris ratio test: pass one finds the smallest ratio with bounds
  // relaxed by the feasibility tolerance, pass two picks the largest pivot
  // among candidates whose strict ratio fits under it. Tiny pivots are what
  // destroy the factorization, not small steps.
  StepChoice ratio_test(int q, int sigma, bool phase1) {
    StepChoice out;
    ratio_cands_.clear();
    double t_relaxed_min = kInf;

    for (int pos : fcol_nz_) {
      const double dval = fcol_[pos];
      if (std::abs(dval) < kRatioTol) continue;
      const int v = basic_[pos];
      const double rate = -sigma * dval;
      const double x0 = xval_[v];
      double t = kInf;
      int bound = 0;
      if (phase1 && x0 < lb_[v] - opts_.feas_tol) {
        if (rate > 0.0) {
          t = (lb_[v] - x0) / rate;
          bound = -1;
        }
      } else if (phase1 && x0 > ub_[v] + opts_.feas_tol) {
        if (rate < 0.0) {
          t = (ub_[v] - x0) / rate;
          bound = 1;
        }
      } else if (rate > 0.0 && std::isfinite(ub_[v])) {
        t = (ub_[v] - x0) / rate;
        bound = 1;
      } else if (rate < 0.0 && std::isfinite(lb_[v])) {
        t = (lb_[v] - x0) / rate;
        bound = -1;
      }
      if (t == kInf) continue;
      if (t < 0.0) t = 0.0;  // drift
      ratio_cands_.push_back({pos, t, std::abs(dval), v, bound});
      t_relaxed_min = std::min(t_relaxed_min, t + opts_.feas_tol / std::abs(rate));
    }

    const double range = ub_[q] - lb_[q];
    const double t_flip = std::isfinite(range) ? range : kInf;
    if (t_flip <= t_relaxed_min) {
      if (t_flip == kInf) {
        out.kind = StepChoice::unbounded;
        return out;
      }
      out.kind = StepChoice::bound_flip;
      out.t = t_flip;
      return out;
    }
    if (ratio_cands_.empty()) {
      out.kind = StepChoice::unbounded;
      return out;
    }

    int best = -1;
    for (std::size_t i = 0; i < ratio_cands_.size(); ++i) {
      const RatioCand& c = ratio_cands_[i];
      if (c.t_strict > t_relaxed_min) continue;
      if (best < 0 || c.abs_d > ratio_cands_[best].abs_d * (1.0 + 1e-12) ||
          (c.abs_d > ratio_cands_[best].abs_d * (1.0 - 1e-12) &&
           c.var < ratio_cands_[best].var))
        best = static_cast<int>(i);
    }
    if (best < 0) {
      // every strict ratio sits above the relaxed minimum; take the smallest
      for (std::size_t i = 0; i < ratio_cands_.size(); ++i)
        if (best < 0 || ratio_cands_[i].t_strict < ratio_cands_[best].t_strict)
          best = static_cast<int>(i);
    }
    out.kind = StepChoice::pivot;
    out.t = std::max(0.0, ratio_cands_[best].t_strict);
    out.leave_pos = ratio_cands_[best].pos;
    out.leave_bound = ratio_cands_[best].bound;
    return out;
  }

  void apply_step(int q, int sigma, const StepChoice& step) {
    // move basics along the direction
    for (int pos : fcol_nz_) {
      const double rate = -sigma * fcol_[pos];
      const int v = basic_[pos];
      const bool was_infeas =
          xval_[v] < lb_[v] - opts_.feas_tol || xval_[v] > ub_[v] + opts_.feas_tol;
      xval_[v] += step.t * rate;
      const bool is_infeas =
          xval_[v] < lb_[v] - opts_.feas_tol || xval_[v] > ub_[v] + opts_.feas_tol;
      if (was_infeas && !is_infeas) --infeasible_count_;
      else if (!was_infeas && is_infeas) ++infeasible_count_;
    }
    if (step.kind == StepChoice::bound_flip) {
      vstat_[q] = vstat_[q] == VarStatus::at_lower ? VarStatus::at_upper
                                                   : VarStatus::at_lower;
      xval_[q] = vstat_[q] == VarStatus::at_lower ? lb_[q] : ub_[q];
      return;
    }

    const int leave = basic_[step.leave_pos];
    const bool leave_was_infeas = xval_[leave] < lb_[leave] - opts_.feas_tol ||
                                  xval_[leave] > ub_[leave] + opts_.feas_tol;
    // snap the leaving variable onto its blocking bound
    if (step.leave_bound < 0) {
      vstat_[leave] = VarStatus::at_lower;
      xval_[leave] = lb_[leave];
    } else {
      vstat_[leave] = VarStatus::at_upper;
      xval_[leave] = ub_[leave];
    }
    if (leave_was_infeas) --infeasible_count_;
    pos_of_[leave] = -1;

    xval_[q] += sigma * step.t;
    set_basic(q, step.leave_pos);

    // product-form update
    const double diag = fcol_[step.leave_pos];
    if (std::abs(diag) < 1e-8) {
      refactorize_and_recompute();
      return;
    }
    Update up;
    up.pos = step.leave_pos;
    up.diag = diag;
    for (int pos : fcol_nz_) {
      if (fcol_[pos] != 0.0) {
        up.vec.idx.push_back(pos);
        up.vec.val.push_back(fcol_[pos]);
      }
    }
    update_entries_ += static_cast<std::int64_t>(up.vec.idx.size());
    updates_.push_back(std::move(up));
    ++updates_since_refactor_;
  }

  LpResult package(LpStatus status) {
    LpResult res;
    res.status = status;
    res.iterations = iterations_;
    res.x.assign(n_, 0.0);
    for (int j = 0; j < n_; ++j) res.x[j] = xval_[j];
    res.objective = 0.0;
    for (int j = 0; j < n_; ++j) res.objective += obj_[j] * xval_[j];
    res.max_bound_violation = 0.0;
    for (int j = 0; j < total_; ++j) {
      const double below = lb_[j] - xval_[j];
      const double above = xval_[j] - ub_[j];
      res.max_bound_violation =
          std::max({res.max_bound_violation, below, above});
    }
    res.basis.basic = basic_;
    res.basis.status = vstat_;
    return res;
  }

  const LpInstance& inst_;
  LpOptions opts_;
  int n_, m_, total_;
  std::vector<double> obj_, lb_, ub_;
  std::vector<int> basic_;
  std::vector<VarStatus> vstat_;
  std::vector<int> pos_of_;
  std::vector<double> xval_;

  EtaFile lf_;   // L etas; pivot_row[k] is the pivot row of step k
  EtaFile uf_;   // U columns; rows[] holds step indices of the rows above
  std::vector<double> u_diag_;
  std::vector<int> step_pos_;           // step -> basis position
  std::vector<int> pivot_step_of_row_;  // row -> step, -1 if none
  std::vector<char> step_seen_;
  std::vector<int> dfs_stack_;
  std::vector<std::pair<int, int>> dfs_frames_;
  std::vector<int> reach_;

  struct Update {
    int pos = 0;
    double diag = 0.0;
    SparseVec vec;
  };
  std::vector<Update> updates_;
  int updates_since_refactor_ = 0;
  std::int64_t update_entries_ = 0;
  std::int64_t update_entry_budget_ = 0;

  std::vector<double> work_;      // row-space scratch
  std::vector<char> work_mark_;
  std::vector<int> work_nz_;
  std::vector<double> fcol_;      // position-space FTRAN result
  std::vector<char> fcol_mark_;
  std::vector<int> fcol_nz_;
  std::vector<double> btran_y_;   // row-space duals
  std::vector<double> btran_z_;
  std::vector<double> pos_work_;

  int infeasible_count_ = 0;
  std::int64_t iterations_ = 0;
  std::int64_t max_iterations_ = 0;
  int price_cursor_ = 0;
};

}  // namespace

LpResult solve_lp(const LpInstance& inst, const LpOptions& opts, const Basis* warm) {
  if (inst.num_rows() == 0) {
    // pure bound problem: each variable sits at its cheaper bound
    LpResult res;
    res.status = LpStatus::optimal;
    res.x.assign(inst.num_vars(), 0.0);
    for (int j = 0; j < inst.num_vars(); ++j) {
      const double c = inst.cost()[j];
      const double lo = inst.var_lb()[j], hi = inst.var_ub()[j];
      if (c > 0.0) {
        if (!std::isfinite(lo)) {
          res.status = LpStatus::unbounded;
          return res;
        }
        res.x[j] = lo;
      } else if (c < 0.0) {
        if (!std::isfinite(hi)) {
          res.status = LpStatus::unbounded;
          return res;
        }
        res.x[j] = hi;
      } else {
        res.x[j] = std::isfinite(lo) ? lo : (std::isfinite(hi) ? hi : 0.0);
      }
      res.objective += c * res.x[j];
    }
    return res;
  }
  Simplex simplex(inst, opts);
  return simplex.run(warm);
}

}  // namespace ptes::lp
