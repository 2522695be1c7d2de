#pragma once

#include <cstdint>
#include <limits>
#include <vector>

namespace ptes::lp {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct RowEntry {
  int col = 0;
  double value = 0.0;
};

// min c'x  s.t.  row_lb <= Ax <= row_ub,  var_lb <= x <= var_ub.
// Rows are stored row-wise so cutting-plane loops can append cheaply; the
// solver builds the column view on demand.
class LpInstance {
 public:
  int add_variable(double lb, double ub, double cost = 0.0);
  int add_row(double lb, double ub, const std::vector<RowEntry>& entries);
  void set_cost(int var, double cost);
  void set_var_bounds(int var, double lb, double ub);
  void set_row_bounds(int row, double lb, double ub);
  // rewrite a row's coefficients along its existing sparsity pattern
  void set_row_entries(int row, const std::vector<RowEntry>& entries);

  int num_vars() const { return static_cast<int>(cost_.size()); }
  int num_rows() const { return static_cast<int>(row_lb_.size()); }

  const std::vector<double>& cost() const { return cost_; }
  const std::vector<double>& var_lb() const { return var_lb_; }
  const std::vector<double>& var_ub() const { return var_ub_; }
  const std::vector<double>& row_lb() const { return row_lb_; }
  const std::vector<double>& row_ub() const { return row_ub_; }

  // CSR access
  const int* row_cols(int row) const { return cols_.data() + row_start_[row]; }
  const double* row_vals(int row) const { return vals_.data() + row_start_[row]; }
  int row_nnz(int row) const { return row_start_[row + 1] - row_start_[row]; }

  // column view (valid after ensure_columns)
  void ensure_columns() const;
  const int* col_rows(int col) const { return crow_.data() + col_start_[col]; }
  const double* col_vals(int col) const { return cval_.data() + col_start_[col]; }
  int col_nnz(int col) const { return col_start_[col + 1] - col_start_[col]; }

  double row_activity(int row, const std::vector<double>& x) const;

 private:
  std::vector<double> cost_, var_lb_, var_ub_;
  std::vector<double> row_lb_, row_ub_;
  std::vector<int> row_start_{0};
  std::vector<int> cols_;
  std::vector<double> vals_;

  mutable std::vector<int> col_start_, crow_;
  mutable std::vector<double> cval_;
  mutable bool columns_valid_ = false;
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit, time_limit };

struct LpOptions {
  double feas_tol = 1e-7;
  double opt_tol = 1e-9;
  std::int64_t max_iterations = 0;  // 0: scale with problem size
  double time_limit_s = kInf;
  int refactor_interval = 64;
};

// Variable status in the bounded simplex.
enum class VarStatus : std::uint8_t { at_lower, at_upper, basic, free_zero };

struct Basis {
  std::vector<int> basic;            // variable per basis position, size m
  std::vector<VarStatus> status;     // size n + m (structural then logical)
  bool empty() const { return basic.empty(); }
};

struct LpResult {
  LpStatus status = LpStatus::iteration_limit;
  std::vector<double> x;  // structural values
  double objective = 0.0;
  std::int64_t iterations = 0;
  double max_bound_violation = 0.0;
  Basis basis;
};

// Deterministic bounded-variable revised simplex (composite phase 1, partial
// Dantzig pricing with a smallest-index tie break, Bland fallback on stalls,
// sparse LU with product-form updates). A warm basis from a previous solve of
// the same instance, or of the instance before rows were appended, is reused.
LpResult solve_lp(const LpInstance& inst, const LpOptions& opts = {},
                  const Basis* warm = nullptr);

}  // namespace ptes::lp
