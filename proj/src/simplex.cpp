#include "simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace qpcert::milp::detail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDualTol = 1e-9;
constexpr double kFeasTol = 1e-9;
constexpr double kPivotTol = 1e-8;
constexpr double kDropTol = 1e-12;

struct Eta {
  int row;
  double pivot;
  std::vector<std::pair<int, double>> col;  // transformed entering column
};

// Dense-value vector with an explicit nonzero pattern so FTRAN results can
// be scanned in time proportional to their support.
struct SparseWork {
  std::vector<double> val;
  std::vector<int> touched;
  std::vector<unsigned char> mark;

  void resize(int n) {
    val.assign(n, 0.0);
    mark.assign(n, 0);
    touched.clear();
  }
  void clear() {
    for (int r : touched) {
      val[r] = 0.0;
      mark[r] = 0;
    }
    touched.clear();
  }
  void add(int r, double v) {
    if (!mark[r]) {
      mark[r] = 1;
      touched.push_back(r);
      val[r] = v;
    } else {
      val[r] += v;
    }
  }
  void set(int r, double v) {
    if (!mark[r]) {
      mark[r] = 1;
      touched.push_back(r);
    }
    val[r] = v;
  }
};

enum class VarState : unsigned char { basic, at_lower, at_upper };

class Simplex {
 public:
  explicit Simplex(const SparseLp& lp) { build(lp); }

  SimplexResult run() {
    SimplexResult res;
    if (!phase(true)) {
      res.state = failed_ ? SolveState::failed : SolveState::infeasible;
      res.iterations = iters_;
      return res;
    }
    freeze_artificials();
    const bool ok = phase(false);
    res.iterations = iters_;
    if (!ok) {
      res.state = failed_      ? SolveState::failed
                  : unbounded_ ? SolveState::unbounded
                               : SolveState::infeasible;
      return res;
    }
    refactorize();
    res.state = failed_ ? SolveState::failed : SolveState::optimal;
    res.x.assign(x_.begin(), x_.begin() + n_struct_);
    res.objective = 0.0;
    for (int j = 0; j < n_struct_; ++j) res.objective += cost2_[j] * x_[j];
    return res;
  }

 private:
  int ncols_ = 0;  // structural + logicals + artificials
  int nrows_ = 0;
  int n_struct_ = 0;
  int n_base_cols_ = 0;  // structural + logicals
  // Compressed column storage for the hot loops.
  std::vector<int> col_start_;
  std::vector<int> col_row_;
  std::vector<double> col_val_;
  std::vector<double> lb_, ub_, cost2_, rhs_;
  std::vector<double> cost1_;  // phase-1 objective (artificials)
  std::vector<double> x_;
  std::vector<VarState> state_;
  std::vector<int> basis_;
  std::vector<Eta> etas_;
  long eta_nnz_ = 0;
  SparseWork work_;
  std::vector<double> yrow_;
  long iters_ = 0;
  int pivots_since_refactor_ = 0;
  int degenerate_streak_ = 0;
  bool bland_ = false;
  bool failed_ = false;
  bool unbounded_ = false;
  long base_nnz_ = 0;

  int col_nnz(int j) const { return col_start_[j + 1] - col_start_[j]; }

  void build(const SparseLp& lp) {
    n_struct_ = lp.ncols;
    nrows_ = lp.nrows;
    lb_ = lp.lb;
    ub_ = lp.ub;
    cost2_ = lp.cost;
    rhs_ = lp.rhs;
    std::vector<std::vector<std::pair<int, double>>> cols = lp.cols;
    for (const auto& col : cols) base_nnz_ += static_cast<long>(col.size());
    // One logical per row; its bounds encode the relation.
    for (int r = 0; r < nrows_; ++r) {
      cols.push_back({{r, 1.0}});
      if (lp.rel[r] == 0) {
        lb_.push_back(0.0);
        ub_.push_back(kInf);
      } else if (lp.rel[r] == 1) {
        lb_.push_back(0.0);
        ub_.push_back(0.0);
      } else {
        lb_.push_back(-kInf);
        ub_.push_back(0.0);
      }
      cost2_.push_back(0.0);
    }
    n_base_cols_ = n_struct_ + nrows_;
    ncols_ = n_base_cols_;
    cost1_.assign(ncols_, 0.0);

    // Nonbasic start for structural variables: the bound nearest zero.
    x_.assign(ncols_, 0.0);
    state_.assign(ncols_, VarState::at_lower);
    for (int j = 0; j < n_struct_; ++j) {
      double v;
      if (std::isfinite(lb_[j]) && std::isfinite(ub_[j]))
        v = std::abs(lb_[j]) <= std::abs(ub_[j]) ? lb_[j] : ub_[j];
      else if (std::isfinite(lb_[j]))
        v = lb_[j];
      else if (std::isfinite(ub_[j]))
        v = ub_[j];
      else
        v = 0.0;
      x_[j] = v;
      state_[j] = v == ub_[j] && std::isfinite(ub_[j]) ? VarState::at_upper
                                                       : VarState::at_lower;
    }

    // Row activity of the nonbasic start.
    std::vector<double> act(nrows_, 0.0);
    for (int j = 0; j < n_struct_; ++j) {
      if (x_[j] == 0.0) continue;
      for (const auto& [r, v] : cols[j]) act[r] += v * x_[j];
    }

    // Logicals form the initial basis; rows whose logical value falls outside
    // its bounds get a phase-1 artificial instead.
    basis_.assign(nrows_, -1);
    for (int r = 0; r < nrows_; ++r) {
      const int lcol = n_struct_ + r;
      const double want = rhs_[r] - act[r];
      if (want >= lb_[lcol] - kFeasTol && want <= ub_[lcol] + kFeasTol) {
        basis_[r] = lcol;
        state_[lcol] = VarState::basic;
        x_[lcol] = want;
      } else {
        const double snap = want < lb_[lcol] ? lb_[lcol] : ub_[lcol];
        x_[lcol] = snap;
        state_[lcol] = snap == lb_[lcol] ? VarState::at_lower : VarState::at_upper;
        const double resid = want - snap;
        cols.push_back({{r, resid >= 0.0 ? 1.0 : -1.0}});
        lb_.push_back(0.0);
        ub_.push_back(kInf);
        cost2_.push_back(0.0);
        cost1_.push_back(1.0);
        x_.push_back(std::abs(resid));
        state_.push_back(VarState::basic);
        basis_[r] = ncols_;
        ++ncols_;
      }
    }

    col_start_.resize(ncols_ + 1);
    col_start_[0] = 0;
    for (int j = 0; j < ncols_; ++j)
      col_start_[j + 1] = col_start_[j] + static_cast<int>(cols[j].size());
    col_row_.resize(col_start_[ncols_]);
    col_val_.resize(col_start_[ncols_]);
    for (int j = 0; j < ncols_; ++j) {
      int k = col_start_[j];
      for (const auto& [r, v] : cols[j]) {
        col_row_[k] = r;
        col_val_[k] = v;
        ++k;
      }
    }
    work_.resize(nrows_);
    yrow_.assign(nrows_, 0.0);
  }

  void freeze_artificials() {
    for (int j = n_base_cols_; j < ncols_; ++j) {
      lb_[j] = 0.0;
      ub_[j] = 0.0;
      if (state_[j] != VarState::basic) x_[j] = 0.0;
    }
  }

  // work_ := B^-1 work_ using the eta file; support tracked explicitly.
  void ftran() {
    for (const Eta& e : etas_) {
      if (!work_.mark[e.row]) continue;
      const double piv = work_.val[e.row];
      if (piv == 0.0) continue;
      const double f = piv / e.pivot;
      work_.val[e.row] = f;
      for (const auto& [r, val] : e.col)
        if (r != e.row) work_.add(r, -val * f);
    }
  }

  // y := y B^-1 (row vector), dense.
  void btran(std::vector<double>& y) const {
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      const Eta& e = *it;
      double dot = 0.0;
      for (const auto& [r, val] : e.col)
        if (r != e.row) dot += y[r] * val;
      y[e.row] = (y[e.row] - dot) / e.pivot;
    }
  }

  void load_column(int j) {
    work_.clear();
    for (int k = col_start_[j]; k < col_start_[j + 1]; ++k)
      work_.set(col_row_[k], col_val_[k]);
  }

  void push_eta(int row) {
    Eta e;
    e.row = row;
    e.pivot = work_.val[row];
    for (int r : work_.touched)
      if (std::abs(work_.val[r]) > kDropTol) e.col.emplace_back(r, work_.val[r]);
    eta_nnz_ += static_cast<long>(e.col.size());
    etas_.push_back(std::move(e));
  }

  void recompute_basics() {
    work_.clear();
    for (int r = 0; r < nrows_; ++r)
      if (rhs_[r] != 0.0) work_.set(r, rhs_[r]);
    for (int j = 0; j < ncols_; ++j) {
      if (state_[j] == VarState::basic || x_[j] == 0.0) continue;
      for (int k = col_start_[j]; k < col_start_[j + 1]; ++k)
        work_.add(col_row_[k], -col_val_[k] * x_[j]);
    }
    ftran();
    for (int row = 0; row < nrows_; ++row)
      x_[basis_[row]] = work_.mark[row] ? work_.val[row] : 0.0;
    work_.clear();
  }

  void refactorize() {
    etas_.clear();
    eta_nnz_ = 0;
    // Unit columns of the current basis pin their rows for free; only the
    // structural basis columns need elimination, sparsest first.
    std::vector<std::uint8_t> row_used(nrows_, 0);
    std::vector<std::uint8_t> placed(ncols_, 0);
    std::vector<int> new_basis(nrows_, -1);
    std::vector<int> pending;
    for (int r = 0; r < nrows_; ++r) {
      const int j = basis_[r];
      if (col_nnz(j) == 1 && col_val_[col_start_[j]] == 1.0) {
        const int prow = col_row_[col_start_[j]];
        if (!row_used[prow]) {
          row_used[prow] = 1;
          placed[j] = 1;
          new_basis[prow] = j;  // identity eta: nothing to record
          continue;
        }
      }
      pending.push_back(j);
    }
    std::sort(pending.begin(), pending.end(), [&](int a, int b) {
      if (col_nnz(a) != col_nnz(b)) return col_nnz(a) < col_nnz(b);
      return a < b;
    });
    auto try_place = [&](int j) -> bool {
      load_column(j);
      ftran();
      int best = -1;
      double best_mag = kPivotTol * 0.01;
      for (int r : work_.touched) {
        if (row_used[r]) continue;
        const double mag = std::abs(work_.val[r]);
        if (mag > best_mag || (best >= 0 && mag == best_mag && r < best)) {
          best_mag = mag;
          best = r;
        }
      }
      if (best < 0) return false;
      row_used[best] = 1;
      placed[j] = 1;
      new_basis[best] = j;
      push_eta(best);
      return true;
    };
    std::vector<int> leftovers;
    for (int j : pending)
      if (!try_place(j)) leftovers.push_back(j);
    // Dependent basis columns: demote to a bound and backfill the holes with
    // unused logical columns.
    for (int j : leftovers) {
      state_[j] = std::isfinite(lb_[j]) ? VarState::at_lower : VarState::at_upper;
      x_[j] = state_[j] == VarState::at_lower ? lb_[j] : ub_[j];
      if (!std::isfinite(x_[j])) x_[j] = 0.0;
    }
    if (!leftovers.empty()) {
      int cand = n_struct_;
      for (int r = 0; r < nrows_; ++r) {
        if (new_basis[r] >= 0) continue;
        bool done = false;
        while (cand < n_base_cols_ && !done) {
          if (!placed[cand] && try_place(cand)) done = true;
          ++cand;
        }
        if (!done) failed_ = true;
      }
      for (int r = 0; r < nrows_; ++r)
        if (new_basis[r] < 0) new_basis[r] = basis_[r];  // failed path only
    }
    basis_ = new_basis;
    for (int r = 0; r < nrows_; ++r) state_[basis_[r]] = VarState::basic;
    pivots_since_refactor_ = 0;
    recompute_basics();
  }

  bool refactor_due() const {
    if (pivots_since_refactor_ >= 512) return true;
    return eta_nnz_ > std::max<long>(8 * base_nnz_, 50000);
  }

  bool phase(bool phase1) {
    const std::vector<double>& cost = phase1 ? cost1_ : cost2_;
    const long iter_cap = 50000 + 40L * (static_cast<long>(nrows_) + ncols_);
    long local_iters = 0;
    degenerate_streak_ = 0;
    bland_ = false;
    refactorize();
    while (true) {
      if (++local_iters > iter_cap) {
        failed_ = true;
        return false;
      }
      ++iters_;
      if (refactor_due()) refactorize();

      // Reduced costs: d_j = c_j - y a_j with y = c_B B^-1.
      std::vector<double>& y = yrow_;
      for (int r = 0; r < nrows_; ++r) y[r] = cost[basis_[r]];
      btran(y);

      int enter = -1;
      double best_viol = bland_ ? 0.0 : kDualTol;
      for (int j = 0; j < ncols_; ++j) {
        if (state_[j] == VarState::basic) continue;
        if (lb_[j] == ub_[j]) continue;  // fixed
        double d = cost[j];
        for (int k = col_start_[j]; k < col_start_[j + 1]; ++k)
          d -= y[col_row_[k]] * col_val_[k];
        double viol = 0.0;
        if (state_[j] == VarState::at_lower && d < -kDualTol)
          viol = -d;
        else if (state_[j] == VarState::at_upper && d > kDualTol)
          viol = d;
        if (viol > 0.0 && bland_) {
          enter = j;
          break;
        }
        if (viol > best_viol) {
          best_viol = viol;
          enter = j;
        }
      }
      if (enter < 0) {
        if (phase1) {
          double inf_sum = 0.0;
          for (int j = n_base_cols_; j < ncols_; ++j)
            if (cost1_[j] != 0.0) inf_sum += x_[j];
          return inf_sum <= 1e-7;
        }
        return true;
      }

      const double dir = state_[enter] == VarState::at_lower ? 1.0 : -1.0;
      load_column(enter);
      ftran();

      // Ratio test: basics hitting a bound vs. the entering variable
      // flipping to its opposite bound. Ties prefer the largest pivot.
      double best_room = kInf;
      if (std::isfinite(lb_[enter]) && std::isfinite(ub_[enter]))
        best_room = ub_[enter] - lb_[enter];
      int leave_row = -1;
      double leave_mag = 0.0;
      bool leave_to_upper = false;
      for (int r : work_.touched) {
        const double w = work_.val[r];
        if (std::abs(w) <= kDropTol) continue;
        const int bj = basis_[r];
        const double rate = -w * dir;  // d x_B[r] / d step
        double room;
        bool to_upper;
        if (rate > 0.0) {
          if (!std::isfinite(ub_[bj])) continue;
          room = (ub_[bj] - x_[bj]) / rate;
          to_upper = true;
        } else {
          if (!std::isfinite(lb_[bj])) continue;
          room = (x_[bj] - lb_[bj]) / (-rate);
          to_upper = false;
        }
        room = std::max(room, 0.0);
        const double mag = std::abs(w);
        const bool strictly = room < best_room - 1e-10;
        const bool tied = !strictly && room <= best_room + 1e-10;
        const bool better_tie =
            tied && leave_row >= 0 &&
            (mag > leave_mag || (mag == leave_mag && r < leave_row));
        if (strictly || better_tie) {
          best_room = std::min(best_room, room);
          leave_row = r;
          leave_mag = mag;
          leave_to_upper = to_upper;
        }
      }

      if (!std::isfinite(best_room)) {
        if (phase1) {
          failed_ = true;  // phase 1 is always bounded below
          return false;
        }
        unbounded_ = true;
        return false;
      }

      // A tiny pivot on stale factors: rebuild and re-price instead.
      if (leave_row >= 0 && std::abs(work_.val[leave_row]) < kPivotTol) {
        if (pivots_since_refactor_ > 0) {
          refactorize();
          continue;
        }
        if (std::abs(work_.val[leave_row]) < 1e-11) {
          failed_ = true;
          return false;
        }
      }

      // Advance the entering variable and the basics.
      const double step = best_room;
      x_[enter] += dir * step;
      if (step != 0.0) {
        for (int r : work_.touched) {
          const double w = work_.val[r];
          if (std::abs(w) > kDropTol) x_[basis_[r]] -= w * dir * step;
        }
      }

      if (leave_row < 0) {
        // Bound flip, basis unchanged.
        state_[enter] = state_[enter] == VarState::at_lower
                            ? VarState::at_upper
                            : VarState::at_lower;
        degenerate_streak_ = 0;
        continue;
      }

      // Degenerate-stall guard: fall back to Bland's rule.
      if (step <= 1e-12) {
        if (++degenerate_streak_ > 2 * (nrows_ + 64)) bland_ = true;
      } else {
        degenerate_streak_ = 0;
        bland_ = false;
      }

      const int leave_col = basis_[leave_row];
      state_[leave_col] = leave_to_upper ? VarState::at_upper : VarState::at_lower;
      x_[leave_col] = leave_to_upper ? ub_[leave_col] : lb_[leave_col];
      basis_[leave_row] = enter;
      state_[enter] = VarState::basic;
      push_eta(leave_row);
      ++pivots_since_refactor_;
    }
  }
};

}  // namespace

SimplexResult solve_bounded_lp(const SparseLp& lp) {
  Simplex s(lp);
  return s.run();
}

}  // namespace qpcert::milp::detail
