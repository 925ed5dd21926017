#include "qpcert/milp.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "io_util.hpp"
#include "qpcert/errors.hpp"
#include "simplex.hpp"

namespace qpcert::milp {

int Model::add_var(const std::string& name, double lb, double ub,
                   bool is_binary) {
  vars.push_back({name, lb, ub, is_binary});
  objective.push_back(0.0);
  return static_cast<int>(vars.size()) - 1;
}

void Model::add_constraint(const std::string& name, std::vector<LinTerm> terms,
                           Relation rel, double rhs) {
  cons.push_back({name, std::move(terms), rel, rhs});
}

void Model::set_objective(int var, double coeff) { objective[var] = coeff; }

int Model::num_binary() const {
  int k = 0;
  for (const auto& v : vars) k += v.is_binary;
  return k;
}

void Model::validate() const {
  if (objective.size() != vars.size())
    fail(ErrorCode::invalid_parameter, "objective length != variable count");
  for (const auto& v : vars) {
    if (!(v.lb <= v.ub))
      fail(ErrorCode::invalid_parameter, "variable " + v.name +
                                             " has lb > ub");
    if (v.is_binary && (v.lb < -1e-12 || v.ub > 1.0 + 1e-12))
      fail(ErrorCode::invalid_parameter,
           "binary variable " + v.name + " with bounds outside [0,1]");
  }
  for (const auto& c : cons)
    for (const auto& t : c.terms)
      if (t.var < 0 || t.var >= static_cast<int>(vars.size()))
        fail(ErrorCode::invalid_parameter,
             "constraint " + c.name + " references an unknown variable");
}

namespace detail {

SparseLp to_sparse_lp(const Model& model, const std::vector<double>& lb,
                      const std::vector<double>& ub) {
  SparseLp lp;
  lp.ncols = static_cast<int>(model.vars.size());
  lp.nrows = static_cast<int>(model.cons.size());
  lp.cols.resize(lp.ncols);
  lp.lb = lb;
  lp.ub = ub;
  lp.cost = model.objective;
  lp.rhs.resize(lp.nrows);
  lp.rel.resize(lp.nrows);
  // Accumulate duplicate terms while building columns.
  std::vector<double> rowacc(lp.ncols, 0.0);
  for (int r = 0; r < lp.nrows; ++r) {
    const Constraint& c = model.cons[r];
    lp.rhs[r] = c.rhs;
    lp.rel[r] = c.rel == Relation::le ? 0 : (c.rel == Relation::eq ? 1 : 2);
    for (const auto& t : c.terms) rowacc[t.var] += t.coeff;
    for (const auto& t : c.terms) {
      if (rowacc[t.var] != 0.0) {
        lp.cols[t.var].emplace_back(r, rowacc[t.var]);
        rowacc[t.var] = 0.0;
      }
    }
  }
  return lp;
}

LpResult lp_solve_bounds(const Model& model, const std::vector<double>& lb,
                         const std::vector<double>& ub) {
  const SparseLp lp = to_sparse_lp(model, lb, ub);
  const SimplexResult sr = solve_bounded_lp(lp);
  LpResult out;
  out.iterations = sr.iterations;
  switch (sr.state) {
    case SolveState::optimal:
      out.status = LpStatus::optimal;
      break;
    case SolveState::infeasible:
      out.status = LpStatus::infeasible;
      return out;
    case SolveState::unbounded:
      out.status = LpStatus::unbounded;
      return out;
    case SolveState::failed:
      fail(ErrorCode::solver_failure,
           "simplex failed after " + std::to_string(sr.iterations) +
               " iterations");
  }
  out.objective = sr.objective;
  out.x = Eigen::Map<const Eigen::VectorXd>(sr.x.data(),
                                            static_cast<int>(sr.x.size()));
  return out;
}

}  // namespace detail

LpResult lp_solve(const Model& model) {
  model.validate();
  std::vector<double> lb(model.vars.size()), ub(model.vars.size());
  for (std::size_t j = 0; j < model.vars.size(); ++j) {
    lb[j] = model.vars[j].lb;
    ub[j] = model.vars[j].ub;
  }
  return detail::lp_solve_bounds(model, lb, ub);
}

bool is_feasible(const Model& model, const Eigen::VectorXd& x, double tol) {
  if (x.size() != static_cast<int>(model.vars.size())) return false;
  for (std::size_t j = 0; j < model.vars.size(); ++j) {
    const auto& v = model.vars[j];
    if (x[static_cast<int>(j)] < v.lb - tol || x[static_cast<int>(j)] > v.ub + tol)
      return false;
    if (v.is_binary) {
      const double f = x[static_cast<int>(j)];
      if (std::abs(f - std::round(f)) > tol) return false;
    }
  }
  for (const auto& c : model.cons) {
    double act = 0.0;
    for (const auto& t : c.terms) act += t.coeff * x[t.var];
    const double slack = act - c.rhs;
    const double scale = std::max(1.0, std::abs(c.rhs));
    if (c.rel == Relation::le && slack > tol * scale) return false;
    if (c.rel == Relation::ge && slack < -tol * scale) return false;
    if (c.rel == Relation::eq && std::abs(slack) > tol * scale) return false;
  }
  return true;
}

double objective_value(const Model& model, const Eigen::VectorXd& x) {
  double v = 0.0;
  for (std::size_t j = 0; j < model.vars.size(); ++j)
    v += model.objective[j] * x[static_cast<int>(j)];
  return v;
}

void export_lp(const Model& model, const std::string& path) {
  model.validate();
  std::ostringstream os;
  os << "\\ " << model.vars.size() << " variables, " << model.cons.size()
     << " constraints\n";
  os << "Minimize\n obj:";
  for (std::size_t j = 0; j < model.vars.size(); ++j) {
    const double c = model.objective[j];
    if (c == 0.0) continue;
    os << (c < 0.0 ? " - " : " + ") << format_real(std::abs(c)) << " "
       << model.vars[j].name;
  }
  os << "\nSubject To\n";
  for (const auto& c : model.cons) {
    os << " " << c.name << ":";
    for (const auto& t : c.terms) {
      os << (t.coeff < 0.0 ? " - " : " + ") << format_real(std::abs(t.coeff))
         << " " << model.vars[t.var].name;
    }
    const char* rel = c.rel == Relation::le ? "<=" : (c.rel == Relation::eq ? "=" : ">=");
    os << " " << rel << " " << format_real(c.rhs) << "\n";
  }
  os << "Bounds\n";
  for (const auto& v : model.vars)
    os << " " << format_real(v.lb) << " <= " << v.name
       << " <= " << format_real(v.ub) << "\n";
  bool any_bin = false;
  for (const auto& v : model.vars) any_bin = any_bin || v.is_binary;
  if (any_bin) {
    os << "Binaries\n";
    for (const auto& v : model.vars)
      if (v.is_binary) os << " " << v.name << "\n";
  }
  os << "End\n";

  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::io_error, "cannot open " + path + " for writing");
  f << os.str();
  if (!f) fail(ErrorCode::io_error, "write failed: " + path);
}

}  // namespace qpcert::milp
