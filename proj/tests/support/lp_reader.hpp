#pragma once

// Minimal reader for the LP text format the exporter emits. It understands
// exactly that dialect: one term per "+/- coeff name" triple, one constraint
// per line, Bounds as "lb <= name <= ub", Binaries as one name per line.
// Variable order is recovered from the Bounds section, which lists every
// variable in model order.

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "qpcert/milp.hpp"

namespace qpcert::testing {

inline milp::Model read_lp_file(const std::string& path) {
  std::ifstream f(path);
  REQUIRE_UNARY(f.good());

  struct RawCons {
    std::string name;
    std::vector<std::pair<std::string, double>> terms;
    milp::Relation rel = milp::Relation::le;
    double rhs = 0.0;
  };
  std::vector<std::pair<std::string, double>> objective;
  std::vector<RawCons> cons;
  std::vector<std::string> order;             // bounds-section order
  std::map<std::string, std::pair<double, double>> bounds;
  std::map<std::string, bool> binary;

  enum Section { none, minimize, subject_to, in_bounds, binaries };
  Section section = none;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '\\') continue;
    if (line == "Minimize") { section = minimize; continue; }
    if (line == "Subject To") { section = subject_to; continue; }
    if (line == "Bounds") { section = in_bounds; continue; }
    if (line == "Binaries") { section = binaries; continue; }
    if (line == "End") break;
    std::istringstream is(line);
    if (section == minimize || section == subject_to) {
      std::string label;
      is >> label;
      label.pop_back();  // trailing ':'
      std::vector<std::pair<std::string, double>> terms;
      std::string tok;
      double sign = 1.0;
      std::string rel;
      double rhs = 0.0;
      while (is >> tok) {
        if (tok == "+") { sign = 1.0; continue; }
        if (tok == "-") { sign = -1.0; continue; }
        if (tok == "<=" || tok == ">=" || tok == "=") {
          rel = tok;
          is >> rhs;
          break;
        }
        const double coeff = sign * std::stod(tok);
        std::string name;
        is >> name;
        terms.emplace_back(name, coeff);
      }
      if (section == minimize) {
        objective = std::move(terms);
      } else {
        RawCons rc;
        rc.name = label;
        rc.terms = std::move(terms);
        rc.rel = rel == "<=" ? milp::Relation::le
                 : rel == ">=" ? milp::Relation::ge
                               : milp::Relation::eq;
        rc.rhs = rhs;
        cons.push_back(std::move(rc));
      }
    } else if (section == in_bounds) {
      double lb, ub;
      std::string name, le1, le2;
      is >> lb >> le1 >> name >> le2 >> ub;
      order.push_back(name);
      bounds[name] = {lb, ub};
    } else if (section == binaries) {
      std::string name;
      is >> name;
      if (!name.empty()) binary[name] = true;
    }
  }

  milp::Model model;
  std::map<std::string, int> var_of;
  for (const std::string& name : order) {
    const auto [lb, ub] = bounds.at(name);
    var_of[name] = model.add_var(name, lb, ub, binary.count(name) > 0);
  }
  for (const auto& [name, coeff] : objective)
    model.objective[var_of.at(name)] = coeff;
  for (const RawCons& rc : cons) {
    std::vector<milp::LinTerm> terms;
    for (const auto& [name, coeff] : rc.terms)
      terms.push_back({var_of.at(name), coeff});
    model.add_constraint(rc.name, std::move(terms), rc.rel, rc.rhs);
  }
  return model;
}

}  // namespace qpcert::testing
