#pragma once

#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "smartfl/config.hpp"

namespace smartfl {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Property suite behind `smartfl check`. Each check compares the library
/// against an independent oracle (grid search, finite differences, brute
/// force) or a structural invariant on seeded random instances.
std::vector<CheckResult> run_check_suite();

/// Runs the suite, prints one PASS/FAIL line per check, returns true when all pass.
bool run_checks(std::ostream& out);

/// Small synthetic config used by the run-level checks (30 rounds, fast).
ExperimentConfig check_config();

/// Brute-force minimizer of ||x - v||^2 over a grid on the simplex of
/// dimension 2 or 3.
std::vector<double> grid_simplex_projection(const std::vector<double>& v, double step);

/// Central finite-difference gradient of f at x.
std::vector<double> finite_difference_gradient(const std::function<double(const std::vector<double>&)>& f,
                                               std::vector<double> x, double h);

/// ||a - b|| / max(||a||, ||b||, 1e-12).
double relative_error(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace smartfl
