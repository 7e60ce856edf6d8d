#pragma once

// Central-difference gradient verification. Always runs in double; float
// round-off makes finite differences meaningless at useful step sizes.

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "dygie/numeric/tape.hpp"

namespace dygie::numeric {

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  int64_t worst_coord = -1;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double tolerance = 0.0;
  bool pass = false;
  double max_rel_error() const;
  std::string summary() const;
};

// Relative error with the guarded denominator max(|a|, |n|, 1e-8).
double rel_error(double analytic, double numeric);

// `f` evaluates the objective at the current parameter values (the tensors
// behind `params` are perturbed in place and restored). `analytic` holds the
// reverse-mode gradients at the unperturbed point; missing names count as
// all-zero gradients.
GradCheckReport grad_check(const std::function<double()>& f,
                           const std::map<std::string, Tensor<double>*>& params,
                           const std::map<std::string, Tensor<double>>& analytic, double h,
                           double tol);

// Convenience wrapper: `build` constructs the scalar objective on a fresh
// tape, requesting parameter leaves through the binder so this function can
// read their gradients after backward().
using ParamBinder = std::function<Tape<double>::Var(const std::string&)>;
using LossBuilder = std::function<Tape<double>::Var(Tape<double>&, const ParamBinder&)>;

GradCheckReport grad_check_fn(const LossBuilder& build,
                              const std::map<std::string, Tensor<double>*>& params, double h,
                              double tol);

}  // namespace dygie::numeric
