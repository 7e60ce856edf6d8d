#include "dygie/numeric/grad_check.hpp"

#include <cmath>
#include <sstream>

namespace dygie::numeric {

double rel_error(double analytic, double numeric) {
  double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
  return std::fabs(analytic - numeric) / denom;
}

double GradCheckReport::max_rel_error() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.max_rel_error);
  return m;
}

std::string GradCheckReport::summary() const {
  std::ostringstream os;
  for (const auto& e : entries) {
    os << (e.max_rel_error <= tolerance ? "  ok   " : "  FAIL ") << e.name
       << "  max_rel_error=" << e.max_rel_error;
    if (e.worst_coord >= 0)
      os << "  (coord " << e.worst_coord << ": analytic=" << e.analytic_at_worst
         << " numeric=" << e.numeric_at_worst << ")";
    os << "\n";
  }
  os << (pass ? "PASS" : "FAIL") << "  max_rel_error=" << max_rel_error()
     << "  tol=" << tolerance << "\n";
  return os.str();
}

GradCheckReport grad_check(const std::function<double()>& f,
                           const std::map<std::string, Tensor<double>*>& params,
                           const std::map<std::string, Tensor<double>>& analytic, double h,
                           double tol) {
  GradCheckReport report;
  report.tolerance = tol;
  for (const auto& [name, tensor] : params) {
    GradCheckEntry entry;
    entry.name = name;
    const Tensor<double>* grad = nullptr;
    if (auto it = analytic.find(name); it != analytic.end() && !it->second.data.empty())
      grad = &it->second;
    for (int64_t k = 0; k < tensor->size(); ++k) {
      const double saved = tensor->data[k];
      tensor->data[k] = saved + h;
      const double fp = f();
      tensor->data[k] = saved - h;
      const double fm = f();
      tensor->data[k] = saved;
      const double numeric = (fp - fm) / (2.0 * h);
      const double a = grad ? grad->data[k] : 0.0;
      const double err = rel_error(a, numeric);
      if (err > entry.max_rel_error) {
        entry.max_rel_error = err;
        entry.worst_coord = k;
        entry.analytic_at_worst = a;
        entry.numeric_at_worst = numeric;
      }
    }
    report.entries.push_back(std::move(entry));
  }
  report.pass = report.max_rel_error() <= tol;
  return report;
}

GradCheckReport grad_check_fn(const LossBuilder& build,
                              const std::map<std::string, Tensor<double>*>& params, double h,
                              double tol) {
  std::map<std::string, Tensor<double>> analytic;
  {
    Tape<double> tape;
    std::map<std::string, Tape<double>::Var> bound;
    ParamBinder binder = [&](const std::string& name) {
      auto it = params.find(name);
      if (it == params.end()) throw std::runtime_error("grad_check: unknown parameter " + name);
      auto found = bound.find(name);
      if (found != bound.end()) return found->second;
      auto var = tape.param(it->second);
      bound.emplace(name, var);
      return var;
    };
    auto loss = build(tape, binder);
    tape.backward(loss);
    for (const auto& [name, var] : bound) {
      const auto& g = tape.grad(var);
      if (!g.data.empty()) analytic[name] = g;
    }
  }
  auto f = [&]() {
    Tape<double> tape;
    std::map<std::string, Tape<double>::Var> bound;
    ParamBinder binder = [&](const std::string& name) {
      auto it = params.find(name);
      if (it == params.end()) throw std::runtime_error("grad_check: unknown parameter " + name);
      auto found = bound.find(name);
      if (found != bound.end()) return found->second;
      auto var = tape.param(it->second);
      bound.emplace(name, var);
      return var;
    };
    return static_cast<double>(tape.value(build(tape, binder)).data[0]);
  };
  return grad_check(f, params, analytic, h, tol);
}

}  // namespace dygie::numeric
