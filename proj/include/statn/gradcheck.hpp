#pragma once

#include <functional>
#include <string>
#include <vector>

namespace statn {

// Central-difference check of an analytic gradient. Returns the max over all
// entries of |analytic - numeric| / max(1, |analytic|). The function must be
// differentiable at x -- callers keep evaluation points away from
// relu/maxpool/bilinear kinks.
double finite_diff_check(const std::function<double(const std::vector<double>&)>& f,
                         const std::vector<double>& x,
                         const std::vector<double>& analytic_grad, double epsilon = 1e-5);

struct GradCheckCase {
  std::string name;
  double threshold;
  // runs the check and returns the max relative error
  std::function<double(double /*epsilon*/)> run;
};

struct GradCheckRow {
  std::string name;
  double max_error;
  double threshold;
  bool pass;
};

struct GradCheckReport {
  std::vector<GradCheckRow> rows;
  double epsilon;
  bool all_pass() const;
  std::string to_string() const;
};

GradCheckReport run_gradient_cases(const std::vector<GradCheckCase>& cases, double epsilon);

}  // namespace statn
