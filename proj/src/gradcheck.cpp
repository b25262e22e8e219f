#include "statn/gradcheck.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "statn/errors.hpp"

namespace statn {

double finite_diff_check(const std::function<double(const std::vector<double>&)>& f,
                         const std::vector<double>& x,
                         const std::vector<double>& analytic_grad, double epsilon) {
  if (epsilon <= 0.0) throw config_error("finite_diff_check: epsilon must be positive");
  if (x.size() != analytic_grad.size())
    throw config_error("finite_diff_check: gradient length mismatch");

  std::vector<double> probe = x;
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + epsilon;
    const double up = f(probe);
    probe[i] = x[i] - epsilon;
    const double down = f(probe);
    probe[i] = x[i];
    const double numeric = (up - down) / (2.0 * epsilon);
    const double a = analytic_grad[i];
    const double err = std::abs(a - numeric) / std::max(1.0, std::abs(a));
    worst = std::max(worst, err);
  }
  return worst;
}

bool GradCheckReport::all_pass() const {
  for (const GradCheckRow& r : rows)
    if (!r.pass) return false;
  return true;
}

std::string GradCheckReport::to_string() const {
  std::ostringstream os;
  os << "gradient check (eps=" << std::scientific << std::setprecision(2) << epsilon << ")\n";
  for (const GradCheckRow& r : rows) {
    os << "  " << (r.pass ? "PASS" : "FAIL") << "  " << std::left << std::setw(28) << r.name
       << "  max_rel_err=" << std::scientific << std::setprecision(3) << r.max_error
       << "  threshold=" << r.threshold << "\n";
  }
  os << (all_pass() ? "all layers pass" : "FAILURE: at least one layer exceeds threshold")
     << "\n";
  return os.str();
}

GradCheckReport run_gradient_cases(const std::vector<GradCheckCase>& cases, double epsilon) {
  GradCheckReport report;
  report.epsilon = epsilon;
  for (const GradCheckCase& c : cases) {
    const double err = c.run(epsilon);
    report.rows.push_back({c.name, err, c.threshold, err < c.threshold});
  }
  return report;
}

}  // namespace statn
