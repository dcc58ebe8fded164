#include "acdesign/equivalence.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "acdesign/errors.hpp"
#include "acdesign/scalar_search.hpp"
#include "problem.hpp"

namespace acdesign {

namespace {

// Verdict is "not optimal" once the violation clearly exceeds tol.
constexpr double kNotOptimalFactor = 10.0;
constexpr int kMaxCuts = 12;

detail::Gradient checked_gradient(const detail::Problem& problem, const Matrix& m) {
  detail::Gradient g = detail::gradient(problem, m);
  if (!g.estimable) throw NotEstimable("K^T theta is not estimable under the design");
  if (!g.simple_extreme) {
    throw Unsupported("E-criterion sensitivity needs a simple minimal eigenvalue of (K^T M^- K)^{-1}");
  }
  return g;
}

SensitivityReport run_verify(const detail::Problem& problem, const std::vector<DesignPoint>& points,
                             const std::vector<double>& weights, const VerifyOptions& options) {
  if (options.grid_size < 2) throw DomainError("verify needs a grid of at least 2 points");
  if (!(options.tol > 0.0)) throw DomainError("verify tolerance must be positive");
  const DoseRange& range = problem.range();
  for (const auto& x : points) {
    if (x.arm == Arm::Drug && !range.contains(x.dose)) {
      throw DomainError("design dose " + std::to_string(x.dose) + " outside the dose range");
    }
  }
  const Matrix m = problem.moment(points, weights);
  const detail::Gradient g = checked_gradient(problem, m);

  SensitivityReport report;
  const int n = options.grid_size;
  report.grid_doses.resize(n);
  for (int i = 0; i < n; ++i) {
    report.grid_doses[i] = (i == n - 1) ? range.upper : range.lower + range.width() * i / (n - 1);
  }

  std::vector<Matrix> infos;
  infos.reserve(report.grid_doses.size() + points.size() + 1);
  for (double d : report.grid_doses) infos.push_back(problem.point_info(DesignPoint::drug(d)));
  for (const auto& x : points) infos.push_back(problem.point_info(x));
  if (problem.has_control()) infos.push_back(problem.point_info(DesignPoint::control()));

  // For singular M the generalized inverse is fitted to a finite set of candidate points; doses
  // where the refined scan still finds a violation join the set and the fit is repeated.
  const bool singular = g.null_basis.cols() > 0;
  Matrix a;
  double max_value = 0.0;
  for (int round = 0; round < (singular ? kMaxCuts : 1); ++round) {
    a = detail::adjusted_a(problem, g, problem.k(), infos);
    auto s_at = [&](double d) { return detail::sensitivity_from(a, problem.point_info(DesignPoint::drug(d))); };

    report.values.resize(n);
    std::size_t best = 0;
    for (int i = 0; i < n; ++i) {
      report.values[i] = detail::sensitivity_from(a, infos[static_cast<std::size_t>(i)]);
      if (report.values[i] > report.values[best]) best = static_cast<std::size_t>(i);
    }
    max_value = report.values[best];
    report.argmax_dose = report.grid_doses[best];

    const double tol = 1e-8 * range.width();
    auto consider = [&](double lo, double hi) {
      if (!(lo < hi)) return;
      const ScalarOptimum r = golden_section_maximize(s_at, lo, hi, tol);
      if (r.value > max_value) {
        max_value = r.value;
        report.argmax_dose = r.x;
      }
    };
    consider(report.grid_doses[best == 0 ? 0 : best - 1], report.grid_doses[std::min<std::size_t>(best + 1, n - 1)]);
    // Peaks right next to a support dose fall between grid points.
    const double h = range.width() / (n - 1);
    for (const auto& x : points) {
      if (x.arm != Arm::Drug) continue;
      consider(std::max(range.lower, x.dose - h), x.dose);
      consider(x.dose, std::min(range.upper, x.dose + h));
    }
    if (!singular || max_value <= 0.1 * options.tol) break;
    infos.push_back(problem.point_info(DesignPoint::drug(report.argmax_dose)));
  }
  report.adjusted_inverse = singular && !a.isApprox(g.a);

  for (const auto& x : points) {
    const double s = detail::sensitivity_from(a, problem.point_info(x));
    report.support_residuals.push_back(std::abs(s));
    if (x.arm == Arm::Drug && s > max_value) {
      max_value = s;
      report.argmax_dose = x.dose;
    }
  }
  auto s_at = [&](const DesignPoint& x) { return detail::sensitivity_from(a, problem.point_info(x)); };
  if (problem.has_control()) {
    report.control_value = s_at(DesignPoint::control());
    max_value = std::max(max_value, *report.control_value);
  }

  report.max_violation = std::max(0.0, max_value);
  const double worst_residual =
      report.support_residuals.empty()
          ? 0.0
          : *std::max_element(report.support_residuals.begin(), report.support_residuals.end());
  if (report.max_violation <= options.tol && worst_residual <= options.tol) {
    report.verdict = Verdict::Optimal;
  } else if (report.max_violation > kNotOptimalFactor * options.tol ||
             worst_residual > kNotOptimalFactor * options.tol) {
    report.verdict = Verdict::NotOptimal;
  } else {
    report.verdict = Verdict::Inconclusive;
  }
  return report;
}

}  // namespace

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::Optimal: return "optimal";
    case Verdict::NotOptimal: return "not-optimal";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

double sensitivity(const Design& design, const DrugModel& drug, const ControlModel& control,
                   const KMatrix& k, double p, const DesignPoint& point) {
  const auto problem = detail::Problem::joint(drug, control, CriterionSpec::phi(p, k));
  const detail::Gradient g = checked_gradient(problem, problem.moment(design));
  return g.trace * detail::sensitivity_from(g.a, problem.point_info(point));
}

SensitivityReport verify(const Design& design, const DrugModel& drug, const ControlModel& control,
                         const CriterionSpec& spec, const VerifyOptions& options) {
  const auto problem = detail::Problem::joint(drug, control, spec);
  return run_verify(problem, design.points(), design.weights(), options);
}

SensitivityReport verify_induced(const InducedDesign& design, const DrugModel& drug,
                                 const Matrix& k11, double p, const VerifyOptions& options) {
  const auto problem = detail::Problem::drug_only(drug, k11, p);
  std::vector<DesignPoint> points;
  for (double d : design.doses) points.push_back(DesignPoint::drug(d));
  return run_verify(problem, points, design.weights, options);
}

void write_sensitivity_csv(std::ostream& out, const SensitivityReport& report) {
  const auto old_precision = out.precision(6);
  out << "dose,value\n";
  for (std::size_t i = 0; i < report.grid_doses.size(); ++i) {
    out << report.grid_doses[i] << ',' << report.values[i] << '\n';
  }
  if (report.control_value) out << "C," << *report.control_value << '\n';
  out.precision(old_precision);
}

}  // namespace acdesign
