#pragma once

#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "acdesign/criteria.hpp"

namespace acdesign {

enum class Verdict { Optimal, NotOptimal, Inconclusive };

std::string_view to_string(Verdict verdict);

struct VerifyOptions {
  int grid_size = 512;
  double tol = 1e-5;
};

/// Sensitivity values are normalized by tr((K^T M^- K)^{-p}) (lambda_min of its inverse for p = -inf).
struct SensitivityReport {
  std::vector<double> grid_doses;
  std::vector<double> values;
  std::optional<double> control_value;
  double max_violation = 0.0;
  double argmax_dose = 0.0;
  std::vector<double> support_residuals;
  Verdict verdict = Verdict::Inconclusive;
  /// True when a generalized inverse other than M^+ was needed (singular M).
  bool adjusted_inverse = false;
};

/// Left-hand side of the equivalence inequality at one point, with G = M^+ (unnormalized).
double sensitivity(const Design& design, const DrugModel& drug, const ControlModel& control,
                   const KMatrix& k, double p, const DesignPoint& point);

SensitivityReport verify(const Design& design, const DrugModel& drug, const ControlModel& control,
                         const CriterionSpec& spec, const VerifyOptions& options = {});

/// Drug-only problem: phi_p(K11) over designs on the dose range.
SensitivityReport verify_induced(const InducedDesign& design, const DrugModel& drug,
                                 const Matrix& k11, double p, const VerifyOptions& options = {});

/// dose,value rows; the control point (if any) is written with dose "C".
void write_sensitivity_csv(std::ostream& out, const SensitivityReport& report);

}  // namespace acdesign
