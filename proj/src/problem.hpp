#pragma once

// Shared machinery behind verify() and the numeric solver: a criterion bound to a
// model, evaluated on raw information matrices, plus the normalized sensitivity.

#include <optional>
#include <vector>

#include "acdesign/criteria.hpp"

namespace acdesign::detail {

class Problem {
 public:
  static Problem joint(const DrugModel& drug, const ControlModel& control, const CriterionSpec& spec);
  static Problem drug_only(const DrugModel& drug, const Matrix& k11, double p);

  const DrugModel& drug() const { return drug_; }
  bool has_control() const { return control_.has_value(); }
  const ControlModel& control() const { return *control_; }
  const Matrix& k() const { return k_; }
  double p() const { return p_; }
  int s1() const { return s1_; }
  int dim() const { return static_cast<int>(k_.rows()); }
  const DoseRange& range() const { return drug_.range(); }

  /// Information of a single observation, embedded in the problem dimension.
  Matrix point_info(const DesignPoint& x) const;
  Matrix moment(const std::vector<DesignPoint>& points, const std::vector<double>& weights) const;
  Matrix moment(const Design& design) const { return moment(design.points(), design.weights()); }

  /// phi_p of M, -inf when K is not estimable.
  double value(const Matrix& m) const;

 private:
  Problem(DrugModel drug, std::optional<ControlModel> control, Matrix k, double p);

  DrugModel drug_;
  std::optional<ControlModel> control_;
  Matrix k_;
  double p_;
  int s1_;
};

/// Everything needed to evaluate the normalized sensitivity tr(I(x) A) - 1.
struct Gradient {
  bool estimable = false;
  double value = kMinusInfinity;  // phi_p
  double trace = 0.0;             // T = tr(B^{-p}), or lambda_min(B^{-1}) for p = -inf
  int rank = 0;
  Matrix pinv;                    // M^+
  Matrix c_over_t;                // C / T, t x t
  Matrix a;                       // G K (C/T) K^T G^T with G = M^+
  Matrix null_basis;              // columns spanning ker(M)
  bool simple_extreme = true;     // p = -inf: largest eigenvalue of B is simple
};

Gradient gradient(const Problem& problem, const Matrix& m);

/// Normalized sensitivity through A: tr(I A) - 1.
double sensitivity_from(const Matrix& a, const Matrix& info);

/// One-sided relative directional derivative of phi_p towards I(x), by forward difference.
double sensitivity_numeric(const Problem& problem, const Matrix& m, double value, const Matrix& info);

/// Chooses G = M^+ + N Z minimizing the maximal sensitivity over the given points and
/// returns the matching A. Falls back to the Moore-Penrose choice when M is regular.
Matrix adjusted_a(const Problem& problem, const Gradient& g, const Matrix& k,
                  const std::vector<Matrix>& infos);

}  // namespace acdesign::detail
