#pragma once

#include <limits>
#include <optional>

#include "acdesign/design.hpp"

namespace acdesign {

inline constexpr double kMinusInfinity = -std::numeric_limits<double>::infinity();

/// Contrast matrix K of dimension (s1 + s2) x t, optionally block-diagonal.
class KMatrix {
 public:
  static KMatrix block(Matrix k11, Matrix k22);
  static KMatrix general(Matrix k);
  /// Block identity: the D-criterion for the full parameter vector.
  static KMatrix identity(int s1, int s2);

  const Matrix& full() const { return full_; }
  bool is_block() const { return is_block_; }
  const Matrix& k11() const;
  const Matrix& k22() const;
  int t() const { return static_cast<int>(full_.cols()); }
  int t1() const { return static_cast<int>(k11_.cols()); }
  int t2() const { return static_cast<int>(k22_.cols()); }

 private:
  KMatrix() = default;

  Matrix full_;
  Matrix k11_;
  Matrix k22_;
  bool is_block_ = false;
};

/// phi_p(K) with p in [-inf, 1), or the AC criterion (phi_{-1} with the stacked target-dose gradient).
struct CriterionSpec {
  enum class Kind { PhiP, AC };

  Kind kind = Kind::PhiP;
  double p = 0.0;
  std::optional<KMatrix> k;

  static CriterionSpec phi(double p, KMatrix k);
  static CriterionSpec ac();
};

/// phi_p evaluated from B = K^T M^- K (positive definite, t x t).
double phi_from_moment(const Matrix& b, double p);

/// Value of phi_p, or -inf when K is not estimable under M.
double phi_p_or_minus_inf(const InfoMatrix& m, const Matrix& k, double p);

double phi_p(const Design& design, const DrugModel& drug, const ControlModel& control,
             const KMatrix& k, double p);

double phi_p_reduced(const InducedDesign& design, const DrugModel& drug, const Matrix& k11,
                     double p);

/// Ratio of drug to control mass for a block K: control weight is 1/(1 + rho).
double rho_p(const InducedDesign& optimal_induced, const DrugModel& drug,
             const ControlModel& control, const KMatrix& k, double p);

/// Stacked (d d*/d theta_1, d d*/d theta_2) as an (s1 + s2) x 1 contrast.
Matrix ac_contrast(const DrugModel& drug, const ControlModel& control);

/// Asymptotic variance functional of the target-dose estimator (smaller is better).
double psi_ac(const Design& design, const DrugModel& drug, const ControlModel& control);

/// Same value through the one-dimensional-control representation (s2 = 1 only).
double psi_ac_scalar_control(const Design& design, const DrugModel& drug,
                             const ControlModel& control);

/// Phi_0(design) / Phi_0(reference) for the contrast K.
double d_efficiency(const Design& design, const Design& reference, const DrugModel& drug,
                    const ControlModel& control, const KMatrix& k);

/// psi(reference) / psi(design).
double ac_efficiency(const Design& design, const Design& reference, const DrugModel& drug,
                     const ControlModel& control);

}  // namespace acdesign
