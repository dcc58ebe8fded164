#pragma once

#include <Eigen/Dense>
#include <string>
#include <string_view>

namespace acdesign {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Family { Normal, NegBinomial, Binomial, Poisson };

std::string_view to_string(Family family);
Family family_from_string(std::string_view name);

/// Dose-response curve of the new compound.
///
/// Michaelis-Menten: emax * d / (ed50 + d).
/// Emax:             e0 + emax * d / (ed50 + d).
class MeanFunction {
 public:
  enum class Kind { MichaelisMenten, Emax };

  static MeanFunction michaelis_menten(double emax, double ed50);
  static MeanFunction emax(double e0, double emax, double ed50);

  Kind kind() const { return kind_; }
  double e0() const { return e0_; }
  double emax() const { return emax_; }
  double ed50() const { return ed50_; }
  int parameter_count() const { return kind_ == Kind::Emax ? 3 : 2; }

  double value(double d) const;
  /// Gradient with respect to (e0,) emax, ed50.
  Vector gradient(double d) const;
  /// d/dd of the curve.
  double slope(double d) const;
  /// Dose at which the curve equals `level`; NaN when the level is not attained on [0, inf).
  double inverse(double level) const;

  /// gradient(d) / value(d). Finite at d = 0 for Michaelis-Menten.
  Vector relative_gradient(double d) const;

 private:
  MeanFunction(Kind kind, double e0, double emax, double ed50);

  Kind kind_;
  double e0_;
  double emax_;
  double ed50_;
};

struct DoseRange {
  double lower;
  double upper;
  double width() const { return upper - lower; }
  bool contains(double d) const { return d >= lower && d <= upper; }
};

/// Response model of the new compound.
///
/// theta_1 = (mean parameters [, sigma_1^2]). For Binomial and NegBinomial the
/// curve is a success probability, for Poisson a rate.
class DrugModel {
 public:
  static DrugModel normal(MeanFunction mean, DoseRange range, double sigma2);
  static DrugModel negbinomial(MeanFunction mean, DoseRange range, int r);
  static DrugModel binomial(MeanFunction mean, DoseRange range);
  static DrugModel poisson(MeanFunction mean, DoseRange range);

  Family family() const { return family_; }
  const MeanFunction& mean() const { return mean_; }
  const DoseRange& range() const { return range_; }
  double sigma2() const { return sigma2_; }
  int r() const { return r_; }

  /// Dimension s1 of theta_1.
  int parameter_count() const;

 private:
  DrugModel(Family family, MeanFunction mean, DoseRange range, double sigma2, int r);
  void validate() const;

  Family family_;
  MeanFunction mean_;
  DoseRange range_;
  double sigma2_;
  int r_;
};

/// Response model of the active control. theta_2 = mu, or (mu, sigma_2^2) for Normal.
class ControlModel {
 public:
  static ControlModel normal(double mu, double sigma2);
  static ControlModel negbinomial(double mu, int r);
  static ControlModel binomial(double mu);
  static ControlModel poisson(double mu);

  Family family() const { return family_; }
  double mu() const { return mu_; }
  double sigma2() const { return sigma2_; }
  int r() const { return r_; }
  int parameter_count() const { return family_ == Family::Normal ? 2 : 1; }

  /// Delta = k(theta_2), on the response-mean scale (r(1-mu)/mu for NegBinomial).
  double expected_response() const;
  /// dk/dtheta_2.
  Vector expected_response_gradient() const;

 private:
  ControlModel(Family family, double mu, double sigma2, int r);

  Family family_;
  double mu_;
  double sigma2_;
  int r_;
};

/// eta(d, theta_1): the curve value (probability for Binomial/NegBinomial, rate for Poisson).
double mean(const DrugModel& model, double d);
/// d eta / d(mean parameters).
Vector mean_grad(const DrugModel& model, double d);

/// Expected response at dose d: eta, or r1(1-pi)/pi for NegBinomial.
double response_mean(const DrugModel& model, double d);
/// Gradient of response_mean over theta_1 (length s1, zero in the variance slot).
Vector response_mean_grad(const DrugModel& model, double d);
/// d response_mean / dd.
double response_mean_slope(const DrugModel& model, double d);

/// I_1(d, theta_1), s1 x s1.
Matrix fisher_drug(const DrugModel& model, double d);
/// I_2(theta_2), s2 x s2.
Matrix fisher_control(const ControlModel& model);

/// Smallest dose whose expected response equals the control's.
double target_dose(const DrugModel& drug, const ControlModel& control);

struct TargetDoseGradient {
  Vector drug;     // d d* / d theta_1, length s1
  Vector control;  // d d* / d theta_2, length s2
};

/// Gradient of the target dose by the implicit function theorem.
TargetDoseGradient target_dose_grad(const DrugModel& drug, const ControlModel& control);

}  // namespace acdesign
