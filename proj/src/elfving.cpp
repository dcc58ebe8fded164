#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "acdesign/errors.hpp"
#include "acdesign/solvers.hpp"

namespace acdesign {

namespace {

constexpr double kIdentityTolerance = 1e-8;

double response_scale(const DrugModel& drug, double p) {
  switch (drug.family()) {
    case Family::NegBinomial: return drug.r() / (1.0 - p);
    case Family::Binomial: return p / (1.0 - p);
    case Family::Poisson: return p;
    case Family::Normal: return 1.0;
  }
  return 1.0;
}

// Weight on x in the two-point design {x, R}: a(R)|R - d*| / (a(R)|R - d*| + a(x)|x - d*|),
// with a(d) proportional to |f_2(d)|.
double threshold_weight(const DrugModel& drug, double x, double dstar) {
  const double hi = drug.range().upper;
  const double ar = std::abs(elfving_vector(drug, hi)(1));
  const double ax = std::abs(elfving_vector(drug, x)(1));
  const double num = ar * std::abs(hi - dstar);
  return num / (num + ax * std::abs(x - dstar));
}

double family_drug_share(const DrugModel& drug, const ControlModel& control, double delta) {
  const double mu = control.mu();
  double num = 0.0, den = 0.0, a = 0.0, b = 0.0;
  switch (control.family()) {
    case Family::Normal:
      return std::sqrt(delta) / (std::sqrt(delta) + std::sqrt(control.sigma2()));
    case Family::NegBinomial: {
      const double r2 = control.r();
      num = delta * mu * mu - std::sqrt((1.0 - mu) * delta * mu * mu * r2);
      den = delta * mu * mu - (1.0 - mu) * r2;
      a = std::sqrt(delta * mu * mu);
      b = std::sqrt((1.0 - mu) * r2);
      break;
    }
    case Family::Binomial:
      num = delta - std::sqrt(delta * (1.0 - mu) * mu);
      den = delta - (1.0 - mu) * mu;
      a = std::sqrt(delta);
      b = std::sqrt(mu * (1.0 - mu));
      break;
    case Family::Poisson:
      return std::sqrt(delta) / (std::sqrt(delta) + std::sqrt(mu));
  }
  (void)drug;
  // The rational form is 0/0 when a = b; it equals a / (a + b) everywhere else.
  if (std::abs(den) <= 1e-10 * (a * a + b * b)) return a / (a + b);
  return num / den;
}

}  // namespace

std::string_view to_string(ElfvingSolution::Case c) {
  switch (c) {
    case ElfvingSolution::Case::OnePoint: return "one-point";
    case ElfvingSolution::Case::LeftThreshold: return "left-threshold";
    case ElfvingSolution::Case::RightThreshold: return "right-threshold";
    case ElfvingSolution::Case::TwoEndpoint: return "two-endpoint";
  }
  return "one-point";
}

Vector elfving_vector(const DrugModel& drug, double d) {
  const auto& m = drug.mean();
  if (drug.family() == Family::Normal) return m.gradient(d);
  const double p = m.value(d);
  return std::sqrt(response_scale(drug, p)) * m.relative_gradient(d);
}

ElfvingSolution c_opt_elfving_2d(const DrugModel& drug, const Vector& c) {
  const auto& mean = drug.mean();
  if (mean.kind() != MeanFunction::Kind::MichaelisMenten) {
    throw Unsupported("Elfving construction needs a two-parameter Michaelis-Menten mean");
  }
  if (c.size() != 2) throw DomainError("c must have two components");
  if (!(c(1) != 0.0) || c(0) * c(1) >= 0.0) {
    throw DomainError("c is not parallel to a mean gradient of the Michaelis-Menten curve");
  }
  const double t1 = mean.emax(), t2 = mean.ed50();
  const double lo = drug.range().lower, hi = drug.range().upper;
  const double width = hi - lo;
  // Gradient direction is (t2 + d, -t1), so c determines d*.
  double dstar = -t1 * c(0) / c(1) - t2;
  if (dstar < lo - 1e-10 * width || dstar > hi + 1e-10 * width) {
    throw DomainError("dose matching c lies outside the dose range");
  }
  dstar = std::clamp(dstar, lo, hi);

  ElfvingSolution sol;
  double x = lo;
  bool one_point = false;
  switch (drug.family()) {
    case Family::Normal: {
      const double s2 = std::sqrt(2.0);
      x = std::max(lo, (s2 * hi * hi * t2 + (s2 - 1.0) * hi * t2 * t2) / (2.0 * hi * hi + 4.0 * hi * t2 + t2 * t2));
      sol.threshold_low = x;
      sol.threshold_high = hi;
      one_point = dstar >= x;
      sol.case_tag = x > lo ? ElfvingSolution::Case::LeftThreshold : ElfvingSolution::Case::TwoEndpoint;
      break;
    }
    case Family::Poisson: {
      x = std::max(lo, hi * t2 / (3.0 * hi + 4.0 * t2));
      sol.threshold_low = x;
      sol.threshold_high = hi;
      one_point = dstar >= x;
      sol.case_tag = x > lo ? ElfvingSolution::Case::LeftThreshold : ElfvingSolution::Case::TwoEndpoint;
      break;
    }
    case Family::NegBinomial: {
      x = lo;
      sol.threshold_low = lo;
      sol.threshold_high = hi;
      sol.case_tag = ElfvingSolution::Case::TwoEndpoint;
      break;
    }
    case Family::Binomial: {
      const double s = std::sqrt(1.0 - mean.value(hi));
      const double x1 = std::max(lo, t2 * (1.0 - s) / (2.0 * t1 - 1.0 + s));
      const double den2 = 2.0 * t1 - 1.0 - s;
      const double x2 = den2 > 0.0 ? std::min(hi, t2 * (1.0 + s) / den2) : hi;
      sol.threshold_low = x1;
      sol.threshold_high = x2;
      if (dstar < x1) {
        x = x1;
        sol.case_tag = ElfvingSolution::Case::LeftThreshold;
      } else if (dstar > x2) {
        x = x2;
        sol.case_tag = ElfvingSolution::Case::RightThreshold;
      } else {
        one_point = true;
      }
      break;
    }
  }

  if (!one_point) {
    if (!(x < hi)) throw InfeasibleGeometry("Elfving threshold is not below R");
    const double wx = threshold_weight(drug, x, dstar);
    if (wx >= 1.0 - 1e-14) {
      sol.doses = {x};
      sol.weights = {1.0};
    } else if (wx <= 1e-14) {
      sol.doses = {hi};
      sol.weights = {1.0};
    } else {
      sol.doses = {x, hi};
      sol.weights = {wx, 1.0 - wx};
    }
    if (sol.doses.size() == 1) sol.case_tag = ElfvingSolution::Case::OnePoint;
  } else {
    sol.case_tag = ElfvingSolution::Case::OnePoint;
    sol.doses = {dstar};
    sol.weights = {1.0};
  }

  // Elfving representation gamma c = sum eps_i w_i f(d_i).
  if (sol.doses.size() == 1) {
    const Vector f = elfving_vector(drug, sol.doses[0]);
    sol.gamma = f.norm() / c.norm();
    sol.signs = {f.dot(c) >= 0.0 ? 1 : -1};
  } else {
    Eigen::Matrix2d fm;
    fm.col(0) = elfving_vector(drug, sol.doses[0]);
    fm.col(1) = elfving_vector(drug, sol.doses[1]);
    const Eigen::Vector2d u = fm.partialPivLu().solve(Eigen::Vector2d(c(0), c(1)));
    const double total = u.cwiseAbs().sum();
    const double w_solve = std::abs(u(0)) / total;
    if (std::abs(w_solve - sol.weights[0]) > kIdentityTolerance) {
      throw Error("Elfving weights disagree with the two-point representation");
    }
    sol.gamma = 1.0 / total;
    sol.signs = {u(0) >= 0.0 ? 1 : -1, u(1) >= 0.0 ? 1 : -1};
  }
  Eigen::Vector2d rep = Eigen::Vector2d::Zero();
  Eigen::Matrix2d m1 = Eigen::Matrix2d::Zero();
  for (std::size_t i = 0; i < sol.doses.size(); ++i) {
    const Vector f = elfving_vector(drug, sol.doses[i]);
    rep += sol.signs[i] * sol.weights[i] * f;
    m1 += sol.weights[i] * f * f.transpose();
  }
  const Eigen::Vector2d target = sol.gamma * Eigen::Vector2d(c(0), c(1));
  if ((rep - target).norm() > kIdentityTolerance * std::max(1.0, target.norm())) {
    throw Error("Elfving representation identity violated");
  }
  const Vector c2 = c;
  sol.delta = c2.dot(pseudo_inverse(Matrix(m1)) * c2);
  return sol;
}

AcSolution ac_optimal_detailed(const DrugModel& drug, const ControlModel& control,
                               const SolveOptions& options) {
  const double dstar = target_dose(drug, control);
  const TargetDoseGradient g = target_dose_grad(drug, control);
  const Vector c = response_mean_grad(drug, dstar);

  InducedDesign induced_opt;
  std::string method;
  std::optional<ElfvingSolution> elfving;
  if (drug.mean().kind() == MeanFunction::Kind::MichaelisMenten) {
    ElfvingSolution el = c_opt_elfving_2d(drug, c.head(2));
    induced_opt.doses = el.doses;
    induced_opt.weights = el.weights;
    method = "closed-form/elfving-" + std::string(to_string(el.case_tag));
    elfving = std::move(el);
  } else {
    const Matrix k11 = g.drug;
    NumericInducedResult r = numeric_solve_induced(drug, k11, -1.0, options);
    induced_opt = std::move(r.design);
    method = r.converged ? "numeric/c-optimal" : "numeric/c-optimal-unconverged";
  }

  const InfoMatrix m1 = make_info(drug_information(induced_opt, drug));
  if (!estimable(Matrix(c), m1)) throw NotEstimable("drug arm: target-dose gradient not estimable");
  const double delta = c.dot(pseudo_inverse(m1) * c);
  const double rho = rho_p(induced_opt, drug, control, KMatrix::block(Matrix(g.drug), Matrix(g.control)), -1.0);
  const double share = rho / (1.0 + rho);
  double drug_share = share;
  if (drug.family() == control.family()) {
    drug_share = family_drug_share(drug, control, delta);
    if (std::abs(drug_share - share) > 1e-8) {
      throw Error("family allocation " + std::to_string(drug_share) + " disagrees with 1/(1 + rho) form " +
                  std::to_string(share));
    }
  }
  Design design = with_control(induced_opt, 1.0 / (1.0 + rho));
  const double psi = psi_ac(design, drug, control);
  return AcSolution{std::move(design), dstar, delta, rho, drug_share, psi, std::move(method), std::move(elfving)};
}

Design ac_optimal(const DrugModel& drug, const ControlModel& control, const SolveOptions& options) {
  return ac_optimal_detailed(drug, control, options).design;
}

double ac_efficiency(const Design& design, const DrugModel& drug, const ControlModel& control,
                     const SolveOptions& options) {
  return ac_efficiency(design, ac_optimal(drug, control, options), drug, control);
}

double d_efficiency(const Design& design, const DrugModel& drug, const ControlModel& control) {
  const KMatrix k = KMatrix::identity(drug.parameter_count(), control.parameter_count());
  if (auto closed = d_optimal_closed_form(drug, control)) return d_efficiency(design, *closed, drug, control, k);
  const NumericResult r = numeric_solve(drug, control, CriterionSpec::phi(0.0, k));
  return d_efficiency(design, r.design, drug, control, k);
}

}  // namespace acdesign
