#include "acdesign/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "acdesign/errors.hpp"
#include "acdesign/scalar_search.hpp"

namespace acdesign {

namespace {

constexpr int kValidationGrid = 1000;

bool is_probability_family(Family f) { return f == Family::NegBinomial || f == Family::Binomial; }

std::string fmt_dose(double d) {
  std::ostringstream os;
  os << d;
  return os.str();
}

void require_in_range(const DrugModel& model, double d) {
  if (!std::isfinite(d) || !model.range().contains(d)) {
    throw DomainError("dose " + fmt_dose(d) + " outside [" + fmt_dose(model.range().lower) + ", " +
                      fmt_dose(model.range().upper) + "]");
  }
}

// Michaelis-Menten curve at d = 0 is exactly zero; the information has a finite limit there.
bool is_mm_origin(const DrugModel& model, double d) {
  return model.mean().kind() == MeanFunction::Kind::MichaelisMenten && d == 0.0;
}

}  // namespace

std::string_view to_string(Family family) {
  switch (family) {
    case Family::Normal: return "normal";
    case Family::NegBinomial: return "negbinomial";
    case Family::Binomial: return "binomial";
    case Family::Poisson: return "poisson";
  }
  return "unknown";
}

Family family_from_string(std::string_view name) {
  if (name == "normal") return Family::Normal;
  if (name == "negbinomial" || name == "negative-binomial" || name == "nb") return Family::NegBinomial;
  if (name == "binomial" || name == "bernoulli") return Family::Binomial;
  if (name == "poisson") return Family::Poisson;
  throw ValidationError("unknown family '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// MeanFunction

MeanFunction::MeanFunction(Kind kind, double e0, double emax, double ed50)
    : kind_(kind), e0_(e0), emax_(emax), ed50_(ed50) {
  if (!std::isfinite(e0) || !std::isfinite(emax) || !std::isfinite(ed50)) {
    throw ValidationError("mean function parameters must be finite");
  }
  if (ed50 <= 0.0) throw ValidationError("ed50 parameter must be positive");
  if (emax == 0.0) throw ValidationError("emax parameter must be nonzero (flat curve)");
}

MeanFunction MeanFunction::michaelis_menten(double emax, double ed50) {
  return MeanFunction(Kind::MichaelisMenten, 0.0, emax, ed50);
}

MeanFunction MeanFunction::emax(double e0, double emax, double ed50) {
  return MeanFunction(Kind::Emax, e0, emax, ed50);
}

double MeanFunction::value(double d) const { return e0_ + emax_ * d / (ed50_ + d); }

Vector MeanFunction::gradient(double d) const {
  const double s = ed50_ + d;
  Vector g(parameter_count());
  int i = 0;
  if (kind_ == Kind::Emax) g(i++) = 1.0;
  g(i++) = d / s;
  g(i) = -emax_ * d / (s * s);
  return g;
}

double MeanFunction::slope(double d) const {
  const double s = ed50_ + d;
  return emax_ * ed50_ / (s * s);
}

double MeanFunction::inverse(double level) const {
  const double y = level - e0_;
  const double denom = emax_ - y;
  if (denom == 0.0) return std::nan("");
  const double d = y * ed50_ / denom;
  return d >= 0.0 ? d : std::nan("");
}

Vector MeanFunction::relative_gradient(double d) const {
  if (kind_ == Kind::MichaelisMenten) {
    Vector g(2);
    g << 1.0 / emax_, -1.0 / (ed50_ + d);
    return g;
  }
  return gradient(d) / value(d);
}

// ---------------------------------------------------------------------------
// DrugModel

DrugModel::DrugModel(Family family, MeanFunction mean, DoseRange range, double sigma2, int r)
    : family_(family), mean_(mean), range_(range), sigma2_(sigma2), r_(r) {
  validate();
}

DrugModel DrugModel::normal(MeanFunction mean, DoseRange range, double sigma2) {
  return DrugModel(Family::Normal, mean, range, sigma2, 0);
}
DrugModel DrugModel::negbinomial(MeanFunction mean, DoseRange range, int r) {
  return DrugModel(Family::NegBinomial, mean, range, std::nan(""), r);
}
DrugModel DrugModel::binomial(MeanFunction mean, DoseRange range) {
  return DrugModel(Family::Binomial, mean, range, std::nan(""), 0);
}
DrugModel DrugModel::poisson(MeanFunction mean, DoseRange range) {
  return DrugModel(Family::Poisson, mean, range, std::nan(""), 0);
}

int DrugModel::parameter_count() const {
  return mean_.parameter_count() + (family_ == Family::Normal ? 1 : 0);
}

void DrugModel::validate() const {
  if (!std::isfinite(range_.lower) || !std::isfinite(range_.upper) || range_.lower < 0.0 ||
      range_.lower >= range_.upper) {
    throw ValidationError("dose range must satisfy 0 <= L < R");
  }
  if (family_ == Family::Normal && !(sigma2_ > 0.0 && std::isfinite(sigma2_))) {
    throw ValidationError("normal drug model needs sigma2 > 0");
  }
  if (family_ == Family::NegBinomial && r_ < 1) {
    throw ValidationError("negative binomial drug model needs r >= 1");
  }
  if (family_ == Family::Normal) return;

  // Monotone curves make the endpoints decisive; the grid also guards the interior.
  for (int i = 0; i <= kValidationGrid + 1; ++i) {
    const double d = i <= kValidationGrid
                         ? range_.lower + range_.width() * i / kValidationGrid
                         : range_.upper;
    const double v = mean_.value(d);
    const bool origin = mean_.kind() == MeanFunction::Kind::MichaelisMenten && d == 0.0;
    if (origin) continue;
    if (!(v > 0.0)) {
      throw ValidationError("mean curve must be positive on the dose range (value " + fmt_dose(v) +
                            " at dose " + fmt_dose(d) + ")");
    }
    if (is_probability_family(family_) && !(v < 1.0)) {
      throw ValidationError("success probability must stay below 1 on the dose range (value " +
                            fmt_dose(v) + " at dose " + fmt_dose(d) + ")");
    }
  }
}

// ---------------------------------------------------------------------------
// ControlModel

ControlModel::ControlModel(Family family, double mu, double sigma2, int r)
    : family_(family), mu_(mu), sigma2_(sigma2), r_(r) {
  if (!std::isfinite(mu)) throw ValidationError("control mean must be finite");
  switch (family) {
    case Family::Normal:
      if (!(sigma2 > 0.0 && std::isfinite(sigma2))) {
        throw ValidationError("normal control needs sigma2 > 0");
      }
      break;
    case Family::NegBinomial:
      if (r < 1) throw ValidationError("negative binomial control needs r >= 1");
      [[fallthrough]];
    case Family::Binomial:
      if (!(mu > 0.0 && mu < 1.0)) throw ValidationError("control probability must lie in (0,1)");
      break;
    case Family::Poisson:
      if (!(mu > 0.0)) throw ValidationError("control rate must be positive");
      break;
  }
}

ControlModel ControlModel::normal(double mu, double sigma2) {
  return ControlModel(Family::Normal, mu, sigma2, 0);
}
ControlModel ControlModel::negbinomial(double mu, int r) {
  return ControlModel(Family::NegBinomial, mu, std::nan(""), r);
}
ControlModel ControlModel::binomial(double mu) {
  return ControlModel(Family::Binomial, mu, std::nan(""), 0);
}
ControlModel ControlModel::poisson(double mu) {
  return ControlModel(Family::Poisson, mu, std::nan(""), 0);
}

double ControlModel::expected_response() const {
  if (family_ == Family::NegBinomial) return r_ * (1.0 - mu_) / mu_;
  return mu_;
}

Vector ControlModel::expected_response_gradient() const {
  Vector g = Vector::Zero(parameter_count());
  g(0) = family_ == Family::NegBinomial ? -r_ / (mu_ * mu_) : 1.0;
  return g;
}

// ---------------------------------------------------------------------------
// Free functions

double mean(const DrugModel& model, double d) {
  require_in_range(model, d);
  return model.mean().value(d);
}

Vector mean_grad(const DrugModel& model, double d) {
  require_in_range(model, d);
  return model.mean().gradient(d);
}

double response_mean(const DrugModel& model, double d) {
  const double p = mean(model, d);
  if (model.family() == Family::NegBinomial) return model.r() * (1.0 - p) / p;
  return p;
}

Vector response_mean_grad(const DrugModel& model, double d) {
  require_in_range(model, d);
  const int s1 = model.parameter_count();
  Vector g = Vector::Zero(s1);
  const auto& m = model.mean();
  if (model.family() == Family::NegBinomial) {
    const double p = m.value(d);
    g.head(m.parameter_count()) = -model.r() / p * m.relative_gradient(d);
  } else {
    g.head(m.parameter_count()) = m.gradient(d);
  }
  return g;
}

double response_mean_slope(const DrugModel& model, double d) {
  require_in_range(model, d);
  const auto& m = model.mean();
  if (model.family() == Family::NegBinomial) {
    const double p = m.value(d);
    return -model.r() * m.slope(d) / (p * p);
  }
  return m.slope(d);
}

Matrix fisher_drug(const DrugModel& model, double d) {
  require_in_range(model, d);
  const auto& m = model.mean();
  const int k = m.parameter_count();
  const int s1 = model.parameter_count();
  Matrix info = Matrix::Zero(s1, s1);

  if (model.family() == Family::Normal) {
    const Vector g = m.gradient(d);
    info.topLeftCorner(k, k) = g * g.transpose() / model.sigma2();
    info(k, k) = 1.0 / (2.0 * model.sigma2() * model.sigma2());
    return info;
  }

  const double p = m.value(d);
  const bool origin = is_mm_origin(model, d);
  if (!origin && !(p > 0.0)) {
    throw SingularInformation("mean curve is not positive at dose " + fmt_dose(d));
  }
  if (model.family() != Family::Poisson && !(p < 1.0)) {
    throw SingularInformation("success probability reaches 1 at dose " + fmt_dose(d));
  }
  // Everything is written as a multiple of (grad/p)(grad/p)^T so the d -> 0 limit is exact.
  const Vector f = m.relative_gradient(d);
  double scale = 0.0;
  switch (model.family()) {
    case Family::NegBinomial: scale = model.r() / (1.0 - p); break;
    case Family::Binomial: scale = p / (1.0 - p); break;
    case Family::Poisson: scale = p; break;
    case Family::Normal: break;
  }
  info = scale * f * f.transpose();
  return info;
}

Matrix fisher_control(const ControlModel& model) {
  const double mu = model.mu();
  switch (model.family()) {
    case Family::Normal: {
      Matrix info = Matrix::Zero(2, 2);
      info(0, 0) = 1.0 / model.sigma2();
      info(1, 1) = 1.0 / (2.0 * model.sigma2() * model.sigma2());
      return info;
    }
    case Family::NegBinomial: return Matrix::Constant(1, 1, model.r() / (mu * mu * (1.0 - mu)));
    case Family::Binomial: return Matrix::Constant(1, 1, 1.0 / (mu * (1.0 - mu)));
    case Family::Poisson: return Matrix::Constant(1, 1, 1.0 / mu);
  }
  throw Unsupported("unknown family");
}

double target_dose(const DrugModel& drug, const ControlModel& control) {
  const double delta = control.expected_response();
  const auto& m = drug.mean();
  const auto& range = drug.range();
  // Curve level whose expected response equals delta.
  const double level =
      drug.family() == Family::NegBinomial ? drug.r() / (drug.r() + delta) : delta;

  const double lo_val = m.value(range.lower);
  const double hi_val = m.value(range.upper);
  const double vmin = std::min(lo_val, hi_val);
  const double vmax = std::max(lo_val, hi_val);
  const double slack = 1e-12 * (std::abs(vmax) + std::abs(vmin));
  if (level < vmin - slack || level > vmax + slack) {
    std::ostringstream os;
    os << "control response " << delta << " not attained on the dose range (curve spans ["
       << vmin << ", " << vmax << "])";
    throw NoTargetDose(os.str());
  }

  const double tol = 1e-10 * range.width();
  double d = m.inverse(level);
  if (std::isfinite(d) && d >= range.lower - tol && d <= range.upper + tol) {
    return std::clamp(d, range.lower, range.upper);
  }
  // Rounding pushed the rational solve out of range; fall back to bisection.
  d = bisect_root([&](double x) { return m.value(x) - level; }, range.lower, range.upper, tol);
  return d;
}

TargetDoseGradient target_dose_grad(const DrugModel& drug, const ControlModel& control) {
  const double d = target_dose(drug, control);
  const double slope = response_mean_slope(drug, d);
  const double scale = std::abs(response_mean(drug, d)) + 1.0;
  if (!(std::abs(slope) > 1e-14 * scale)) {
    throw DomainError("mean curve is flat at the target dose; gradient is degenerate");
  }
  // F(d, theta) = k(theta_2) - h(d, theta_1) = 0.
  TargetDoseGradient g;
  g.drug = -response_mean_grad(drug, d) / slope;
  g.control = control.expected_response_gradient() / slope;
  return g;
}

}  // namespace acdesign
