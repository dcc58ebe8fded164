#include "acdesign/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "acdesign/errors.hpp"

namespace acdesign {

namespace {

constexpr double kEfficiencySlack = 1e-8;
// Surrogate exponent for rho at p = -inf.
constexpr double kRhoMinusInfinitySurrogate = -50.0;

Eigen::VectorXd moment_eigenvalues(const Matrix& b) {
  if (b.rows() != b.cols() || b.rows() == 0) throw DomainError("moment matrix must be square");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (b + b.transpose()), Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& lambda = es.eigenvalues();
  if (!(lambda.minCoeff() > 0.0)) {
    throw NotEstimable("K^T M^- K is singular; K must have full column rank");
  }
  return lambda;
}

double log_sum_exp(const Eigen::VectorXd& x) {
  const double m = x.maxCoeff();
  return m + std::log((x.array() - m).exp().sum());
}

// log tr(B^{-p}) for finite p.
double log_trace_power(const Eigen::VectorXd& lambda, double p) {
  return log_sum_exp((-p) * lambda.array().log().matrix());
}

void check_p(double p) {
  if (std::isnan(p) || p >= 1.0) throw DomainError("criterion exponent p must lie in [-inf, 1)");
}

}  // namespace

KMatrix KMatrix::block(Matrix k11, Matrix k22) {
  if (k11.cols() == 0 || k22.cols() == 0) throw ValidationError("K blocks need at least one column");
  KMatrix k;
  k.full_ = Matrix::Zero(k11.rows() + k22.rows(), k11.cols() + k22.cols());
  k.full_.topLeftCorner(k11.rows(), k11.cols()) = k11;
  k.full_.bottomRightCorner(k22.rows(), k22.cols()) = k22;
  k.k11_ = std::move(k11);
  k.k22_ = std::move(k22);
  k.is_block_ = true;
  Eigen::FullPivLU<Matrix> lu(k.full_);
  if (lu.rank() != k.t()) throw ValidationError("K must have full column rank");
  return k;
}

KMatrix KMatrix::general(Matrix full) {
  if (full.cols() == 0) throw ValidationError("K needs at least one column");
  Eigen::FullPivLU<Matrix> lu(full);
  if (lu.rank() != full.cols()) throw ValidationError("K must have full column rank");
  KMatrix k;
  k.full_ = std::move(full);
  return k;
}

KMatrix KMatrix::identity(int s1, int s2) {
  return block(Matrix::Identity(s1, s1), Matrix::Identity(s2, s2));
}

const Matrix& KMatrix::k11() const {
  if (!is_block_) throw Unsupported("K is not block-diagonal");
  return k11_;
}

const Matrix& KMatrix::k22() const {
  if (!is_block_) throw Unsupported("K is not block-diagonal");
  return k22_;
}

CriterionSpec CriterionSpec::phi(double p, KMatrix k) {
  check_p(p);
  CriterionSpec spec;
  spec.kind = Kind::PhiP;
  spec.p = p;
  spec.k = std::move(k);
  return spec;
}

CriterionSpec CriterionSpec::ac() {
  CriterionSpec spec;
  spec.kind = Kind::AC;
  spec.p = -1.0;
  return spec;
}

double phi_from_moment(const Matrix& b, double p) {
  check_p(p);
  const Eigen::VectorXd lambda = moment_eigenvalues(b);
  const double t = static_cast<double>(lambda.size());
  if (p == 0.0) return std::exp(-lambda.array().log().sum() / t);
  if (std::isinf(p)) return 1.0 / lambda.maxCoeff();
  return std::exp((log_trace_power(lambda, p) - std::log(t)) / p);
}

double phi_p_or_minus_inf(const InfoMatrix& m, const Matrix& k, double p) {
  if (!estimable(k, m)) return kMinusInfinity;
  const Matrix b = k.transpose() * pseudo_inverse(m) * k;
  try {
    return phi_from_moment(b, p);
  } catch (const NotEstimable&) {
    return kMinusInfinity;
  }
}

double phi_p(const Design& design, const DrugModel& drug, const ControlModel& control,
             const KMatrix& k, double p) {
  const InfoMatrix m = info_matrix(design, drug, control);
  if (!estimable(k.full(), m)) throw NotEstimable("K^T theta is not estimable under the design");
  return phi_from_moment(k.full().transpose() * pseudo_inverse(m) * k.full(), p);
}

double phi_p_reduced(const InducedDesign& design, const DrugModel& drug, const Matrix& k11,
                     double p) {
  const InfoMatrix m1 = make_info(drug_information(design, drug));
  if (!estimable(k11, m1)) throw NotEstimable("K11^T theta_1 is not estimable under the drug design");
  return phi_from_moment(k11.transpose() * pseudo_inverse(m1) * k11, p);
}

double rho_p(const InducedDesign& optimal_induced, const DrugModel& drug,
             const ControlModel& control, const KMatrix& k, double p) {
  check_p(p);
  if (!k.is_block()) throw Unsupported("rho_p requires a block K");
  if (p == 0.0) return static_cast<double>(k.t1()) / k.t2();
  const double q = std::isinf(p) ? kRhoMinusInfinitySurrogate : p;

  const InfoMatrix m1 = make_info(drug_information(optimal_induced, drug));
  if (!estimable(k.k11(), m1)) throw NotEstimable("K11^T theta_1 is not estimable under the drug design");
  const InfoMatrix i2 = make_info(fisher_control(control));
  if (!estimable(k.k22(), i2)) throw NotEstimable("K22^T theta_2 is not estimable");

  const Eigen::VectorXd l1 = moment_eigenvalues(k.k11().transpose() * pseudo_inverse(m1) * k.k11());
  const Eigen::VectorXd l2 = moment_eigenvalues(k.k22().transpose() * pseudo_inverse(i2) * k.k22());
  const double log_rho = (log_trace_power(l2, q) - log_trace_power(l1, q)) / (q - 1.0);
  return std::exp(log_rho);
}

Matrix ac_contrast(const DrugModel& drug, const ControlModel& control) {
  const TargetDoseGradient g = target_dose_grad(drug, control);
  Matrix k(g.drug.size() + g.control.size(), 1);
  k.col(0) << g.drug, g.control;
  return k;
}

double psi_ac(const Design& design, const DrugModel& drug, const ControlModel& control) {
  const TargetDoseGradient g = target_dose_grad(drug, control);
  const double wc = design.control_weight();
  if (!(wc > 0.0)) throw NotEstimable("control arm: design has no control observations");
  if (design.drug_point_count() == 0) throw NotEstimable("drug arm: design has no drug observations");

  const InfoMatrix m1 = make_info(drug_information(induced(design), drug));
  const Matrix g1 = g.drug;
  if (!estimable(g1, m1)) {
    throw NotEstimable("drug arm: d d*/d theta_1 is not in the range of M_1");
  }
  const InfoMatrix i2 = make_info(fisher_control(control));
  const Matrix g2 = g.control;
  if (!estimable(g2, i2)) {
    throw NotEstimable("control arm: d d*/d theta_2 is not in the range of I_2");
  }
  const double drug_term = g.drug.dot(pseudo_inverse(m1) * g.drug);
  const double control_term = g.control.dot(pseudo_inverse(i2) * g.control);
  return drug_term / (1.0 - wc) + control_term / wc;
}

double psi_ac_scalar_control(const Design& design, const DrugModel& drug,
                             const ControlModel& control) {
  if (control.parameter_count() != 1) {
    throw Unsupported("scalar-control representation needs a one-parameter control model");
  }
  const double wc = design.control_weight();
  if (!(wc > 0.0)) throw NotEstimable("control arm: design has no control observations");

  const double dstar = target_dose(drug, control);
  const double kprime = control.expected_response_gradient()(0);
  const double dd_dtheta2 = kprime / response_mean_slope(drug, dstar);
  const Vector c = response_mean_grad(drug, dstar);

  const InfoMatrix m1 = make_info(drug_information(induced(design), drug));
  if (!estimable(c, m1)) throw NotEstimable("drug arm: c is not in the range of M_1");
  const double i2 = fisher_control(control)(0, 0);

  const double factor = (dd_dtheta2 * dd_dtheta2) / (kprime * kprime);
  return factor * (c.dot(pseudo_inverse(m1) * c) / (1.0 - wc) + kprime * kprime / (i2 * wc));
}

namespace {

double checked_efficiency(double ratio) {
  if (!(ratio <= 1.0 + kEfficiencySlack)) {
    throw Error("efficiency " + std::to_string(ratio) + " exceeds 1: reference design is not optimal");
  }
  return std::clamp(ratio, 0.0, 1.0);
}

}  // namespace

double d_efficiency(const Design& design, const Design& reference, const DrugModel& drug,
                    const ControlModel& control, const KMatrix& k) {
  return checked_efficiency(phi_p(design, drug, control, k, 0.0) /
                            phi_p(reference, drug, control, k, 0.0));
}

double ac_efficiency(const Design& design, const Design& reference, const DrugModel& drug,
                     const ControlModel& control) {
  return checked_efficiency(psi_ac(reference, drug, control) / psi_ac(design, drug, control));
}

}  // namespace acdesign
