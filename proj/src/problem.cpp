#include "problem.hpp"

#include <cmath>
#include <string>

#include "acdesign/errors.hpp"

namespace acdesign::detail {

namespace {

constexpr double kDirectionalStep = 1e-6;
constexpr double kSimpleEigenGap = 1e-8;

double log_sum_exp(const Eigen::ArrayXd& x) {
  const double m = x.maxCoeff();
  return m + std::log((x - m).exp().sum());
}

}  // namespace

Problem::Problem(DrugModel drug, std::optional<ControlModel> control, Matrix k, double p)
    : drug_(std::move(drug)), control_(std::move(control)), k_(std::move(k)), p_(p),
      s1_(drug_.parameter_count()) {}

Problem Problem::joint(const DrugModel& drug, const ControlModel& control, const CriterionSpec& spec) {
  const int dim = drug.parameter_count() + control.parameter_count();
  if (spec.kind == CriterionSpec::Kind::AC) {
    return Problem(drug, control, ac_contrast(drug, control), -1.0);
  }
  if (!spec.k) throw ValidationError("phi_p criterion needs a contrast matrix K");
  if (spec.k->full().rows() != dim) {
    throw ValidationError("K has " + std::to_string(spec.k->full().rows()) + " rows, expected s1 + s2 = " +
                          std::to_string(dim));
  }
  return Problem(drug, control, spec.k->full(), spec.p);
}

Problem Problem::drug_only(const DrugModel& drug, const Matrix& k11, double p) {
  if (k11.rows() != drug.parameter_count()) {
    throw ValidationError("K11 has " + std::to_string(k11.rows()) + " rows, expected s1 = " +
                          std::to_string(drug.parameter_count()));
  }
  if (std::isnan(p) || p >= 1.0) throw DomainError("criterion exponent p must lie in [-inf, 1)");
  return Problem(drug, std::nullopt, k11, p);
}

Matrix Problem::point_info(const DesignPoint& x) const {
  Matrix info = Matrix::Zero(dim(), dim());
  if (x.arm == Arm::Drug) {
    info.topLeftCorner(s1_, s1_) = fisher_drug(drug_, x.dose);
  } else {
    if (!control_) throw DomainError("drug-only problem has no control point");
    const int s2 = control_->parameter_count();
    info.bottomRightCorner(s2, s2) = fisher_control(*control_);
  }
  return info;
}

Matrix Problem::moment(const std::vector<DesignPoint>& points, const std::vector<double>& weights) const {
  Matrix m = Matrix::Zero(dim(), dim());
  for (std::size_t i = 0; i < points.size(); ++i) m += weights[i] * point_info(points[i]);
  return m;
}

double Problem::value(const Matrix& m) const {
  // One eigendecomposition of M, one of B; same cutoffs as pseudo_inverse/estimable.
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  const Eigen::VectorXd& lambda = es.eigenvalues();
  const double tol = rank_tolerance(lambda);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (std::abs(lambda(i)) > tol) inv(i) = 1.0 / lambda(i);
  }
  const Matrix vk = es.eigenvectors().transpose() * k_;
  const Matrix projected = es.eigenvectors() * ((inv.array() != 0.0).cast<double>().matrix().asDiagonal() * vk);
  const double kmax = k_.cwiseAbs().maxCoeff();
  if ((k_ - projected).cwiseAbs().maxCoeff() > 1e-8 * (1.0 + kmax)) return kMinusInfinity;
  const Matrix b = vk.transpose() * inv.asDiagonal() * vk;
  try {
    return phi_from_moment(b, p_);
  } catch (const NotEstimable&) {
    return kMinusInfinity;
  }
}

Gradient gradient(const Problem& problem, const Matrix& m) {
  Gradient g;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
  const Eigen::VectorXd& lambda = es.eigenvalues();
  const Matrix& v = es.eigenvectors();
  const double tol = rank_tolerance(lambda);

  Eigen::VectorXd inv = Eigen::VectorXd::Zero(lambda.size());
  std::vector<Eigen::Index> null_cols;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (std::abs(lambda(i)) > tol) {
      inv(i) = 1.0 / lambda(i);
    } else {
      null_cols.push_back(i);
    }
  }
  g.rank = static_cast<int>(lambda.size() - static_cast<Eigen::Index>(null_cols.size()));
  g.pinv = v * inv.asDiagonal() * v.transpose();
  g.pinv = 0.5 * (g.pinv + g.pinv.transpose());
  g.null_basis.resize(m.rows(), static_cast<Eigen::Index>(null_cols.size()));
  for (std::size_t j = 0; j < null_cols.size(); ++j) g.null_basis.col(j) = v.col(null_cols[j]);

  const Matrix& k = problem.k();
  const Matrix residual = k - m * (g.pinv * k);
  const double kmax = k.cwiseAbs().maxCoeff();
  if (residual.cwiseAbs().maxCoeff() > 1e-8 * (1.0 + kmax)) return g;

  const Matrix b = k.transpose() * g.pinv * k;
  Eigen::SelfAdjointEigenSolver<Matrix> eb(0.5 * (b + b.transpose()));
  const Eigen::VectorXd& mu = eb.eigenvalues();
  if (!(mu.minCoeff() > 0.0)) return g;
  g.estimable = true;
  g.value = phi_from_moment(b, problem.p());

  const double p = problem.p();
  const Eigen::Index t = mu.size();
  if (std::isinf(p)) {
    const double top = mu(t - 1);
    g.simple_extreme = t == 1 || (top - mu(t - 2)) > kSimpleEigenGap * top;
    const Eigen::VectorXd u = eb.eigenvectors().col(t - 1);
    g.trace = 1.0 / top;
    g.c_over_t = u * u.transpose() / top;
  } else {
    const Eigen::ArrayXd logmu = mu.array().log();
    const double lse = log_sum_exp(-p * logmu);
    g.trace = std::exp(lse);
    const Eigen::VectorXd omega = ((-(p + 1.0)) * logmu - lse).exp().matrix();
    g.c_over_t = eb.eigenvectors() * omega.asDiagonal() * eb.eigenvectors().transpose();
  }
  const Matrix gk = g.pinv * k;
  g.a = gk * g.c_over_t * gk.transpose();
  return g;
}

double sensitivity_from(const Matrix& a, const Matrix& info) { return info.cwiseProduct(a).sum() - 1.0; }

double sensitivity_numeric(const Problem& problem, const Matrix& m, double value, const Matrix& info) {
  const double moved = problem.value((1.0 - kDirectionalStep) * m + kDirectionalStep * info);
  return (moved - value) / (kDirectionalStep * value);
}

Matrix adjusted_a(const Problem& problem, const Gradient& g, const Matrix& k,
                  const std::vector<Matrix>& infos) {
  (void)problem;
  const Eigen::Index nz = g.null_basis.cols();
  if (nz == 0 || infos.empty()) return g.a;
  const Eigen::Index t = k.cols();
  const Eigen::Index m = nz * t;
  const Matrix& n = g.null_basis;
  const Matrix& c = g.c_over_t;
  const Matrix a0 = g.pinv * k;
  const Matrix a0c = a0 * c;

  // s_j(z) = const_j + lin_j^T z + z^T quad_j z, z = vec(Z) column-major.
  const std::size_t count = infos.size();
  std::vector<double> cst(count);
  std::vector<Eigen::VectorXd> lin(count);
  std::vector<Matrix> quad(count);
  for (std::size_t j = 0; j < count; ++j) {
    const Matrix& info = infos[j];
    cst[j] = (a0.transpose() * info * a0c).trace() - 1.0;
    const Matrix pj = n.transpose() * info * n;
    const Matrix qj = n.transpose() * info * a0c;
    lin[j].resize(m);
    quad[j].resize(m, m);
    for (Eigen::Index b = 0; b < t; ++b) {
      for (Eigen::Index a = 0; a < nz; ++a) {
        lin[j](a + b * nz) = 2.0 * qj(a, b);
        for (Eigen::Index b2 = 0; b2 < t; ++b2) {
          for (Eigen::Index a2 = 0; a2 < nz; ++a2) quad[j](a + b * nz, a2 + b2 * nz) = c(b, b2) * pj(a, a2);
        }
      }
    }
  }

  auto values = [&](const Eigen::VectorXd& z) {
    Eigen::ArrayXd q(static_cast<Eigen::Index>(count));
    for (std::size_t j = 0; j < count; ++j) {
      q(static_cast<Eigen::Index>(j)) = cst[j] + lin[j].dot(z) + z.dot(quad[j] * z);
    }
    return q;
  };
  auto smoothed = [&](const Eigen::VectorXd& z, double beta) {
    const Eigen::ArrayXd q = values(z);
    return log_sum_exp(beta * q) / beta;
  };

  Eigen::VectorXd z = Eigen::VectorXd::Zero(m);
  for (double beta = 10.0; beta <= 1e7; beta *= 10.0) {
    for (int it = 0; it < 100; ++it) {
      const Eigen::ArrayXd q = values(z);
      const Eigen::ArrayXd scaled = beta * q;
      const double top = scaled.maxCoeff();
      Eigen::ArrayXd pi = (scaled - top).exp();
      pi /= pi.sum();
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(m);
      Matrix hess = Matrix::Zero(m, m);
      Matrix outer = Matrix::Zero(m, m);
      for (std::size_t j = 0; j < count; ++j) {
        const double w = pi(static_cast<Eigen::Index>(j));
        if (w < 1e-300) continue;
        const Eigen::VectorXd vj = lin[j] + 2.0 * quad[j] * z;
        grad += w * vj;
        hess += 2.0 * w * quad[j];
        outer += w * vj * vj.transpose();
      }
      hess += beta * (outer - grad * grad.transpose());
      if (grad.norm() < 1e-15) break;
      hess += (1e-12 * (1.0 + hess.trace())) * Matrix::Identity(m, m);
      const Eigen::VectorXd step = hess.ldlt().solve(-grad);
      const double f0 = smoothed(z, beta);
      const double slope = grad.dot(step);
      if (!(slope < 0.0)) break;
      double s = 1.0;
      while (s > 1e-12 && smoothed(z + s * step, beta) > f0 + 1e-4 * s * slope) s *= 0.5;
      if (s <= 1e-12) break;
      z += s * step;
      if ((s * step).norm() < 1e-14 * (1.0 + z.norm())) break;
    }
  }

  // Keep the adjustment only if it actually lowers the worst point.
  if (values(z).maxCoeff() >= values(Eigen::VectorXd::Zero(m)).maxCoeff()) return g.a;
  Matrix zmat = Eigen::Map<const Matrix>(z.data(), nz, t);
  const Matrix y = a0 + n * zmat;
  return y * c * y.transpose();
}

}  // namespace acdesign::detail
