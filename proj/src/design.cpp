#include "acdesign/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "acdesign/errors.hpp"

namespace acdesign {

namespace {
constexpr double kWeightSumTolerance = 1e-12;
}

Design::Design(std::vector<DesignPoint> points, std::vector<double> weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
  if (points_.empty()) throw ValidationError("design has no support points");
  if (points_.size() != weights_.size()) {
    throw ValidationError("design has " + std::to_string(points_.size()) + " points but " +
                          std::to_string(weights_.size()) + " weights");
  }
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w > 0.0) || !std::isfinite(w)) throw ValidationError("design weights must be positive");
    sum += w;
  }
  if (std::abs(sum - 1.0) > kWeightSumTolerance) {
    throw ValidationError("design weights sum to " + std::to_string(sum) + ", expected 1");
  }
  int controls = 0;
  std::vector<double> doses;
  for (const auto& p : points_) {
    if (p.arm == Arm::Control) {
      ++controls;
    } else {
      if (!std::isfinite(p.dose)) throw ValidationError("drug dose must be finite");
      doses.push_back(p.dose);
    }
  }
  if (controls > 1) throw ValidationError("design has more than one control point");
  std::sort(doses.begin(), doses.end());
  if (std::adjacent_find(doses.begin(), doses.end()) != doses.end()) {
    throw ValidationError("design has repeated drug doses");
  }
}

Design Design::normalized(std::vector<DesignPoint> points, std::vector<double> weights) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(sum > 0.0)) throw ValidationError("design weights must be positive");
  for (double& w : weights) w /= sum;
  return Design(std::move(points), std::move(weights));
}

bool Design::has_control() const {
  return std::any_of(points_.begin(), points_.end(),
                     [](const DesignPoint& p) { return p.arm == Arm::Control; });
}

double Design::control_weight() const {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (points_[i].arm == Arm::Control) return weights_[i];
  }
  return 0.0;
}

std::size_t Design::drug_point_count() const {
  return static_cast<std::size_t>(std::count_if(
      points_.begin(), points_.end(), [](const DesignPoint& p) { return p.arm == Arm::Drug; }));
}

InducedDesign induced(const Design& design) {
  InducedDesign out;
  double drug_mass = 0.0;
  for (std::size_t i = 0; i < design.size(); ++i) {
    if (design.points()[i].arm != Arm::Drug) continue;
    out.doses.push_back(design.points()[i].dose);
    out.weights.push_back(design.weights()[i]);
    drug_mass += design.weights()[i];
  }
  if (out.doses.empty()) throw ValidationError("design has no drug points");
  for (double& w : out.weights) w /= drug_mass;
  return out;
}

Design with_control(const InducedDesign& drug_part, double control_weight) {
  if (!(control_weight >= 0.0 && control_weight < 1.0)) {
    throw DomainError("control weight must lie in [0, 1)");
  }
  std::vector<DesignPoint> pts;
  std::vector<double> w;
  for (std::size_t i = 0; i < drug_part.doses.size(); ++i) {
    pts.push_back(DesignPoint::drug(drug_part.doses[i]));
    w.push_back((1.0 - control_weight) * drug_part.weights[i]);
  }
  if (control_weight > 0.0) {
    pts.push_back(DesignPoint::control());
    w.push_back(control_weight);
  }
  return Design::normalized(std::move(pts), std::move(w));
}

Matrix drug_information(const InducedDesign& design, const DrugModel& drug) {
  const int s1 = drug.parameter_count();
  Matrix m = Matrix::Zero(s1, s1);
  for (std::size_t i = 0; i < design.doses.size(); ++i) {
    m += design.weights[i] * fisher_drug(drug, design.doses[i]);
  }
  return m;
}

double rank_tolerance(const Eigen::VectorXd& eigenvalues) {
  const double lmax = eigenvalues.size() ? eigenvalues.cwiseAbs().maxCoeff() : 0.0;
  return static_cast<double>(eigenvalues.size()) * std::numeric_limits<double>::epsilon() * lmax;
}

InfoMatrix make_info(Matrix m) {
  InfoMatrix out;
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  out.rank_tolerance = rank_tolerance(es.eigenvalues());
  out.rank = static_cast<int>((es.eigenvalues().array() > out.rank_tolerance).count());
  out.matrix = std::move(m);
  return out;
}

InfoMatrix info_matrix(const Design& design, const DrugModel& drug, const ControlModel& control) {
  const int s1 = drug.parameter_count();
  const int s2 = control.parameter_count();
  Matrix m = Matrix::Zero(s1 + s2, s1 + s2);
  const Matrix i2 = fisher_control(control);
  for (std::size_t i = 0; i < design.size(); ++i) {
    const auto& p = design.points()[i];
    const double w = design.weights()[i];
    if (p.arm == Arm::Drug) {
      m.topLeftCorner(s1, s1) += w * fisher_drug(drug, p.dose);
    } else {
      m.bottomRightCorner(s2, s2) += w * i2;
    }
  }
  return make_info(std::move(m));
}

Matrix pseudo_inverse(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  const Eigen::VectorXd& lambda = es.eigenvalues();
  const double tol = rank_tolerance(lambda);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (std::abs(lambda(i)) > tol) inv(i) = 1.0 / lambda(i);
  }
  const Matrix& v = es.eigenvectors();
  Matrix out = v * inv.asDiagonal() * v.transpose();
  return 0.5 * (out + out.transpose());
}

Matrix pseudo_inverse(const InfoMatrix& m) { return pseudo_inverse(m.matrix); }

bool estimable(const Matrix& k, const InfoMatrix& m) {
  if (k.rows() != m.matrix.rows()) {
    throw DomainError("contrast has " + std::to_string(k.rows()) + " rows, information matrix is " +
                      std::to_string(m.matrix.rows()) + "-dimensional");
  }
  const Matrix proj = m.matrix * pseudo_inverse(m);
  const Matrix residual = k - proj * k;
  const double kmax = k.size() ? k.cwiseAbs().maxCoeff() : 0.0;
  const double rmax = residual.size() ? residual.cwiseAbs().maxCoeff() : 0.0;
  return rmax <= 1e-8 * (1.0 + kmax);
}

std::vector<int> round_design(std::span<const double> weights, int n) {
  const int l = static_cast<int>(weights.size());
  if (l == 0) throw DomainError("no support points to round");
  if (n < l) {
    throw DomainError("sample size " + std::to_string(n) + " smaller than support size " +
                      std::to_string(l));
  }
  std::vector<int> alloc(l);
  for (int i = 0; i < l; ++i) {
    alloc[i] = static_cast<int>(std::ceil((n - 0.5 * l) * weights[i]));
  }
  int total = std::accumulate(alloc.begin(), alloc.end(), 0);
  while (total < n) {
    int best = 0;
    for (int i = 1; i < l; ++i) {
      if (alloc[i] / weights[i] < alloc[best] / weights[best]) best = i;
    }
    ++alloc[best];
    ++total;
  }
  while (total > n) {
    int best = 0;
    for (int i = 1; i < l; ++i) {
      if ((alloc[i] - 1) / weights[i] > (alloc[best] - 1) / weights[best]) best = i;
    }
    --alloc[best];
    --total;
  }
  return alloc;
}

std::vector<int> round_design(const Design& design, int n) {
  return round_design(std::span<const double>(design.weights()), n);
}

Design merge_close(const Design& design, double radius) {
  struct Item {
    double dose;
    double weight;
  };
  std::vector<Item> drug;
  double control = 0.0;
  for (std::size_t i = 0; i < design.size(); ++i) {
    const auto& p = design.points()[i];
    if (p.arm == Arm::Control) {
      control += design.weights()[i];
    } else {
      drug.push_back({p.dose, design.weights()[i]});
    }
  }
  std::sort(drug.begin(), drug.end(), [](const Item& a, const Item& b) { return a.dose < b.dose; });
  std::vector<Item> merged;
  for (const auto& it : drug) {
    if (!merged.empty() && it.dose - merged.back().dose < radius) {
      auto& m = merged.back();
      const double w = m.weight + it.weight;
      m.dose = (m.dose * m.weight + it.dose * it.weight) / w;
      m.weight = w;
    } else {
      merged.push_back(it);
    }
  }
  std::vector<DesignPoint> pts;
  std::vector<double> w;
  for (const auto& m : merged) {
    pts.push_back(DesignPoint::drug(m.dose));
    w.push_back(m.weight);
  }
  if (control > 0.0) {
    pts.push_back(DesignPoint::control());
    w.push_back(control);
  }
  return Design::normalized(std::move(pts), std::move(w));
}

}  // namespace acdesign
