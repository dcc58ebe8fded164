#pragma once

#include <span>
#include <vector>

#include "acdesign/model.hpp"

namespace acdesign {

enum class Arm { Drug = 0, Control = 1 };

struct DesignPoint {
  double dose;  // ignored for the control arm
  Arm arm;

  static DesignPoint drug(double d) { return {d, Arm::Drug}; }
  static DesignPoint control() { return {0.0, Arm::Control}; }
};

/// Approximate design on (dose range x {drug}) + {(C, control)}.
///
/// Weights are strictly positive and sum to one; at most one control point;
/// drug doses pairwise distinct.
class Design {
 public:
  Design(std::vector<DesignPoint> points, std::vector<double> weights);

  /// Rescales positive weights to sum to one before validating.
  static Design normalized(std::vector<DesignPoint> points, std::vector<double> weights);

  const std::vector<DesignPoint>& points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return points_.size(); }

  bool has_control() const;
  double control_weight() const;
  std::size_t drug_point_count() const;

 private:
  std::vector<DesignPoint> points_;
  std::vector<double> weights_;
};

/// Restriction of a design to the drug doses, weights renormalised.
struct InducedDesign {
  std::vector<double> doses;
  std::vector<double> weights;
};

struct InfoMatrix {
  Matrix matrix;
  int rank = 0;
  double rank_tolerance = 0.0;
};

InducedDesign induced(const Design& design);

/// Expands an induced design with a control weight: drug weights scale by 1 - control_weight.
Design with_control(const InducedDesign& drug_part, double control_weight);

/// M_1(xi~, theta_1) = sum_i w~_i I_1(d_i, theta_1).
Matrix drug_information(const InducedDesign& design, const DrugModel& drug);

/// Block-diagonal M(xi, theta) of dimension s1 + s2.
InfoMatrix info_matrix(const Design& design, const DrugModel& drug, const ControlModel& control);

/// Wraps a symmetric matrix, recording its numerical rank.
InfoMatrix make_info(Matrix m);

/// Eigenvalue cutoff used for rank and pseudoinverse: n * eps * max|lambda|.
double rank_tolerance(const Eigen::VectorXd& eigenvalues);

/// Moore-Penrose pseudoinverse of a symmetric matrix.
Matrix pseudo_inverse(const Matrix& m);
Matrix pseudo_inverse(const InfoMatrix& m);

/// True iff the columns of K lie in Range(M).
bool estimable(const Matrix& k, const InfoMatrix& m);

/// Efficient apportionment of N observations over the support points.
std::vector<int> round_design(std::span<const double> weights, int n);
std::vector<int> round_design(const Design& design, int n);

/// Merges drug points closer than `radius` (weights summed, dose weight-averaged).
Design merge_close(const Design& design, double radius);

}  // namespace acdesign
