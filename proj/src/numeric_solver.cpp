// Vertex-exchange on a dose grid, then continuous refinement of the support.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>

#include "acdesign/errors.hpp"
#include "acdesign/scalar_search.hpp"
#include "acdesign/solvers.hpp"
#include "problem.hpp"

namespace acdesign {

namespace {

using detail::Problem;

constexpr int kStartPoints = 5;
constexpr double kGridPhaseTarget = 1e-3;
constexpr double kTargetViolation = 1e-6;
constexpr double kRefineViolation = 1e-10;

struct Support {
  std::vector<DesignPoint> points;
  std::vector<Matrix> infos;
  std::vector<double> weights;
};

struct StartResult {
  std::vector<DesignPoint> points;
  std::vector<double> weights;
  double value = kMinusInfinity;
  double violation = 0.0;
  int iterations = 0;
};

class Engine {
 public:
  Engine(const Problem& problem, const SolveOptions& options) : pb_(problem), opt_(options) {
    const DoseRange& r = pb_.range();
    const int n = opt_.grid_size;
    spacing_ = r.width() / (n - 1);
    for (int i = 0; i < n; ++i) {
      const double d = (i == n - 1) ? r.upper : r.lower + spacing_ * i;
      grid_.push_back(DesignPoint::drug(d));
      grid_infos_.push_back(pb_.point_info(grid_.back()));
    }
    if (pb_.has_control()) {
      control_info_ = pb_.point_info(DesignPoint::control());
    }
  }

  StartResult run_start(int start) {
    std::vector<int> chosen = initial_indices(start);
    StartResult out;
    Support s = grid_phase(chosen, out.iterations);
    continuous_phase(s, out.iterations);
    out.points = s.points;
    out.weights = s.weights;
    out.value = pb_.value(moment(s));
    out.violation = final_violation(s);
    return out;
  }

  // Single drug dose (plus control) at which the contrast becomes estimable, if any.
  // Vertex exchange approaches such singular optima only through clouds of grid points.
  std::optional<StartResult> one_point_start(int& iterations) const {
    auto residual = [&](double d) {
      Support s;
      s.points.push_back(DesignPoint::drug(d));
      s.infos.push_back(pb_.point_info(s.points.back()));
      if (pb_.has_control()) {
        s.points.push_back(DesignPoint::control());
        s.infos.push_back(control_info_);
      }
      s.weights.assign(s.points.size(), 1.0 / static_cast<double>(s.points.size()));
      const Matrix m = moment(s);
      return (pb_.k() - m * (pseudo_inverse(m) * pb_.k())).cwiseAbs().maxCoeff();
    };
    const std::size_t n = grid_.size();
    std::vector<double> res(n);
    for (std::size_t i = 0; i < n; ++i) res[i] = residual(grid_[i].dose);
    std::optional<StartResult> best;
    for (std::size_t i = 0; i < n; ++i) {
      const bool left_ok = i == 0 || res[i] <= res[i - 1];
      const bool right_ok = i + 1 == n || res[i] <= res[i + 1];
      if (!left_ok || !right_ok) continue;
      const double a = grid_[i == 0 ? 0 : i - 1].dose;
      const double b = grid_[i + 1 == n ? n - 1 : i + 1].dose;
      const ScalarOptimum r =
          golden_section_maximize([&](double d) { return -residual(d); }, a, b, 1e-14 * pb_.range().width());
      Support s;
      s.points.push_back(DesignPoint::drug(r.x));
      s.infos.push_back(pb_.point_info(s.points.back()));
      if (pb_.has_control()) {
        s.points.push_back(DesignPoint::control());
        s.infos.push_back(control_info_);
      }
      s.weights.assign(s.points.size(), 1.0 / static_cast<double>(s.points.size()));
      if (!std::isfinite(pb_.value(moment(s)))) continue;
      optimize_weights(s, iterations);
      StartResult out;
      out.value = pb_.value(moment(s));
      if (best && !(out.value > best->value)) continue;
      out.points = s.points;
      out.weights = s.weights;
      out.violation = final_violation(s);
      out.iterations = iterations;
      best = std::move(out);
    }
    return best;
  }

 private:
  // Candidate indices: 0..n-1 are grid doses, n is the control point.
  int candidate_count() const { return static_cast<int>(grid_.size()) + (pb_.has_control() ? 1 : 0); }
  const Matrix& candidate_info(int j) const {
    return j < static_cast<int>(grid_.size()) ? grid_infos_[static_cast<std::size_t>(j)] : control_info_;
  }
  DesignPoint candidate_point(int j) const {
    return j < static_cast<int>(grid_.size()) ? grid_[static_cast<std::size_t>(j)] : DesignPoint::control();
  }

  std::vector<int> initial_indices(int start) const {
    const int n = static_cast<int>(grid_.size());
    std::vector<int> idx;
    if (start == 0) {
      for (int i = 0; i < kStartPoints; ++i) {
        idx.push_back(static_cast<int>(std::lround(static_cast<double>(i) * (n - 1) / (kStartPoints - 1))));
      }
    } else {
      std::mt19937_64 rng(opt_.seed + static_cast<std::uint64_t>(start));
      std::uniform_int_distribution<int> pick(0, n - 1);
      while (static_cast<int>(idx.size()) < std::min(kStartPoints, n)) {
        const int j = pick(rng);
        if (std::find(idx.begin(), idx.end(), j) == idx.end()) idx.push_back(j);
      }
      std::sort(idx.begin(), idx.end());
    }
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    return idx;
  }

  Matrix moment(const Support& s) const {
    Matrix m = Matrix::Zero(pb_.dim(), pb_.dim());
    for (std::size_t i = 0; i < s.points.size(); ++i) m += s.weights[i] * s.infos[i];
    return m;
  }

  // Normalized sensitivities of the given informations at M.
  std::vector<double> sensitivities(const Matrix& m, const detail::Gradient& g,
                                    const std::vector<const Matrix*>& infos) const {
    std::vector<double> out(infos.size());
    const bool analytic = g.rank == pb_.dim() && g.simple_extreme;
    for (std::size_t j = 0; j < infos.size(); ++j) {
      out[j] = analytic ? detail::sensitivity_from(g.a, *infos[j])
                        : detail::sensitivity_numeric(pb_, m, g.value, *infos[j]);
    }
    return out;
  }

  // Best step alpha in [0, 1) for M -> (1 - alpha) M + alpha I.
  double wynn_step(const Matrix& m, const Matrix& info, double s, double tol) const {
    if (pb_.p() == 0.0 && pb_.k().cols() == pb_.dim()) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(info, Eigen::EigenvaluesOnly);
      const double top = es.eigenvalues().maxCoeff();
      const bool rank_one = top > 0.0 && (es.eigenvalues().array() > 1e-12 * top).count() == 1;
      if (rank_one) {
        // D-criterion on the full vector: closed-form step with d = tr(I M^{-1}).
        const double dim = static_cast<double>(pb_.dim());
        const double d = dim * (s + 1.0);
        if (d <= dim) return 0.0;
        return (d - dim) / (dim * (d - 1.0));
      }
    }
    const ScalarOptimum best = golden_section_maximize(
        [&](double a) { return pb_.value((1.0 - a) * m + a * info); }, 0.0, 0.999, tol);
    return best.value > pb_.value(m) ? best.x : 0.0;
  }

  Support grid_phase(const std::vector<int>& start, int& iterations) {
    const int nc = candidate_count();
    std::vector<double> w(static_cast<std::size_t>(nc), 0.0);
    std::vector<int> chosen = start;
    if (pb_.has_control()) chosen.push_back(nc - 1);
    for (int j : chosen) w[static_cast<std::size_t>(j)] = 1.0 / static_cast<double>(chosen.size());

    auto assemble = [&]() {
      Matrix m = Matrix::Zero(pb_.dim(), pb_.dim());
      for (int j = 0; j < nc; ++j) {
        if (w[static_cast<std::size_t>(j)] > 0.0) m += w[static_cast<std::size_t>(j)] * candidate_info(j);
      }
      return m;
    };
    Matrix m = assemble();
    if (!std::isfinite(pb_.value(m))) {
      // Spread more points until the contrast becomes estimable.
      const int n = static_cast<int>(grid_.size());
      const int extra = std::min(n, 2 * pb_.dim() + 1);
      for (int i = 0; i < extra; ++i) {
        w[static_cast<std::size_t>(std::lround(static_cast<double>(i) * (n - 1) / std::max(1, extra - 1)))] = 1.0;
      }
      const double total = std::accumulate(w.begin(), w.end(), 0.0);
      for (double& x : w) x /= total;
      m = assemble();
      if (!std::isfinite(pb_.value(m))) throw NotEstimable("contrast is not estimable on the candidate set");
    }

    std::vector<const Matrix*> infos;
    for (int j = 0; j < nc; ++j) infos.push_back(&candidate_info(j));

    const int budget = std::min(opt_.max_iterations, 400);
    for (int it = 0; it < budget; ++it) {
      ++iterations;
      const detail::Gradient g = detail::gradient(pb_, m);
      if (!g.estimable) break;
      const std::vector<double> s = sensitivities(m, g, infos);
      int jp = 0;
      for (int j = 1; j < nc; ++j) {
        if (s[static_cast<std::size_t>(j)] > s[static_cast<std::size_t>(jp)]) jp = j;
      }
      int jm = -1;
      for (int j = 0; j < nc; ++j) {
        if (w[static_cast<std::size_t>(j)] > 0.0 && (jm < 0 || s[static_cast<std::size_t>(j)] < s[static_cast<std::size_t>(jm)])) {
          jm = j;
        }
      }
      const double smax = s[static_cast<std::size_t>(jp)];
      const double smin = s[static_cast<std::size_t>(jm)];
      if (smax <= kGridPhaseTarget && smax - smin <= kGridPhaseTarget) break;

      const double alpha = wynn_step(m, candidate_info(jp), smax, 1e-6);
      if (alpha > 0.0) {
        for (double& x : w) x *= (1.0 - alpha);
        w[static_cast<std::size_t>(jp)] += alpha;
        m = (1.0 - alpha) * m + alpha * candidate_info(jp);
      }
      if (jm != jp) {
        const double cap = w[static_cast<std::size_t>(jm)];
        const Matrix diff = candidate_info(jp) - candidate_info(jm);
        const ScalarOptimum best = golden_section_maximize(
            [&](double b) { return pb_.value(m + b * diff); }, 0.0, cap, 1e-6 * cap);
        if (best.value > pb_.value(m)) {
          const double beta = best.x > cap * (1.0 - 1e-6) ? cap : best.x;
          w[static_cast<std::size_t>(jp)] += beta;
          w[static_cast<std::size_t>(jm)] -= beta;
          if (beta == cap) w[static_cast<std::size_t>(jm)] = 0.0;
          m = assemble();
        }
      }
      // Purge tiny weights while the design stays estimable.
      for (int j = 0; j < nc; ++j) {
        const double wj = w[static_cast<std::size_t>(j)];
        if (wj <= 0.0 || wj >= opt_.weight_tolerance) continue;
        const Matrix reduced = (m - wj * candidate_info(j)) / (1.0 - wj);
        if (std::isfinite(pb_.value(reduced))) {
          w[static_cast<std::size_t>(j)] = 0.0;
          for (double& x : w) x /= (1.0 - wj);
          m = reduced;
        }
      }
    }
    return cluster(w);
  }

  // Adjacent grid points with mass become one support point when that keeps the contrast estimable.
  Support cluster(const std::vector<double>& w) const {
    Support s;
    const int n = static_cast<int>(grid_.size());
    int i = 0;
    while (i < n) {
      if (w[static_cast<std::size_t>(i)] <= 0.0) {
        ++i;
        continue;
      }
      int j = i;
      while (j + 1 < n && w[static_cast<std::size_t>(j + 1)] > 0.0) ++j;
      for (int k = i; k <= j; ++k) {
        s.points.push_back(grid_[static_cast<std::size_t>(k)]);
        s.infos.push_back(grid_infos_[static_cast<std::size_t>(k)]);
        s.weights.push_back(w[static_cast<std::size_t>(k)]);
      }
      i = j + 1;
    }
    if (pb_.has_control() && w.back() > 0.0) {
      s.points.push_back(DesignPoint::control());
      s.infos.push_back(control_info_);
      s.weights.push_back(w.back());
    }
    collapse_neighbours(s, 1.5 * spacing_);
    return s;
  }

  void set_dose(Support& s, std::size_t i, double d) const {
    s.points[i] = DesignPoint::drug(d);
    s.infos[i] = pb_.point_info(s.points[i]);
  }

  void erase(Support& s, std::size_t i) const {
    const double wi = s.weights[i];
    s.points.erase(s.points.begin() + static_cast<std::ptrdiff_t>(i));
    s.infos.erase(s.infos.begin() + static_cast<std::ptrdiff_t>(i));
    s.weights.erase(s.weights.begin() + static_cast<std::ptrdiff_t>(i));
    for (double& x : s.weights) x /= (1.0 - wi);
  }

  // Drug points ordered by dose (control, if any, stays last).
  void sort_support(Support& s) const {
    std::vector<std::size_t> order(s.points.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const auto& pa = s.points[a];
      const auto& pb = s.points[b];
      if (pa.arm != pb.arm) return pa.arm == Arm::Drug;
      return pa.dose < pb.dose;
    });
    Support out;
    for (std::size_t i : order) {
      out.points.push_back(s.points[i]);
      out.infos.push_back(s.infos[i]);
      out.weights.push_back(s.weights[i]);
    }
    s = std::move(out);
  }

  // Replace two neighbouring drug points by one when that does not lower the criterion.
  // The merged dose is tried at the weighted mean and at the dose that best restores estimability.
  bool collapse_neighbours(Support& s, double radius) const {
    sort_support(s);
    bool changed = false;
    for (std::size_t i = 0; i + 1 < s.points.size();) {
      if (s.points[i].arm != Arm::Drug || s.points[i + 1].arm != Arm::Drug ||
          s.points[i + 1].dose - s.points[i].dose >= radius) {
        ++i;
        continue;
      }
      const double current = pb_.value(moment(s));
      const double a = s.points[i].dose, b = s.points[i + 1].dose;
      const double wa = s.weights[i], wb = s.weights[i + 1];
      Matrix rest = moment(s) - wa * s.infos[i] - wb * s.infos[i + 1];
      auto merged_value = [&](double d) {
        return pb_.value(rest + (wa + wb) * pb_.point_info(DesignPoint::drug(d)));
      };
      auto residual = [&](double d) {
        const Matrix m = rest + (wa + wb) * pb_.point_info(DesignPoint::drug(d));
        const Matrix pinv = pseudo_inverse(m);
        return -(pb_.k() - m * (pinv * pb_.k())).cwiseAbs().maxCoeff();
      };
      double best_d = (wa * a + wb * b) / (wa + wb);
      double best_v = merged_value(best_d);
      const ScalarOptimum r = golden_section_maximize(residual, a, b, 1e-14 * pb_.range().width());
      const double rv = merged_value(r.x);
      if (rv > best_v) {
        best_d = r.x;
        best_v = rv;
      }
      if (std::isfinite(best_v) && best_v >= current - 1e-12 * std::abs(current)) {
        s.weights[i] = wa + wb;
        set_dose(s, i, best_d);
        s.points.erase(s.points.begin() + static_cast<std::ptrdiff_t>(i + 1));
        s.infos.erase(s.infos.begin() + static_cast<std::ptrdiff_t>(i + 1));
        s.weights.erase(s.weights.begin() + static_cast<std::ptrdiff_t>(i + 1));
        changed = true;
      } else {
        ++i;
      }
    }
    return changed;
  }

  // Pairwise exchanges on a fixed support until the support sensitivities level out.
  void optimize_weights(Support& s, int& iterations) const {
    for (int it = 0; it < 300 && s.points.size() > 1; ++it) {
      ++iterations;
      const Matrix m = moment(s);
      const detail::Gradient g = detail::gradient(pb_, m);
      if (!g.estimable) return;
      std::vector<const Matrix*> infos;
      for (const auto& info : s.infos) infos.push_back(&info);
      const std::vector<double> sv = sensitivities(m, g, infos);
      const auto hi = static_cast<std::size_t>(std::max_element(sv.begin(), sv.end()) - sv.begin());
      const auto lo = static_cast<std::size_t>(std::min_element(sv.begin(), sv.end()) - sv.begin());
      if (sv[hi] - sv[lo] <= 1e-12) return;
      const double cap = s.weights[lo];
      const Matrix diff = s.infos[hi] - s.infos[lo];
      const double current = pb_.value(m);
      const ScalarOptimum best = golden_section_maximize(
          [&](double b) { return pb_.value(m + b * diff); }, 0.0, cap, 1e-13 * cap);
      if (!(best.value > current)) return;
      if (best.x >= cap * (1.0 - 1e-9)) {
        s.weights[hi] += cap;
        s.points.erase(s.points.begin() + static_cast<std::ptrdiff_t>(lo));
        s.infos.erase(s.infos.begin() + static_cast<std::ptrdiff_t>(lo));
        s.weights.erase(s.weights.begin() + static_cast<std::ptrdiff_t>(lo));
      } else {
        s.weights[hi] += best.x;
        s.weights[lo] -= best.x;
      }
    }
  }

  // Coordinate ascent on each drug dose, accepted only when the criterion improves.
  bool refine_doses(Support& s, double radius) const {
    bool moved = false;
    const DoseRange& r = pb_.range();
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      if (s.points[i].arm != Arm::Drug) continue;
      const Matrix rest = moment(s) - s.weights[i] * s.infos[i];
      const double wi = s.weights[i];
      const double x0 = s.points[i].dose;
      auto f = [&](double d) { return pb_.value(rest + wi * pb_.point_info(DesignPoint::drug(d))); };
      const double current = f(x0);
      const double lo = std::max(r.lower, x0 - radius);
      const double hi = std::min(r.upper, x0 + radius);
      const ScalarOptimum best = golden_section_maximize(f, lo, hi, 1e-11 * r.width());
      if (best.value > current && std::abs(best.x - x0) > 0.0) {
        set_dose(s, i, best.x);
        moved = true;
      }
    }
    return moved;
  }

  // Largest grid sensitivity away from the support; adds that dose when it is clearly violated.
  bool add_violator(Support& s, double& violation) const {
    const Matrix m = moment(s);
    const detail::Gradient g = detail::gradient(pb_, m);
    if (!g.estimable) return false;
    std::vector<const Matrix*> infos;
    for (const auto& info : grid_infos_) infos.push_back(&info);
    if (pb_.has_control()) infos.push_back(&control_info_);
    const std::vector<double> sv = sensitivities(m, g, infos);
    std::size_t best = 0;
    for (std::size_t j = 1; j < sv.size(); ++j) {
      if (sv[j] > sv[best]) best = j;
    }
    violation = sv[best];
    if (violation <= kTargetViolation) return false;
    const DesignPoint x = best < grid_.size() ? grid_[best] : DesignPoint::control();
    for (const auto& p : s.points) {
      if (p.arm != x.arm) continue;
      if (x.arm == Arm::Control || std::abs(p.dose - x.dose) < 1.5 * spacing_) return false;
    }
    const Matrix& info = *infos[best];
    const double alpha = wynn_step(m, info, violation, 1e-10);
    if (!(alpha > 0.0)) return false;
    for (double& w : s.weights) w *= (1.0 - alpha);
    s.points.push_back(x);
    s.infos.push_back(info);
    s.weights.push_back(alpha);
    sort_support(s);
    return true;
  }

  void drop_small(Support& s) const {
    for (std::size_t i = 0; i < s.points.size();) {
      if (s.weights[i] >= opt_.weight_tolerance || s.points.size() == 1) {
        ++i;
        continue;
      }
      Support trial = s;
      erase(trial, i);
      const double before = pb_.value(moment(s));
      const double after = pb_.value(moment(trial));
      if (std::isfinite(after) && after >= before - 1e-12 * std::abs(before)) {
        s = std::move(trial);
      } else {
        ++i;
      }
    }
  }

  void continuous_phase(Support& s, int& iterations) const {
    double radius = spacing_;
    for (int outer = 0; outer < 80 && iterations < opt_.max_iterations; ++outer) {
      const double before = pb_.value(moment(s));
      optimize_weights(s, iterations);
      const bool moved = refine_doses(s, radius);
      const bool collapsed = collapse_neighbours(s, spacing_);
      double violation = 0.0;
      const bool added = add_violator(s, violation);
      drop_small(s);
      const double after = pb_.value(moment(s));
      const double gain = (after - before) / std::abs(after);
      if (!added && !collapsed && violation <= kRefineViolation && gain <= 1e-15) break;
      if (!moved) radius = std::max(radius * 0.5, 1e-6 * pb_.range().width());
      if (!added && !collapsed && gain <= 1e-15 && !moved) break;
    }
    optimize_weights(s, iterations);
    merge_exact(s);
  }

  void merge_exact(Support& s) const {
    const double radius = 1e-6 * pb_.range().width();
    sort_support(s);
    for (std::size_t i = 0; i + 1 < s.points.size();) {
      if (s.points[i].arm == Arm::Drug && s.points[i + 1].arm == Arm::Drug &&
          s.points[i + 1].dose - s.points[i].dose < radius) {
        const double w = s.weights[i] + s.weights[i + 1];
        const double d = (s.weights[i] * s.points[i].dose + s.weights[i + 1] * s.points[i + 1].dose) / w;
        Support trial = s;
        trial.weights[i] = w;
        set_dose(trial, i, d);
        trial.points.erase(trial.points.begin() + static_cast<std::ptrdiff_t>(i + 1));
        trial.infos.erase(trial.infos.begin() + static_cast<std::ptrdiff_t>(i + 1));
        trial.weights.erase(trial.weights.begin() + static_cast<std::ptrdiff_t>(i + 1));
        if (std::isfinite(pb_.value(moment(trial)))) {
          s = std::move(trial);
          continue;
        }
      }
      ++i;
    }
  }

  double final_violation(const Support& s) const {
    const Matrix m = moment(s);
    const detail::Gradient g = detail::gradient(pb_, m);
    if (!g.estimable) return std::numeric_limits<double>::infinity();
    std::vector<Matrix> infos = grid_infos_;
    for (const auto& info : s.infos) infos.push_back(info);
    if (pb_.has_control()) infos.push_back(control_info_);
    if (!g.simple_extreme) {
      // Non-differentiable E-criterion: use one-sided directional derivatives.
      double worst = 0.0;
      for (const auto& info : infos) worst = std::max(worst, detail::sensitivity_numeric(pb_, m, g.value, info));
      return worst;
    }
    const bool singular = g.null_basis.cols() > 0;
    double worst = 0.0;
    for (int round = 0; round < (singular ? 12 : 1); ++round) {
      const Matrix a = detail::adjusted_a(pb_, g, pb_.k(), infos);
      worst = 0.0;
      double where = pb_.range().lower;
      for (const auto& info : infos) worst = std::max(worst, detail::sensitivity_from(a, info));
      for (const auto& info : s.infos) worst = std::max(worst, std::abs(detail::sensitivity_from(a, info)));
      // Peaks can sit between grid doses, typically right next to a support dose.
      auto s_at = [&](double d) { return detail::sensitivity_from(a, pb_.point_info(DesignPoint::drug(d))); };
      const DoseRange& r = pb_.range();
      const double tol = 1e-10 * r.width();
      auto consider = [&](double lo, double hi) {
        if (!(lo < hi)) return;
        const ScalarOptimum o = golden_section_maximize(s_at, lo, hi, tol);
        if (o.value > worst) {
          worst = o.value;
          where = o.x;
        }
      };
      for (const auto& x : s.points) {
        if (x.arm == Arm::Control) continue;
        consider(std::max(r.lower, x.dose - spacing_), x.dose);
        consider(x.dose, std::min(r.upper, x.dose + spacing_));
      }
      std::size_t top = 0;
      for (std::size_t i = 1; i < grid_.size(); ++i) {
        if (detail::sensitivity_from(a, grid_infos_[i]) > detail::sensitivity_from(a, grid_infos_[top])) top = i;
      }
      consider(grid_[top == 0 ? 0 : top - 1].dose, grid_[std::min(top + 1, grid_.size() - 1)].dose);
      if (!singular || worst <= 0.1 * kTargetViolation) break;
      infos.push_back(pb_.point_info(DesignPoint::drug(where)));
    }
    return worst;
  }

  const Problem& pb_;
  const SolveOptions& opt_;
  double spacing_ = 0.0;
  std::vector<DesignPoint> grid_;
  std::vector<Matrix> grid_infos_;
  Matrix control_info_;
};

StartResult solve_problem(const Problem& problem, const SolveOptions& options, int& best_start) {
  options.validate();
  Engine engine(problem, options);
  // A certified one-point candidate needs no multistart; it counts as start index multistart_count.
  int single_iterations = 0;
  std::optional<StartResult> single = engine.one_point_start(single_iterations);
  if (single && single->violation <= kTargetViolation) {
    best_start = options.multistart_count;
    return std::move(*single);
  }
  StartResult best;
  best_start = -1;
  for (int k = 0; k < options.multistart_count; ++k) {
    StartResult r = engine.run_start(k);
    if (best_start < 0 || r.value > best.value) {
      best = std::move(r);
      best_start = k;
    }
  }
  if (single && single->value > best.value) {
    best = std::move(*single);
    best_start = options.multistart_count;
  }
  return best;
}

}  // namespace

NumericResult numeric_solve(const DrugModel& drug, const ControlModel& control,
                            const CriterionSpec& spec, const SolveOptions& options) {
  const Problem problem = Problem::joint(drug, control, spec);
  int best_start = 0;
  const StartResult r = solve_problem(problem, options, best_start);
  NumericResult out{Design::normalized(r.points, r.weights), r.value, r.violation,
                    r.violation <= kTargetViolation, r.iterations, best_start};
  return out;
}

NumericInducedResult numeric_solve_induced(const DrugModel& drug, const Matrix& k11, double p,
                                           const SolveOptions& options) {
  const Problem problem = Problem::drug_only(drug, k11, p);
  int best_start = 0;
  const StartResult r = solve_problem(problem, options, best_start);
  NumericInducedResult out;
  const double total = std::accumulate(r.weights.begin(), r.weights.end(), 0.0);
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    out.design.doses.push_back(r.points[i].dose);
    out.design.weights.push_back(r.weights[i] / total);
  }
  out.criterion = r.value;
  out.max_violation = r.violation;
  out.converged = r.violation <= kTargetViolation;
  out.iterations = r.iterations;
  out.best_start = best_start;
  return out;
}

}  // namespace acdesign
