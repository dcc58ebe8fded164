#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "acdesign/cli.hpp"
#include "acdesign/errors.hpp"
#include "acdesign/scenario.hpp"

namespace acdesign::cli {

namespace {

using nlohmann::json;

struct Outcome {
  Design design;
  std::string method;
  bool converged = true;
  json details = json::object();
};

std::string criterion_name(const Scenario& sc) {
  if (sc.d_criterion) return "D";
  if (sc.criterion.kind == CriterionSpec::Kind::AC) return "AC";
  return "phi";
}

json number(double x) {
  if (std::isnan(x)) return nullptr;
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return round6(x);
}

json design_json(const Design& d) {
  json rows = json::array();
  for (std::size_t i = 0; i < d.points().size(); ++i) {
    const auto& pt = d.points()[i];
    json row;
    if (pt.arm == Arm::Control) {
      row["dose"] = "C";
      row["arm"] = "control";
    } else {
      row["dose"] = number(pt.dose);
      row["arm"] = "drug";
    }
    row["weight"] = number(d.weights()[i]);
    rows.push_back(row);
  }
  return rows;
}

void print_design(std::ostream& out, const Design& d) {
  out << "dose,arm,weight\n";
  for (std::size_t i = 0; i < d.points().size(); ++i) {
    const auto& pt = d.points()[i];
    if (pt.arm == Arm::Control) {
      out << "C,control," << format_real(d.weights()[i]) << '\n';
    } else {
      out << format_real(pt.dose) << ",drug," << format_real(d.weights()[i]) << '\n';
    }
  }
}

double criterion_value(const Scenario& sc, const Design& d) {
  if (sc.criterion.kind == CriterionSpec::Kind::AC) return psi_ac(d, sc.drug, sc.control);
  return phi_p(d, sc.drug, sc.control, *sc.criterion.k, sc.criterion.p);
}

Outcome numeric(const Scenario& sc) {
  NumericResult r = numeric_solve(sc.drug, sc.control, sc.criterion, sc.solver);
  Outcome o{std::move(r.design), "numeric/vertex-exchange", r.converged, json::object()};
  o.details["max_violation"] = number(r.max_violation);
  o.details["best_start"] = r.best_start;
  return o;
}

Outcome solve(const Scenario& sc) {
  if (sc.d_criterion && sc.drug.family() == sc.control.family()) {
    try {
      const bool mm = sc.drug.mean().kind() == MeanFunction::Kind::MichaelisMenten;
      Design d = mm ? d_opt_mm(sc.drug, sc.control) : d_opt_emax(sc.drug, sc.control);
      return Outcome{std::move(d), mm ? "closed-form/d-optimal-michaelis-menten" : "closed-form/d-optimal-emax", true,
                     json::object()};
    } catch (const InfeasibleGeometry&) {
      return numeric(sc);
    }
  }
  if (sc.criterion.kind == CriterionSpec::Kind::AC) {
    try {
      AcSolution a = ac_optimal_detailed(sc.drug, sc.control, sc.solver);
      Outcome o{std::move(a.design), a.method, a.method.find("unconverged") == std::string::npos, json::object()};
      o.details["target_dose"] = number(a.target_dose);
      o.details["delta"] = number(a.delta);
      o.details["rho"] = number(a.rho);
      o.details["drug_share"] = number(a.drug_share);
      if (a.elfving) {
        o.details["elfving_case"] = std::string(to_string(a.elfving->case_tag));
        o.details["elfving_gamma"] = number(a.elfving->gamma);
      }
      return o;
    } catch (const InfeasibleGeometry&) {
      return numeric(sc);
    } catch (const Unsupported&) {
      return numeric(sc);
    }
  }
  return numeric(sc);
}

void apply(Scenario& sc, const Overrides& ov, bool grid_is_solver) {
  if (ov.grid) {
    if (grid_is_solver) {
      sc.solver.grid_size = *ov.grid;
      sc.solver.validate();
    } else {
      if (*ov.grid < 2) throw ValidationError("--grid: verification grid needs at least 2 points");
      sc.verify.grid_size = *ov.grid;
    }
  }
  if (ov.tol) {
    if (!(*ov.tol > 0.0)) throw ValidationError("--tol: tolerance must be positive");
    sc.verify.tol = *ov.tol;
  }
  if (ov.seed) sc.solver.seed = *ov.seed;
}

json verify_json(const SensitivityReport& r) {
  json j;
  j["verdict"] = std::string(to_string(r.verdict));
  j["max_violation"] = number(r.max_violation);
  j["argmax_dose"] = number(r.argmax_dose);
  json res = json::array();
  for (double x : r.support_residuals) res.push_back(number(x));
  j["support_residuals"] = res;
  j["adjusted_inverse"] = r.adjusted_inverse;
  return j;
}

void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw Error(path.string() + ": cannot write");
  body(f);
}

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace

int cmd_solve(const std::filesystem::path& scenario, const Overrides& ov, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Scenario sc = load_scenario(scenario);
    apply(sc, ov, true);
    Outcome o = solve(sc);
    const SensitivityReport v = verify(o.design, sc.drug, sc.control, sc.criterion, sc.verify);
    const double value = criterion_value(sc, o.design);

    json report;
    report["method"] = o.method;
    report["criterion"] = {{"kind", criterion_name(sc)}, {"p", number(sc.criterion.p)}};
    report["criterion_value"] = number(value);
    report["design"] = design_json(o.design);
    report["converged"] = o.converged;
    report["verify"] = verify_json(v);
    if (!o.details.empty()) report["details"] = o.details;

    if (sc.output.report) write_file(*sc.output.report, [&](std::ostream& f) { f << report.dump(2) << '\n'; });
    if (sc.output.design) write_file(*sc.output.design, [&](std::ostream& f) { write_design_csv(f, o.design); });
    if (sc.output.sensitivity) {
      write_file(*sc.output.sensitivity, [&](std::ostream& f) { write_sensitivity_csv(f, v); });
    }

    if (ov.json) {
      out << report.dump(2) << '\n';
    } else {
      out << "method: " << o.method << '\n';
      out << "criterion: " << criterion_name(sc) << " value " << format_real(value) << '\n';
      print_design(out, o.design);
      out << "verdict: " << to_string(v.verdict) << " (max violation " << format_real(v.max_violation) << ")\n";
    }
    if (!o.converged || v.verdict == Verdict::NotOptimal) {
      err << "error: solver did not converge (max violation " << format_real(v.max_violation) << ")\n";
      return static_cast<int>(kNotConverged);
    }
    return static_cast<int>(kOk);
  });
}

int cmd_verify(const std::filesystem::path& scenario, const std::filesystem::path& design, const Overrides& ov,
               std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Scenario sc = load_scenario(scenario);
    apply(sc, ov, false);
    const Design d = load_design(design);
    const SensitivityReport v = verify(d, sc.drug, sc.control, sc.criterion, sc.verify);
    if (sc.output.sensitivity) {
      write_file(*sc.output.sensitivity, [&](std::ostream& f) { write_sensitivity_csv(f, v); });
    }
    if (ov.json) {
      out << verify_json(v).dump(2) << '\n';
      return static_cast<int>(kOk);
    }
    if (!sc.output.sensitivity) write_sensitivity_csv(out, v);
    out << "verdict: " << to_string(v.verdict) << " (max violation " << format_real(v.max_violation) << " at dose "
        << format_real(v.argmax_dose) << ")\n";
    return static_cast<int>(kOk);
  });
}

int cmd_efficiency(const std::filesystem::path& scenario, const std::filesystem::path& design,
                   const Overrides& ov, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Scenario sc = load_scenario(scenario);
    apply(sc, ov, true);
    const Design d = load_design(design);
    json j;
    j["d_efficiency"] = number(d_efficiency(d, sc.drug, sc.control));
    try {
      j["ac_efficiency"] = number(ac_efficiency(d, sc.drug, sc.control, sc.solver));
    } catch (const NoTargetDose& e) {
      j["ac_efficiency"] = nullptr;
      j["ac_note"] = e.what();
    }
    if (ov.json) {
      out << j.dump(2) << '\n';
    } else {
      out << "d_efficiency: " << format_real(j["d_efficiency"].get<double>()) << '\n';
      if (j["ac_efficiency"].is_null()) {
        out << "ac_efficiency: n/a (" << j["ac_note"].get<std::string>() << ")\n";
      } else {
        out << "ac_efficiency: " << format_real(j["ac_efficiency"].get<double>()) << '\n';
      }
    }
    return static_cast<int>(kOk);
  });
}

int cmd_reproduce(const std::optional<std::filesystem::path>& out_dir, const Overrides& ov, std::ostream& out,
                  std::ostream& err) {
  return guarded(err, [&] {
    const std::vector<Cell> cells = reproduce_tables(ov.seed.value_or(1));
    auto write_table = [&](std::ostream& f, const std::string& table) {
      f << "cell,expected,actual,tolerance,status\n";
      for (const auto& c : cells) {
        if (c.table != table) continue;
        f << c.name << ',' << format_real(c.expected) << ',' << format_real(c.actual) << ',' << format_real(c.tolerance)
          << ',' << (c.pass ? "pass" : "FAIL") << '\n';
      }
    };
    if (out_dir) {
      for (const std::string table : {"d_optimal", "ac_optimal"}) {
        write_file(*out_dir / (table + "_table.csv"), [&](std::ostream& f) { write_table(f, table); });
      }
    }
    int failed = 0;
    json j = json::array();
    for (const auto& c : cells) {
      if (!c.pass) ++failed;
      j.push_back({{"table", c.table}, {"cell", c.name}, {"expected", number(c.expected)},
                   {"actual", number(c.actual)}, {"tolerance", number(c.tolerance)}, {"pass", c.pass}});
    }
    if (ov.json) {
      out << j.dump(2) << '\n';
    } else {
      for (const std::string table : {"d_optimal", "ac_optimal"}) {
        out << "# " << table << " table\n";
        write_table(out, table);
      }
    }
    if (failed > 0) {
      err << failed << " of " << cells.size() << " cells outside tolerance:\n";
      for (const auto& c : cells) {
        if (!c.pass) err << "  " << c.table << '/' << c.name << ": expected " << format_real(c.expected) << ", got "
                         << format_real(c.actual) << " (tolerance " << format_real(c.tolerance) << ")\n";
      }
      return static_cast<int>(kFailure);
    }
    return static_cast<int>(kOk);
  });
}

}  // namespace acdesign::cli
