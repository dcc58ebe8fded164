#include "acdesign/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "acdesign/errors.hpp"

namespace acdesign {

namespace {

const std::set<std::string, std::less<>> kKnownKeys = {
    "drug.family",         "drug.mean",          "drug.theta",          "drug.dose_range",
    "drug.sigma2",         "drug.r",             "control.family",      "control.mu",
    "control.sigma2",      "control.r",          "criterion.kind",      "criterion.p",
    "criterion.K",         "criterion.K11",      "criterion.K22",       "reference.design",
    "solver.grid_size",    "solver.max_iterations", "solver.weight_tolerance",
    "solver.multistart_count", "solver.seed",    "verify.grid_size",    "verify.tol",
    "output.report",       "output.design",      "output.sensitivity",
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::optional<double> to_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

struct Entry {
  std::string value;
  int line = 0;
};

class Reader {
 public:
  Reader(std::string source, std::map<std::string, Entry, std::less<>> entries)
      : source_(std::move(source)), entries_(std::move(entries)) {}

  [[noreturn]] void fail(std::string_view key, const std::string& message) const {
    std::ostringstream os;
    os << source_;
    if (auto it = entries_.find(key); it != entries_.end()) os << ':' << it->second.line;
    os << ": " << key << ": " << message;
    throw ValidationError(os.str());
  }

  bool has(std::string_view key) const { return entries_.find(key) != entries_.end(); }

  const std::string& text(std::string_view key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) fail(key, "missing required key");
    return it->second.value;
  }

  double real(std::string_view key) const {
    const auto v = to_double(text(key));
    if (!v || std::isnan(*v)) fail(key, "expected a number, got '" + text(key) + "'");
    return *v;
  }

  long long integer(std::string_view key) const {
    const std::string& s = text(key);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) fail(key, "expected an integer, got '" + s + "'");
    return v;
  }

  std::vector<double> list(std::string_view key) const {
    std::vector<double> out;
    for (auto item : split(text(key), ',')) {
      const auto v = to_double(item);
      if (!v || !std::isfinite(*v)) fail(key, "expected comma-separated numbers, got '" + text(key) + "'");
      out.push_back(*v);
    }
    return out;
  }

  Matrix matrix(std::string_view key) const {
    std::vector<std::vector<double>> rows;
    for (auto row : split(text(key), ';')) {
      std::vector<double> r;
      for (auto item : split(row, ',')) {
        const auto v = to_double(item);
        if (!v || !std::isfinite(*v)) fail(key, "expected rows 'a, b; c, d', got '" + text(key) + "'");
        r.push_back(*v);
      }
      if (!rows.empty() && r.size() != rows.front().size()) fail(key, "rows have different lengths");
      rows.push_back(std::move(r));
    }
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return m;
  }

  void forbid(std::string_view key, const std::string& why) const {
    if (has(key)) fail(key, why);
  }

 private:
  std::string source_;
  std::map<std::string, Entry, std::less<>> entries_;
};

Family read_family(const Reader& rd, std::string_view key, std::string_view value) {
  try {
    return family_from_string(lower(value));
  } catch (const Error&) {
    rd.fail(key, "unknown family '" + std::string(value) + "' (normal, negbinomial, binomial, poisson)");
  }
}

DrugModel read_drug(const Reader& rd) {
  const Family family = read_family(rd, "drug.family", rd.text("drug.family"));
  const std::string mean_name = lower(rd.text("drug.mean"));
  const std::vector<double> theta = rd.list("drug.theta");
  std::optional<MeanFunction> mean;
  try {
    if (mean_name == "michaelis-menten" || mean_name == "mm") {
      if (theta.size() != 2) rd.fail("drug.theta", "Michaelis-Menten needs 2 values (emax, ed50)");
      mean = MeanFunction::michaelis_menten(theta[0], theta[1]);
    } else if (mean_name == "emax") {
      if (theta.size() != 3) rd.fail("drug.theta", "Emax needs 3 values (e0, emax, ed50)");
      mean = MeanFunction::emax(theta[0], theta[1], theta[2]);
    } else {
      rd.fail("drug.mean", "unknown mean '" + rd.text("drug.mean") + "' (michaelis-menten, emax)");
    }
  } catch (const ValidationError& e) {
    if (std::string_view(e.what()).find("drug.") != std::string_view::npos) throw;
    rd.fail("drug.theta", e.what());
  }
  const std::vector<double> range = rd.list("drug.dose_range");
  if (range.size() != 2) rd.fail("drug.dose_range", "expected 'L, R'");
  const DoseRange dr{range[0], range[1]};

  if (family != Family::Normal) rd.forbid("drug.sigma2", "only the normal family has a variance parameter");
  if (family != Family::NegBinomial) rd.forbid("drug.r", "only the negative binomial family has r");
  try {
    switch (family) {
      case Family::Normal: return DrugModel::normal(*mean, dr, rd.real("drug.sigma2"));
      case Family::NegBinomial: {
        const long long r = rd.integer("drug.r");
        if (r < 1 || r > 1000000) rd.fail("drug.r", "r must be a positive integer");
        return DrugModel::negbinomial(*mean, dr, static_cast<int>(r));
      }
      case Family::Binomial: return DrugModel::binomial(*mean, dr);
      case Family::Poisson: return DrugModel::poisson(*mean, dr);
    }
  } catch (const ValidationError& e) {
    const std::string_view msg = e.what();
    if (msg.find(": drug.") != std::string_view::npos) throw;
    if (msg.find("dose range") != std::string_view::npos) rd.fail("drug.dose_range", e.what());
    if (msg.find("sigma2") != std::string_view::npos) rd.fail("drug.sigma2", e.what());
    if (msg.find("r >=") != std::string_view::npos) rd.fail("drug.r", e.what());
    rd.fail("drug.theta", e.what());
  }
  rd.fail("drug.family", "unsupported family");
}

ControlModel read_control(const Reader& rd, Family drug_family) {
  const Family family =
      rd.has("control.family") ? read_family(rd, "control.family", rd.text("control.family")) : drug_family;
  if (family != Family::Normal) rd.forbid("control.sigma2", "only the normal family has a variance parameter");
  if (family != Family::NegBinomial) rd.forbid("control.r", "only the negative binomial family has r");
  const double mu = rd.real("control.mu");
  try {
    switch (family) {
      case Family::Normal: return ControlModel::normal(mu, rd.real("control.sigma2"));
      case Family::NegBinomial: {
        const long long r = rd.integer("control.r");
        if (r < 1 || r > 1000000) rd.fail("control.r", "r must be a positive integer");
        return ControlModel::negbinomial(mu, static_cast<int>(r));
      }
      case Family::Binomial: return ControlModel::binomial(mu);
      case Family::Poisson: return ControlModel::poisson(mu);
    }
  } catch (const ValidationError& e) {
    const std::string_view msg = e.what();
    if (msg.find(": control.") != std::string_view::npos) throw;
    if (msg.find("sigma2") != std::string_view::npos) rd.fail("control.sigma2", e.what());
    if (msg.find("r >=") != std::string_view::npos) rd.fail("control.r", e.what());
    rd.fail("control.mu", e.what());
  }
  rd.fail("control.family", "unsupported family");
}

double read_p(const Reader& rd) {
  if (!rd.has("criterion.p")) return 0.0;
  const std::string v = lower(rd.text("criterion.p"));
  if (v == "-inf" || v == "-infinity") return kMinusInfinity;
  const double p = rd.real("criterion.p");
  if (!(p < 1.0) || !std::isfinite(p)) rd.fail("criterion.p", "p must lie in [-inf, 1)");
  return p;
}

void read_criterion(const Reader& rd, const DrugModel& drug, const ControlModel& control, CriterionSpec& spec,
                    bool& d_criterion) {
  const std::string kind = rd.has("criterion.kind") ? lower(rd.text("criterion.kind")) : "d";
  const int s1 = drug.parameter_count();
  const int s2 = control.parameter_count();
  if (kind == "d") {
    for (auto key : {"criterion.p", "criterion.K", "criterion.K11", "criterion.K22"}) {
      rd.forbid(key, "not used by the D criterion (use kind = phi)");
    }
    spec = CriterionSpec::phi(0.0, KMatrix::identity(s1, s2));
    d_criterion = true;
    return;
  }
  if (kind == "ac") {
    for (auto key : {"criterion.p", "criterion.K", "criterion.K11", "criterion.K22"}) {
      rd.forbid(key, "the AC criterion fixes its own contrast");
    }
    spec = CriterionSpec::ac();
    return;
  }
  if (kind != "phi") rd.fail("criterion.kind", "unknown criterion '" + rd.text("criterion.kind") + "' (D, phi, AC)");
  const double p = read_p(rd);
  if (rd.has("criterion.K")) {
    rd.forbid("criterion.K11", "give either K or K11/K22");
    rd.forbid("criterion.K22", "give either K or K11/K22");
    const Matrix k = rd.matrix("criterion.K");
    if (k.rows() != s1 + s2) {
      rd.fail("criterion.K", "K has " + std::to_string(k.rows()) + " rows, expected " + std::to_string(s1 + s2));
    }
    try {
      spec = CriterionSpec::phi(p, KMatrix::general(k));
    } catch (const Error& e) {
      rd.fail("criterion.K", e.what());
    }
    return;
  }
  const Matrix k11 = rd.matrix("criterion.K11");
  const Matrix k22 = rd.matrix("criterion.K22");
  if (k11.rows() != s1) rd.fail("criterion.K11", "K11 needs " + std::to_string(s1) + " rows");
  if (k22.rows() != s2) rd.fail("criterion.K22", "K22 needs " + std::to_string(s2) + " rows");
  try {
    spec = CriterionSpec::phi(p, KMatrix::block(k11, k22));
  } catch (const Error& e) {
    rd.fail("criterion.K11", e.what());
  }
}

Design finish_design(std::vector<DesignPoint> points, std::vector<double> weights) {
  if (points.empty()) throw ValidationError("design has no points");
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw ValidationError("design weights must be positive");
    total += w;
  }
  // Printed designs carry rounded weights; accept small slack and renormalize.
  if (std::abs(total - 1.0) > 1e-4) {
    throw ValidationError("design weights sum to " + format_real(total) + ", expected 1");
  }
  return Design::normalized(std::move(points), std::move(weights));
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(value);
  return p.is_relative() && !base.empty() ? base / p : p;
}

}  // namespace

std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

double round6(double x) {
  if (!std::isfinite(x)) return x;
  return std::stod(format_real(x));
}

Scenario parse_scenario(std::istream& in, std::string_view source, const std::filesystem::path& base_dir) {
  std::map<std::string, Entry, std::less<>> entries;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    if (eq == std::string_view::npos) throw ValidationError(where + ": expected 'key = value', got '" + std::string(line) + "'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (kKnownKeys.find(key) == kKnownKeys.end()) throw ValidationError(where + ": " + key + ": unknown key");
    if (value.empty()) throw ValidationError(where + ": " + key + ": empty value");
    if (auto it = entries.find(key); it != entries.end()) {
      throw ValidationError(where + ": " + key + ": duplicate key (first given on line " +
                            std::to_string(it->second.line) + ")");
    }
    entries.emplace(key, Entry{value, line_no});
  }
  const Reader rd(std::string(source), std::move(entries));

  DrugModel drug = read_drug(rd);
  ControlModel control = read_control(rd, drug.family());
  CriterionSpec criterion;
  bool d_criterion = false;
  read_criterion(rd, drug, control, criterion, d_criterion);

  std::optional<Design> reference;
  if (rd.has("reference.design")) {
    try {
      reference = parse_design_inline(rd.text("reference.design"));
    } catch (const Error& e) {
      rd.fail("reference.design", e.what());
    }
    for (const auto& pt : reference->points()) {
      if (pt.arm == Arm::Drug && !drug.range().contains(pt.dose)) {
        rd.fail("reference.design", "dose " + format_real(pt.dose) + " outside the dose range");
      }
    }
  }

  SolveOptions solver;
  if (rd.has("solver.grid_size")) solver.grid_size = static_cast<int>(rd.integer("solver.grid_size"));
  if (rd.has("solver.max_iterations")) solver.max_iterations = static_cast<int>(rd.integer("solver.max_iterations"));
  if (rd.has("solver.weight_tolerance")) solver.weight_tolerance = rd.real("solver.weight_tolerance");
  if (rd.has("solver.multistart_count")) solver.multistart_count = static_cast<int>(rd.integer("solver.multistart_count"));
  if (rd.has("solver.seed")) {
    const long long seed = rd.integer("solver.seed");
    if (seed < 0) rd.fail("solver.seed", "seed must be non-negative");
    solver.seed = static_cast<std::uint64_t>(seed);
  }
  try {
    solver.validate();
  } catch (const ValidationError& e) {
    rd.fail("solver", e.what());
  }

  VerifyOptions verify;
  if (rd.has("verify.grid_size")) {
    const long long n = rd.integer("verify.grid_size");
    if (n < 2 || n > 10000000) rd.fail("verify.grid_size", "grid needs at least 2 points");
    verify.grid_size = static_cast<int>(n);
  }
  if (rd.has("verify.tol")) {
    verify.tol = rd.real("verify.tol");
    if (!(verify.tol > 0.0)) rd.fail("verify.tol", "tolerance must be positive");
  }

  OutputPaths output;
  if (rd.has("output.report")) output.report = resolve(base_dir, rd.text("output.report"));
  if (rd.has("output.design")) output.design = resolve(base_dir, rd.text("output.design"));
  if (rd.has("output.sensitivity")) output.sensitivity = resolve(base_dir, rd.text("output.sensitivity"));

  return Scenario{std::move(drug), std::move(control), std::move(criterion), d_criterion,
                  std::move(reference), solver, verify, std::move(output)};
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path.string() + ": cannot open scenario file");
  return parse_scenario(in, path.string(), path.parent_path());
}

Design parse_design_inline(std::string_view text) {
  std::vector<DesignPoint> points;
  std::vector<double> weights;
  for (auto item : split(text, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string_view::npos) {
      throw ValidationError("expected 'dose:weight' items, got '" + std::string(item) + "'");
    }
    const std::string_view dose = trim(item.substr(0, colon));
    const auto w = to_double(item.substr(colon + 1));
    if (!w) throw ValidationError("bad weight in '" + std::string(item) + "'");
    if (dose == "C" || dose == "c") {
      points.push_back(DesignPoint::control());
    } else {
      const auto d = to_double(dose);
      if (!d || !std::isfinite(*d)) throw ValidationError("bad dose in '" + std::string(item) + "'");
      points.push_back(DesignPoint::drug(*d));
    }
    weights.push_back(*w);
  }
  return finish_design(std::move(points), std::move(weights));
}

Design parse_design_csv(std::istream& in, std::string_view source) {
  std::vector<DesignPoint> points;
  std::vector<double> weights;
  std::string raw;
  int line_no = 0;
  bool header = false;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    const auto cols = split(line, ',');
    if (!header) {
      if (cols.size() != 3 || lower(cols[0]) != "dose" || lower(cols[1]) != "arm" || lower(cols[2]) != "weight") {
        throw ValidationError(where + ": expected header 'dose,arm,weight'");
      }
      header = true;
      continue;
    }
    if (cols.size() != 3) throw ValidationError(where + ": expected 3 columns");
    const std::string arm = lower(cols[1]);
    const auto w = to_double(cols[2]);
    if (!w) throw ValidationError(where + ": weight: expected a number, got '" + std::string(cols[2]) + "'");
    if (arm == "control") {
      if (cols[0] != "C" && cols[0] != "c" && !cols[0].empty()) {
        throw ValidationError(where + ": dose: control rows use dose 'C'");
      }
      points.push_back(DesignPoint::control());
    } else if (arm == "drug") {
      const auto d = to_double(cols[0]);
      if (!d || !std::isfinite(*d)) throw ValidationError(where + ": dose: expected a number, got '" + std::string(cols[0]) + "'");
      points.push_back(DesignPoint::drug(*d));
    } else {
      throw ValidationError(where + ": arm: expected 'drug' or 'control', got '" + std::string(cols[1]) + "'");
    }
    weights.push_back(*w);
  }
  if (!header) throw ValidationError(std::string(source) + ": empty design file");
  try {
    return finish_design(std::move(points), std::move(weights));
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(source) + ": " + e.what());
  }
}

Design load_design(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path.string() + ": cannot open design file");
  return parse_design_csv(in, path.string());
}

void write_design_csv(std::ostream& out, const Design& design) {
  // Shortest round-trip form: a one-point c-optimal design stops being estimable if its dose is rounded.
  auto exact = [](double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
  };
  out << "dose,arm,weight\n";
  for (std::size_t i = 0; i < design.points().size(); ++i) {
    const auto& pt = design.points()[i];
    if (pt.arm == Arm::Control) {
      out << "C,control," << exact(design.weights()[i]) << '\n';
    } else {
      out << exact(pt.dose) << ",drug," << exact(design.weights()[i]) << '\n';
    }
  }
}

}  // namespace acdesign
