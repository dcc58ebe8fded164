#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "acdesign/equivalence.hpp"
#include "acdesign/solvers.hpp"

namespace acdesign {

struct OutputPaths {
  std::optional<std::filesystem::path> report;       // JSON
  std::optional<std::filesystem::path> design;       // CSV dose,arm,weight
  std::optional<std::filesystem::path> sensitivity;  // CSV dose,value
};

/// One study configuration read from a key-value scenario file.
struct Scenario {
  DrugModel drug;
  ControlModel control;
  CriterionSpec criterion;
  /// True when the criterion is D-optimality for the full parameter vector.
  bool d_criterion = false;
  std::optional<Design> reference;
  SolveOptions solver;
  VerifyOptions verify;
  OutputPaths output;
};

/// Parses `key = value` lines. Unknown keys, duplicates and bad values raise ValidationError
/// with "<source>:<line>: <key>: ..." diagnostics. Relative output paths are resolved against `base_dir`.
Scenario parse_scenario(std::istream& in, std::string_view source = "<scenario>",
                        const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

/// "25:0.143, 50:0.143, C:0.285"
Design parse_design_inline(std::string_view text);

/// CSV with header dose,arm,weight; the control row has dose "C" and arm "control".
Design parse_design_csv(std::istream& in, std::string_view source = "<design>");
Design load_design(const std::filesystem::path& path);
void write_design_csv(std::ostream& out, const Design& design);

/// Six significant digits, shortest form.
std::string format_real(double x);
/// x rounded to six significant digits.
double round6(double x);

}  // namespace acdesign
