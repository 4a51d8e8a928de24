#pragma once

// A scenario file: the model sections read by load_spec plus optional
// [grid], [mc], [output] and [verify] sections that drive the batch commands.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "isaacslab/bi_solver.hpp"
#include "isaacslab/config.hpp"
#include "isaacslab/game_model.hpp"
#include "isaacslab/value_field.hpp"
#include "isaacslab/verifier.hpp"

namespace isaacslab {

struct Scenario {
  std::string path;
  config::Document doc;
  GameSpec spec;

  // [grid]
  bool has_grid = false;
  std::vector<double> lo, hi;
  std::vector<int> n;
  std::optional<int> nt;  // smallest stable count when absent
  Side side = Side::Upper;

  // [mc]
  double t = 0.0;
  std::vector<double> x0;  // zeros when absent
  std::size_t paths = 10000;
  int steps = 200;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::string policy1 = "star", policy2 = "star", policy = "star";

  // [output]
  std::string out_dir = "out";
  bool dump_paths = false;
  std::vector<double> slices{0.0};

  // [verify]
  std::vector<std::string> deviations1, deviations2, family1, family2, family;
  std::vector<std::string> decompose1, decompose2;
  int random_constants = 0;
  std::uint64_t random_seed = 1;
  std::optional<double> allowance;
  std::size_t gap_samples = 1000;
  double gap_p_radius = 2.0;
};

Scenario load_scenario(const std::string& path);
Scenario load_scenario_text(const std::string& text, const std::string& name = "<string>");

/// Checks that hold after command-line overrides have been applied.
void validate_scenario(const Scenario& sc);

Side parse_side(const std::string& s);

/// The [grid] section as a Grid; throws ConfigError when it is missing.
Grid scenario_grid(const Scenario& sc);

McParams scenario_mc(const Scenario& sc);

/// solve_hjb_control for control models, solve_bi on sc.side otherwise.
std::shared_ptr<const ValueField> solve_scenario(const Scenario& sc);

}  // namespace isaacslab
