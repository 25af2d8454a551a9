#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "stefan/bounds.hpp"
#include "stefan/conditions.hpp"
#include "stefan/densities.hpp"
#include "stefan/solver.hpp"

namespace stefan::cli {

using nlohmann::json;

// Exit codes
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kFinding = 2;  // a verification produced a negative margin

// Density from its JSON description. Relative paths (tabulated "csv") resolve
// against base_dir.
Density density_from_json(const json& j, const std::filesystem::path& base_dir = {});

// Merged run configuration: config file first, then flags on top.
struct RunConfig {
  json density;  // as given, relative paths already resolved
  SolverConfig solver;
  BoundsOptions bounds;
  ConditionGrids grids;
  double lambda0 = 1e-2;

  json to_json() const;
  std::string hash() const;  // fnv1a of the canonical dump
};

// Applies a config JSON document; unknown keys are errors naming the key.
void apply_config(RunConfig& cfg, const json& doc, const std::filesystem::path& base_dir);

json report_json(const BoundsReport& r);
json report_json(const ConditionReport& r, const PointwiseResult& pw, const MomentResult& mom,
                 double lambda0);

// Entry point shared by the executable and the tests.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stefan::cli
