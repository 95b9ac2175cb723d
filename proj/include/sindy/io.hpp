#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sindy/dynamics.hpp"
#include "sindy/preprocess.hpp"
#include "sindy/regression.hpp"

namespace sindy {

using Json = nlohmann::ordered_json;

/// Relative jitter of the sample period accepted by read_trajectory_csv.
inline constexpr double kTimeJitter = 1e-6;

/// Header "t,x0,x1,..." (or the given names), one row per sample, %.17g so values round-trip.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          const std::vector<std::string>& names = {});
void save_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj,
                         const std::vector<std::string>& names = {});

/// Parsed trajectory plus the state names from its header.
struct TrajectoryFile {
    Trajectory traj;
    std::vector<std::string> names;
};

/// Expects a header row then numeric rows with a time column first. Rejects ragged rows,
/// non-numeric or non-finite cells, non-increasing or non-equidistant times (ParseError).
TrajectoryFile read_trajectory_csv(std::istream& is, const std::string& source = "<stream>");
TrajectoryFile load_trajectory_csv(const std::filesystem::path& path);

/// Term labels, per-equation coefficients, support mask and fit metadata.
Json model_to_json(const CoefficientModel& model, const std::vector<std::string>& equation_names = {},
                   const std::optional<ScalingRecord>& scaling = std::nullopt);
CoefficientModel model_from_json(const Json& j);

/// Rewrite "x0^2*x1" style labels with the given variable names.
std::string rename_label(const std::string& label, const std::vector<std::string>& names);

/// One line per equation, e.g. "x0' = -10.00 x0 +10.00 x1". Empty equations print "0".
std::string format_equations(const CoefficientModel& model, const std::vector<std::string>& names = {},
                             int precision = 2);

/// Rejects every key of obj that is not in allowed; offences are appended to errors as "prefix.key".
void collect_unknown_keys(const Json& obj, const std::vector<std::string>& allowed, const std::string& prefix,
                          std::vector<std::string>& errors);

}  // namespace sindy
