#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "sindy/dynamics.hpp"

namespace sindy {

enum class NoiseFamily {
    /// p% noise floor: N(0, (0.005 p)^2) on the max-abs-normalised signal.
    gaussian_floor,
    /// U(-0.01 p, +0.01 p) on the max-abs-normalised signal.
    uniform,
};

std::string to_string(NoiseFamily family);
NoiseFamily noise_family_from_string(const std::string& name);

struct NoiseSpec {
    double level_percent = 0.0;
    NoiseFamily family = NoiseFamily::gaussian_floor;
    std::uint64_t seed = 0;
};

/// Per-variable multiplicative factors; scaled = raw .* scales.
struct ScalingRecord {
    Vector scales;
    bool applied = false;
};

/// Scale every state column to unit max-abs (no centring). Derivatives, if present, follow the
/// same factors. Throws DataQualityError on an all-zero column.
std::pair<Trajectory, ScalingRecord> normalize(const Trajectory& traj);

/// Inverse of normalize().
Trajectory unscale(const Trajectory& traj, const ScalingRecord& record);

/// max_t |X(t, i)| for every column.
Vector max_abs(const Matrix& states);

/// Normalise, perturb, and return to the raw scale. Derivatives of the input are dropped.
Trajectory add_noise(const Trajectory& traj, const NoiseSpec& spec);

/// Fill derivs with second-order finite differences: central in the interior, three-point
/// one-sided at both ends. Requires at least three equidistant samples.
Trajectory differentiate(const Trajectory& traj);

/// Second-order differences of a b x n sample matrix with step dt.
Matrix finite_difference(const Matrix& samples, double dt);

/// Counter-based seed split (splitmix64 finaliser over the master seed and stream ids), so a
/// realisation's seed depends only on its coordinates, never on scheduling.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

}  // namespace sindy
