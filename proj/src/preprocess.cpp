#include "sindy/preprocess.hpp"

#include <cmath>
#include <random>

#include "sindy/errors.hpp"

namespace sindy {

std::string to_string(NoiseFamily family) {
    return family == NoiseFamily::gaussian_floor ? "gaussian_floor" : "uniform";
}

NoiseFamily noise_family_from_string(const std::string& name) {
    if (name == "gaussian_floor" || name == "gaussian") return NoiseFamily::gaussian_floor;
    if (name == "uniform") return NoiseFamily::uniform;
    throw ConfigError("unknown noise family '" + name + "' (expected gaussian_floor or uniform)");
}

Vector max_abs(const Matrix& states) { return states.cwiseAbs().colwise().maxCoeff().transpose(); }

std::pair<Trajectory, ScalingRecord> normalize(const Trajectory& traj) {
    const Vector peak = max_abs(traj.states);
    for (Eigen::Index i = 0; i < peak.size(); ++i) {
        if (!(peak(i) > 0.0) || !std::isfinite(peak(i)))
            throw DataQualityError("cannot normalise state column " + std::to_string(i) +
                                   ": max-abs is " + std::to_string(peak(i)));
    }
    ScalingRecord record{peak.cwiseInverse(), true};
    Trajectory out = traj;
    out.states = traj.states * record.scales.asDiagonal();
    if (traj.derivs) out.derivs = (*traj.derivs) * record.scales.asDiagonal();
    out.scales = traj.scales ? Vector(traj.scales->cwiseProduct(record.scales)) : record.scales;
    return {std::move(out), std::move(record)};
}

Trajectory unscale(const Trajectory& traj, const ScalingRecord& record) {
    if (!record.applied) return traj;
    if (record.scales.size() != traj.states.cols())
        throw std::invalid_argument("scaling record does not match trajectory dimension");
    const Vector inv = record.scales.cwiseInverse();
    Trajectory out = traj;
    out.states = traj.states * inv.asDiagonal();
    if (traj.derivs) out.derivs = (*traj.derivs) * inv.asDiagonal();
    if (traj.scales) {
        const Vector remaining = traj.scales->cwiseProduct(inv);
        if ((remaining.array() == 1.0).all())
            out.scales.reset();
        else
            out.scales = remaining;
    }
    return out;
}

Trajectory add_noise(const Trajectory& traj, const NoiseSpec& spec) {
    if (!(spec.level_percent >= 0.0)) throw std::invalid_argument("noise level must be >= 0");
    Trajectory out = traj;
    out.derivs.reset();
    if (spec.level_percent == 0.0) return out;

    const Vector peak = max_abs(traj.states);
    std::mt19937_64 rng(spec.seed);
    const double p = spec.level_percent;
    std::normal_distribution<double> gauss(0.0, 0.005 * p);
    std::uniform_real_distribution<double> uni(-0.01 * p, 0.01 * p);

    for (Eigen::Index i = 0; i < out.states.cols(); ++i) {
        // a column that is identically zero has no scale to be relative to
        if (!(peak(i) > 0.0)) continue;
        for (Eigen::Index t = 0; t < out.states.rows(); ++t) {
            const double e = spec.family == NoiseFamily::gaussian_floor ? gauss(rng) : uni(rng);
            out.states(t, i) = (traj.states(t, i) / peak(i) + e) * peak(i);
        }
    }
    return out;
}

Matrix finite_difference(const Matrix& x, double dt) {
    const Eigen::Index b = x.rows();
    if (b < 3) throw DataQualityError("differentiation needs at least 3 samples, got " + std::to_string(b));
    if (!(dt > 0.0)) throw DataQualityError("differentiation needs a positive time step");
    Matrix d(b, x.cols());
    const double h2 = 2.0 * dt;
    d.middleRows(1, b - 2) = (x.bottomRows(b - 2) - x.topRows(b - 2)) / h2;
    d.row(0) = (-3.0 * x.row(0) + 4.0 * x.row(1) - x.row(2)) / h2;
    d.row(b - 1) = (3.0 * x.row(b - 1) - 4.0 * x.row(b - 2) + x.row(b - 3)) / h2;
    return d;
}

Trajectory differentiate(const Trajectory& traj) {
    if (traj.rows() < 3)
        throw DataQualityError("differentiation needs at least 3 samples, got " + std::to_string(traj.rows()));
    Trajectory out = traj;
    out.derivs = finite_difference(traj.states, traj.step());
    return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ (b + 0x632be59bd9b4e019ULL));
    h = splitmix64(h ^ (c + 0x8cb92ba72f3d8dd7ULL));
    return h;
}

}  // namespace sindy
