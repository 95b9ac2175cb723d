#pragma once

#include <stdexcept>
#include <string>

namespace sindy {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input data is non-finite, degenerate or otherwise unusable.
class DataQualityError : public Error {
public:
    using Error::Error;
};

/// Normal equations are singular for the requested penalty.
class RankDeficiencyError : public Error {
public:
    using Error::Error;
};

/// The integrator could not advance (step-size underflow or blow-up).
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& system, double t_reached, const std::string& why)
        : Error("integration of '" + system + "' diverged at t=" + std::to_string(t_reached) +
                ": " + why),
          system_(system),
          t_reached_(t_reached) {}

    const std::string& system() const noexcept { return system_; }
    double t_reached() const noexcept { return t_reached_; }

private:
    std::string system_;
    double t_reached_;
};

/// Malformed file contents (CSV, JSON).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Invalid experiment or run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace sindy
