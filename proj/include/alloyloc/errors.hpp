#pragma once
#include <stdexcept>
#include <string>

namespace alloyloc {

/// Invalid parameters, malformed configuration or violated preconditions.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A numerical routine failed (non-convergence, loss of accuracy).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Energy sits on (or within roundoff of) the spectrum; the resolvent is undefined.
struct ResonanceError : NumericalError {
    ResonanceError(const std::string& what, double distance)
        : NumericalError(what), distance(distance) {}
    double distance;
};

/// An interval is shorter than the validity threshold of a concentration estimate.
struct ThresholdError : ConfigError {
    ThresholdError(const std::string& what, double threshold)
        : ConfigError(what), threshold(threshold) {}
    double threshold;
};

} // namespace alloyloc
