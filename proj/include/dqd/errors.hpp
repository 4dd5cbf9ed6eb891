#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dqd {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad geometry, bad config keys, empty sweeps.
class ConfigError : public Error {
public:
    using Error::Error;
};

class ShortfallError : public Error {
public:
    ShortfallError(int requested, int found)
        : Error("requested " + std::to_string(requested) + " bound states per dot, found " +
                std::to_string(found)),
          requested(requested), found(found) {}
    int requested;
    int found;
};

class BasisError : public Error {
public:
    using Error::Error;
};

class NearThresholdError : public Error {
public:
    NearThresholdError(int channel, double kinetic)
        : Error("channel " + std::to_string(channel) + " sits at its threshold (T = " +
                std::to_string(kinetic) + " meV); shift T0 slightly"),
          channel(channel), kinetic(kinetic) {}
    int channel;
    double kinetic;
};

class SolverError : public Error {
public:
    SolverError(const std::string& what, std::vector<double> history)
        : Error(what), residual_history(std::move(history)) {}
    std::vector<double> residual_history;
};

class ConservationError : public Error {
public:
    ConservationError(const std::string& what, double defect) : Error(what), defect(defect) {}
    double defect;
};

class StructureError : public Error {
public:
    using Error::Error;
};

class DegenerateInputError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace dqd
