#pragma once

#include <filesystem>
#include <string>

#include "dqd/device.hpp"

namespace dqd {

// antisymmetric_sector solves on the ordered wedge x1 > x2 > x3 and rebuilds the cube by
// signed permutation; full_cube keeps every interior node and lets antisymmetry emerge.
enum class SymmetryMode { antisymmetric_sector, full_cube };

// distinguishable drops the exchange images on the x2/x3 faces (full cube only). It is the
// reference setting for free propagation, where the antisymmetrized faces couple the
// carrier to the box states even with the interaction switched off.
enum class ExchangeMode { antisymmetric, distinguishable };

struct BasisOptions {
    int levels_per_dot = 3;
    int two_particle_states = 10;
    bool coulomb = true;
};

struct SolverOptions {
    SymmetryMode symmetry = SymmetryMode::antisymmetric_sector;
    ExchangeMode exchange = ExchangeMode::antisymmetric;
    double threshold_tolerance_mev = 1e-4;
    double singular_threshold_mev = 1e-9;
    double relative_residual = 1e-8;
    long direct_max_unknowns = 400000;
    int max_refinement_steps = 4;
    double conservation_tolerance = 1e-6;
};

struct SimulationConfig {
    MaterialParams material;
    DeviceSpec device;
    int grid_points = 81;
    BasisOptions basis;
    SolverOptions solver;

    GridSpec grid() const { return GridSpec::make(device, grid_points); }
    void validate() const;
};

// Sectioned key/value text; every key carries its unit in the name. Unknown keys are rejected.
SimulationConfig parse_config(const std::string& text);
SimulationConfig load_config(const std::filesystem::path& path);

// Fixed key order, shortest round-trip number formatting.
std::string canonical_text(const SimulationConfig& config);
std::string config_hash(const SimulationConfig& config);
// First 8 bytes of SHA-256, hex.
std::string short_hash(const std::string& text);

const char* to_string(SymmetryMode mode);
const char* to_string(ExchangeMode mode);

}  // namespace dqd
