#pragma once

#include <Eigen/Core>
#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dqd/config.hpp"
#include "dqd/current_map.hpp"
#include "dqd/qtbm.hpp"
#include "dqd/quantum_info.hpp"

namespace dqd {

struct SweepSpec {
    int input_channel = 0;
    std::vector<double> energies;  // T0, meV, strictly increasing
    std::optional<int> grid_points;
    bool entanglement = true;
    bool antisymmetry_check = true;

    // start, start + step, ... up to stop (inclusive within 1e-9 of a step).
    static SweepSpec range(int input_channel, double start, double stop, double step);
    void validate() const;
    std::string canonical_text() const;
};

struct ChannelRecord {
    double kinetic = 0.0;
    bool traveling = false;
    bool near_threshold = false;
    double reflection = 0.0;
    double transmission = 0.0;
    std::complex<double> b{};
    std::complex<double> c{};
};

struct EntanglementRecord {
    double concurrence = 0.0;
    double decoherence = 0.0;
    double dropped_weight = 0.0;
    Eigen::Matrix4cd rho = Eigen::Matrix4cd::Zero();
};

struct SweepRecord {
    double kinetic_energy = 0.0;
    // "ok", or the failure class: "threshold", "solver", "conservation", "error".
    std::string status = "ok";
    std::string message;
    std::string method;
    double residual = 0.0;
    double defect = 0.0;
    double antisymmetry = 0.0;
    std::vector<ChannelRecord> channels;
    std::vector<std::string> warnings;
    std::optional<EntanglementRecord> entanglement;

    bool ok() const { return status == "ok"; }
    double probability(int n) const { return channels[n].reflection + channels[n].transmission; }
};

struct TraceRecord {
    std::string scenario;  // "entangle" or "disentangle"
    double kinetic_energy = 0.0;
    double stay_probability = 0.0;
    InjectionTrace steps;
};

struct ResultBundle {
    std::string config_hash;
    // Hash of the config and the sweep specification; keys the output file names.
    std::string run_key;
    std::string config_text;
    int grid_points = 0;
    SolverOptions solver;
    int input_channel = 0;
    std::vector<double> state_energies;
    std::array<int, 4> qubit_index{{-1, -1, -1, -1}};
    std::vector<SweepRecord> records;
    std::vector<TraceRecord> traces;

    int successes() const;
};

// One solve per energy on a pool of `jobs` workers (0: hardware concurrency). Records come
// back sorted by energy whatever the completion order; a failing point is recorded, not
// thrown. Throws SolverError when no point succeeds.
ResultBundle run_sweep(const SimulationConfig& config, const SweepSpec& spec, int jobs = 0,
                       std::shared_ptr<const ChannelBasis> basis = nullptr);
ResultBundle run_sweep(const std::filesystem::path& config_path, const SweepSpec& spec, int jobs = 0);

// Single point, failures mapped to a record.
SweepRecord solve_point(const std::shared_ptr<const ChannelBasis>& basis, const SolverOptions& options,
                        int input_channel, double kinetic_energy, bool entanglement, bool antisymmetry_check);

// Solves inputs epsilon_0 and epsilon_2 at T0, then every qubit state they can reach, and builds
// the channel map. Flux that leaves the qubit subspace beyond `tolerance` raises ConservationError.
ChannelMap solve_channel_map(const std::shared_ptr<const ChannelBasis>& basis, const SolverOptions& options,
                             double kinetic_energy, double tolerance = 1e-4);

}  // namespace dqd
