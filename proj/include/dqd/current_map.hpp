#pragma once

#include <Eigen/Core>
#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "dqd/quantum_info.hpp"

namespace dqd {

// Per-input scattering data at one injection energy, over the Table-1 labels epsilon_0..3.
struct ChannelMap {
    double kinetic_energy = 0.0;
    std::array<double, 4> level_energies{};  // epsilon_l, meV; fixes the carrier energies
    std::array<std::optional<OutputChannelState>, 4> outputs;
    // transition(j, n) = P(n <- j). Inputs without a solve stay put.
    Eigen::Matrix4d transition = Eigen::Matrix4d::Identity();
    std::array<double, 4> row_defect{};

    double p00() const { return transition(0, 0); }
    double p22() const { return transition(2, 2); }
};

// One solve per input label; rows are flux probabilities restricted to the qubit channels.
// A raw row that misses 1 by more than `tolerance` (flux leak or weight outside the qubit
// channels) raises ConservationError.
ChannelMap extract_channel_map(const std::vector<ScatteringSolution>& solutions, double kinetic_energy,
                               double tolerance = 1e-4);

// epsilon_0 stays with p00 or goes to epsilon_2; every other state stays.
ChannelMap ideal_entangling_map(double p00);
// epsilon_2 stays with p22 or relaxes to epsilon_0; every other state stays.
ChannelMap ideal_relaxation_map(double p22);

struct InjectionStep {
    int n = 0;
    TwoQubitState rho;
    double concurrence = 0.0;
    double decoherence = 0.0;
    std::array<double, 4> occupancy{};  // populations of epsilon_0..3
};

using InjectionTrace = std::vector<InjectionStep>;

// Population update in the eigenbasis C after every carrier, p' = P^T p, then rho in B via
// Table 1. Coherences between bound levels do not survive a carrier because the outgoing
// carrier energies differ; `initial` may carry any, they only show up at n = 0.
InjectionTrace iterate_injections(const ChannelMap& map, const TwoQubitState& initial, int n_max = 60);
// Carrier k uses maps[k % maps.size()] (energy jitter along the current).
InjectionTrace iterate_injections(const std::vector<ChannelMap>& maps, const TwoQubitState& initial, int n_max = 60);

struct ClosedForm {
    double concurrence;
    double decoherence;
};

// C = 1 - p00^n and the binary entropy of p00^n.
ClosedForm closed_form_entangle(double p00, int n);

TwoQubitState eigenstate_projector(int label);

// Starts from the Bell state epsilon_2.
InjectionTrace disentangle_trace(const ChannelMap& map, int n_max = 60);

// Two carriers composed at amplitude level: the joint state of both scattered carriers and
// the dot pair is built explicitly, with carriers labelled by direction and energy, and the
// carriers are traced out.
TwoQubitState compose_two_injections(const ChannelMap& map, int initial_label = 0);

}  // namespace dqd
