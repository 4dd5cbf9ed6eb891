#pragma once

#include <Eigen/Core>
#include <array>
#include <complex>

#include "dqd/qtbm.hpp"

namespace dqd {

// Flux-normalized amplitudes per Table-1 label epsilon_0..3 (not per basis index).
struct OutputChannelState {
    int input_label = -1;
    std::array<cplx, 4> b{};
    std::array<cplx, 4> c{};
    // Traveling flux that left through channels outside the qubit subspace, before renormalization.
    double dropped_weight = 0.0;

    double norm_squared() const;
    double probability(int label) const { return std::norm(b[label]) + std::norm(c[label]); }
};

OutputChannelState normalize_amplitudes(const ScatteringSolution& solution);

// Normalizes raw label-indexed amplitudes to unit total weight.
OutputChannelState make_output_state(const std::array<cplx, 4>& b, const std::array<cplx, 4>& c, int input_label = -1);

// 4x4 density matrix in B = {|0L0R>, |0L1R>, |1L0R>, |1L1R>}.
struct TwoQubitState {
    Eigen::Matrix4cd rho = Eigen::Matrix4cd::Zero();
    bool x_structured = false;

    bool is_x_state(double tol = 1e-10) const;
    // Throws StructureError when trace, hermiticity, positivity or the X flag fail at `tol`.
    void validate(double tol = 1e-10) const;

    static TwoQubitState pure(const Eigen::Vector4cd& psi);
};

// Change of basis through `overlaps` (rows epsilon_l in B coordinates) and trace over the
// scattered carrier. epsilon_1 and epsilon_2 leave the carrier in the same state, so their
// amplitudes add coherently; the remaining carrier states are orthogonal.
TwoQubitState reduced_density_matrix(const OutputChannelState& state, const Eigen::Matrix4d& overlaps);
TwoQubitState reduced_density_matrix(const OutputChannelState& state);

// Von Neumann entropy in nats. Eigenvalues down to -1e-10 are clipped to zero.
double decoherence(const TwoQubitState& state);
// Same quantity from the two 2x2 blocks of an X-state.
double decoherence_xstate(const TwoQubitState& state);
// eta_+ and eta_- of the inner (|0L1R>, |1L0R>) block.
std::array<double, 2> inner_block_eigenvalues(const TwoQubitState& state);

double concurrence_wootters(const TwoQubitState& state);
// Eigenvalues of zeta = rho (sy x sy) rho* (sy x sy), decreasing.
std::array<double, 4> wootters_eigenvalues(const TwoQubitState& state);
// Requires X structure; throws StructureError otherwise.
double concurrence_xstate(const TwoQubitState& state);
// k = |rho_12| - sqrt(rho_00 rho_33); its positive part is C/2 when rho_03 vanishes, as it
// does for every state built from scattering amplitudes.
double xstate_k(const TwoQubitState& state);

struct EntanglementReport {
    double concurrence = 0.0;
    double decoherence = 0.0;
    std::array<double, 4> zeta_eigenvalues{};
    std::array<double, 2> eta{};
    double k = 0.0;
};

EntanglementReport entanglement_report(const TwoQubitState& state);

// Rows epsilon_l of `overlaps` taken as the C basis: rho_B = U^T rho_C U.
Eigen::Matrix4cd to_product_basis(const Eigen::Matrix4cd& rho_c, const Eigen::Matrix4d& overlaps);
Eigen::Matrix4cd to_eigen_basis(const Eigen::Matrix4cd& rho_b, const Eigen::Matrix4d& overlaps);

}  // namespace dqd
