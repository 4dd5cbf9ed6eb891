#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <complex>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "dqd/bound_states.hpp"
#include "dqd/config.hpp"

namespace dqd {

using cplx = std::complex<double>;

enum class ChannelKind { traveling, evanescent };

struct Channel {
    int n = 0;
    double kinetic = 0.0;  // T_(j-n), meV
    double k = 0.0;        // continuum wave number (traveling) or decay constant (evanescent), 1/nm
    ChannelKind kind = ChannelKind::evanescent;
    cplx lattice_phase{1.0, 0.0};  // e^{ik h}, or e^{-kappa h} when evanescent
    double velocity = 0.0;         // sin(k h) of the lattice dispersion, zero when evanescent
    bool near_threshold = false;
};

struct ScatteringProblem {
    std::shared_ptr<const ChannelBasis> basis;
    int input_channel = 0;
    double kinetic_energy = 0.0;  // T0, meV
    SolverOptions options;

    double total_energy() const { return kinetic_energy + basis->energy(input_channel); }
    void validate() const;
};

// cos(k h) = 1 - T h^2 / (2 hbar^2/2m*) is the lattice dispersion in the leads.
std::vector<Channel> enumerate_channels(const ScatteringProblem& problem);

struct AssembledSystem {
    Eigen::SparseMatrix<cplx> matrix;
    Eigen::VectorXcd rhs;
    Eigen::Index interior_unknowns = 0;
    int channels = 0;
    std::vector<Channel> channel_data;

    Eigen::Index b_column(int m) const { return interior_unknowns + m; }
    Eigen::Index c_column(int m) const { return interior_unknowns + channels + m; }
};

AssembledSystem assemble_system(const ScatteringProblem& problem);

// Number of interior unknowns for a grid and symmetry mode.
Eigen::Index interior_unknown_count(int points, SymmetryMode mode);
// Rank of the ordered triple (p > q > r >= 0) of interior indices.
Eigen::Index wedge_rank(int p, int q, int r);

struct ScatteringSolution {
    std::shared_ptr<const ChannelBasis> basis;
    int input_channel = 0;
    double kinetic_energy = 0.0;
    double total_energy = 0.0;
    SymmetryMode symmetry = SymmetryMode::antisymmetric_sector;
    ExchangeMode exchange = ExchangeMode::antisymmetric;
    std::vector<Channel> channels;
    Eigen::VectorXcd b;
    Eigen::VectorXcd c;
    Eigen::VectorXcd interior;
    double residual_norm = 0.0;
    std::vector<double> residual_history;
    std::string method;
    std::vector<std::string> warnings;

    // Psi on any grid node, faces included (taken from the boundary ansatz).
    cplx psi(int i1, int i2, int i3) const;
    int points() const { return basis->grid.points_per_axis; }
};

ScatteringSolution solve_scattering(const ScatteringProblem& problem);

struct ChannelProbabilities {
    std::vector<double> reflection;
    std::vector<double> transmission;
    double total = 0.0;
    double defect = 0.0;  // |total - 1|

    double channel(int n) const { return reflection[n] + transmission[n]; }
};

// Flux weights sin(k_n h)/sin(k_0 h) are the lattice group-velocity ratios; they tend to
// k_n/k_0 as h -> 0 and make the sum an exact discrete invariant.
ChannelProbabilities channel_probabilities(const ScatteringSolution& solution, double tolerance = 1e-6);

// Dense copy of Psi on the whole N^3 grid, index (i1 * N + i2) * N + i3.
struct Field3 {
    int n = 0;
    std::vector<cplx> data;

    cplx& at(int i, int j, int k) { return data[(static_cast<std::size_t>(i) * n + j) * n + k]; }
    cplx at(int i, int j, int k) const { return data[(static_cast<std::size_t>(i) * n + j) * n + k]; }
};

Field3 expand_field(const ScatteringSolution& solution);

struct AntisymmetryReport {
    double max_violation = 0.0;  // max |Psi(x) + Psi(P x)| over transpositions P
    double max_abs = 0.0;        // max |Psi|
    double relative() const { return max_abs > 0.0 ? max_violation / max_abs : 0.0; }
};

AntisymmetryReport check_antisymmetry(const Field3& field);
AntisymmetryReport check_antisymmetry(const ScatteringSolution& solution);

// |Psi|^2 on the plane x3 = x(k).
void write_density_slice_csv(std::ostream& out, const ScatteringSolution& solution, int k);

}  // namespace dqd
