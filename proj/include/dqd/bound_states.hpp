#pragma once

#include <Eigen/Core>
#include <array>
#include <functional>
#include <iosfwd>
#include <vector>

#include "dqd/config.hpp"
#include "dqd/device.hpp"

namespace dqd {

enum class Dot { left, right };

// Wavefunctions live on the full grid (walls included, zero there) with sum |chi|^2 h = 1.
struct SingleParticleState {
    double energy = 0.0;
    Eigen::VectorXd wavefunction;
    Dot dot = Dot::left;
    int level_index = 0;
};

struct SingleParticleSpectrum {
    Eigen::VectorXd eigenvalues;   // lowest 2*levels eigenvalues of the double well
    Eigen::MatrixXd eigenvectors;  // matching delocalized eigenvectors, same normalization
    std::vector<SingleParticleState> orbitals;  // L0, R0, L1, R1, ...
    double max_residual = 0.0;

    const SingleParticleState& orbital(Dot dot, int level) const {
        return orbitals[2 * level + (dot == Dot::right ? 1 : 0)];
    }
    double level_energy(int level) const { return orbitals[2 * level].energy; }
    int levels() const { return static_cast<int>(orbitals.size()) / 2; }
};

// Dirichlet walls at x = 0 and x = L. Each level pair is localized by diagonalizing the
// left-half projector inside the pair; both orbitals then get their first lobe positive,
// so the right orbital is the translated copy of the left one.
SingleParticleSpectrum solve_single_particle(const Eigen::VectorXd& potential, const GridSpec& grid,
                                             const EnergyScale& scale, int levels_per_dot);

// Xi(i, j) with i the x2 node and j the x3 node, sum Xi^2 h^2 = 1.
struct TwoParticleBoundState {
    double energy = 0.0;
    Eigen::MatrixXd wavefunction;
    int index = 0;
    int mirror_parity = 0;  // sign of <Xi|R|Xi>, R: (x2, x3) -> (L - x2, L - x3)
    double residual = 0.0;  // ||H xi - E xi|| for the unit grid vector xi
};

using PairInteraction = std::function<double(double, double)>;

// Lowest `count` antisymmetric eigenpairs of H0(x2) + H0(x3) + W(x2, x3). Shift-invert
// subspace iteration on the a > b half of the grid. States inside a degenerate cluster are
// rotated onto mirror eigenstates and every state gets a deterministic sign.
std::vector<TwoParticleBoundState> solve_two_particle(const Eigen::VectorXd& potential,
                                                      const GridSpec& grid, const EnergyScale& scale,
                                                      const PairInteraction& interaction, int count);

enum class StateKind { qubit, double_occupancy, other };

struct ChannelBasis {
    GridSpec grid;
    EnergyScale scale{};
    DeviceSpec device;
    bool coulomb = true;
    Eigen::VectorXd potential;
    SingleParticleSpectrum single;
    std::vector<TwoParticleBoundState> states;
    std::vector<StateKind> kinds;
    bool qubits_identified = false;
    // qubit_index[l] is the position in `states` of the Table-1 state epsilon_l.
    std::array<int, 4> qubit_index{{-1, -1, -1, -1}};
    // Rows epsilon_0..3, columns |0L0R>, |0L1R>, |1L0R>, |1L1R>.
    Eigen::Matrix4d overlaps = Eigen::Matrix4d::Zero();

    int size() const { return static_cast<int>(states.size()); }
    double energy(int n) const { return states[n].energy; }
    // -1 when state n is not one of the four qubit states.
    int qubit_label(int n) const;
};

ChannelBasis build_channel_basis(const SimulationConfig& config);

// Antisymmetrized product (chi_a(x2) chi_b(x3) - chi_b(x2) chi_a(x3)) / sqrt(2).
Eigen::MatrixXd antisymmetrized_product(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// <E_n^L E_m^R | epsilon_l> by grid quadrature; rows epsilon_0..3, columns as in ChannelBasis.
Eigen::Matrix4d overlap_table(const ChannelBasis& basis);

// The idealized Table-1 change of basis (rows epsilon_l, columns B).
Eigen::Matrix4d table1_matrix();

// Mirror image R Xi, R: (x2, x3) -> (L - x2, L - x3).
Eigen::MatrixXd mirror(const Eigen::MatrixXd& xi);

void write_single_particle_csv(std::ostream& out, const ChannelBasis& basis);
void write_two_particle_csv(std::ostream& out, const ChannelBasis& basis);
// Long format: x2_nm, x3_nm, one column per state.
void write_two_particle_wavefunctions_csv(std::ostream& out, const ChannelBasis& basis);

}  // namespace dqd
