#pragma once

#include <Eigen/Core>

namespace dqd {

// CODATA 2018.
inline constexpr double hbar_c_ev_nm = 197.3269804;
inline constexpr double electron_rest_energy_ev = 510998.95;
inline constexpr double fine_structure = 1.0 / 137.035999084;

struct MaterialParams {
    double effective_mass_ratio = 0.067;
    double dielectric_constant = 12.9;

    void validate() const;
};

// hbar^2/(2m*) and e^2/(4 pi eps) in meV and nm.
struct EnergyScale {
    double kinetic_prefactor;
    double coulomb_prefactor;
};

EnergyScale energy_scale(const MaterialParams& material);

struct DeviceSpec {
    double domain_length_nm = 100.0;
    double well_depth_mev = 110.0;
    double well_width_nm = 30.0;
    double barrier_width_nm = 20.0;
    double lead_flat_width_nm = 10.0;
    double transverse_cutoff_nm = 1.0;
    double debye_length_nm = 1000.0;

    void validate() const;
};

struct GridSpec {
    int points_per_axis = 81;
    double spacing = 0.0;

    static GridSpec make(const DeviceSpec& spec, int points);
    double x(int i) const { return i * spacing; }
    void validate() const;
};

// Wells are sampled as closed intervals, so nodes on a well edge sit inside the well.
Eigen::VectorXd build_potential(const DeviceSpec& spec, const GridSpec& grid);

double coulomb_kernel(double xi, double xj, const DeviceSpec& spec, const EnergyScale& scale);

}  // namespace dqd
