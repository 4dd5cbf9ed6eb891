#include "dqd/device.hpp"

#include <cmath>
#include <string>

#include "dqd/errors.hpp"

namespace dqd {

void MaterialParams::validate() const {
    if (!(effective_mass_ratio > 0.0) || !(dielectric_constant > 0.0))
        throw ConfigError("effective mass ratio and dielectric constant must be positive");
}

EnergyScale energy_scale(const MaterialParams& material) {
    material.validate();
    const double hbar2_2me = 1000.0 * hbar_c_ev_nm * hbar_c_ev_nm / (2.0 * electron_rest_energy_ev);
    const double e2_4pi_eps0 = 1000.0 * fine_structure * hbar_c_ev_nm;
    return {hbar2_2me / material.effective_mass_ratio, e2_4pi_eps0 / material.dielectric_constant};
}

void DeviceSpec::validate() const {
    const double lengths[] = {domain_length_nm, well_width_nm, barrier_width_nm, lead_flat_width_nm,
                              transverse_cutoff_nm, debye_length_nm};
    for (double v : lengths)
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("device lengths must be positive and finite");
    if (!(well_depth_mev >= 0.0)) throw ConfigError("well depth must be non-negative");
    const double total = 2.0 * well_width_nm + barrier_width_nm + 2.0 * lead_flat_width_nm;
    if (std::abs(total - domain_length_nm) > 1e-9 * domain_length_nm)
        throw ConfigError("2*well + barrier + 2*flat = " + std::to_string(total) +
                          " nm does not match domain length " + std::to_string(domain_length_nm));
    if (!(debye_length_nm > domain_length_nm))
        throw ConfigError("Debye length must exceed the domain length");
}

GridSpec GridSpec::make(const DeviceSpec& spec, int points) {
    GridSpec g;
    g.points_per_axis = points;
    g.spacing = points > 1 ? spec.domain_length_nm / (points - 1) : 0.0;
    g.validate();
    return g;
}

void GridSpec::validate() const {
    if (points_per_axis < 3) throw ConfigError("grid needs at least 3 points per axis");
    if (!(spacing > 0.0)) throw ConfigError("grid spacing must be positive");
}

Eigen::VectorXd build_potential(const DeviceSpec& spec, const GridSpec& grid) {
    spec.validate();
    grid.validate();
    const int n = grid.points_per_axis;
    const double eps = 1e-9 * grid.spacing;
    const double left_lo = spec.lead_flat_width_nm;
    const double left_hi = left_lo + spec.well_width_nm;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    // Fill the left half and mirror by index so V(x_i) = V(L - x_i) holds bit for bit.
    for (int i = 0; i <= (n - 1) / 2; ++i) {
        const double x = grid.x(i);
        const bool in_well = x >= left_lo - eps && x <= left_hi + eps;
        v[i] = in_well ? -spec.well_depth_mev : 0.0;
        v[n - 1 - i] = v[i];
    }
    return v;
}

double coulomb_kernel(double xi, double xj, const DeviceSpec& spec, const EnergyScale& scale) {
    const double dx = xi - xj;
    const double d = spec.transverse_cutoff_nm;
    const double r = std::sqrt(dx * dx + d * d);
    return scale.coulomb_prefactor * std::exp(-r / spec.debye_length_nm) / r;
}

}  // namespace dqd
