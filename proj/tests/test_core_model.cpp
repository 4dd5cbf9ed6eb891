#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "dqd/config.hpp"
#include "dqd/device.hpp"
#include "dqd/errors.hpp"

using namespace dqd;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// SI values (exact e, CODATA 2018 for the rest), converted by hand to meV and nm.
constexpr double e_charge = 1.602176634e-19;
constexpr double epsilon_0 = 8.8541878128e-12;
constexpr double hbar_si = 1.054571817e-34;
constexpr double electron_mass_kg = 9.1093837015e-31;
constexpr double pi = 3.14159265358979323846;

double si_coulomb_mev(double dx_nm, double d_nm, double lambda_nm, double eps_r) {
    const double r_m = std::sqrt(dx_nm * dx_nm + d_nm * d_nm) * 1e-9;
    const double joule = e_charge * e_charge / (4.0 * pi * epsilon_0 * eps_r * r_m) * std::exp(-r_m / (lambda_nm * 1e-9));
    return joule / e_charge * 1e3;
}

}  // namespace

TEST_CASE("energy scale matches SI constants") {
    const EnergyScale s = energy_scale(MaterialParams{});
    const double kin = hbar_si * hbar_si / (2.0 * 0.067 * electron_mass_kg) / e_charge * 1e3 * 1e18;
    const double cou = e_charge * 1e12 / (4.0 * pi * epsilon_0 * 12.9);
    CHECK_THAT(s.kinetic_prefactor, WithinRel(kin, 1e-8));
    CHECK_THAT(s.coulomb_prefactor, WithinRel(cou, 1e-8));
    // Same material twice gives bit-identical scales.
    const EnergyScale again = energy_scale(MaterialParams{});
    CHECK(again.kinetic_prefactor == s.kinetic_prefactor);
    CHECK(again.coulomb_prefactor == s.coulomb_prefactor);
}

TEST_CASE("coulomb kernel at 50 nm against the SI expression") {
    DeviceSpec spec;
    spec.transverse_cutoff_nm = 1.0;
    spec.debye_length_nm = 1000.0;
    const EnergyScale s = energy_scale(MaterialParams{});
    CHECK_THAT(coulomb_kernel(20.0, 70.0, spec, s), WithinRel(si_coulomb_mev(50.0, 1.0, 1000.0, 12.9), 1e-8));
    CHECK_THAT(coulomb_kernel(33.0, 33.0, spec, s),
               WithinRel(s.coulomb_prefactor * std::exp(-1.0 / 1000.0) / 1.0, 1e-14));
}

TEST_CASE("coulomb kernel is symmetric, positive, decreasing and bounded") {
    const DeviceSpec spec;
    const EnergyScale s = energy_scale(MaterialParams{});
    const double peak = coulomb_kernel(0.0, 0.0, spec, s);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> pos(0.0, 100.0);
    for (int i = 0; i < 2000; ++i) {
        const double a = pos(rng), b = pos(rng);
        const double k = coulomb_kernel(a, b, spec, s);
        CHECK(k == coulomb_kernel(b, a, spec, s));
        CHECK(k > 0.0);
        CHECK(k <= peak);
        const double further = coulomb_kernel(a, b + (b >= a ? 0.5 : -0.5), spec, s);
        CHECK(further < k);
    }
}

TEST_CASE("potential of the reference device") {
    const DeviceSpec spec;
    for (int points : {41, 81, 101, 160}) {
        const GridSpec grid = GridSpec::make(spec, points);
        const Eigen::VectorXd v = build_potential(spec, grid);
        REQUIRE(v.size() == points);
        CHECK(v.minCoeff() == -110.0);
        CHECK(v.maxCoeff() == 0.0);
        CHECK(v[0] == 0.0);
        CHECK(v[points - 1] == 0.0);
        for (int i = 0; i < points; ++i) CHECK(v[i] == v[points - 1 - i]);
        // Barrier centre and lead flats sit at zero, well centres at the bottom.
        CHECK(v[(points - 1) / 2] == 0.0);
        CHECK(v[static_cast<int>(std::lround(25.0 / grid.spacing))] == -110.0);
    }
}

TEST_CASE("flat potential when the wells have no depth") {
    DeviceSpec spec;
    spec.well_depth_mev = 0.0;
    const Eigen::VectorXd v = build_potential(spec, GridSpec::make(spec, 41));
    CHECK(v.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("invalid geometry and materials are rejected") {
    DeviceSpec spec;
    spec.barrier_width_nm = 25.0;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    DeviceSpec screened;
    screened.debye_length_nm = 50.0;
    CHECK_THROWS_AS(screened.validate(), ConfigError);
    DeviceSpec negative;
    negative.transverse_cutoff_nm = -1.0;
    CHECK_THROWS_AS(negative.validate(), ConfigError);
    MaterialParams m;
    m.effective_mass_ratio = 0.0;
    CHECK_THROWS_AS(m.validate(), ConfigError);
    CHECK_THROWS_AS(GridSpec::make(DeviceSpec{}, 2), ConfigError);
}

TEST_CASE("config text parses, rejects unknown keys and hashes deterministically") {
    const std::string text =
        "[device]\nwell_depth_mev = 100\ndebye_length_nm = 2000\n[grid]\npoints_per_axis = 41\n"
        "[solver]\nsymmetry = full_cube\n";
    const SimulationConfig c = parse_config(text);
    CHECK(c.device.well_depth_mev == 100.0);
    CHECK(c.device.debye_length_nm == 2000.0);
    CHECK(c.grid_points == 41);
    CHECK(c.solver.symmetry == SymmetryMode::full_cube);
    CHECK(c.material.dielectric_constant == 12.9);

    CHECK_THROWS_AS(parse_config("[device]\nwell_depth = 100\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[solver]\nsymmetry = wedge\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[device]\nbarrier_width_nm = 30\n"), ConfigError);

    const SimulationConfig again = parse_config(canonical_text(c));
    CHECK(canonical_text(again) == canonical_text(c));
    CHECK(config_hash(again) == config_hash(c));
    CHECK(config_hash(c).size() == 16);
    CHECK(config_hash(c) != config_hash(SimulationConfig{}));
}
