#include <catch_amalgamated.hpp>

#include <cmath>

#include "dqd/current_map.hpp"
#include "dqd/errors.hpp"
#include "dqd/sweep.hpp"

using namespace dqd;
using Catch::Matchers::WithinAbs;

namespace {

double binary_entropy(double x) {
    double s = 0.0;
    if (x > 0.0) s -= x * std::log(x);
    if (x < 1.0) s -= (1.0 - x) * std::log(1.0 - x);
    return s;
}

}  // namespace

TEST_CASE("ideal entangling map follows the closed form") {
    for (double p : {0.0, 0.3, 0.5, 0.9, 1.0}) {
        const auto trace = iterate_injections(ideal_entangling_map(p), eigenstate_projector(0), 64);
        REQUIRE(trace.size() == 65);
        for (int n = 0; n <= 64; ++n) {
            const double x = std::pow(p, n);
            const auto cf = closed_form_entangle(p, n);
            CHECK_THAT(cf.concurrence, WithinAbs(1.0 - x, 1e-15));
            CHECK_THAT(cf.decoherence, WithinAbs(binary_entropy(x), 1e-15));
            CHECK_THAT(trace[n].concurrence, WithinAbs(cf.concurrence, 1e-12));
            CHECK_THAT(trace[n].decoherence, WithinAbs(cf.decoherence, 1e-12));
            // rho^(n): p00^n on |00>, the rest in the Table-1 Bell block with coherence -(1 - p00^n)/2.
            const auto& r = trace[n].rho.rho;
            CHECK_THAT(r(0, 0).real(), WithinAbs(x, 1e-12));
            CHECK_THAT(r(1, 1).real(), WithinAbs(0.5 * (1.0 - x), 1e-12));
            CHECK_THAT(r(2, 2).real(), WithinAbs(0.5 * (1.0 - x), 1e-12));
            CHECK_THAT(r(1, 2).real(), WithinAbs(-0.5 * (1.0 - x), 1e-12));
            CHECK(trace[n].rho.x_structured);
            double occ = 0.0;
            for (double o : trace[n].occupancy) occ += o;
            CHECK_THAT(occ, WithinAbs(1.0, 1e-12));
        }
    }
}

TEST_CASE("three carriers at p00 = 1/2 give C = 7/8") {
    const auto trace = iterate_injections(ideal_entangling_map(0.5), eigenstate_projector(0), 3);
    CHECK_THAT(trace[0].concurrence, WithinAbs(0.0, 1e-15));
    CHECK_THAT(trace[0].decoherence, WithinAbs(0.0, 1e-12));
    CHECK_THAT(trace[1].concurrence, WithinAbs(0.5, 1e-12));
    CHECK_THAT(trace[3].concurrence, WithinAbs(7.0 / 8.0, 1e-12));
}

TEST_CASE("long currents end in the Bell state") {
    const auto trace = iterate_injections(ideal_entangling_map(0.5), eigenstate_projector(0), 60);
    CHECK(trace.back().concurrence > 1.0 - 1e-12);
    CHECK(trace.back().decoherence < 1e-12);
    for (std::size_t n = 1; n < trace.size(); ++n) CHECK(trace[n].concurrence >= trace[n - 1].concurrence);
    const auto stuck = iterate_injections(ideal_entangling_map(1.0), eigenstate_projector(0), 60);
    for (const auto& s : stuck) {
        CHECK(s.concurrence == 0.0);
        CHECK(s.decoherence == 0.0);
    }
}

TEST_CASE("entropy peaks at ln 2 where the ground occupancy crosses one half") {
    const int n_half = 5;
    const double p = std::pow(2.0, -1.0 / n_half);
    const auto trace = iterate_injections(ideal_entangling_map(p), eigenstate_projector(0), 60);
    int best = 0;
    for (int n = 1; n <= 60; ++n)
        if (trace[n].decoherence > trace[best].decoherence) best = n;
    CHECK(best == n_half);
    CHECK_THAT(trace[best].decoherence, WithinAbs(std::log(2.0), 1e-3));
    for (int n = 1; n <= best; ++n) CHECK(trace[n].decoherence > trace[n - 1].decoherence);
    for (int n = best + 1; n <= 60; ++n) CHECK(trace[n].decoherence < trace[n - 1].decoherence);
}

TEST_CASE("ideal relaxation map disentangles as p22^n") {
    for (double p : {0.0, 0.4, 0.8, 1.0}) {
        const auto trace = disentangle_trace(ideal_relaxation_map(p), 60);
        CHECK_THAT(trace[0].concurrence, WithinAbs(1.0, 1e-12));
        CHECK_THAT(trace[0].decoherence, WithinAbs(0.0, 1e-10));
        for (int n = 0; n <= 60; ++n) {
            const double x = std::pow(p, n);
            CHECK_THAT(trace[n].concurrence, WithinAbs(x, 1e-12));
            CHECK_THAT(trace[n].decoherence, WithinAbs(binary_entropy(x), 1e-12));
            CHECK_THAT(trace[n].occupancy[2], WithinAbs(x, 1e-12));
            if (n > 0) CHECK(trace[n].concurrence <= trace[n - 1].concurrence);
        }
        if (p < 1.0) CHECK(trace.back().occupancy[0] > 1.0 - 1e-5);
    }
}

TEST_CASE("two explicit carriers reproduce the second step") {
    const auto half = compose_two_injections(ideal_entangling_map(0.5));
    const Eigen::Matrix4cd rc = to_eigen_basis(half.rho, table1_matrix());
    CHECK_THAT(rc(0, 0).real(), WithinAbs(0.25, 1e-12));
    CHECK_THAT(rc(2, 2).real(), WithinAbs(0.75, 1e-12));
    for (double p : {0.2, 0.5, 0.7}) {
        const auto two = compose_two_injections(ideal_entangling_map(p));
        const auto trace = iterate_injections(ideal_entangling_map(p), eigenstate_projector(0), 2);
        CHECK((two.rho - trace[2].rho.rho).cwiseAbs().maxCoeff() < 1e-12);
    }
    const auto none = compose_two_injections(ideal_entangling_map(1.0));
    CHECK((none.rho - eigenstate_projector(0).rho).cwiseAbs().maxCoeff() < 1e-15);
    const auto full = compose_two_injections(ideal_entangling_map(0.0));
    CHECK((full.rho - eigenstate_projector(2).rho).cwiseAbs().maxCoeff() < 1e-15);
    CHECK_THAT(concurrence_wootters(full), WithinAbs(1.0, 1e-10));
}

TEST_CASE("alternating carrier maps") {
    const std::vector<ChannelMap> maps{ideal_entangling_map(0.5), ideal_entangling_map(0.9)};
    const auto trace = iterate_injections(maps, eigenstate_projector(0), 4);
    CHECK_THAT(trace[1].occupancy[0], WithinAbs(0.5, 1e-15));
    CHECK_THAT(trace[2].occupancy[0], WithinAbs(0.45, 1e-15));
    CHECK_THAT(trace[4].occupancy[0], WithinAbs(0.45 * 0.45, 1e-15));
}

TEST_CASE("map inputs are validated") {
    CHECK_THROWS_AS(ideal_entangling_map(1.5), ConfigError);
    CHECK_THROWS_AS(ideal_relaxation_map(-0.1), ConfigError);
    CHECK_THROWS_AS(closed_form_entangle(0.5, -1), ConfigError);
    CHECK_THROWS_AS(iterate_injections(std::vector<ChannelMap>{}, eigenstate_projector(0)), ConfigError);
    TwoQubitState bad;
    CHECK_THROWS_AS(iterate_injections(ideal_entangling_map(0.5), bad), StructureError);
}

TEST_CASE("map from solved amplitudes keeps the trace physical") {
    SimulationConfig c;
    c.grid_points = 41;
    const auto basis = std::make_shared<const ChannelBasis>(build_channel_basis(c));
    const double t0 = 15.0;
    const auto sol = solve_scattering({basis, 0, t0, c.solver});
    const ChannelMap map = extract_channel_map({sol}, t0);
    CHECK(map.row_defect[0] < 1e-6);
    CHECK_THAT(map.transition.row(0).sum(), WithinAbs(1.0, 1e-10));
    for (int n = 0; n < 4; ++n) CHECK(map.transition(0, n) >= 0.0);
    const auto trace = iterate_injections(map, eigenstate_projector(0), 60);
    for (const auto& s : trace) {
        double occ = 0.0;
        for (double o : s.occupancy) occ += o;
        CHECK_THAT(occ, WithinAbs(1.0, 1e-12));
        CHECK(s.concurrence >= 0.0);
        CHECK(s.concurrence <= 1.0 + 1e-12);
        CHECK_NOTHROW(s.rho.validate(1e-10));
    }
    CHECK_THROWS_AS(extract_channel_map({sol}, t0 + 0.1), ConfigError);
    CHECK_THROWS_AS(extract_channel_map({}, t0), ConfigError);
}

TEST_CASE("channel map closure follows the reachable qubit inputs") {
    SimulationConfig c;
    c.grid_points = 41;
    const auto basis = std::make_shared<const ChannelBasis>(build_channel_basis(c));
    const ChannelMap map = solve_channel_map(basis, c.solver, 5.0, 1e-4);
    // Below the first inelastic threshold epsilon_0 only scatters elastically.
    CHECK_THAT(map.p00(), WithinAbs(1.0, 1e-10));
    CHECK(map.outputs[0].has_value());
    CHECK(map.outputs[2].has_value());
    CHECK_THAT(map.transition.row(2).sum(), WithinAbs(1.0, 1e-10));
}
