#include <catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <random>

#include "dqd/errors.hpp"
#include "dqd/quantum_info.hpp"

using namespace dqd;
using Catch::Matchers::WithinAbs;

namespace {

const double ln2 = std::log(2.0);
const double ln4 = std::log(4.0);

Eigen::Matrix2cd random_psd_block(std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::Matrix2cd a;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) a(i, j) = {g(rng), g(rng)};
    return a * a.adjoint();
}

TwoQubitState random_x_state(std::mt19937_64& rng) {
    const Eigen::Matrix2cd outer = random_psd_block(rng);
    const Eigen::Matrix2cd inner = random_psd_block(rng);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    // Some draws get a rank-deficient block so both signs of k show up.
    const double w = u(rng);
    TwoQubitState s;
    s.rho(0, 0) = outer(0, 0) * w;
    s.rho(0, 3) = outer(0, 1) * w;
    s.rho(3, 0) = outer(1, 0) * w;
    s.rho(3, 3) = outer(1, 1) * w;
    s.rho(1, 1) = inner(0, 0);
    s.rho(1, 2) = inner(0, 1);
    s.rho(2, 1) = inner(1, 0);
    s.rho(2, 2) = inner(1, 1);
    s.rho /= s.rho.trace();
    s.x_structured = true;
    return s;
}

TwoQubitState random_state(std::mt19937_64& rng, int rank = 4) {
    std::normal_distribution<double> g;
    Eigen::MatrixXcd a(4, rank);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < rank; ++j) a(i, j) = {g(rng), g(rng)};
    TwoQubitState s;
    s.rho = a * a.adjoint();
    s.rho /= s.rho.trace();
    s.x_structured = s.is_x_state();
    return s;
}

Eigen::Matrix2cd random_unitary(std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::Matrix2cd a;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) a(i, j) = {g(rng), g(rng)};
    Eigen::HouseholderQR<Eigen::Matrix2cd> qr(a);
    return qr.householderQ();
}

// Basis index 2 qL + qR.
Eigen::Matrix4cd kron(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
    Eigen::Matrix4cd k;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int p = 0; p < 2; ++p)
                for (int q = 0; q < 2; ++q) k(2 * i + p, 2 * j + q) = a(i, j) * b(p, q);
    return k;
}

// Textbook Wootters: square roots of the eigenvalues of rho (sy x sy) rho* (sy x sy).
double wootters_oracle(const Eigen::Matrix4cd& rho) {
    Eigen::Matrix2cd sy;
    sy << 0, cplx(0, -1), cplx(0, 1), 0;
    const Eigen::Matrix4cd yy = kron(sy, sy);
    const Eigen::Matrix4cd zeta = rho * yy * rho.conjugate() * yy;
    Eigen::ComplexEigenSolver<Eigen::Matrix4cd> es(zeta);
    std::array<double, 4> l;
    for (int i = 0; i < 4; ++i) l[i] = std::sqrt(std::max(0.0, es.eigenvalues()[i].real()));
    std::sort(l.begin(), l.end(), std::greater<>());
    return std::max(0.0, l[0] - l[1] - l[2] - l[3]);
}

double shannon(const std::vector<double>& p) {
    double s = 0.0;
    for (double x : p)
        if (x > 0.0) s -= x * std::log(x);
    return s;
}

}  // namespace

TEST_CASE("Bell channel gives the Table-1 Bell projector") {
    const double r = 1.0 / std::sqrt(2.0);
    const OutputChannelState s = make_output_state({0, 0, cplx(0.6, 0.0), 0}, {0, 0, cplx(0.0, 0.8), 0}, 2);
    CHECK_THAT(s.norm_squared(), WithinAbs(1.0, 1e-12));
    const TwoQubitState rho = reduced_density_matrix(s);
    rho.validate();
    // epsilon_2 = (-|01> + |10>)/sqrt2.
    const TwoQubitState bell = TwoQubitState::pure(Eigen::Vector4cd(0, -r, r, 0));
    CHECK((rho.rho - bell.rho).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_THAT(rho.rho(1, 2).real(), WithinAbs(-0.5, 1e-12));
    CHECK(rho.x_structured);
    CHECK_THAT(concurrence_wootters(rho), WithinAbs(1.0, 1e-10));
    CHECK_THAT(concurrence_xstate(rho), WithinAbs(1.0, 1e-12));
    CHECK_THAT(decoherence(rho), WithinAbs(0.0, 1e-10));
}

TEST_CASE("equal split between epsilon_0 and epsilon_2") {
    const double h = 0.5;
    const OutputChannelState s = make_output_state({cplx(h, 0), 0, cplx(0, h), 0}, {cplx(0, h), 0, cplx(-h, 0), 0});
    const TwoQubitState rho = reduced_density_matrix(s);
    CHECK_THAT(rho.rho(0, 0).real(), WithinAbs(0.5, 1e-12));
    CHECK_THAT(rho.rho(1, 1).real() + rho.rho(2, 2).real(), WithinAbs(0.5, 1e-12));
    CHECK_THAT(std::abs(rho.rho(3, 3)), WithinAbs(0.0, 1e-15));
    CHECK_THAT(std::abs(rho.rho(1, 2)), WithinAbs(0.25, 1e-12));
    CHECK_THAT(decoherence(rho), WithinAbs(ln2, 1e-10));
    CHECK_THAT(concurrence_wootters(rho), WithinAbs(0.5, 1e-10));

    TwoQubitState given;
    given.rho.diagonal() << 0.5, 0.25, 0.25, 0.0;
    given.rho(1, 2) = given.rho(2, 1) = 0.25;
    given.x_structured = true;
    given.validate();
    CHECK_THAT(decoherence(given), WithinAbs(ln2, 1e-10));
    CHECK_THAT(decoherence_xstate(given), WithinAbs(ln2, 1e-12));
}

TEST_CASE("random amplitudes give valid X-states") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g;
    for (int i = 0; i < 500; ++i) {
        std::array<cplx, 4> b, c;
        for (int l = 0; l < 4; ++l) b[l] = {g(rng), g(rng)}, c[l] = {g(rng), g(rng)};
        const auto s = make_output_state(b, c);
        CHECK_THAT(s.norm_squared(), WithinAbs(1.0, 1e-10));
        const TwoQubitState rho = reduced_density_matrix(s);
        CHECK(rho.x_structured);
        CHECK_NOTHROW(rho.validate());
    }
}

TEST_CASE("global phase leaves the reduced state unchanged") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    std::array<cplx, 4> b, c;
    for (int l = 0; l < 4; ++l) b[l] = {g(rng), g(rng)}, c[l] = {g(rng), g(rng)};
    const auto base = reduced_density_matrix(make_output_state(b, c));
    for (double phi : {0.3, 1.7, -2.9}) {
        const cplx e = std::polar(1.0, phi);
        std::array<cplx, 4> pb, pc;
        for (int l = 0; l < 4; ++l) pb[l] = e * b[l], pc[l] = e * c[l];
        const auto turned = reduced_density_matrix(make_output_state(pb, pc));
        CHECK((turned.rho - base.rho).cwiseAbs().maxCoeff() < 1e-12);
        CHECK_THAT(concurrence_wootters(turned), WithinAbs(concurrence_wootters(base), 1e-12));
        CHECK_THAT(decoherence(turned), WithinAbs(decoherence(base), 1e-12));
    }
}

TEST_CASE("X-state closed forms match the general routes on random X-states") {
    std::mt19937_64 rng(2024);
    int entangled = 0;
    for (int i = 0; i < 1000; ++i) {
        const TwoQubitState s = random_x_state(rng);
        s.validate();
        const double cw = concurrence_wootters(s);
        const double cx = concurrence_xstate(s);
        CHECK_THAT(cx, WithinAbs(cw, 1e-10));
        const double outer = std::abs(s.rho(0, 3)) - std::sqrt(s.rho(1, 1).real() * s.rho(2, 2).real());
        CHECK_THAT(cx, WithinAbs(2.0 * std::max({0.0, xstate_k(s), outer}), 1e-15));
        CHECK_THAT(decoherence_xstate(s), WithinAbs(decoherence(s), 1e-10));
        if (cx > 0.0) ++entangled;
    }
    CHECK(entangled > 50);
    CHECK(entangled < 950);
}

TEST_CASE("Wootters route against the textbook eigenvalue definition") {
    std::mt19937_64 rng(77);
    for (int i = 0; i < 300; ++i) {
        const TwoQubitState s = random_state(rng, 1 + i % 4);
        CHECK_THAT(concurrence_wootters(s), WithinAbs(wootters_oracle(s.rho), 1e-7));
        const auto lam = wootters_eigenvalues(s);
        for (int k = 1; k < 4; ++k) CHECK(lam[k] <= lam[k - 1]);
    }
}

TEST_CASE("concurrence is invariant under local unitaries") {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 200; ++i) {
        TwoQubitState s = random_state(rng, 1 + i % 3);
        const double before = concurrence_wootters(s);
        const Eigen::Matrix4cd u = kron(random_unitary(rng), random_unitary(rng));
        s.rho = u * s.rho * u.adjoint();
        s.x_structured = false;
        CHECK_THAT(concurrence_wootters(s), WithinAbs(before, 1e-10));
    }
}

TEST_CASE("entropy bounds and reference states") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 300; ++i) {
        const TwoQubitState s = random_state(rng, 1 + i % 4);
        const double xi = decoherence(s);
        CHECK(xi >= -1e-12);
        CHECK(xi <= ln4 + 1e-12);
        const double c = concurrence_wootters(s);
        CHECK(c >= 0.0);
        CHECK(c <= 1.0 + 1e-12);
    }
    TwoQubitState mixed;
    mixed.rho = Eigen::Matrix4cd::Identity() / 4.0;
    mixed.x_structured = true;
    CHECK_THAT(decoherence(mixed), WithinAbs(ln4, 1e-12));
    CHECK(concurrence_wootters(mixed) == 0.0);
    CHECK(concurrence_xstate(mixed) == 0.0);

    const TwoQubitState product = TwoQubitState::pure(Eigen::Vector4cd(0, 1, 0, 0));
    CHECK(concurrence_wootters(product) < 1e-12);
    CHECK_THAT(decoherence(product), WithinAbs(0.0, 1e-12));
}

TEST_CASE("X-state examples from the closed form") {
    TwoQubitState bell_like;
    bell_like.rho(1, 1) = bell_like.rho(2, 2) = 0.5;
    bell_like.rho(1, 2) = bell_like.rho(2, 1) = 0.5;
    bell_like.x_structured = true;
    CHECK_THAT(xstate_k(bell_like), WithinAbs(0.5, 1e-15));
    CHECK_THAT(concurrence_xstate(bell_like), WithinAbs(1.0, 1e-15));

    // |alpha||omega| at least the inner coherence kills C.
    TwoQubitState dominated;
    dominated.rho.diagonal() << 0.3, 0.2, 0.2, 0.3;
    dominated.rho(1, 2) = dominated.rho(2, 1) = 0.2;
    dominated.x_structured = true;
    CHECK(xstate_k(dominated) < 0.0);
    CHECK(concurrence_xstate(dominated) == 0.0);
    CHECK(concurrence_wootters(dominated) < 1e-12);

    const auto eta = inner_block_eigenvalues(dominated);
    CHECK_THAT(eta[0], WithinAbs(0.4, 1e-15));
    CHECK_THAT(eta[1], WithinAbs(0.0, 1e-15));
    CHECK_THAT(decoherence_xstate(dominated), WithinAbs(shannon({0.3, 0.3, 0.4, 0.0}), 1e-12));

    const auto report = entanglement_report(bell_like);
    CHECK_THAT(report.concurrence, WithinAbs(1.0, 1e-10));
    CHECK_THAT(report.decoherence, WithinAbs(0.0, 1e-10));
    CHECK_THAT(report.eta[0], WithinAbs(1.0, 1e-15));
}

TEST_CASE("structural errors") {
    TwoQubitState bad;
    bad.rho = Eigen::Matrix4cd::Identity() / 4.0;
    bad.rho(0, 1) = 0.1;
    CHECK_THROWS_AS(bad.validate(), StructureError);
    bad.rho(1, 0) = 0.1;
    bad.x_structured = true;
    CHECK_THROWS_AS(bad.validate(), StructureError);
    CHECK_THROWS_AS(concurrence_xstate(bad), StructureError);

    TwoQubitState negative;
    negative.rho.diagonal() << 1.2, -0.2, 0.0, 0.0;
    CHECK_THROWS_AS(negative.validate(), StructureError);
    CHECK_THROWS_AS(decoherence(negative), StructureError);

    CHECK_THROWS_AS(make_output_state({}, {}), DegenerateInputError);
    Eigen::Matrix4d skewed = table1_matrix();
    skewed(0, 1) = 0.1;
    CHECK_THROWS_AS(reduced_density_matrix(make_output_state({1, 0, 0, 0}, {}), skewed), BasisError);
}

TEST_CASE("basis changes through Table 1 are inverse") {
    std::mt19937_64 rng(4);
    const TwoQubitState s = random_state(rng);
    const Eigen::Matrix4d t = table1_matrix();
    CHECK((to_eigen_basis(to_product_basis(s.rho, t), t) - s.rho).cwiseAbs().maxCoeff() < 1e-14);
    Eigen::Matrix4cd e2 = Eigen::Matrix4cd::Zero();
    e2(2, 2) = 1.0;
    const Eigen::Matrix4cd b = to_product_basis(e2, t);
    CHECK_THAT(b(1, 2).real(), WithinAbs(-0.5, 1e-15));
}

TEST_CASE("amplitudes from a solved scattering problem") {
    SimulationConfig c;
    c.grid_points = 41;
    const auto basis = std::make_shared<const ChannelBasis>(build_channel_basis(c));
    REQUIRE(basis->qubits_identified);
    const auto sol = solve_scattering({basis, 0, 16.0, c.solver});
    const auto out = normalize_amplitudes(sol);
    CHECK_THAT(out.norm_squared(), WithinAbs(1.0, 1e-10));
    CHECK(out.input_label == 0);
    const auto p = channel_probabilities(sol);
    double kept = 0.0;
    for (int l = 0; l < 4; ++l) kept += p.channel(basis->qubit_index[l]);
    CHECK_THAT(out.dropped_weight, WithinAbs(1.0 - kept / p.total, 1e-10));
    for (int l = 0; l < 4; ++l) CHECK_THAT(out.probability(l), WithinAbs(p.channel(basis->qubit_index[l]) / kept, 1e-10));
    const auto rho = reduced_density_matrix(out);
    CHECK(rho.x_structured);
    CHECK_NOTHROW(rho.validate());
}
