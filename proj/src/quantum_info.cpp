#include "dqd/quantum_info.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "dqd/errors.hpp"

namespace dqd {

double OutputChannelState::norm_squared() const {
    double s = 0.0;
    for (int l = 0; l < 4; ++l) s += probability(l);
    return s;
}

OutputChannelState make_output_state(const std::array<cplx, 4>& b, const std::array<cplx, 4>& c, int input_label) {
    OutputChannelState s;
    s.input_label = input_label;
    s.b = b;
    s.c = c;
    const double w = s.norm_squared();
    if (!(w > 0.0)) throw DegenerateInputError("all traveling amplitudes vanish");
    const double inv = 1.0 / std::sqrt(w);
    for (int l = 0; l < 4; ++l) s.b[l] *= inv, s.c[l] *= inv;
    return s;
}

OutputChannelState normalize_amplitudes(const ScatteringSolution& solution) {
    const ChannelBasis& basis = *solution.basis;
    if (!basis.qubits_identified) throw BasisError("qubit states were not identified in this basis");
    const double v0 = solution.channels[solution.input_channel].velocity;
    if (!(v0 > 0.0)) throw DegenerateInputError("input channel is not traveling");
    std::array<cplx, 4> b{}, c{};
    double total = 0.0, kept = 0.0;
    for (std::size_t n = 0; n < solution.channels.size(); ++n) {
        const Channel& ch = solution.channels[n];
        if (ch.kind != ChannelKind::traveling) continue;
        const double w = std::sqrt(ch.velocity / v0);
        const cplx bn = w * solution.b[n], cn = w * solution.c[n];
        const double p = std::norm(bn) + std::norm(cn);
        total += p;
        const int label = basis.qubit_label(static_cast<int>(n));
        if (label < 0) continue;
        b[label] = bn;
        c[label] = cn;
        kept += p;
    }
    OutputChannelState s = make_output_state(b, c, basis.qubit_label(solution.input_channel));
    s.dropped_weight = total > 0.0 ? (total - kept) / total : 0.0;
    return s;
}

bool TwoQubitState::is_x_state(double tol) const {
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            if (i != j && i + j != 3 && std::abs(rho(i, j)) > tol) return false;
    return true;
}

void TwoQubitState::validate(double tol) const {
    const double tr_defect = std::abs(rho.trace() - cplx(1.0));
    if (tr_defect > tol) throw StructureError(fmt::format("trace misses 1 by {:.3e}", tr_defect));
    const double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    if (herm > tol) throw StructureError(fmt::format("hermiticity defect {:.3e}", herm));
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(rho, Eigen::EigenvaluesOnly);
    if (es.eigenvalues()[0] < -tol)
        throw StructureError(fmt::format("negative eigenvalue {:.3e}", es.eigenvalues()[0]));
    if (x_structured && !is_x_state(tol)) throw StructureError("X flag set but off-X elements are nonzero");
}

TwoQubitState TwoQubitState::pure(const Eigen::Vector4cd& psi) {
    TwoQubitState s;
    const Eigen::Vector4cd v = psi.normalized();
    s.rho = v * v.adjoint();
    s.x_structured = s.is_x_state();
    return s;
}

Eigen::Matrix4cd to_product_basis(const Eigen::Matrix4cd& rho_c, const Eigen::Matrix4d& overlaps) {
    const Eigen::Matrix4cd u = overlaps.cast<cplx>();
    return u.transpose() * rho_c * u;
}

Eigen::Matrix4cd to_eigen_basis(const Eigen::Matrix4cd& rho_b, const Eigen::Matrix4d& overlaps) {
    const Eigen::Matrix4cd u = overlaps.cast<cplx>();
    return u * rho_b * u.transpose();
}

TwoQubitState reduced_density_matrix(const OutputChannelState& state, const Eigen::Matrix4d& overlaps) {
    const double unitarity = (overlaps * overlaps.transpose() - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff();
    if (unitarity > 1e-8) throw BasisError(fmt::format("overlap matrix is not unitary (defect {:.3e})", unitarity));
    // Carrier groups: epsilon_0, {epsilon_1, epsilon_2}, epsilon_3.
    static const int group[4] = {0, 1, 1, 2};
    TwoQubitState out;
    for (const auto* amp : {&state.b, &state.c}) {
        for (int g = 0; g < 3; ++g) {
            Eigen::Vector4cd v = Eigen::Vector4cd::Zero();
            for (int l = 0; l < 4; ++l)
                if (group[l] == g) v += (*amp)[l] * overlaps.row(l).transpose().cast<cplx>();
            out.rho += v * v.adjoint();
        }
    }
    out.x_structured = out.is_x_state();
    return out;
}

TwoQubitState reduced_density_matrix(const OutputChannelState& state) {
    return reduced_density_matrix(state, table1_matrix());
}

namespace {

double entropy_term(double p) {
    if (p < -1e-10) throw StructureError(fmt::format("density matrix eigenvalue {:.3e} below tolerance", p));
    return p > 0.0 ? -p * std::log(p) : 0.0;
}

// Eigenvalues of the Hermitian block [[a, z], [conj z, d]].
std::array<double, 2> block_eigenvalues(double a, double d, cplx z) {
    const double tr = a + d;
    const double disc = std::hypot(a - d, 2.0 * std::abs(z));
    return {0.5 * (tr + disc), 0.5 * (tr - disc)};
}

}  // namespace

double decoherence(const TwoQubitState& state) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(state.rho, Eigen::EigenvaluesOnly);
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += entropy_term(es.eigenvalues()[i]);
    return s;
}

std::array<double, 2> inner_block_eigenvalues(const TwoQubitState& state) {
    const auto& r = state.rho;
    return block_eigenvalues(r(1, 1).real(), r(2, 2).real(), r(1, 2));
}

double decoherence_xstate(const TwoQubitState& state) {
    if (!state.is_x_state()) throw StructureError("decoherence_xstate needs an X-state");
    const auto& r = state.rho;
    const auto outer = block_eigenvalues(r(0, 0).real(), r(3, 3).real(), r(0, 3));
    const auto inner = inner_block_eigenvalues(state);
    return entropy_term(outer[0]) + entropy_term(outer[1]) + entropy_term(inner[0]) + entropy_term(inner[1]);
}

namespace {

Eigen::Matrix4cd psd_sqrt(const Eigen::Matrix4cd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(0.5 * (m + m.adjoint()));
    Eigen::Vector4d s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * s.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

Eigen::Matrix4cd spin_flip() {
    // sigma_y x sigma_y in B.
    Eigen::Matrix4cd f = Eigen::Matrix4cd::Zero();
    f(0, 3) = -1.0;
    f(1, 2) = 1.0;
    f(2, 1) = 1.0;
    f(3, 0) = -1.0;
    return f;
}

// sqrt(lambda_i) as singular values of sqrt(rho) sqrt(rho~): the same numbers as the square
// roots of the eigenvalues of zeta, without the loss of accuracy near zero.
Eigen::Vector4d wootters_roots(const TwoQubitState& state) {
    const Eigen::Matrix4cd f = spin_flip();
    const Eigen::Matrix4cd sr = psd_sqrt(state.rho);
    const Eigen::Matrix4cd sr_tilde = f * sr.conjugate() * f;
    Eigen::JacobiSVD<Eigen::Matrix4cd> svd(sr * sr_tilde);
    return svd.singularValues();
}

}  // namespace

std::array<double, 4> wootters_eigenvalues(const TwoQubitState& state) {
    const Eigen::Vector4d s = wootters_roots(state);
    return {s[0] * s[0], s[1] * s[1], s[2] * s[2], s[3] * s[3]};
}

double concurrence_wootters(const TwoQubitState& state) {
    const Eigen::Vector4d s = wootters_roots(state);
    return std::max(0.0, s[0] - s[1] - s[2] - s[3]);
}

double xstate_k(const TwoQubitState& state) {
    const auto& r = state.rho;
    return std::abs(r(1, 2)) - std::sqrt(std::max(0.0, r(0, 0).real() * r(3, 3).real()));
}

double concurrence_xstate(const TwoQubitState& state) {
    if (!state.is_x_state()) throw StructureError("concurrence_xstate needs an X-state");
    const auto& r = state.rho;
    const double k_outer = std::abs(r(0, 3)) - std::sqrt(std::max(0.0, r(1, 1).real() * r(2, 2).real()));
    return 2.0 * std::max({0.0, xstate_k(state), k_outer});
}

EntanglementReport entanglement_report(const TwoQubitState& state) {
    EntanglementReport rep;
    rep.concurrence = concurrence_wootters(state);
    rep.decoherence = decoherence(state);
    rep.zeta_eigenvalues = wootters_eigenvalues(state);
    rep.eta = inner_block_eigenvalues(state);
    rep.k = xstate_k(state);
    return rep;
}

}  // namespace dqd
