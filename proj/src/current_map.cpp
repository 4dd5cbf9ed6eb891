#include "dqd/current_map.hpp"

#include <fmt/format.h>

#include <cmath>
#include <map>
#include <tuple>

#include "dqd/errors.hpp"

namespace dqd {

ChannelMap extract_channel_map(const std::vector<ScatteringSolution>& solutions, double kinetic_energy,
                               double tolerance) {
    ChannelMap map;
    map.kinetic_energy = kinetic_energy;
    if (solutions.empty()) throw ConfigError("no solutions to build a channel map from");
    const ChannelBasis& basis = *solutions.front().basis;
    if (!basis.qubits_identified) throw BasisError("qubit states were not identified in this basis");
    for (int l = 0; l < 4; ++l) map.level_energies[l] = basis.energy(basis.qubit_index[l]);

    for (const auto& sol : solutions) {
        if (std::abs(sol.kinetic_energy - kinetic_energy) > 1e-12)
            throw ConfigError("solutions in a channel map must share one injection energy");
        const int j = basis.qubit_label(sol.input_channel);
        if (j < 0) throw ConfigError("channel map inputs must be qubit states");
        const ChannelProbabilities p = channel_probabilities(sol, 0.0);
        double raw = 0.0;
        for (int l = 0; l < 4; ++l) raw += p.channel(basis.qubit_index[l]);
        map.row_defect[j] = std::abs(raw - 1.0);
        if (map.row_defect[j] > tolerance)
            throw ConservationError(fmt::format("input epsilon_{}: qubit channels carry {:.6f} of the flux", j, raw),
                                    map.row_defect[j]);
        map.outputs[j] = normalize_amplitudes(sol);
        for (int n = 0; n < 4; ++n) map.transition(j, n) = map.outputs[j]->probability(n);
    }
    return map;
}

namespace {

ChannelMap stay_map() {
    ChannelMap m;
    // Ideal qubit levels: epsilon_1 = epsilon_2 sits halfway between epsilon_0 and epsilon_3.
    m.level_energies = {0.0, 1.0, 1.0, 2.0};
    for (int l = 0; l < 4; ++l) {
        std::array<cplx, 4> b{}, c{};
        b[l] = 1.0;
        m.outputs[l] = make_output_state(b, c, l);
    }
    return m;
}

}  // namespace

ChannelMap ideal_entangling_map(double p00) {
    if (p00 < 0.0 || p00 > 1.0) throw ConfigError("p00 must lie in [0, 1]");
    ChannelMap m = stay_map();
    std::array<cplx, 4> b{}, c{};
    b[0] = std::sqrt(p00);
    b[2] = std::sqrt(1.0 - p00);
    m.outputs[0] = make_output_state(b, c, 0);
    for (int n = 0; n < 4; ++n) m.transition(0, n) = m.outputs[0]->probability(n);
    return m;
}

ChannelMap ideal_relaxation_map(double p22) {
    if (p22 < 0.0 || p22 > 1.0) throw ConfigError("p22 must lie in [0, 1]");
    ChannelMap m = stay_map();
    std::array<cplx, 4> b{}, c{};
    b[2] = std::sqrt(p22);
    b[0] = std::sqrt(1.0 - p22);
    m.outputs[2] = make_output_state(b, c, 2);
    for (int n = 0; n < 4; ++n) m.transition(2, n) = m.outputs[2]->probability(n);
    return m;
}

TwoQubitState eigenstate_projector(int label) {
    Eigen::Matrix4cd rc = Eigen::Matrix4cd::Zero();
    rc(label, label) = 1.0;
    TwoQubitState s;
    s.rho = to_product_basis(rc, table1_matrix());
    s.x_structured = s.is_x_state();
    return s;
}

namespace {

InjectionStep make_step(int n, const Eigen::Matrix4cd& rho_b, const Eigen::Vector4d& occ) {
    InjectionStep s;
    s.n = n;
    s.rho.rho = rho_b;
    s.rho.x_structured = s.rho.is_x_state();
    s.concurrence = concurrence_wootters(s.rho);
    s.decoherence = decoherence(s.rho);
    for (int l = 0; l < 4; ++l) s.occupancy[l] = occ[l];
    return s;
}

}  // namespace

InjectionTrace iterate_injections(const std::vector<ChannelMap>& maps, const TwoQubitState& initial, int n_max) {
    if (maps.empty()) throw ConfigError("no channel map given");
    if (n_max < 0) throw ConfigError("n_max must be non-negative");
    initial.validate(1e-8);
    const Eigen::Matrix4d u = table1_matrix();
    const Eigen::Matrix4cd rho_c = to_eigen_basis(initial.rho, u);
    Eigen::Vector4d occ = rho_c.diagonal().real();

    InjectionTrace trace;
    trace.push_back(make_step(0, initial.rho, occ));
    for (int n = 1; n <= n_max; ++n) {
        const ChannelMap& m = maps[(n - 1) % maps.size()];
        occ = m.transition.transpose() * occ;
        Eigen::Matrix4cd rc = Eigen::Matrix4cd::Zero();
        rc.diagonal() = occ.cast<cplx>();
        trace.push_back(make_step(n, to_product_basis(rc, u), occ));
    }
    return trace;
}

InjectionTrace iterate_injections(const ChannelMap& map, const TwoQubitState& initial, int n_max) {
    return iterate_injections(std::vector<ChannelMap>{map}, initial, n_max);
}

ClosedForm closed_form_entangle(double p00, int n) {
    if (p00 < 0.0 || p00 > 1.0 || n < 0) throw ConfigError("closed form needs p00 in [0, 1] and n >= 0");
    const double x = std::pow(p00, n);
    auto h = [](double p) { return p > 0.0 ? -p * std::log(p) : 0.0; };
    return {1.0 - x, h(x) + h(1.0 - x)};
}

InjectionTrace disentangle_trace(const ChannelMap& map, int n_max) {
    return iterate_injections(map, eigenstate_projector(2), n_max);
}

TwoQubitState compose_two_injections(const ChannelMap& map, int initial_label) {
    // Key: (direction, carrier energy) of the first and second carrier. Energies are rounded
    // to 1e-9 meV so equal carrier energies from different paths share one label.
    using Key = std::tuple<int, long long, int, long long>;
    std::map<Key, Eigen::Vector4cd> branches;
    auto energy_key = [&](int from, int to) {
        const double e = map.kinetic_energy + map.level_energies[from] - map.level_energies[to];
        return std::llround(e * 1e9);
    };
    auto amplitude = [&](int from, int dir, int to) -> cplx {
        if (!map.outputs[from]) return from == to && dir == 0 ? cplx(1.0) : cplx(0.0);
        return dir == 0 ? map.outputs[from]->b[to] : map.outputs[from]->c[to];
    };
    for (int d1 = 0; d1 < 2; ++d1)
        for (int m1 = 0; m1 < 4; ++m1) {
            const cplx a1 = amplitude(initial_label, d1, m1);
            if (a1 == 0.0) continue;
            for (int d2 = 0; d2 < 2; ++d2)
                for (int m2 = 0; m2 < 4; ++m2) {
                    const cplx a2 = amplitude(m1, d2, m2);
                    if (a2 == 0.0) continue;
                    const Key key{d1, energy_key(initial_label, m1), d2, energy_key(m1, m2)};
                    auto it = branches.try_emplace(key, Eigen::Vector4cd::Zero()).first;
                    it->second[m2] += a1 * a2;
                }
        }
    Eigen::Matrix4cd rc = Eigen::Matrix4cd::Zero();
    for (const auto& [key, v] : branches) rc += v * v.adjoint();
    TwoQubitState s;
    s.rho = to_product_basis(rc, table1_matrix());
    s.x_structured = s.is_x_state();
    return s;
}

}  // namespace dqd
