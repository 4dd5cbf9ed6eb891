#include "dqd/sweep.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "dqd/errors.hpp"

namespace dqd {

SweepSpec SweepSpec::range(int input_channel, double start, double stop, double step) {
    if (!(step > 0.0)) throw ConfigError("sweep step must be positive");
    if (!(stop >= start)) throw ConfigError("sweep stop lies below start");
    SweepSpec s;
    s.input_channel = input_channel;
    const long count = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (long k = 0; k < count; ++k) {
        // Rounded to 1e-9 meV so that 13.2 + 3 * 0.2 prints as 13.8.
        s.energies.push_back(std::round((start + k * step) * 1e9) / 1e9);
    }
    return s;
}

void SweepSpec::validate() const {
    if (energies.empty()) throw ConfigError("sweep has no energies");
    if (input_channel < 0) throw ConfigError("input channel must be non-negative");
    for (std::size_t i = 0; i < energies.size(); ++i) {
        if (!(energies[i] > 0.0)) throw ConfigError(fmt::format("sweep energy {} is not positive", energies[i]));
        if (i > 0 && !(energies[i] > energies[i - 1])) throw ConfigError("sweep energies must be strictly increasing");
    }
    if (grid_points && *grid_points < 3) throw ConfigError("grid override needs at least 3 points");
}

std::string SweepSpec::canonical_text() const {
    std::string s = fmt::format("input_channel = {}\n", input_channel);
    if (grid_points) s += fmt::format("grid_points = {}\n", *grid_points);
    s += fmt::format("entanglement = {}\nantisymmetry_check = {}\nenergies_mev =", entanglement, antisymmetry_check);
    for (double e : energies) s += fmt::format(" {}", e);
    return s + "\n";
}

int ResultBundle::successes() const {
    return static_cast<int>(std::count_if(records.begin(), records.end(), [](const SweepRecord& r) { return r.ok(); }));
}

SweepRecord solve_point(const std::shared_ptr<const ChannelBasis>& basis, const SolverOptions& options,
                        int input_channel, double kinetic_energy, bool entanglement, bool antisymmetry_check) {
    SweepRecord rec;
    rec.kinetic_energy = kinetic_energy;
    ScatteringProblem problem{basis, input_channel, kinetic_energy, options};
    try {
        const ScatteringSolution sol = solve_scattering(problem);
        rec.method = sol.method;
        rec.residual = sol.residual_norm;
        rec.warnings = sol.warnings;
        const ChannelProbabilities p = channel_probabilities(sol, 0.0);
        rec.defect = p.defect;
        for (std::size_t n = 0; n < sol.channels.size(); ++n) {
            const Channel& ch = sol.channels[n];
            rec.channels.push_back({ch.kinetic, ch.kind == ChannelKind::traveling, ch.near_threshold,
                                    p.reflection[n], p.transmission[n], sol.b[n], sol.c[n]});
        }
        if (antisymmetry_check) rec.antisymmetry = check_antisymmetry(sol).relative();
        if (p.defect > options.conservation_tolerance) {
            rec.status = "conservation";
            rec.message = fmt::format("flux conservation defect {:.3e}", p.defect);
            return rec;
        }
        if (entanglement && basis->qubits_identified && basis->qubit_label(input_channel) >= 0) {
            const OutputChannelState out = normalize_amplitudes(sol);
            const TwoQubitState rho = reduced_density_matrix(out);
            EntanglementRecord e;
            e.concurrence = concurrence_wootters(rho);
            e.decoherence = decoherence(rho);
            e.dropped_weight = out.dropped_weight;
            e.rho = rho.rho;
            rec.entanglement = e;
        }
    } catch (const NearThresholdError& e) {
        rec.status = "threshold";
        rec.message = e.what();
    } catch (const SolverError& e) {
        rec.status = "solver";
        rec.message = e.what();
    } catch (const ConservationError& e) {
        rec.status = "conservation";
        rec.message = e.what();
    } catch (const Error& e) {
        rec.status = "error";
        rec.message = e.what();
    }
    return rec;
}

namespace {

template <class Task>
void run_pool(std::size_t count, int jobs, Task task) {
    const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs)));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) task(i);
    };
    if (workers <= 1) {
        worker();
        return;
    }
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

int resolve_jobs(int jobs) {
    if (jobs > 0) return jobs;
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

}  // namespace

ResultBundle run_sweep(const SimulationConfig& config_in, const SweepSpec& spec, int jobs,
                       std::shared_ptr<const ChannelBasis> basis) {
    spec.validate();
    SimulationConfig config = config_in;
    if (spec.grid_points) config.grid_points = *spec.grid_points;
    config.validate();
    if (!basis) basis = std::make_shared<const ChannelBasis>(build_channel_basis(config));
    if (spec.input_channel >= basis->size())
        throw ConfigError(fmt::format("input channel {} outside the basis of {} states", spec.input_channel,
                                      basis->size()));

    ResultBundle bundle;
    bundle.config_hash = config_hash(config);
    bundle.config_text = canonical_text(config);
    bundle.run_key = short_hash(bundle.config_text + spec.canonical_text());
    bundle.grid_points = config.grid_points;
    bundle.solver = config.solver;
    bundle.input_channel = spec.input_channel;
    for (const auto& s : basis->states) bundle.state_energies.push_back(s.energy);
    bundle.qubit_index = basis->qubit_index;
    bundle.records.resize(spec.energies.size());

    run_pool(spec.energies.size(), resolve_jobs(jobs), [&](std::size_t i) {
        bundle.records[i] = solve_point(basis, config.solver, spec.input_channel, spec.energies[i],
                                        spec.entanglement, spec.antisymmetry_check);
    });
    if (bundle.successes() == 0)
        throw SolverError(fmt::format("none of the {} sweep points converged; first failure: {}",
                                      bundle.records.size(), bundle.records.front().message),
                          {});
    return bundle;
}

ResultBundle run_sweep(const std::filesystem::path& config_path, const SweepSpec& spec, int jobs) {
    return run_sweep(load_config(config_path), spec, jobs);
}

ChannelMap solve_channel_map(const std::shared_ptr<const ChannelBasis>& basis, const SolverOptions& options,
                             double kinetic_energy, double tolerance) {
    if (!basis->qubits_identified) throw BasisError("qubit states were not identified in this basis");
    std::vector<ScatteringSolution> sols;
    std::vector<int> pending{0, 2};
    std::array<bool, 4> queued{{true, false, true, false}};
    while (!pending.empty()) {
        const int label = pending.front();
        pending.erase(pending.begin());
        ScatteringProblem problem{basis, basis->qubit_index[label], kinetic_energy, options};
        sols.push_back(solve_scattering(problem));
        const ChannelProbabilities p = channel_probabilities(sols.back(), 0.0);
        for (int l = 0; l < 4; ++l) {
            const int n = basis->qubit_index[l];
            if (!queued[l] && n < static_cast<int>(p.reflection.size()) && p.channel(n) > 1e-9) {
                queued[l] = true;
                pending.push_back(l);
            }
        }
    }
    return extract_channel_map(sols, kinetic_energy, tolerance);
}

}  // namespace dqd
