#include <CLI11.hpp>
#include <fmt/format.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dqd/bound_states.hpp"
#include "dqd/config.hpp"
#include "dqd/current_map.hpp"
#include "dqd/errors.hpp"
#include "dqd/output.hpp"
#include "dqd/resonance.hpp"
#include "dqd/sweep.hpp"

namespace fs = std::filesystem;
using namespace dqd;

namespace {

enum Exit { ok = 0, validation = 1, solver = 2, io = 3 };

struct Common {
    std::string config;
    std::optional<int> grid;
    std::string out = "out";
    int jobs = 0;
    std::string format = "csv";
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "device/solver configuration file (defaults: the reference device)");
    cmd->add_option("--grid", c.grid, "grid points per axis (overrides the config)");
    cmd->add_option("--out", c.out, "output directory")->capture_default_str();
    cmd->add_option("--jobs", c.jobs, "parallel solves (0: all cores)")->capture_default_str();
    cmd->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
}

SimulationConfig load(const Common& c) {
    SimulationConfig cfg = c.config.empty() ? SimulationConfig{} : load_config(c.config);
    if (c.grid) cfg.grid_points = *c.grid;
    cfg.validate();
    // Fail on an unusable output directory before any solve runs.
    std::error_code ec;
    fs::create_directories(c.out, ec);
    if (ec || !fs::is_directory(c.out)) throw IoError(fmt::format("cannot create output directory {}", c.out));
    return cfg;
}

std::shared_ptr<const ChannelBasis> make_basis(const SimulationConfig& cfg) {
    return std::make_shared<const ChannelBasis>(build_channel_basis(cfg));
}

void print_manifest(const std::vector<fs::path>& files, const fs::path& manifest) {
    for (const auto& f : files) std::cout << "wrote " << f.string() << "\n";
    std::cout << "wrote " << manifest.string() << "\n";
}

std::string command_line(int argc, char** argv) {
    std::string s;
    for (int i = 0; i < argc; ++i) s += (i ? " " : "") + std::string(argv[i]);
    return s;
}

// bound-states

int run_bound_states(const Common& c, const std::string& cmd) {
    const SimulationConfig cfg = load(c);
    const ChannelBasis basis = build_channel_basis(cfg);
    const std::string hash = config_hash(cfg);

    fmt::print("grid {} points, h = {} nm\n", basis.grid.points_per_axis, basis.grid.spacing);
    for (int l = 0; l < basis.single.levels(); ++l) fmt::print("E{} = {:.3f} meV\n", l, basis.single.level_energy(l));
    for (int n = 0; n < basis.size(); ++n) {
        const int label = basis.qubit_label(n);
        fmt::print("eps[{}] = {:.3f} meV  parity {:+d}  {}\n", n, basis.energy(n), basis.states[n].mirror_parity,
                   label >= 0 ? fmt::format("epsilon_{}", label)
                              : (basis.kinds[n] == StateKind::double_occupancy ? "double occupancy" : ""));
    }
    if (basis.qubits_identified) {
        fmt::print("<E_n^L E_m^R|eps_l>  columns 0L0R 0L1R 1L0R 1L1R\n");
        for (int l = 0; l < 4; ++l)
            fmt::print("eps_{}  {:+.4f} {:+.4f} {:+.4f} {:+.4f}\n", l, basis.overlaps(l, 0), basis.overlaps(l, 1),
                       basis.overlaps(l, 2), basis.overlaps(l, 3));
    }

    std::vector<fs::path> files;
    if (c.format == "csv") {
        const fs::path single = fs::path(c.out) / fmt::format("single_particle_{}.csv", hash);
        const fs::path pair = fs::path(c.out) / fmt::format("two_particle_{}.csv", hash);
        auto o1 = open_output(single);
        write_single_particle_csv(o1, basis);
        auto o2 = open_output(pair);
        write_two_particle_csv(o2, basis);
        files = {single, pair};
    } else {
        const fs::path path = fs::path(c.out) / fmt::format("bound_states_{}.json", hash);
        std::ostringstream s;
        s << "{\n \"config_hash\": \"" << hash << "\",\n \"levels_mev\": [";
        for (int l = 0; l < basis.single.levels(); ++l) s << (l ? ", " : "") << fmt::format("{}", basis.single.level_energy(l));
        s << "],\n \"states_mev\": [";
        for (int n = 0; n < basis.size(); ++n) s << (n ? ", " : "") << fmt::format("{}", basis.energy(n));
        s << "],\n \"qubit_index\": [";
        for (int l = 0; l < 4; ++l) s << (l ? ", " : "") << basis.qubit_index[l];
        s << "],\n \"overlaps\": [";
        for (int l = 0; l < 4; ++l)
            s << (l ? ", " : "")
              << fmt::format("[{}, {}, {}, {}]", basis.overlaps(l, 0), basis.overlaps(l, 1), basis.overlaps(l, 2),
                             basis.overlaps(l, 3));
        s << "]\n}\n";
        auto o = open_output(path);
        o << s.str();
        files = {path};
    }
    print_manifest(files, write_run_manifest(c.out, files, cmd));
    return ok;
}

// sweep

struct SweepArgs {
    int channel = 0;
    double from = 13.2, to = 19.2, step = 0.2;
    std::vector<double> energies;
    bool no_entanglement = false;
};

void print_fit(const char* what, const ResonanceFit& f) {
    if (!f.found) {
        fmt::print("{}: not found ({})\n", what, f.reason);
        return;
    }
    fmt::print("{}: {} center {:.4f} meV, width {:.4f} meV, R^2 {:.4f}, skew {:+.3f}\n", what, to_string(f.shape),
               f.extremum, f.width, f.r_squared, f.skew);
}

int run_sweep_cmd(const Common& c, const SweepArgs& a, const std::string& cmd) {
    const SimulationConfig cfg = load(c);
    SweepSpec spec = a.energies.empty() ? SweepSpec::range(a.channel, a.from, a.to, a.step) : SweepSpec{};
    if (!a.energies.empty()) {
        spec.input_channel = a.channel;
        spec.energies = a.energies;
    }
    spec.entanglement = !a.no_entanglement;
    spec.validate();
    const ResultBundle bundle = run_sweep(cfg, spec, c.jobs);
    for (const auto& r : bundle.records) {
        if (!r.ok()) {
            fmt::print("T0 {:8.4f}  {}: {}\n", r.kinetic_energy, r.status, r.message);
            continue;
        }
        std::string line = fmt::format("T0 {:8.4f}", r.kinetic_energy);
        for (std::size_t n = 0; n < r.channels.size(); ++n)
            if (r.channels[n].traveling) line += fmt::format("  p{}={:.5f}", n, r.probability(static_cast<int>(n)));
        if (r.entanglement) line += fmt::format("  C={:.4f} xi={:.4f}", r.entanglement->concurrence, r.entanglement->decoherence);
        fmt::print("{}\n", line);
    }
    for (int n : {0, 2}) print_fit(fmt::format("channel {} resonance", n).c_str(), find_resonance(bundle, n));
    const auto files = emit_outputs(bundle, parse_output_format(c.format), c.out);
    print_manifest(files, write_run_manifest(c.out, files, cmd));
    return ok;
}

// trace

struct TraceArgs {
    std::string scenario = "entangle";
    std::optional<double> t0;
    std::optional<double> stay;
    int n_max = 60;
    double leak_tolerance = 1e-4;
};

TraceRecord make_trace(const std::string& scenario, const ChannelMap& map, int n_max) {
    TraceRecord t;
    t.scenario = scenario;
    t.kinetic_energy = map.kinetic_energy;
    if (scenario == "entangle") {
        t.stay_probability = map.p00();
        t.steps = iterate_injections(map, eigenstate_projector(0), n_max);
    } else {
        t.stay_probability = map.p22();
        t.steps = disentangle_trace(map, n_max);
    }
    return t;
}

int run_trace_cmd(const Common& c, const TraceArgs& a, const std::string& cmd) {
    const SimulationConfig cfg = load(c);
    if (!a.t0 && !a.stay) throw ConfigError("trace needs --T0 (solved map) or --stay (ideal map)");
    ChannelMap map;
    if (a.stay) {
        map = a.scenario == "entangle" ? ideal_entangling_map(*a.stay) : ideal_relaxation_map(*a.stay);
        if (a.t0) map.kinetic_energy = *a.t0;
    } else {
        if (!(*a.t0 > 0.0)) throw ConfigError("T0 must be positive");
        map = solve_channel_map(make_basis(cfg), cfg.solver, *a.t0, a.leak_tolerance);
    }
    ResultBundle bundle;
    bundle.config_hash = config_hash(cfg);
    bundle.config_text = canonical_text(cfg);
    bundle.grid_points = cfg.grid_points;
    bundle.solver = cfg.solver;
    bundle.input_channel = a.scenario == "entangle" ? 0 : 2;
    bundle.traces.push_back(make_trace(a.scenario, map, a.n_max));
    bundle.run_key = short_hash(bundle.config_text +
                                fmt::format("trace {} {} {} {}", a.scenario, map.kinetic_energy,
                                            a.stay ? fmt::format("{}", *a.stay) : "solved", a.n_max));
    fmt::print("stay probability {:.6f}\n", bundle.traces[0].stay_probability);
    for (const auto& s : bundle.traces[0].steps)
        if (s.n % 5 == 0) fmt::print("n {:3d}  C {:.6f}  xi {:.6f}\n", s.n, s.concurrence, s.decoherence);
    const auto files = emit_outputs(bundle, parse_output_format(c.format), c.out);
    print_manifest(files, write_run_manifest(c.out, files, cmd));
    return ok;
}

// reproduce-figure

// Sweeps are cached as bundle JSON under the output directory, keyed like every other file.
ResultBundle cached_sweep(const SimulationConfig& cfg, const SweepSpec& spec, const Common& c,
                          std::shared_ptr<const ChannelBasis> basis) {
    ResultBundle probe;
    probe.config_text = canonical_text(cfg);
    const std::string key = short_hash(probe.config_text + spec.canonical_text());
    const fs::path path = fs::path(c.out) / fmt::format("bundle_j{}_{}.json", spec.input_channel, key);
    if (fs::exists(path)) {
        std::ifstream in(path);
        std::stringstream s;
        s << in.rdbuf();
        fmt::print("reusing {}\n", path.string());
        return bundle_from_json(s.str());
    }
    ResultBundle b = run_sweep(cfg, spec, c.jobs, std::move(basis));
    emit_outputs(b, OutputFormat::json, c.out);
    return b;
}

void write_channel_columns(std::ostream& out, const ResultBundle& b, const std::vector<int>& channels) {
    out << "T0";
    for (int n : channels) out << fmt::format(",pR_{0},pT_{0}", n);
    out << "\n";
    for (const auto& r : b.records) {
        if (!r.ok()) continue;
        out << fmt::format("{}", r.kinetic_energy);
        for (int n : channels) {
            if (n < static_cast<int>(r.channels.size()))
                out << fmt::format(",{},{}", r.channels[n].reflection, r.channels[n].transmission);
            else
                out << ",,";
        }
        out << "\n";
    }
}

int run_figure(const Common& c, int figure, const std::string& cmd) {
    const SimulationConfig cfg = load(c);
    auto basis = make_basis(cfg);
    std::vector<fs::path> files;
    const SweepSpec entangling = SweepSpec::range(basis->qubit_index[0], 13.2, 19.2, 0.2);

    if (figure == 2 || figure == 3) {
        const ResultBundle b = cached_sweep(cfg, entangling, c, basis);
        const fs::path path = fs::path(c.out) / fmt::format("fig{}.csv", figure);
        auto out = open_output(path);
        if (figure == 2) {
            write_channel_columns(out, b, {basis->qubit_index[0], basis->qubit_index[1], basis->qubit_index[2]});
        } else {
            out << "T0,C,xi\n";
            for (const auto& r : b.records)
                if (r.ok() && r.entanglement)
                    out << fmt::format("{},{},{}\n", r.kinetic_energy, r.entanglement->concurrence,
                                       r.entanglement->decoherence);
        }
        files.push_back(path);
        print_fit("channel 2 resonance", find_resonance(b, basis->qubit_index[2]));
        print_fit("elastic transmission", find_resonance(b, basis->qubit_index[0], SpectrumQuantity::transmission,
                                                         Lineshape::fano));
    } else if (figure == 4) {
        const ResultBundle b = cached_sweep(cfg, entangling, c, basis);
        const ResonanceFit fit = find_resonance(b, basis->qubit_index[2]);
        if (!fit.found) throw SolverError("no channel-2 resonance in the entangling sweep: " + fit.reason, {});
        const double bar = std::round(fit.extremum * 100.0) / 100.0;
        fmt::print("resonance at {:.2f} meV\n", bar);
        const fs::path path = fs::path(c.out) / "fig4.csv";
        auto out = open_output(path);
        out << "T0,p00,n,C,xi,occ_0,occ_2\n";
        for (double offset : {0.0, 0.4, 0.8, 1.2}) {
            const ChannelMap map = solve_channel_map(basis, cfg.solver, bar + offset, 1e-2);
            const TraceRecord t = make_trace("entangle", map, 60);
            fmt::print("T0 {:.2f}: p00 {:.4f}, C(60) {:.4f}\n", map.kinetic_energy, map.p00(), t.steps.back().concurrence);
            for (const auto& s : t.steps)
                out << fmt::format("{},{},{},{},{},{},{}\n", map.kinetic_energy, map.p00(), s.n, s.concurrence,
                                   s.decoherence, s.occupancy[0], s.occupancy[2]);
        }
        files.push_back(path);
    } else if (figure == 5) {
        const SweepSpec relax = SweepSpec::range(basis->qubit_index[2], 1.0, 4.2, 0.2);
        SweepSpec ground = relax;
        ground.input_channel = basis->qubit_index[0];
        const ResultBundle b2 = cached_sweep(cfg, relax, c, basis);
        const ResultBundle b0 = cached_sweep(cfg, ground, c, basis);
        const ResonanceFit fit = find_resonance(b2, basis->qubit_index[0]);
        print_fit("relaxation peak", fit);
        {
            const fs::path path = fs::path(c.out) / "fig5_inset.csv";
            auto out = open_output(path);
            const int n0 = basis->qubit_index[0], n2 = basis->qubit_index[2];
            out << "T0,pR_0,pT_0,pR_2,pT_2,C_eps0,xi_eps0,C_eps2,xi_eps2\n";
            for (std::size_t i = 0; i < b2.records.size(); ++i) {
                const SweepRecord& r = b2.records[i];
                const SweepRecord& g = b0.records[i];
                if (!r.ok() || !g.ok() || !r.entanglement || !g.entanglement) continue;
                out << fmt::format("{},{},{},{},{},{},{},{},{}\n", r.kinetic_energy, r.channels[n0].reflection,
                                   r.channels[n0].transmission, r.channels[n2].reflection, r.channels[n2].transmission,
                                   g.entanglement->concurrence, g.entanglement->decoherence,
                                   r.entanglement->concurrence, r.entanglement->decoherence);
            }
            files.push_back(path);
        }
        if (!fit.found) throw SolverError("no relaxation peak in the j=2 sweep: " + fit.reason, {});
        const double t0 = std::round(fit.extremum * 100.0) / 100.0;
        const ChannelMap map = solve_channel_map(basis, cfg.solver, t0, 1e-2);
        const TraceRecord t = make_trace("disentangle", map, 60);
        fmt::print("T0 {:.2f}: p22 {:.4f}, C(60) {:.4f}, xi(60) {:.4f}\n", t0, map.p22(), t.steps.back().concurrence,
                   t.steps.back().decoherence);
        const fs::path path = fs::path(c.out) / "fig5.csv";
        auto out = open_output(path);
        write_trace_csv(out, t);
        files.push_back(path);
    } else {
        throw ConfigError("figure must be 2, 3, 4 or 5");
    }
    print_manifest(files, write_run_manifest(c.out, files, cmd));
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Three-particle scattering through a double quantum dot: spectra, entanglement, current maps"};
    app.require_subcommand(1);

    Common common;
    auto* bound = app.add_subcommand("bound-states", "single- and two-particle bound states, Table-1 overlaps");
    add_common(bound, common);

    SweepArgs sweep_args;
    auto* sweep = app.add_subcommand("sweep", "scan the injection energy for one input channel");
    add_common(sweep, common);
    sweep->add_option("--channel,-j", sweep_args.channel, "input channel (basis index)")->capture_default_str();
    sweep->add_option("--from", sweep_args.from, "first T0, meV")->capture_default_str();
    sweep->add_option("--to", sweep_args.to, "last T0, meV")->capture_default_str();
    sweep->add_option("--step", sweep_args.step, "T0 step, meV")->capture_default_str();
    sweep->add_option("--energies", sweep_args.energies, "explicit T0 list, meV (overrides the range)");
    sweep->add_flag("--no-entanglement", sweep_args.no_entanglement, "skip the density-matrix analysis");

    TraceArgs trace_args;
    auto* trace = app.add_subcommand("trace", "repeated injection: C(n) and xi(n)");
    add_common(trace, common);
    trace->add_option("--scenario", trace_args.scenario, "entangle (from epsilon_0) or disentangle (from epsilon_2)")
        ->check(CLI::IsMember({"entangle", "disentangle"}))
        ->capture_default_str();
    trace->add_option("--T0", trace_args.t0, "injection energy, meV (solves the channel map)");
    trace->add_option("--stay", trace_args.stay, "ideal map with this stay probability instead of solving");
    trace->add_option("--n-max", trace_args.n_max, "number of carriers")->capture_default_str();
    trace->add_option("--leak-tolerance", trace_args.leak_tolerance,
                      "allowed flux into non-qubit channels per input")
        ->capture_default_str();

    int figure = 0;
    auto* fig = app.add_subcommand("reproduce-figure", "write plot data for figure 2, 3, 4 or 5");
    add_common(fig, common);
    fig->add_option("figure", figure, "2, 3, 4 or 5")->required()->check(CLI::IsMember({2, 3, 4, 5}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : validation;
    }

    const std::string cmd = command_line(argc, argv);
    try {
        if (*bound) return run_bound_states(common, cmd);
        if (*sweep) return run_sweep_cmd(common, sweep_args, cmd);
        if (*trace) return run_trace_cmd(common, trace_args, cmd);
        if (*fig) return run_figure(common, figure, cmd);
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return io;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return solver;
    } catch (const NearThresholdError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return solver;
    } catch (const ConservationError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return solver;
    } catch (const Error& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return validation;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return io;
    }
    return ok;
}
