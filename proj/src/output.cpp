#include "dqd/output.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <chrono>
#include <ctime>
#include <ostream>
#include <sstream>

#include "dqd/errors.hpp"

namespace dqd {

using nlohmann::json;

OutputFormat parse_output_format(const std::string& name) {
    if (name == "csv") return OutputFormat::csv;
    if (name == "json") return OutputFormat::json;
    throw ConfigError("format must be csv or json");
}

namespace {

json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }
cplx complex_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

json matrix_json(const Eigen::Matrix4cd& m) {
    json rows = json::array();
    for (int i = 0; i < 4; ++i) {
        json row = json::array();
        for (int k = 0; k < 4; ++k) row.push_back(complex_json(m(i, k)));
        rows.push_back(row);
    }
    return rows;
}

Eigen::Matrix4cd matrix_from(const json& j) {
    Eigen::Matrix4cd m;
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 4; ++k) m(i, k) = complex_from(j.at(i).at(k));
    return m;
}

json solver_json(const SolverOptions& s) {
    return {{"symmetry", to_string(s.symmetry)},
            {"exchange", to_string(s.exchange)},
            {"threshold_tolerance_mev", s.threshold_tolerance_mev},
            {"singular_threshold_mev", s.singular_threshold_mev},
            {"relative_residual", s.relative_residual},
            {"direct_max_unknowns", s.direct_max_unknowns},
            {"max_refinement_steps", s.max_refinement_steps},
            {"conservation_tolerance", s.conservation_tolerance}};
}

SolverOptions solver_from(const json& j) {
    SolverOptions s;
    const std::string sym = j.at("symmetry");
    s.symmetry = sym == "full_cube" ? SymmetryMode::full_cube : SymmetryMode::antisymmetric_sector;
    const std::string ex = j.at("exchange");
    s.exchange = ex == "distinguishable" ? ExchangeMode::distinguishable : ExchangeMode::antisymmetric;
    s.threshold_tolerance_mev = j.at("threshold_tolerance_mev");
    s.singular_threshold_mev = j.at("singular_threshold_mev");
    s.relative_residual = j.at("relative_residual");
    s.direct_max_unknowns = j.at("direct_max_unknowns");
    s.max_refinement_steps = j.at("max_refinement_steps");
    s.conservation_tolerance = j.at("conservation_tolerance");
    return s;
}

json record_json(const SweepRecord& r) {
    json channels = json::array();
    for (const auto& ch : r.channels)
        channels.push_back({{"kinetic_mev", ch.kinetic},
                            {"traveling", ch.traveling},
                            {"near_threshold", ch.near_threshold},
                            {"pR", ch.reflection},
                            {"pT", ch.transmission},
                            {"b", complex_json(ch.b)},
                            {"c", complex_json(ch.c)}});
    json j = {{"T0_mev", r.kinetic_energy},  {"status", r.status},   {"message", r.message},
              {"method", r.method},          {"residual", r.residual}, {"defect", r.defect},
              {"antisymmetry", r.antisymmetry}, {"warnings", r.warnings}, {"channels", channels}};
    if (r.entanglement) {
        const auto& e = *r.entanglement;
        j["entanglement"] = {{"C", e.concurrence},
                             {"xi", e.decoherence},
                             {"dropped_weight", e.dropped_weight},
                             {"rho", matrix_json(e.rho)}};
    } else {
        j["entanglement"] = nullptr;
    }
    return j;
}

SweepRecord record_from(const json& j) {
    SweepRecord r;
    r.kinetic_energy = j.at("T0_mev");
    r.status = j.at("status");
    r.message = j.at("message");
    r.method = j.at("method");
    r.residual = j.at("residual");
    r.defect = j.at("defect");
    r.antisymmetry = j.at("antisymmetry");
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    for (const auto& c : j.at("channels"))
        r.channels.push_back({c.at("kinetic_mev"), c.at("traveling"), c.at("near_threshold"), c.at("pR"), c.at("pT"),
                              complex_from(c.at("b")), complex_from(c.at("c"))});
    if (!j.at("entanglement").is_null()) {
        const json& e = j.at("entanglement");
        r.entanglement = EntanglementRecord{e.at("C"), e.at("xi"), e.at("dropped_weight"), matrix_from(e.at("rho"))};
    }
    return r;
}

json trace_json(const TraceRecord& t) {
    json steps = json::array();
    for (const auto& s : t.steps)
        steps.push_back({{"n", s.n},
                         {"C", s.concurrence},
                         {"xi", s.decoherence},
                         {"occupancy", s.occupancy},
                         {"rho", matrix_json(s.rho.rho)}});
    return {{"scenario", t.scenario}, {"T0_mev", t.kinetic_energy}, {"stay_probability", t.stay_probability},
            {"steps", steps}};
}

TraceRecord trace_from(const json& j) {
    TraceRecord t;
    t.scenario = j.at("scenario");
    t.kinetic_energy = j.at("T0_mev");
    t.stay_probability = j.at("stay_probability");
    for (const auto& s : j.at("steps")) {
        InjectionStep step;
        step.n = s.at("n");
        step.concurrence = s.at("C");
        step.decoherence = s.at("xi");
        step.occupancy = s.at("occupancy").get<std::array<double, 4>>();
        step.rho.rho = matrix_from(s.at("rho"));
        step.rho.x_structured = step.rho.is_x_state();
        t.steps.push_back(step);
    }
    return t;
}

}  // namespace

std::string bundle_to_json(const ResultBundle& b) {
    json records = json::array();
    for (const auto& r : b.records) records.push_back(record_json(r));
    json traces = json::array();
    for (const auto& t : b.traces) traces.push_back(trace_json(t));
    const json j = {{"config_hash", b.config_hash},
                    {"run_key", b.run_key},
                    {"config", b.config_text},
                    {"grid_points", b.grid_points},
                    {"solver", solver_json(b.solver)},
                    {"input_channel", b.input_channel},
                    {"state_energies_mev", b.state_energies},
                    {"qubit_index", b.qubit_index},
                    {"records", records},
                    {"traces", traces}};
    return j.dump(1) + "\n";
}

ResultBundle bundle_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed bundle: ") + e.what());
    }
    try {
        ResultBundle b;
        b.config_hash = j.at("config_hash");
        b.run_key = j.at("run_key");
        b.config_text = j.at("config");
        b.grid_points = j.at("grid_points");
        b.solver = solver_from(j.at("solver"));
        b.input_channel = j.at("input_channel");
        b.state_energies = j.at("state_energies_mev").get<std::vector<double>>();
        b.qubit_index = j.at("qubit_index").get<std::array<int, 4>>();
        for (const auto& r : j.at("records")) b.records.push_back(record_from(r));
        for (const auto& t : j.at("traces")) b.traces.push_back(trace_from(t));
        return b;
    } catch (const json::exception& e) {
        throw IoError(std::string("bundle is missing fields: ") + e.what());
    }
}

void write_spectra_csv(std::ostream& out, const ResultBundle& bundle) {
    std::size_t channels = 0;
    for (const auto& r : bundle.records) channels = std::max(channels, r.channels.size());
    std::vector<std::size_t> extra;
    for (std::size_t n = 0; n < channels; ++n)
        if (n != 0 && n != 2) extra.push_back(n);

    out << "T0,pR_0,pT_0,pR_2,pT_2,C,xi";
    for (auto n : extra) out << fmt::format(",pR_{0},pT_{0}", n);
    out << ",status,defect,residual,antisymmetry,dropped_weight\n";

    auto prob = [](const SweepRecord& r, std::size_t n, bool reflected) -> std::string {
        if (n >= r.channels.size()) return "";
        return fmt::format("{}", reflected ? r.channels[n].reflection : r.channels[n].transmission);
    };
    for (const auto& r : bundle.records) {
        out << fmt::format("{},{},{},{},{}", r.kinetic_energy, prob(r, 0, true), prob(r, 0, false), prob(r, 2, true),
                           prob(r, 2, false));
        if (r.entanglement)
            out << fmt::format(",{},{}", r.entanglement->concurrence, r.entanglement->decoherence);
        else
            out << ",,";
        for (auto n : extra) out << "," << prob(r, n, true) << "," << prob(r, n, false);
        out << fmt::format(",{},{},{},{},", r.status, r.defect, r.residual, r.antisymmetry);
        if (r.entanglement) out << fmt::format("{}", r.entanglement->dropped_weight);
        out << "\n";
    }
}

void write_trace_csv(std::ostream& out, const TraceRecord& trace) {
    out << "n,C,xi,occ_0,occ_1,occ_2,occ_3\n";
    for (const auto& s : trace.steps)
        out << fmt::format("{},{},{},{},{},{},{}\n", s.n, s.concurrence, s.decoherence, s.occupancy[0],
                           s.occupancy[1], s.occupancy[2], s.occupancy[3]);
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError(fmt::format("cannot create directory {}: {}", path.parent_path().string(), ec.message()));
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(fmt::format("cannot open {} for writing", path.string()));
    return out;
}

namespace {

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw IoError(fmt::format("write to {} failed", path.string()));
}

}  // namespace

std::vector<std::filesystem::path> emit_outputs(const ResultBundle& bundle, OutputFormat format,
                                                const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    const std::string stem = fmt::format("j{}_{}", bundle.input_channel, bundle.run_key);
    if (format == OutputFormat::json) {
        const auto path = dir / fmt::format("bundle_{}.json", stem);
        auto out = open_output(path);
        out << bundle_to_json(bundle);
        finish(out, path);
        files.push_back(path);
        return files;
    }
    if (!bundle.records.empty()) {
        const auto path = dir / fmt::format("spectra_{}.csv", stem);
        auto out = open_output(path);
        write_spectra_csv(out, bundle);
        finish(out, path);
        files.push_back(path);
    }
    for (const auto& t : bundle.traces) {
        const auto path = dir / fmt::format("trace_{}_T{}_{}.csv", t.scenario, t.kinetic_energy, bundle.run_key);
        auto out = open_output(path);
        write_trace_csv(out, t);
        finish(out, path);
        files.push_back(path);
    }
    return files;
}

std::filesystem::path write_run_manifest(const std::filesystem::path& dir,
                                         const std::vector<std::filesystem::path>& files, const std::string& command) {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    json names = json::array();
    for (const auto& f : files) names.push_back(f.filename().string());
    const json j = {{"command", command}, {"timestamp", stamp}, {"files", names}};
    const auto path = dir / "manifest.json";
    auto out = open_output(path);
    out << j.dump(1) << "\n";
    finish(out, path);
    return path;
}

}  // namespace dqd
