#include "dqd/config.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fstream>
#include <set>
#include <sstream>

#include "dqd/errors.hpp"

namespace dqd {

namespace pt = boost::property_tree;

const char* to_string(SymmetryMode mode) {
    return mode == SymmetryMode::full_cube ? "full_cube" : "antisymmetric_sector";
}

const char* to_string(ExchangeMode mode) {
    return mode == ExchangeMode::distinguishable ? "distinguishable" : "antisymmetric";
}

void SimulationConfig::validate() const {
    material.validate();
    device.validate();
    grid().validate();
    if (basis.levels_per_dot < 2) throw ConfigError("levels_per_dot must be at least 2");
    if (basis.two_particle_states < 1) throw ConfigError("two_particle_states must be positive");
    if (!(solver.threshold_tolerance_mev > 0.0) || !(solver.relative_residual > 0.0))
        throw ConfigError("solver tolerances must be positive");
    if (solver.exchange == ExchangeMode::distinguishable && solver.symmetry != SymmetryMode::full_cube)
        throw ConfigError("distinguishable exchange needs symmetry = full_cube");
}

namespace {

const std::set<std::string> known_keys = {
    "material.effective_mass_ratio", "material.dielectric_constant",
    "device.domain_length_nm", "device.well_depth_mev", "device.well_width_nm",
    "device.barrier_width_nm", "device.lead_flat_width_nm", "device.transverse_cutoff_nm",
    "device.debye_length_nm", "grid.points_per_axis", "basis.levels_per_dot",
    "basis.two_particle_states", "basis.coulomb", "solver.symmetry", "solver.exchange",
    "solver.threshold_tolerance_mev", "solver.singular_threshold_mev", "solver.relative_residual",
    "solver.direct_max_unknowns", "solver.max_refinement_steps", "solver.conservation_tolerance"};

template <class T>
void read(const pt::ptree& tree, const char* key, T& into) {
    if (auto v = tree.get_optional<std::string>(key)) {
        try {
            into = tree.get<T>(key);
        } catch (const pt::ptree_error&) {
            throw ConfigError(std::string("bad value for ") + key + ": " + *v);
        }
    }
}

}  // namespace

SimulationConfig parse_config(const std::string& text) {
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty())
            throw ConfigError("key outside a section: " + section);
        for (const auto& kv : body)
            if (!known_keys.count(section + "." + kv.first))
                throw ConfigError("unknown config key " + section + "." + kv.first);
    }

    SimulationConfig c;
    read(tree, "material.effective_mass_ratio", c.material.effective_mass_ratio);
    read(tree, "material.dielectric_constant", c.material.dielectric_constant);
    read(tree, "device.domain_length_nm", c.device.domain_length_nm);
    read(tree, "device.well_depth_mev", c.device.well_depth_mev);
    read(tree, "device.well_width_nm", c.device.well_width_nm);
    read(tree, "device.barrier_width_nm", c.device.barrier_width_nm);
    read(tree, "device.lead_flat_width_nm", c.device.lead_flat_width_nm);
    read(tree, "device.transverse_cutoff_nm", c.device.transverse_cutoff_nm);
    read(tree, "device.debye_length_nm", c.device.debye_length_nm);
    read(tree, "grid.points_per_axis", c.grid_points);
    read(tree, "basis.levels_per_dot", c.basis.levels_per_dot);
    read(tree, "basis.two_particle_states", c.basis.two_particle_states);
    if (auto v = tree.get_optional<std::string>("basis.coulomb")) {
        if (*v == "true" || *v == "on" || *v == "1") c.basis.coulomb = true;
        else if (*v == "false" || *v == "off" || *v == "0") c.basis.coulomb = false;
        else throw ConfigError("basis.coulomb must be true or false");
    }
    if (auto v = tree.get_optional<std::string>("solver.symmetry")) {
        if (*v == "antisymmetric_sector") c.solver.symmetry = SymmetryMode::antisymmetric_sector;
        else if (*v == "full_cube") c.solver.symmetry = SymmetryMode::full_cube;
        else throw ConfigError("solver.symmetry must be antisymmetric_sector or full_cube");
    }
    if (auto v = tree.get_optional<std::string>("solver.exchange")) {
        if (*v == "antisymmetric") c.solver.exchange = ExchangeMode::antisymmetric;
        else if (*v == "distinguishable") c.solver.exchange = ExchangeMode::distinguishable;
        else throw ConfigError("solver.exchange must be antisymmetric or distinguishable");
    }
    read(tree, "solver.threshold_tolerance_mev", c.solver.threshold_tolerance_mev);
    read(tree, "solver.singular_threshold_mev", c.solver.singular_threshold_mev);
    read(tree, "solver.relative_residual", c.solver.relative_residual);
    read(tree, "solver.direct_max_unknowns", c.solver.direct_max_unknowns);
    read(tree, "solver.max_refinement_steps", c.solver.max_refinement_steps);
    read(tree, "solver.conservation_tolerance", c.solver.conservation_tolerance);
    c.validate();
    return c;
}

SimulationConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string canonical_text(const SimulationConfig& c) {
    std::string s;
    auto out = std::back_inserter(s);
    fmt::format_to(out, "[material]\neffective_mass_ratio = {}\ndielectric_constant = {}\n\n",
                   c.material.effective_mass_ratio, c.material.dielectric_constant);
    fmt::format_to(out,
                   "[device]\ndomain_length_nm = {}\nwell_depth_mev = {}\nwell_width_nm = {}\n"
                   "barrier_width_nm = {}\nlead_flat_width_nm = {}\ntransverse_cutoff_nm = {}\n"
                   "debye_length_nm = {}\n\n",
                   c.device.domain_length_nm, c.device.well_depth_mev, c.device.well_width_nm,
                   c.device.barrier_width_nm, c.device.lead_flat_width_nm,
                   c.device.transverse_cutoff_nm, c.device.debye_length_nm);
    fmt::format_to(out, "[grid]\npoints_per_axis = {}\n\n", c.grid_points);
    fmt::format_to(out, "[basis]\nlevels_per_dot = {}\ntwo_particle_states = {}\ncoulomb = {}\n\n",
                   c.basis.levels_per_dot, c.basis.two_particle_states, c.basis.coulomb);
    fmt::format_to(out,
                   "[solver]\nsymmetry = {}\nexchange = {}\nthreshold_tolerance_mev = {}\n"
                   "singular_threshold_mev = {}\nrelative_residual = {}\ndirect_max_unknowns = {}\n"
                   "max_refinement_steps = {}\nconservation_tolerance = {}\n",
                   to_string(c.solver.symmetry), to_string(c.solver.exchange),
                   c.solver.threshold_tolerance_mev, c.solver.singular_threshold_mev,
                   c.solver.relative_residual, c.solver.direct_max_unknowns,
                   c.solver.max_refinement_steps, c.solver.conservation_tolerance);
    return s;
}

std::string short_hash(const std::string& text) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr);
    std::string hex;
    for (unsigned int i = 0; i < 8; ++i) hex += fmt::format("{:02x}", digest[i]);
    return hex;
}

std::string config_hash(const SimulationConfig& config) { return short_hash(canonical_text(config)); }

}  // namespace dqd
