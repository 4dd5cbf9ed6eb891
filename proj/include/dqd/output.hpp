#pragma once

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <string>
#include <vector>

#include "dqd/sweep.hpp"

namespace dqd {

enum class OutputFormat { csv, json };

OutputFormat parse_output_format(const std::string& name);

// Full bundle; numbers use shortest round-trip formatting so parse -> emit is the identity.
std::string bundle_to_json(const ResultBundle& bundle);
ResultBundle bundle_from_json(const std::string& text);

// Header: T0,pR_0,pT_0,pR_2,pT_2,C,xi, then pR_n,pT_n for the remaining channels and
// status,defect,residual,antisymmetry,dropped_weight. Channel columns follow the basis index.
void write_spectra_csv(std::ostream& out, const ResultBundle& bundle);
// Header: n,C,xi,occ_0,occ_1,occ_2,occ_3 (occupancies of epsilon_0..3).
void write_trace_csv(std::ostream& out, const TraceRecord& trace);

// Writes the bundle under `dir` with names keyed by its run key and returns the paths
// written, in order. Throws IoError when the directory cannot be created or written.
std::vector<std::filesystem::path> emit_outputs(const ResultBundle& bundle, OutputFormat format,
                                                const std::filesystem::path& dir);

// Timestamp and file list go to a separate manifest so the data files stay byte-stable.
std::filesystem::path write_run_manifest(const std::filesystem::path& dir,
                                         const std::vector<std::filesystem::path>& files,
                                         const std::string& command);

// Opens `path` for writing or throws IoError.
std::ofstream open_output(const std::filesystem::path& path);

}  // namespace dqd
