#pragma once

#include "kvlink/workload.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace kvlink::experiments {

using nlohmann::json;

/// Malformed config or flag value.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Model preset name not known.
class UnknownPreset : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Output location cannot be written.
class OutputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Comma separated, LF line endings, header first.
    std::string to_string() const;
};

/// Everything one experiment produces before it touches the filesystem.
struct ExperimentOutput {
    std::string command;
    json resolved_config;
    std::uint64_t seed = 0;
    bool stochastic = false;
    /// (file suffix, table); the empty suffix is the main CSV at --out.
    std::vector<std::pair<std::string, CsvTable>> tables;
    /// Optional structured result, written next to the CSV as *_result.json.
    json result;
};

/// Resolves {"preset": name} or explicit dimensions; defaults to llama-7b.
ModelSpec model_from_json(const json& j);
json model_to_json(const ModelSpec& spec);

/// "a:b:n" (n points, inclusive) or "x1,x2,...".
std::vector<double> parse_grid(const std::string& text);

ExperimentOutput run_compare(const json& block, const ModelSpec& model);
ExperimentOutput run_threshold(const json& block, const ModelSpec& model);
ExperimentOutput run_single_scenario(const json& block, const ModelSpec& model, std::uint64_t seed);
ExperimentOutput run_sweep(const json& block, const ModelSpec& model, std::uint64_t seed);
ExperimentOutput run_multiround(const json& block, const ModelSpec& model, std::uint64_t seed);

/// Writes every table, the result JSON and the sidecar. Returns the paths.
std::vector<std::filesystem::path> write_outputs(const ExperimentOutput& output,
                                                 const std::filesystem::path& out);

}  // namespace kvlink::experiments
