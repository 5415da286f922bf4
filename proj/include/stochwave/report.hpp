#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stochwave/field.hpp"
#include "stochwave/lnd.hpp"
#include "stochwave/modulus.hpp"
#include "stochwave/sampler.hpp"

namespace stochwave {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

enum class OutputFormat { json, csv };

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    bool operator==(const CsvTable&) const = default;
};

/// One run record. The JSON form is
/// {schema_version, command, config, results, diagnostics, seed[, timestamp]}.
struct Report {
    std::string command;
    Json config = Json::object();
    Json results = Json::object();
    Json diagnostics = Json::object();
    std::uint64_t seed = 0;
    std::optional<std::string> timestamp;
    CsvTable table;  // CSV rendering; not part of the JSON form

    Json to_json() const;
    static Report from_json(const Json& j);
};

std::string render(const Report& report, OutputFormat format);

/// Writes through a temporary file in the same directory and renames it into
/// place, so a failed run never leaves a partial file. Throws
/// std::runtime_error naming the path on I/O failure.
void write_report(const Report& report, const std::filesystem::path& path, OutputFormat format);

Json to_json(const SpacetimePoint& p);
Json to_json(const DomainBox& d);
Json to_json(const FieldSpec& s);
Json to_json(const SandwichEstimate& s);
Json to_json(const EntropyRecord& e);

// Report builders shared by the CLI and the Python module.
Report covariance_report(const FieldSpec& spec, const SpacetimePoint& p, const SpacetimePoint& q);
Report sample_report(const FieldSpec& spec, const GridSpec& grid, int n_samples, std::uint64_t seed);
Report lnd_report(const FieldSpec& spec, const LndConfig& config, bool sectorial);
Report proof_grid_report(const FieldSpec& spec, const DomainBox& domain, int n_levels, int sandwich_pairs,
                         std::uint64_t seed);
Report modulus_report(const FieldSpec& spec, const ModulusConfig& config);
Report entropy_report(const FieldSpec& spec, const GridSpec& grid, const std::vector<double>& epsilons);

}  // namespace stochwave
