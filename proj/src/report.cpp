#include "stochwave/report.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include "stochwave/format.hpp"
#include "stochwave/random.hpp"

namespace stochwave {
namespace {

// JSON has no infinity; non-finite values become null.
Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json numbers(const std::vector<double>& v) {
    Json out = Json::array();
    for (double x : v) out.push_back(number(x));
    return out;
}

Json field_config(const FieldSpec& spec) { return {{"k", spec.k()}, {"beta", spec.beta()}}; }

Json grid_json(const GridSpec& g) {
    return {{"domain", to_json(g.domain)},
            {"time_points", g.time_points},
            {"space_points_per_axis", g.space_points_per_axis}};
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

Json lnd_trials_json(const LndReport& r) {
    Json trials = Json::array();
    for (const auto& t : r.trials) {
        Json cond = Json::array();
        for (const auto& c : t.conditioning) cond.push_back(to_json(c));
        trials.push_back({{"target", to_json(t.target)},
                          {"conditioning", cond},
                          {"conditional_variance", number(t.conditional_variance)},
                          {"bound", number(t.bound)},
                          {"ratio", number(t.ratio)},
                          {"skipped", t.skipped}});
    }
    return trials;
}

}  // namespace

Json to_json(const SpacetimePoint& p) {
    Json x = Json::array();
    for (int j = 0; j < p.dim; ++j) x.push_back(p.x[j]);
    return {{"t", p.t}, {"x", x}};
}

Json to_json(const DomainBox& d) { return {{"a", d.a}, {"a_prime", d.a_prime}, {"b", d.b}}; }

Json to_json(const FieldSpec& s) { return {{"k", s.k()}, {"beta", s.beta()}, {"norm_const", s.norm_const()}}; }

Json to_json(const SandwichEstimate& s) {
    return {{"c1", number(s.c1)},
            {"c2", number(s.c2)},
            {"n_pairs", s.n_pairs},
            {"min_delta", number(s.min_delta)},
            {"max_delta", number(s.max_delta)}};
}

Json to_json(const EntropyRecord& e) {
    return {{"epsilons", numbers(e.epsilons)},
            {"covering_numbers", e.covering_numbers},
            {"fitted_exponent", number(e.fitted_exponent)},
            {"theory_exponent", number(e.theory_exponent)},
            {"volumetric_exponent", number(e.volumetric_exponent)},
            {"n_points", e.n_points}};
}

Json Report::to_json() const {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = command;
    j["config"] = config;
    j["results"] = results;
    j["diagnostics"] = diagnostics;
    j["seed"] = seed;
    if (timestamp) j["timestamp"] = *timestamp;
    return j;
}

Report Report::from_json(const Json& j) {
    if (j.at("schema_version").get<int>() != kSchemaVersion) throw std::invalid_argument("unsupported schema_version");
    Report r;
    r.command = j.at("command").get<std::string>();
    r.config = j.at("config");
    r.results = j.at("results");
    r.diagnostics = j.at("diagnostics");
    r.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("timestamp")) r.timestamp = j.at("timestamp").get<std::string>();
    return r;
}

std::string render(const Report& report, OutputFormat format) {
    if (format == OutputFormat::json) return report.to_json().dump(2) + "\n";
    if (report.table.header.empty()) throw std::invalid_argument("command '" + report.command + "' has no CSV form");
    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << csv_escape(cells[i]);
        out << '\n';
    };
    line(report.table.header);
    for (const auto& row : report.table.rows) line(row);
    return out.str();
}

void write_report(const Report& report, const std::filesystem::path& path, OutputFormat format) {
    const std::string body = render(report, format);
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out << body;
        out.flush();
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw std::runtime_error("write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw std::runtime_error("cannot move report into place at " + path.string());
    }
}

Report covariance_report(const FieldSpec& spec, const SpacetimePoint& p, const SpacetimePoint& q) {
    Report r;
    r.command = "covariance";
    r.config = field_config(spec);
    r.config["p"] = to_json(p);
    r.config["q"] = to_json(q);
    const double value = covariance(spec, p, q);
    r.results = {{"covariance", value}, {"sigma", sigma_metric(spec, p, q)}};
    r.diagnostics = {{"engine", spec.k() == 1 ? "direct" : "spectral"}, {"norm_const", spec.norm_const()}};
    r.table = {{"covariance"}, {{format_double(value)}}};
    return r;
}

Report sample_report(const FieldSpec& spec, const GridSpec& grid, int n_samples, std::uint64_t seed) {
    const auto points = build_grid(grid, spec.k());
    CovarianceCache cache(spec);
    const FieldSample s = sample_field(spec, points, n_samples, seed, &cache);

    Report r;
    r.command = "sample";
    r.seed = seed;
    r.config = field_config(spec);
    r.config["grid"] = grid_json(grid);
    r.config["n_samples"] = n_samples;
    Json pts = Json::array();
    for (const auto& p : points) pts.push_back(to_json(p));
    Json values = Json::array();
    for (Eigen::Index i = 0; i < s.values.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < s.values.cols(); ++j) row.push_back(s.values(i, j));
        values.push_back(row);
    }
    r.results = {{"points", pts}, {"values", values}};
    r.diagnostics = {{"applied_jitter", s.applied_jitter}, {"n_points", points.size()}};

    for (const auto& p : points) {
        std::string h = format_double(p.t);
        for (int d = 0; d < p.dim; ++d) h += ";" + format_double(p.x[d]);
        r.table.header.push_back(h);
    }
    for (Eigen::Index i = 0; i < s.values.rows(); ++i) {
        std::vector<std::string> row;
        for (Eigen::Index j = 0; j < s.values.cols(); ++j) row.push_back(format_double(s.values(i, j)));
        r.table.rows.push_back(std::move(row));
    }
    return r;
}

Report lnd_report(const FieldSpec& spec, const LndConfig& config, bool sectorial) {
    const LndReport rep = sectorial ? sectorial_check_k1(spec, config) : slnd_ratio_scan(spec, config);
    Report r;
    r.command = sectorial ? "sectorial" : "verify-lnd";
    r.seed = config.seed;
    r.config = field_config(spec);
    r.config["domain"] = to_json(config.domain);
    r.config["delta"] = rep.delta;
    r.config["n_conditioning"] = config.n_conditioning;
    r.config["trials"] = config.trials;
    r.config["sphere_rule"] = {{"angles", config.sphere_rule.angles}, {"nodes", config.sphere_rule.nodes}};
    Json quantiles = Json::object();
    for (std::size_t i = 0; i < rep.quantiles.size(); ++i)
        quantiles[format_double(rep.quantile_levels[i])] = rep.quantiles[i];
    r.results = {{"min_ratio", number(rep.min_ratio)},
                 {"min_trial", rep.min_trial},
                 {"quantiles", quantiles},
                 {"min_ratio_by_n", numbers(rep.min_ratio_by_n)},
                 {"trials", lnd_trials_json(rep)}};
    r.diagnostics = {{"skipped", rep.skipped}, {"nested_violations", rep.nested_violations}};
    r.table.header = {"trial", "n_conditioning", "conditional_variance", "bound", "ratio", "skipped"};
    for (std::size_t i = 0; i < rep.trials.size(); ++i) {
        const auto& t = rep.trials[i];
        r.table.rows.push_back({std::to_string(i), std::to_string(t.conditioning.size()),
                                format_double(t.conditional_variance), format_double(t.bound),
                                format_double(t.ratio), t.skipped ? "1" : "0"});
    }
    return r;
}

Report proof_grid_report(const FieldSpec& spec, const DomainBox& domain, int n_levels, int sandwich_pairs,
                         std::uint64_t seed) {
    const SandwichEstimate sw = estimate_sandwich(spec, domain, sandwich_pairs, 0.5, derive_stream(seed, 1));
    const ProofGridReport rep = proof_grid_conditional_check(spec, domain, n_levels, sw.c2);
    Report r;
    r.command = "proof-grid";
    r.seed = seed;
    r.config = field_config(spec);
    r.config["domain"] = to_json(domain);
    r.config["n_levels"] = n_levels;
    r.config["sandwich_pairs"] = sandwich_pairs;
    Json levels = Json::array();
    r.table.header = {"n", "n_points", "conditional_variance", "epsilon_sq", "ratio"};
    for (const auto& l : rep.levels) {
        levels.push_back({{"n", l.n},
                          {"n_points", l.n_points},
                          {"conditional_variance", l.conditional_variance},
                          {"epsilon_sq", l.epsilon_sq},
                          {"ratio", l.ratio}});
        r.table.rows.push_back({std::to_string(l.n), std::to_string(l.n_points), format_double(l.conditional_variance),
                                format_double(l.epsilon_sq), format_double(l.ratio)});
    }
    r.results = {{"delta_prime", rep.delta_prime}, {"c2", rep.c2}, {"levels", levels}};
    r.diagnostics = {{"sandwich", to_json(sw)}};
    return r;
}

Report modulus_report(const FieldSpec& spec, const ModulusConfig& config) {
    const ModulusReport rep = modulus_experiment(spec, config);
    Report r;
    r.command = "modulus";
    r.seed = config.seed;
    r.config = field_config(spec);
    r.config["grid"] = grid_json(config.grid);
    r.config["n_levels"] = config.n_levels;
    r.config["first_level"] = config.first_level;
    r.config["min_pairs"] = config.min_pairs;
    r.config["n_samples"] = config.n_samples;
    r.config["sandwich_pairs"] = config.sandwich_pairs;
    r.config["sandwich_max_delta"] = config.sandwich_max_delta;
    r.config["entropy"] = config.entropy;
    if (config.entropy) r.config["entropy_grid"] = grid_json(config.entropy_grid);

    Json J = Json::array();
    for (Eigen::Index i = 0; i < rep.J_values.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index l = 0; l < rep.J_values.cols(); ++l) row.push_back(rep.J_values(i, l));
        J.push_back(row);
    }
    const double spread = rep.sandwich.c2 / rep.sandwich.c1;
    const double spread_check = rep.sandwich_check.c2 / rep.sandwich_check.c1;
    r.results = {{"levels", rep.levels},
                 {"epsilon_schedule", numbers(rep.epsilon_schedule)},
                 {"K_estimate", rep.K_estimate},
                 {"K_dispersion", rep.K_dispersion},
                 {"median_by_level", numbers(rep.median_by_level)},
                 {"dispersion_by_level", numbers(rep.dispersion_by_level)},
                 {"sandwich", to_json(rep.sandwich)},
                 {"sandwich_check", to_json(rep.sandwich_check)},
                 {"sandwich_spread_change", number(std::abs(spread_check - spread) / spread)},
                 {"entropy", rep.entropy ? to_json(*rep.entropy) : Json(nullptr)},
                 {"J_values", J}};
    r.diagnostics = {{"n_points", rep.n_points},
                     {"qualifying_pairs", rep.qualifying_pairs},
                     {"min_positive_sigma", rep.min_positive_sigma},
                     {"applied_jitter", rep.applied_jitter}};
    for (std::size_t l = 0; l < rep.levels.size(); ++l)
        r.table.header.push_back("J_eps" + std::to_string(rep.levels[l]));
    for (Eigen::Index i = 0; i < rep.J_values.rows(); ++i) {
        std::vector<std::string> row;
        for (Eigen::Index l = 0; l < rep.J_values.cols(); ++l) row.push_back(format_double(rep.J_values(i, l)));
        r.table.rows.push_back(std::move(row));
    }
    return r;
}

Report entropy_report(const FieldSpec& spec, const GridSpec& grid, const std::vector<double>& epsilons) {
    const EntropyRecord rec = entropy_scan(spec, grid.domain, grid, epsilons);
    Report r;
    r.command = "entropy";
    r.config = field_config(spec);
    r.config["grid"] = grid_json(grid);
    r.config["epsilons"] = numbers(epsilons);
    r.results = to_json(rec);
    r.table.header = {"epsilon", "covering_number"};
    for (std::size_t i = 0; i < rec.epsilons.size(); ++i)
        r.table.rows.push_back({format_double(rec.epsilons[i]), std::to_string(rec.covering_numbers[i])});
    return r;
}

}  // namespace stochwave
