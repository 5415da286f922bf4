#include "stochwave/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <system_error>

#include "stochwave/format.hpp"
#include "stochwave/parallel.hpp"
#include "stochwave/report.hpp"

namespace stochwave {
namespace {

struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

double parse_number(const std::string& s) {
    double v = 0.0;
    const char* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end) throw UsageError("malformed number '" + s + "'");
    return v;
}

SpacetimePoint parse_point(const std::string& text, int k) {
    std::vector<double> coords;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = text.find(',', start);
        coords.push_back(parse_number(text.substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (static_cast<int>(coords.size()) != k + 1)
        throw UsageError("point '" + text + "' needs " + std::to_string(k + 1) + " comma-separated values (t,x1,...)");
    return SpacetimePoint::make(coords[0], std::span(coords).subspan(1));
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct Common {
    int k = 1;
    double beta = 1.0;
    double a = 1.0, a_prime = 2.0, b = 1.0;
    std::uint64_t seed = 1;
    std::string out;
    std::string format = "json";
    int threads = 0;
    bool timestamp = false;

    DomainBox domain() const {
        DomainBox d{a, a_prime, b};
        d.validate();
        return d;
    }
};

void add_field_options(CLI::App* cmd, Common& c) {
    cmd->add_option("--k", c.k, "spatial dimension (1, 2 or 3)")->capture_default_str();
    cmd->add_option("--beta", c.beta, "noise exponent")->capture_default_str();
}

void add_domain_options(CLI::App* cmd, Common& c) {
    cmd->add_option("--a", c.a, "domain time lower bound")->capture_default_str();
    cmd->add_option("--a-prime", c.a_prime, "domain time upper bound")->capture_default_str();
    cmd->add_option("--b", c.b, "domain half-width in space")->capture_default_str();
}

void add_output_options(CLI::App* cmd, Common& c) {
    cmd->add_option("--out", c.out, "output file (default: $STOCHWAVE_OUT_DIR/<command>.<format>, else stdout)");
    cmd->add_option("--format", c.format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
    cmd->add_flag("--timestamp", c.timestamp, "record the UTC run time in the report");
}

void add_seed(CLI::App* cmd, Common& c) { cmd->add_option("--seed", c.seed, "64-bit seed")->capture_default_str(); }

void emit(Report& report, const Common& c, std::ostream& out) {
    if (c.timestamp) report.timestamp = utc_timestamp();
    const OutputFormat fmt = c.format == "csv" ? OutputFormat::csv : OutputFormat::json;
    std::filesystem::path path = c.out;
    if (path.empty()) {
        if (const char* dir = std::getenv("STOCHWAVE_OUT_DIR"); dir && *dir)
            path = std::filesystem::path(dir) / (report.command + "." + c.format);
    }
    if (path.empty()) {
        out << render(report, fmt);
        return;
    }
    write_report(report, path, fmt);
}

}  // namespace

int parse_and_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sampling and verification tools for the linear stochastic wave equation with Riesz noise",
                 "stochwave"};
    app.require_subcommand(1);
    app.fallthrough();
    Common c;
    app.add_option("--threads", c.threads, "worker thread cap (0 = all cores)")->capture_default_str();

    auto* cov = app.add_subcommand("covariance", "covariance of the field at two points");
    std::string p_text, q_text;
    add_field_options(cov, c);
    cov->add_option("--p", p_text, "first point t,x1,...")->required();
    cov->add_option("--q", q_text, "second point t,x1,...")->required();
    cov->add_option("--out", c.out, "also write a report to this file");
    cov->add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

    int time_points = 10, space_points = 10, n_samples = 1;
    auto* sample = app.add_subcommand("sample", "exact Gaussian samples on a tensor grid");
    add_field_options(sample, c);
    add_domain_options(sample, c);
    add_seed(sample, c);
    add_output_options(sample, c);
    sample->add_option("--time-points", time_points, "grid times")->capture_default_str();
    sample->add_option("--space-points", space_points, "grid points per spatial axis")->capture_default_str();
    sample->add_option("--samples", n_samples, "number of realizations")->capture_default_str();

    LndConfig lnd;
    double delta = 0.0;
    auto lnd_options = [&](CLI::App* cmd) {
        add_field_options(cmd, c);
        add_domain_options(cmd, c);
        add_seed(cmd, c);
        add_output_options(cmd, c);
        cmd->add_option("--trials", lnd.trials, "number of random configurations")->capture_default_str();
        cmd->add_option("--n-conditioning", lnd.n_conditioning, "max conditioning points per trial (<= 8)")
            ->capture_default_str();
        cmd->add_option("--delta", delta, "proximity radius (default a/2)");
        cmd->add_option("--angles", lnd.sphere_rule.angles, "sphere rule angles for k = 2")->capture_default_str();
        cmd->add_option("--nodes", lnd.sphere_rule.nodes, "sphere rule nodes for k = 3")->capture_default_str();
    };
    auto* verify = app.add_subcommand("verify-lnd", "conditional variance against the sphere-integral bound");
    lnd_options(verify);
    auto* sectorial = app.add_subcommand("sectorial", "k = 1 conditional variance against the two-term bound");
    lnd_options(sectorial);

    int pg_levels = 6, sandwich_pairs = 1000;
    auto* proof = app.add_subcommand("proof-grid", "conditional variance on the diagonal dyadic grid");
    add_field_options(proof, c);
    add_domain_options(proof, c);
    add_seed(proof, c);
    add_output_options(proof, c);
    proof->add_option("--levels", pg_levels, "largest dyadic level n")->capture_default_str();
    proof->add_option("--sandwich-pairs", sandwich_pairs, "pairs used to estimate C2")->capture_default_str();

    ModulusConfig mod;
    int mod_t = 40, mod_x = 40, ent_t = 60, ent_x = 60;
    auto* modulus = app.add_subcommand("modulus", "J(eps) statistics on a sampled grid");
    add_field_options(modulus, c);
    add_domain_options(modulus, c);
    add_seed(modulus, c);
    add_output_options(modulus, c);
    modulus->add_option("--time-points", mod_t, "grid times")->capture_default_str();
    modulus->add_option("--space-points", mod_x, "grid points per spatial axis")->capture_default_str();
    modulus->add_option("--levels", mod.n_levels, "number of epsilon levels")->capture_default_str();
    modulus->add_option("--first-level", mod.first_level, "first dyadic level (negative: automatic)")
        ->capture_default_str();
    modulus->add_option("--min-pairs", mod.min_pairs, "pairs required at the smallest epsilon")->capture_default_str();
    modulus->add_option("--samples", mod.n_samples, "number of realizations")->capture_default_str();
    modulus->add_option("--sandwich-pairs", mod.sandwich_pairs, "pairs per sandwich estimate")->capture_default_str();
    modulus->add_flag("--entropy", mod.entropy, "also run the covering scan");
    modulus->add_option("--entropy-time-points", ent_t, "covering grid times")->capture_default_str();
    modulus->add_option("--entropy-space-points", ent_x, "covering grid points per axis")->capture_default_str();

    std::vector<double> epsilons;
    auto* entropy = app.add_subcommand("entropy", "covering numbers in the canonical metric");
    add_field_options(entropy, c);
    add_domain_options(entropy, c);
    add_output_options(entropy, c);
    int e_t = 60, e_x = 60;
    entropy->add_option("--time-points", e_t, "grid times")->capture_default_str();
    entropy->add_option("--space-points", e_x, "grid points per spatial axis")->capture_default_str();
    entropy->add_option("--eps", epsilons, "radii (default: automatic range)")->delimiter(',');

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 2;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        if (c.threads < 0) throw UsageError("--threads must be >= 0");
        set_num_threads(c.threads);
        const FieldSpec spec = FieldSpec::make(c.k, c.beta);
        Report report;
        if (command == "covariance") {
            const auto p = parse_point(p_text, c.k);
            const auto q = parse_point(q_text, c.k);
            report = covariance_report(spec, p, q);
            out << format_double(report.results["covariance"].get<double>()) << "\n";
            if (!c.out.empty()) emit(report, c, out);
            return 0;
        }
        if (command == "sample") {
            report = sample_report(spec, GridSpec{c.domain(), time_points, space_points}, n_samples, c.seed);
        } else if (command == "verify-lnd" || command == "sectorial") {
            lnd.domain = c.domain();
            lnd.delta = delta;
            lnd.seed = c.seed;
            report = lnd_report(spec, lnd, command == "sectorial");
        } else if (command == "proof-grid") {
            report = proof_grid_report(spec, c.domain(), pg_levels, sandwich_pairs, c.seed);
        } else if (command == "modulus") {
            mod.grid = GridSpec{c.domain(), mod_t, mod_x};
            mod.entropy_grid = GridSpec{c.domain(), ent_t, ent_x};
            mod.seed = c.seed;
            report = modulus_report(spec, mod);
        } else {
            report = entropy_report(spec, GridSpec{c.domain(), e_t, e_x}, epsilons);
        }
        emit(report, c, out);
        return 0;
    } catch (const std::invalid_argument& e) {
        err << "stochwave " << command << ": " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        Json error = {{"schema_version", kSchemaVersion}, {"command", command}, {"error", e.what()}};
        if (const auto* ne = dynamic_cast<const NumericsError*>(&e)) {
            error["best_estimate"] = ne->best_estimate();
            error["error_bound"] = ne->error_bound();
        }
        err << error.dump() << "\n";
        return 1;
    }
}

}  // namespace stochwave
