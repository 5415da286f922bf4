#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "stochwave/cli.hpp"
#include "stochwave/parallel.hpp"
#include "stochwave/report.hpp"

namespace py = pybind11;
using namespace stochwave;

namespace {

SpacetimePoint to_point(const std::vector<double>& v, int k) {
    if (static_cast<int>(v.size()) != k + 1)
        throw std::invalid_argument("point must be [t, x1, ..., xk] with k = " + std::to_string(k));
    return SpacetimePoint::make(v[0], std::span(v).subspan(1));
}

DomainBox domain(double a, double a_prime, double b) {
    DomainBox d{a, a_prime, b};
    d.validate();
    return d;
}

std::string dump(const Report& r) { return r.to_json().dump(); }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "C++ core of stochwave";

    py::register_exception<NumericsError>(m, "NumericsError", PyExc_RuntimeError);

    m.def("set_num_threads", &set_num_threads, py::arg("n"));
    m.def("riesz_spectral_constant", &riesz_spectral_constant, py::arg("k"), py::arg("beta"));
    m.def("gamma_modulus", &gamma_modulus, py::arg("sigma"));

    m.def(
        "covariance",
        [](int k, double beta, const std::vector<double>& p, const std::vector<double>& q, const std::string& engine) {
            const auto spec = FieldSpec::make(k, beta);
            const auto pp = to_point(p, k), qq = to_point(q, k);
            if (engine == "auto") return covariance(spec, pp, qq);
            if (engine == "spectral") return covariance_spectral(spec, pp, qq);
            if (engine == "direct") return covariance_direct_k1(spec, pp, qq);
            throw std::invalid_argument("engine must be 'auto', 'spectral' or 'direct'");
        },
        py::arg("k"), py::arg("beta"), py::arg("p"), py::arg("q"), py::arg("engine") = "auto");

    m.def(
        "sigma_metric",
        [](int k, double beta, const std::vector<double>& p, const std::vector<double>& q) {
            return sigma_metric(FieldSpec::make(k, beta), to_point(p, k), to_point(q, k));
        },
        py::arg("k"), py::arg("beta"), py::arg("p"), py::arg("q"));

    m.def(
        "covariance_matrix",
        [](int k, double beta, const std::vector<std::vector<double>>& points) {
            std::vector<SpacetimePoint> pts;
            for (const auto& p : points) pts.push_back(to_point(p, k));
            py::gil_scoped_release release;
            return assemble_covariance_matrix(FieldSpec::make(k, beta), pts);
        },
        py::arg("k"), py::arg("beta"), py::arg("points"));

    m.def(
        "sample",
        [](int k, double beta, const std::vector<std::vector<double>>& points, int n_samples, std::uint64_t seed) {
            std::vector<SpacetimePoint> pts;
            for (const auto& p : points) pts.push_back(to_point(p, k));
            py::gil_scoped_release release;
            return sample_field(FieldSpec::make(k, beta), pts, n_samples, seed).values;
        },
        py::arg("k"), py::arg("beta"), py::arg("points"), py::arg("n_samples"), py::arg("seed"));

    m.def(
        "lnd_report",
        [](int k, double beta, int trials, int n_conditioning, std::uint64_t seed, bool sectorial, double a,
           double a_prime, double b) {
            LndConfig cfg;
            cfg.domain = domain(a, a_prime, b);
            cfg.trials = trials;
            cfg.n_conditioning = n_conditioning;
            cfg.seed = seed;
            py::gil_scoped_release release;
            return dump(lnd_report(FieldSpec::make(k, beta), cfg, sectorial));
        },
        py::arg("k"), py::arg("beta"), py::arg("trials") = 200, py::arg("n_conditioning") = 4, py::arg("seed") = 1,
        py::arg("sectorial") = false, py::arg("a") = 1.0, py::arg("a_prime") = 2.0, py::arg("b") = 1.0);

    m.def(
        "proof_grid_report",
        [](int k, double beta, int n_levels, int sandwich_pairs, std::uint64_t seed) {
            py::gil_scoped_release release;
            return dump(proof_grid_report(FieldSpec::make(k, beta), DomainBox{}, n_levels, sandwich_pairs, seed));
        },
        py::arg("k"), py::arg("beta"), py::arg("n_levels") = 6, py::arg("sandwich_pairs") = 1000,
        py::arg("seed") = 1);

    m.def(
        "modulus_report",
        [](int k, double beta, int time_points, int space_points, int n_levels, int n_samples, std::uint64_t seed,
           int sandwich_pairs) {
            ModulusConfig cfg;
            cfg.grid = GridSpec{DomainBox{}, time_points, space_points};
            cfg.n_levels = n_levels;
            cfg.n_samples = n_samples;
            cfg.seed = seed;
            cfg.sandwich_pairs = sandwich_pairs;
            py::gil_scoped_release release;
            return dump(modulus_report(FieldSpec::make(k, beta), cfg));
        },
        py::arg("k"), py::arg("beta"), py::arg("time_points") = 40, py::arg("space_points") = 40,
        py::arg("n_levels") = 6, py::arg("n_samples") = 100, py::arg("seed") = 1, py::arg("sandwich_pairs") = 1000);

    m.def(
        "entropy_report",
        [](int k, double beta, int time_points, int space_points, const std::vector<double>& epsilons) {
            py::gil_scoped_release release;
            return dump(entropy_report(FieldSpec::make(k, beta), GridSpec{DomainBox{}, time_points, space_points},
                                       epsilons));
        },
        py::arg("k"), py::arg("beta"), py::arg("time_points") = 60, py::arg("space_points") = 60,
        py::arg("epsilons") = std::vector<double>{});

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            int code;
            {
                py::gil_scoped_release release;
                code = parse_and_dispatch(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"));
}
