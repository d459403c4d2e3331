#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "afc/comb.hpp"
#include "afc/errors.hpp"
#include "afc/fitting.hpp"
#include "afc/pump.hpp"
#include "afc/synthesis.hpp"

namespace py = pybind11;
using namespace pybind11::literals;

namespace {

std::vector<afc::DataPoint> points(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw afc::ValidationError("x and y must have the same length");
    std::vector<afc::DataPoint> p(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) p[i] = {x[i], y[i]};
    return p;
}

py::dict fit_dict(const afc::FitResult& r) {
    py::dict params, unc;
    for (const auto& p : r.parameters) {
        params[p.name.c_str()] = p.value;
        unc[p.name.c_str()] = p.uncertainty;
    }
    return py::dict("params"_a = params, "uncertainties"_a = unc, "residual_norm"_a = r.residual_norm,
                    "converged"_a = r.converged, "iterations"_a = r.iterations, "flags"_a = r.flags);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Atomic frequency comb analytics, waveform synthesis, optical pumping and fitting";

    py::register_exception<afc::ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<afc::ConfigError>(m, "ConfigError", PyExc_RuntimeError);
    py::register_exception<afc::ResourceError>(m, "ResourceError", PyExc_MemoryError);
    py::register_exception<afc::FitError>(m, "FitError", PyExc_RuntimeError);

    m.def("afc_efficiency", &afc::afc_efficiency, "d"_a, "finesse"_a);
    m.def("afc_efficiency_with_background", &afc::afc_efficiency_with_background, "d"_a, "finesse"_a, "d0"_a);
    m.def("optimal_finesse", &afc::optimal_finesse, "d"_a);
    m.def(
        "efficiency_decay",
        [](double t, double eta0, double t2) { return afc::efficiency_decay(t, {eta0, t2}); }, "storage_time_s"_a,
        "eta0"_a, "t2_s"_a);
    m.def(
        "hole_decay",
        [](double t, double a, double b, double tf, double ts) { return afc::hole_decay(t, {a, b, tf, ts}); }, "t_s"_a,
        "a"_a, "b"_a, "t1_fast_s"_a, "t1_slow_s"_a);

    m.def(
        "synthesize",
        [](double delta, double bandwidth, double finesse, double duration, double fs, const std::string& method,
           const std::string& phase, int sign, std::size_t max_bytes) {
            afc::SynthParams p;
            p.comb = afc::make_comb(delta, bandwidth, finesse);
            p.duration = duration;
            p.sample_rate = fs;
            p.method = afc::parse_method(method);
            p.phase = afc::parse_phase_constructor(phase);
            p.sign = sign;
            p.max_bytes = max_bytes;
            afc::Signal s;
            afc::SignalMetrics mt;
            {
                py::gil_scoped_release nogil;
                s = afc::synthesize(p);
                mt = afc::signal_metrics(s, p.comb);
            }
            py::array_t<std::complex<double>> out(static_cast<py::ssize_t>(s.samples.size()));
            std::copy(s.samples.begin(), s.samples.end(), out.mutable_data());
            py::dict metrics("crest_factor"_a = mt.crest_factor, "rms_power"_a = mt.rms_power,
                             "peak_amplitude"_a = mt.peak_amplitude, "oob_energy_fraction"_a = mt.oob_energy_fraction,
                             "inband_ripple"_a = mt.inband_ripple, "peak_norm"_a = s.peak_norm,
                             "phase_constructor"_a = afc::to_string(s.phase_used));
            return py::make_tuple(out, metrics);
        },
        "delta_hz"_a, "bandwidth_hz"_a, "finesse"_a, "duration_s"_a, "sample_rate_hz"_a, "method"_a = "freq-domain",
        "phase_constructor"_a = "auto", "sign"_a = 1, "max_bytes"_a = 0,
        "Synthesize a peak-normalized complex baseband waveform; returns (samples, metrics).");

    m.def(
        "crest_factor",
        [](py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast> a) {
            std::vector<std::complex<double>> v(a.data(), a.data() + a.size());
            return afc::crest_factor(v);
        },
        "samples"_a);

    m.def(
        "fit_afc_decay", [](const std::vector<double>& t, const std::vector<double>& y) {
            return fit_dict(afc::fit_afc_decay(points(t, y)));
        },
        "storage_time_s"_a, "efficiency"_a);
    m.def(
        "fit_double_exponential",
        [](const std::vector<double>& t, const std::vector<double>& y) {
            return fit_dict(afc::fit_double_exponential(points(t, y)));
        },
        "t_s"_a, "d_rel"_a);
    m.def(
        "fit_comb_parameters",
        [](double start, double step, const std::vector<double>& od, double delta) {
            afc::SpectrumGrid g{{start, step, od.size()}, od};
            return fit_dict(afc::fit_comb_parameters(g, afc::CombSpec{delta, delta, 2.0}));
        },
        "start"_a, "step"_a, "od"_a, "delta"_a);

    m.def(
        "bandwidth_limit_scan",
        [](const std::vector<double>& widths, double grid_step, double threshold) {
            afc::pump::ScanOptions o;
            o.grid_step = grid_step;
            o.threshold = threshold;
            afc::pump::ScanResult r;
            {
                py::gil_scoped_release nogil;
                r = afc::pump::bandwidth_limit_scan(afc::pump::default_level_system(), afc::pump::kDefaultCcCenters,
                                                    widths, o);
            }
            std::vector<double> metric;
            for (const auto& p : r.points) metric.push_back(p.metric);
            return py::make_tuple(metric, r.knee ? py::cast(*r.knee) : py::none());
        },
        "widths_mhz"_a, "grid_step_mhz"_a = 1.0, "threshold"_a = 1e-2,
        "Parasitic absorption per pump bandwidth and the knee (None if not crossed).");

    m.def(
        "lifetime_trace",
        [](const std::vector<double>& delays, double t1_fast, double t1_slow, double fraction_fast, double width) {
            const auto tr = afc::pump::lifetime_trace(afc::pump::default_level_system(),
                                                      {1.0 / t1_fast, 1.0 / t1_slow, fraction_fast}, delays, width);
            return tr.d_rel;
        },
        "delays_s"_a, "t1_fast_s"_a = 0.370, "t1_slow_s"_a = 4.7, "fraction_fast"_a = 0.5, "width_mhz"_a = 50.0);
}
