// afc: AFC waveform synthesis, optical-pumping simulation and fitting.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <new>
#include <sstream>

#include "afc/comb.hpp"
#include "afc/errors.hpp"
#include "afc/fitting.hpp"
#include "afc/io.hpp"
#include "afc/pump.hpp"
#include "afc/synthesis.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kConfig = 2, kValidation = 3, kResource = 4 };

constexpr std::size_t kDefaultCap = std::size_t{4} << 30;

std::size_t memory_cap() {
    const char* env = std::getenv("AFC_MAX_SAMPLE_BYTES");
    if (!env || !*env) return kDefaultCap;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') throw afc::ConfigError("AFC_MAX_SAMPLE_BYTES must be an integer byte count");
    return static_cast<std::size_t>(v);
}

void check_output_path(const std::string& path) {
    if (path.empty() || path == "-") return;
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty() && !fs::is_directory(parent))
        throw afc::ConfigError("output directory does not exist: " + parent.string());
}

void write_json(const std::string& path, const json& j) {
    if (path.empty() || path == "-") {
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw afc::ConfigError("cannot write " + path);
    out << j.dump(2) << "\n";
}

void emit_csv(const std::string& path, const afc::io::CsvTable& t) {
    if (path.empty() || path == "-") {
        for (std::size_t c = 0; c < t.header.size(); ++c) std::cout << (c ? "," : "") << t.header[c];
        std::cout << "\n" << std::setprecision(12);
        const std::size_t rows = t.columns.empty() ? 0 : t.columns[0].size();
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < t.columns.size(); ++c) std::cout << (c ? "," : "") << t.columns[c][r];
            std::cout << "\n";
        }
        return;
    }
    afc::io::write_csv(path, t);
}

json fit_json(const afc::FitResult& r) {
    json params = json::array();
    for (const auto& p : r.parameters)
        params.push_back({{"name", p.name}, {"unit", p.unit}, {"value", p.value}, {"uncertainty", p.uncertainty}});
    return {{"parameters", params},
            {"residual_norm", r.residual_norm},
            {"converged", r.converged},
            {"iterations", r.iterations},
            {"flags", r.flags}};
}

int report_fit(const afc::FitResult& r, const std::string& out) {
    write_json(out, fit_json(r));
    if (!out.empty() && out != "-") {
        std::cout << "parameter,value,uncertainty\n" << std::setprecision(10);
        for (const auto& p : r.parameters) std::cout << p.name << "," << p.value << "," << p.uncertainty << "\n";
    }
    if (!r.converged) {
        std::cerr << "error: validation: fit did not converge\n";
        return kValidation;
    }
    return kOk;
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw afc::ConfigError("bad number in list: '" + tok + "'");
        }
    }
    return out;
}

// ---- synth ----------------------------------------------------------------

struct SynthOpts {
    double delta = 0, bandwidth = 0, finesse = 0, duration = 0, sample_rate = 0;
    std::string method = "freq-domain", phase = "auto", grid_policy = "snap", out = "waveform";
    int sign = 1;
    std::size_t auto_threshold = 100;
};

// Rounds sigma*T to the nearest integer bin count; returns the realized finesse.
double snap_finesse(const SynthOpts& o) {
    const double per = o.delta * o.duration;
    const double w = std::round(per * (1.0 - 1.0 / o.finesse));
    if (w < 1.0 || w >= per) throw afc::ValidationError("finesse cannot be realized on the 1/T grid");
    return 1.0 / (1.0 - w / per);
}

int cmd_synth(const SynthOpts& o) {
    afc::SynthParams p;
    double finesse = o.finesse;
    if (o.grid_policy == "snap" && o.delta * o.duration >= 1.0 && o.finesse > 1.0) finesse = snap_finesse(o);
    p.comb = afc::make_comb(o.delta, o.bandwidth, finesse);
    p.duration = o.duration;
    p.sample_rate = o.sample_rate;
    p.method = afc::parse_method(o.method);
    p.phase = afc::parse_phase_constructor(o.phase);
    p.sign = o.sign;
    p.auto_threshold = o.auto_threshold;
    p.max_bytes = memory_cap();
    afc::synth_grid(p);
    check_output_path(o.out);

    const afc::Signal sig = afc::synthesize(p);
    const afc::SignalMetrics m = afc::signal_metrics(sig, p.comb);
    afc::io::write_iq(o.out + ".iq", sig.samples);
    afc::io::write_meta(o.out + ".json", afc::io::meta_from_signal(sig));
    json mj = {{"crest_factor", m.crest_factor},
               {"rms_power", m.rms_power},
               {"peak_amplitude", m.peak_amplitude},
               {"oob_energy_fraction", m.oob_energy_fraction},
               {"inband_ripple", m.inband_ripple},
               {"n_samples", sig.samples.size()},
               {"requested_finesse", o.finesse},
               {"realized_finesse", finesse},
               {"phase_constructor", afc::to_string(sig.phase_used)}};
    write_json(o.out + ".metrics.json", mj);
    std::cout << std::setprecision(10) << "samples," << sig.samples.size() << "\ncrest_factor," << m.crest_factor
              << "\nrealized_finesse," << finesse << "\n";
    if (finesse != o.finesse)
        std::cerr << "note: finesse snapped from " << o.finesse << " to " << finesse << " (sigma*T rounded)\n";
    return kOk;
}

// ---- bench ----------------------------------------------------------------

struct BenchOpts {
    std::string n_list = "25,250,2500,25000";
    std::string methods = "freq-domain,circular-permutation,dirac-sum";
    std::string phase = "two-scale";
    double bandwidth = 250e6, duration = 400e-6, sample_rate = 312.5e6, finesse = 2.0;
    int repeats = 3;
    std::string out;
};

int cmd_bench(const BenchOpts& o) {
    if (o.repeats < 3) throw afc::ValidationError("repeats must be at least 3");
    check_output_path(o.out);
    std::vector<std::string> methods;
    {
        std::stringstream ss(o.methods);
        std::string tok;
        while (std::getline(ss, tok, ',')) methods.push_back(tok);
    }
    const std::vector<double> ns = parse_list(o.n_list);
    const std::size_t cap = memory_cap();

    afc::io::CsvTable t;
    t.header = {"method_id", "n_teeth", "sample_count", "wall_time_s", "crest_factor", "rms_power_at_unit_peak",
                "timing_spread", "timing_unstable"};
    t.columns.assign(t.header.size(), {});
    std::vector<std::string> names;
    std::vector<double> dirac_n, dirac_rms;
    for (const auto& mname : methods) {
        const afc::Method method = afc::parse_method(mname);
        for (double n : ns) {
            afc::SynthParams p;
            p.comb = afc::make_comb(o.bandwidth / n, o.bandwidth, o.finesse);
            p.duration = o.duration;
            p.sample_rate = o.sample_rate;
            p.method = method;
            p.phase = afc::parse_phase_constructor(o.phase);
            p.max_bytes = cap;
            afc::synth_grid(p);
            std::vector<double> times;
            afc::Signal sig;
            for (int r = 0; r < o.repeats; ++r) {
                const auto t0 = std::chrono::steady_clock::now();
                sig = afc::synthesize(p);
                times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
            }
            std::sort(times.begin(), times.end());
            const double med = times[times.size() / 2];
            const double spread = (times.back() - times.front()) / med;
            const afc::SignalMetrics m = afc::signal_metrics(sig, p.comb);
            names.push_back(mname);
            t.columns[0].push_back(static_cast<double>(names.size() - 1));
            t.columns[1].push_back(n);
            t.columns[2].push_back(static_cast<double>(sig.samples.size()));
            t.columns[3].push_back(med);
            t.columns[4].push_back(m.crest_factor);
            t.columns[5].push_back(m.rms_power);
            t.columns[6].push_back(spread);
            t.columns[7].push_back(spread > 0.5 ? 1.0 : 0.0);
            if (method == afc::Method::dirac_sum) {
                dirac_n.push_back(n);
                dirac_rms.push_back(m.rms_power);
            }
        }
    }

    // Method names are strings; write this table by hand.
    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!o.out.empty() && o.out != "-") {
        file.open(o.out, std::ios::trunc);
        if (!file) throw afc::ConfigError("cannot write " + o.out);
        os = &file;
    }
    *os << "method,n_teeth,sample_count,wall_time_s,crest_factor,rms_power_at_unit_peak,timing_spread,timing_unstable\n"
        << std::setprecision(8);
    for (std::size_t r = 0; r < names.size(); ++r) {
        *os << names[r];
        for (std::size_t c = 1; c < t.columns.size(); ++c) *os << "," << t.columns[c][r];
        *os << "\n";
    }
    if (dirac_n.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double k = static_cast<double>(dirac_n.size());
        for (std::size_t i = 0; i < dirac_n.size(); ++i) {
            const double x = std::log(dirac_n[i]), y = std::log(dirac_rms[i]);
            sx += x, sy += y, sxx += x * x, sxy += x * y;
        }
        std::cerr << "dirac-sum rms power log-log slope: " << (k * sxy - sx * sy) / (k * sxx - sx * sx) << "\n";
    }
    for (std::size_t r = 0; r < names.size(); ++r)
        if (t.columns[7][r] > 0.0)
            std::cerr << "warning: timing unstable for " << names[r] << " N=" << t.columns[1][r] << "\n";
    return kOk;
}

// ---- comb -----------------------------------------------------------------

int cmd_comb_efficiency(double d, double finesse, double d0, double fmin, double fmax, int points, bool single,
                        const std::string& out) {
    check_output_path(out);
    afc::io::CsvTable t{{"finesse", "efficiency", "efficiency_with_background"}, {{}, {}, {}}};
    auto row = [&](double f) {
        t.columns[0].push_back(f);
        t.columns[1].push_back(afc::afc_efficiency(d, f));
        t.columns[2].push_back(afc::afc_efficiency_with_background(d, f, d0));
    };
    if (single) {
        row(finesse);
    } else {
        if (!(fmin > 1.0) || !(fmax > fmin) || points < 2) throw afc::ValidationError("bad finesse range");
        for (int i = 0; i < points; ++i) row(fmin + (fmax - fmin) * i / (points - 1));
    }
    emit_csv(out, t);
    return kOk;
}

int cmd_comb_optimize(double d, double d0) {
    std::cout << std::setprecision(10) << "d," << d << "\n";
    if (d == 0.0) {
        std::cout << "finesse_opt,nan\nefficiency,0\nefficiency_with_background,0\n";
        return kOk;
    }
    const double f = afc::optimal_finesse(d);
    std::cout << "finesse_opt," << f << "\nefficiency," << afc::afc_efficiency(d, f)
              << "\nefficiency_with_background," << afc::afc_efficiency_with_background(d, f, d0) << "\n";
    return kOk;
}

int cmd_comb_decay(double eta0, double t2, std::vector<double> times, const std::string& out) {
    check_output_path(out);
    afc::io::CsvTable t{{"storage_time_s", "efficiency"}, {{}, {}}};
    for (double s : times) {
        t.columns[0].push_back(s);
        t.columns[1].push_back(afc::efficiency_decay(s, afc::DecayModel{eta0, t2}));
    }
    emit_csv(out, t);
    return kOk;
}

// ---- pump -----------------------------------------------------------------

struct PumpOpts {
    std::string levels;
    double width = 250.0, rate = 15000.0, duration = 2e-3, edge = 2.0, grid_step = 1.0, span = 0.0;
    std::size_t cc_reps = 40, sp_reps = 40;
    std::string pol = "diag45", probe = "diag45", line = "box";
    double line_fwhm = 0.0;
    std::string out;
};

afc::pump::LevelSystem load_levels(const PumpOpts& o) {
    if (o.levels.empty()) return afc::pump::default_level_system();
    return afc::io::load_level_system(o.levels);
}

afc::pump::ScanOptions scan_options(const PumpOpts& o) {
    afc::pump::ScanOptions s;
    s.grid_step = o.grid_step;
    s.span = o.span;
    s.cc_repetitions = o.cc_reps;
    s.sp_repetitions = o.sp_reps;
    s.pulse.rate = o.rate;
    s.pulse.duration = o.duration;
    s.pulse.edge_width = o.edge;
    s.pulse.pol = afc::pump::parse_polarization(o.pol);
    s.line.pol = afc::pump::parse_polarization(o.probe);
    if (o.line == "box") {
        s.line.shape = afc::pump::LineShape::box;
    } else if (o.line == "lorentzian") {
        s.line.shape = afc::pump::LineShape::lorentzian;
    } else {
        throw afc::ValidationError("unknown line shape: " + o.line);
    }
    s.line.fwhm = o.line_fwhm;
    return s;
}

int cmd_pump_simulate(const PumpOpts& o, double fmin, double fmax, bool relax, int repetitions) {
    check_output_path(o.out);
    using namespace afc::pump;
    const LevelSystem L = load_levels(o);
    ScanOptions s = scan_options(o);
    if (repetitions >= 0) s.cc_repetitions = s.sp_repetitions = static_cast<std::size_t>(repetitions);
    if (!(fmax > fmin)) throw afc::ValidationError("frequency range is empty");
    ClassEnsemble ens = initial_ensemble(L, s.grid_step, s.span);
    std::optional<RelaxationParams> rp;
    if (relax) rp = RelaxationParams{};
    run_sequence(ens, class_cleaning_sequence(kDefaultCcCenters, o.width, s.cc_repetitions, s.pulse), L, rp);
    run_sequence(ens, spin_polarisation_sequence(L, o.width, s.sp_repetitions, s.pulse), L, rp);
    const auto n = static_cast<std::size_t>(std::floor((fmax - fmin) / s.grid_step)) + 1;
    const afc::FrequencyAxis axis{fmin, s.grid_step, n};
    const auto tot = spectrum_from_ensemble(ens, L, axis, s.line);
    const auto sel = spectrum_from_ensemble(ens, L, axis, s.line, DetuningWindow{-0.5 * o.width, 0.5 * o.width});
    afc::io::CsvTable t{{"frequency_mhz", "od_total", "od_selected"}, {{}, tot.values, sel.values}};
    for (std::size_t k = 0; k < n; ++k) t.columns[0].push_back(axis.at(k));
    emit_csv(o.out, t);
    return kOk;
}

int cmd_pump_bwlimit(const PumpOpts& o, double wmin, double wmax, double wstep, double threshold,
                     const std::string& centers) {
    check_output_path(o.out);
    using namespace afc::pump;
    const LevelSystem L = load_levels(o);
    ScanOptions s = scan_options(o);
    s.threshold = threshold;
    const std::vector<double> c = parse_list(centers);
    if (c.size() != 4) throw afc::ValidationError("exactly four class-cleaning centres are required");
    if (!(wstep > 0.0) || !(wmax >= wmin) || !(wmin > 0.0)) throw afc::ValidationError("bad bandwidth range");
    std::vector<double> widths;
    for (double w = wmin; w <= wmax + 1e-9 * wstep; w += wstep) widths.push_back(w);
    const ScanResult r = bandwidth_limit_scan(L, {c[0], c[1], c[2], c[3]}, widths, s);
    afc::io::CsvTable t{{"bandwidth_mhz", "parasitic_od", "parasitic_rel_peak_od"}, {{}, {}, {}}};
    for (const auto& p : r.points) {
        t.columns[0].push_back(p.width);
        t.columns[1].push_back(p.metric);
        t.columns[2].push_back(p.metric_rel);
    }
    emit_csv(o.out, t);
    if (r.knee) {
        std::cerr << "knee_mhz," << *r.knee << "\n";
    } else {
        std::cerr << "knee_mhz,none\n";
    }
    return kOk;
}

int cmd_pump_lifetime(const PumpOpts& o, double t1f, double t1s, double frac, double tmin, double tmax, int points) {
    check_output_path(o.out);
    using namespace afc::pump;
    const LevelSystem L = load_levels(o);
    const ScanOptions s = scan_options(o);
    if (!(tmin > 0.0) || !(tmax > tmin) || points < 5) throw afc::ValidationError("bad delay range");
    std::vector<double> delays;
    for (int i = 0; i < points; ++i) delays.push_back(tmin * std::pow(tmax / tmin, double(i) / (points - 1)));
    const RelaxationParams rp{1.0 / t1f, 1.0 / t1s, frac};
    const LifetimeTrace tr = lifetime_trace(L, rp, delays, o.width, s);
    emit_csv(o.out, {{"delay_s", "d_rel"}, {tr.delays, tr.d_rel}});
    std::vector<afc::DataPoint> pts;
    for (std::size_t i = 0; i < tr.delays.size(); ++i) pts.push_back({tr.delays[i], tr.d_rel[i]});
    const afc::FitResult f = afc::fit_double_exponential(pts);
    std::cerr << std::setprecision(6) << "fit t1_fast_s," << f.value("t1_fast") << "\nfit t1_slow_s,"
              << f.value("t1_slow") << "\n";
    return f.converged ? kOk : kValidation;
}

// ---- fit ------------------------------------------------------------------

int cmd_fit_comb(const std::string& input, double delta_hz, double finesse, const std::string& out) {
    check_output_path(out);
    const auto pts = afc::io::read_xy_csv(input);
    if (pts.size() < 2) throw afc::ConfigError("spectrum needs at least two rows");
    const double step = pts[1].x - pts[0].x;
    afc::SpectrumGrid g{{pts[0].x, step, pts.size()}, {}};
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (std::abs(pts[i].x - g.axis.at(i)) > 1e-6 * std::abs(step))
            throw afc::ConfigError("spectrum frequencies must be uniformly spaced");
        g.values.push_back(pts[i].y);
    }
    afc::CombSpec spec{delta_hz, delta_hz, finesse};
    return report_fit(afc::fit_comb_parameters(g, spec), out);
}

int run(int argc, char** argv) {
    CLI::App app{"AFC preparation-pulse synthesis, optical-pumping simulation and fitting"};
    app.require_subcommand(1);

    SynthOpts so;
    auto* synth = app.add_subcommand("synth", "synthesize an AFC preparation waveform");
    synth->add_option("--delta-hz", so.delta, "tooth spacing")->required();
    synth->add_option("--bandwidth-hz", so.bandwidth, "comb bandwidth")->required();
    synth->add_option("--finesse", so.finesse, "AFC finesse F")->required();
    synth->add_option("--duration-s", so.duration, "pulse duration T")->required();
    synth->add_option("--sample-rate-hz", so.sample_rate, "sample rate")->required();
    synth->add_option("--method", so.method)
        ->check(CLI::IsMember({"freq-domain", "circular-permutation", "dirac-sum", "exact-envelope", "exact"}));
    synth->add_option("--phase-constructor", so.phase)
        ->check(CLI::IsMember({"two-scale", "schroeder-integral", "zero", "auto"}));
    synth->add_option("--sign", so.sign)->check(CLI::IsMember({-1, 1}));
    synth->add_option("--auto-threshold", so.auto_threshold, "tooth count where auto switches to two-scale");
    synth->add_option("--grid-policy", so.grid_policy, "snap: round sigma*T to whole bins; strict: reject")
        ->check(CLI::IsMember({"snap", "strict"}));
    synth->add_option("--out", so.out, "output prefix (.iq, .json, .metrics.json)");

    BenchOpts bo;
    auto* bench = app.add_subcommand("bench", "time and compare synthesis methods");
    bench->add_option("--n-teeth", bo.n_list, "comma-separated tooth counts");
    bench->add_option("--methods", bo.methods);
    bench->add_option("--phase-constructor", bo.phase);
    bench->add_option("--bandwidth-hz", bo.bandwidth);
    bench->add_option("--duration-s", bo.duration);
    bench->add_option("--sample-rate-hz", bo.sample_rate);
    bench->add_option("--finesse", bo.finesse);
    bench->add_option("--repeats", bo.repeats);
    bench->add_option("--out", bo.out, "CSV path (default stdout)");

    auto* comb = app.add_subcommand("comb", "analytic comb efficiency and decay");
    comb->require_subcommand(1);
    double cd = 0, cf = 0, cd0 = 0, fmin = 1.2, fmax = 8.0;
    int fpoints = 50;
    std::string cout_path;
    auto* ceff = comb->add_subcommand("efficiency", "efficiency for one finesse or a finesse table");
    ceff->add_option("--d", cd, "peak optical depth")->required();
    auto* cf_opt = ceff->add_option("--finesse", cf);
    ceff->add_option("--d0", cd0, "background optical depth");
    ceff->add_option("--finesse-min", fmin);
    ceff->add_option("--finesse-max", fmax);
    ceff->add_option("--points", fpoints);
    ceff->add_option("--out", cout_path);
    auto* copt = comb->add_subcommand("optimize", "optimal finesse for a given optical depth");
    copt->add_option("--d", cd)->required();
    copt->add_option("--d0", cd0);
    double eta0 = 0, t2 = 0;
    std::string times = "";
    auto* cdec = comb->add_subcommand("decay", "efficiency versus storage time");
    cdec->add_option("--eta0", eta0)->required();
    cdec->add_option("--t2-s,--t2", t2, "AFC coherence time")->required();
    cdec->add_option("--time-s,--time", times, "comma-separated storage times")->required();
    cdec->add_option("--out", cout_path);

    PumpOpts po;
    auto* pump = app.add_subcommand("pump", "class-cleaning and spin-polarisation simulation");
    pump->require_subcommand(1);
    auto add_common = [&](CLI::App* c) {
        c->add_option("--levels", po.levels, "level-system JSON (default: built-in)")->check(CLI::ExistingFile);
        c->add_option("--rate-per-s", po.rate);
        c->add_option("--pulse-duration-s", po.duration);
        c->add_option("--edge-width-mhz", po.edge);
        c->add_option("--grid-step-mhz", po.grid_step);
        c->add_option("--span-mhz", po.span);
        c->add_option("--cc-repetitions", po.cc_reps);
        c->add_option("--sp-repetitions", po.sp_reps);
        c->add_option("--polarization", po.pol)->check(CLI::IsMember({"D2", "b", "diag45"}));
        c->add_option("--probe-polarization", po.probe)->check(CLI::IsMember({"D2", "b", "diag45"}));
        c->add_option("--line-shape", po.line)->check(CLI::IsMember({"box", "lorentzian"}));
        c->add_option("--line-fwhm-mhz", po.line_fwhm);
        c->add_option("--out", po.out, "CSV path (default stdout)");
    };
    double sfmin = -1000, sfmax = 9000;
    bool relax = false;
    int reps = -1;
    auto* psim = pump->add_subcommand("simulate", "spectra after CC and SP");
    add_common(psim);
    psim->add_option("--bandwidth-mhz", po.width);
    psim->add_option("--f-min-mhz", sfmin);
    psim->add_option("--f-max-mhz", sfmax);
    psim->add_option("--repetitions", reps, "sets both CC and SP repetition counts");
    psim->add_flag("--relax", relax, "spin relaxation during pumping");
    double wmin = 200, wmax = 400, wstep = 1, thr = 1e-2;
    std::string centers = "0,3025.5,5359.7,6913.7";
    auto* pbw = pump->add_subcommand("bwlimit", "parasitic absorption versus pump bandwidth");
    add_common(pbw);
    pbw->add_option("--w-min-mhz", wmin);
    pbw->add_option("--w-max-mhz", wmax);
    pbw->add_option("--w-step-mhz", wstep);
    pbw->add_option("--threshold", thr, "knee threshold relative to peak OD");
    pbw->add_option("--cc-centers-mhz", centers);
    double t1f = 0.370, t1s = 4.7, frac = 0.5, tmin = 0.01, tmax = 30.0;
    int tpoints = 40;
    auto* plife = pump->add_subcommand("lifetime", "anti-hole decay trace");
    add_common(plife);
    plife->add_option("--bandwidth-mhz", po.width);
    plife->add_option("--t1-fast-s", t1f);
    plife->add_option("--t1-slow-s", t1s);
    plife->add_option("--fraction-fast", frac);
    plife->add_option("--t-min-s", tmin);
    plife->add_option("--t-max-s", tmax);
    plife->add_option("--points", tpoints);

    auto* fit = app.add_subcommand("fit", "least-squares fits");
    fit->require_subcommand(1);
    std::string input, fout;
    double fdelta = 0, ffin = 2.0;
    auto* fdec = fit->add_subcommand("decay", "efficiency decay eta0 exp(-4t/T2)");
    auto* fdx = fit->add_subcommand("double-exp", "A exp(-t/T1f) + B exp(-t/T1s)");
    auto* fcomb = fit->add_subcommand("comb", "peak OD, finesse and background of a comb spectrum");
    for (auto* c : {fdec, fdx, fcomb}) {
        c->add_option("--input", input, "two-column CSV")->required()->check(CLI::ExistingFile);
        c->add_option("--out", fout, "JSON report path (default stdout)");
    }
    fcomb->add_option("--delta-hz", fdelta, "tooth spacing in the spectrum's frequency unit")->required();
    fcomb->add_option("--finesse", ffin, "nominal finesse (unused by the estimate)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    if (synth->parsed()) return cmd_synth(so);
    if (bench->parsed()) return cmd_bench(bo);
    if (ceff->parsed()) return cmd_comb_efficiency(cd, cf, cd0, fmin, fmax, fpoints, cf_opt->count() > 0, cout_path);
    if (copt->parsed()) return cmd_comb_optimize(cd, cd0);
    if (cdec->parsed()) return cmd_comb_decay(eta0, t2, parse_list(times), cout_path);
    if (psim->parsed()) return cmd_pump_simulate(po, sfmin, sfmax, relax, reps);
    if (pbw->parsed()) return cmd_pump_bwlimit(po, wmin, wmax, wstep, thr, centers);
    if (plife->parsed()) return cmd_pump_lifetime(po, t1f, t1s, frac, tmin, tmax, tpoints);
    if (fdec->parsed() || fdx->parsed()) {
        check_output_path(fout);
        const auto pts = afc::io::read_xy_csv(input);
        return report_fit(fdec->parsed() ? afc::fit_afc_decay(pts) : afc::fit_double_exponential(pts), fout);
    }
    if (fcomb->parsed()) return cmd_fit_comb(input, fdelta, ffin, fout);
    return kConfig;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const afc::ConfigError& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return kConfig;
    } catch (const afc::ResourceError& e) {
        std::cerr << "error: resource: " << e.what() << "\n";
        return kResource;
    } catch (const std::bad_alloc&) {
        std::cerr << "error: resource: out of memory\n";
        return kResource;
    } catch (const afc::ValidationError& e) {
        std::cerr << "error: validation: " << e.what() << "\n";
        return kValidation;
    } catch (const afc::FitError& e) {
        std::cerr << "error: validation: " << e.what() << "\n";
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
}
