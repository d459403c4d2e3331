#include "afc/pump.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "afc/errors.hpp"

namespace afc::pump {

namespace {

constexpr double kTol = 0.1;  // MHz, level-constraint tolerance

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

void check_table(const Table& t, const char* name, std::vector<std::string>& out) {
    for (int g = 0; g < 4; ++g) {
        double sum = 0.0;
        for (int e = 0; e < 4; ++e) {
            const double v = t[g][e];
            if (!std::isfinite(v) || v < 0.0 || v > 1.0)
                out.push_back(std::string(name) + "[" + std::to_string(g + 1) + "g][" + std::to_string(e + 1) +
                              "e] = " + fmt(v) + " outside [0,1]");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 0.02)
            out.push_back(std::string(name) + " row " + std::to_string(g + 1) + "g sums to " + fmt(sum) +
                          ", expected 1.00 +/- 0.02");
    }
}

void check_constraint(double value, double expect, const std::string& what, std::vector<std::string>& out) {
    if (!(std::abs(value - expect) <= kTol))
        out.push_back(what + " = " + fmt(value) + " MHz, expected " + fmt(expect) + " +/- 0.1");
}

struct Context {
    Table strength;
    Table beta;
    Table nu;
};

Context make_context(const LevelSystem& levels, Polarization pol) {
    return {strengths(levels, pol), emission_branching(levels), transition_table(levels)};
}

Transfer transfer_from(const Context& c, double detuning, const PumpPulse& pulse) {
    Transfer m{};
    for (int g = 0; g < 4; ++g) {
        std::array<double, 4> r{};
        double total = 0.0;
        for (int e = 0; e < 4; ++e) {
            const double s = c.strength[g][e];
            if (s <= 0.0) continue;
            r[e] = pulse.rate * s * band_overlap(c.nu[g][e] + detuning, pulse);
            total += r[e];
        }
        const double dep = total > 0.0 ? -std::expm1(-total * pulse.duration) : 0.0;
        m[g][g] += 1.0 - dep;
        if (dep > 0.0) {
            for (int e = 0; e < 4; ++e) {
                if (r[e] <= 0.0) continue;
                const double via = dep * r[e] / total;
                for (int gp = 0; gp < 4; ++gp) m[gp][g] += via * c.beta[e][gp];
            }
        }
    }
    return m;
}

bool is_identity(const Transfer& m) {
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            if (m[i][j] != (i == j ? 1.0 : 0.0)) return false;
    return true;
}

void apply_transfer(const Transfer& m, Populations& p) {
    Populations q{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) q[i] += m[i][j] * p[j];
    for (int i = 0; i < 4; ++i) {
        if (q[i] < -1e-12) throw std::logic_error("negative population after pumping step");
        p[i] = std::max(q[i], 0.0);
    }
}

void check_pulse(const PumpPulse& p) {
    if (!(p.scan_width > 0.0)) throw ValidationError("pump scan width must be positive");
    if (!(p.duration > 0.0)) throw ValidationError("pump duration must be positive");
    if (!(p.rate >= 0.0) || !std::isfinite(p.rate)) throw ValidationError("pump rate must be non-negative");
    if (!(p.edge_width >= 0.0)) throw ValidationError("edge width must be non-negative");
}

double relaxation_factor(const RelaxationParams& r, double dt) {
    if (!(r.rate_fast > 0.0) || !(r.rate_slow > 0.0)) throw ValidationError("relaxation rates must be positive");
    if (!(r.fraction_fast >= 0.0 && r.fraction_fast <= 1.0))
        throw ValidationError("fast relaxation fraction must lie in [0,1]");
    if (!(dt >= 0.0)) throw ValidationError("relaxation time must be non-negative");
    return r.fraction_fast * std::exp(-r.rate_fast * dt) + (1.0 - r.fraction_fast) * std::exp(-r.rate_slow * dt);
}

void relax_with_factor(ClassEnsemble& ens, double k) {
    for (auto& p : ens.populations)
        for (auto& v : p) v = 0.25 + (v - 0.25) * k;
}

}  // namespace

std::string to_string(Polarization p) {
    switch (p) {
        case Polarization::D2: return "D2";
        case Polarization::b: return "b";
        case Polarization::diag45: return "diag45";
    }
    return "unknown";
}

Polarization parse_polarization(const std::string& s) {
    if (s == "D2" || s == "d2") return Polarization::D2;
    if (s == "b") return Polarization::b;
    if (s == "diag45" || s == "45") return Polarization::diag45;
    throw ValidationError("unknown polarization: " + s);
}

std::vector<std::string> constraint_violations(const LevelSystem& L) {
    std::vector<std::string> out;
    for (int i = 0; i < 4; ++i) {
        if (!std::isfinite(L.ground[i]) || !std::isfinite(L.excited[i])) {
            out.push_back("level energies must be finite");
            return out;
        }
    }
    if (L.ground[0] != 0.0) out.push_back("E(1g) must be 0 (energies are relative to |1g>)");
    if (L.excited[0] != 0.0) out.push_back("E(1e) must be 0 (energies are relative to |1e>)");
    check_constraint(L.ground[3] - L.ground[0], 3025.5, "E(4g)-E(1g)", out);
    check_constraint((L.ground[3] - L.ground[2]) + (L.excited[3] - L.excited[0]), 5359.7,
                     "[E(4g)-E(3g)]+[E(4e)-E(1e)]", out);
    check_constraint((L.ground[3] - L.ground[1]) + (L.excited[2] - L.excited[0]), 6913.7,
                     "[E(4g)-E(2g)]+[E(3e)-E(1e)]", out);
    check_constraint(L.excited[3] - L.excited[2], 288.0, "E(4e)-E(3e)", out);
    check_table(L.d2, "D2", out);
    check_table(L.b, "b", out);
    if (!(L.inhom_fwhm > 0.0)) out.push_back("inhomogeneous FWHM must be positive");
    if (!(L.peak_od > 0.0)) out.push_back("peak OD must be positive");
    return out;
}

void validate(const LevelSystem& levels) {
    const auto v = constraint_violations(levels);
    if (v.empty()) return;
    std::string msg = "level system violates " + std::to_string(v.size()) + " constraint(s):";
    for (const auto& s : v) msg += "\n  - " + s;
    throw ValidationError(msg);
}

LevelSystem default_level_system() {
    LevelSystem L;
    L.ground = {0.0, 528.5, 2370.5, 3025.5};
    L.excited = {0.0, 288.0, 4416.7, 4704.7};
    L.d2 = {{{0.15, 0.06, 0.08, 0.71}, {0.06, 0.19, 0.71, 0.04}, {0.07, 0.71, 0.16, 0.06}, {0.72, 0.04, 0.05, 0.19}}};
    L.b = {{{0.54, 0.19, 0.03, 0.24}, {0.21, 0.57, 0.21, 0.01}, {0.01, 0.18, 0.66, 0.15}, {0.23, 0.06, 0.10, 0.61}}};
    L.inhom_fwhm = 1000.0;
    L.peak_od = 0.97;
    return L;
}

Table strengths(const LevelSystem& L, Polarization pol) {
    switch (pol) {
        case Polarization::D2: return L.d2;
        case Polarization::b: return L.b;
        case Polarization::diag45: {
            Table t{};
            for (int g = 0; g < 4; ++g)
                for (int e = 0; e < 4; ++e) t[g][e] = 0.5 * (L.d2[g][e] + L.b[g][e]);
            return t;
        }
    }
    throw ValidationError("unknown polarization");
}

Table emission_branching(const LevelSystem& L) {
    const Table avg = strengths(L, Polarization::diag45);
    Table beta{};
    for (int e = 0; e < 4; ++e) {
        double col = 0.0;
        for (int g = 0; g < 4; ++g) col += avg[g][e];
        if (!(col > 0.0)) throw ValidationError("excited state " + std::to_string(e + 1) + "e has no decay channel");
        for (int g = 0; g < 4; ++g) beta[e][g] = avg[g][e] / col;
    }
    return beta;
}

Table transition_table(const LevelSystem& L) {
    Table nu{};
    const double ref = L.excited[0] - L.ground[3];
    for (int g = 0; g < 4; ++g)
        for (int e = 0; e < 4; ++e) nu[g][e] = (L.excited[e] - L.ground[g]) - ref;
    return nu;
}

double band_overlap(double x, const PumpPulse& p) {
    const double dist = std::abs(x - p.center);
    const double half = 0.5 * p.scan_width;
    if (p.edge_width <= 0.0) return dist <= half ? 1.0 : 0.0;
    return std::clamp((half + 0.5 * p.edge_width - dist) / p.edge_width, 0.0, 1.0);
}

ClassEnsemble initial_ensemble(const LevelSystem& levels, double grid_step, double span) {
    validate(levels);
    if (!(grid_step > 0.0) || !std::isfinite(grid_step)) throw ValidationError("grid step must be positive");
    if (span <= 0.0) span = 4.0 * levels.inhom_fwhm;
    const auto half = static_cast<long long>(std::floor(span / grid_step));
    if (half < 1) throw ValidationError("detuning span must exceed one grid step");

    ClassEnsemble ens;
    ens.grid_step = grid_step;
    const std::size_t n = static_cast<std::size_t>(2 * half + 1);
    ens.detunings.resize(n);
    ens.weights.resize(n);
    ens.populations.assign(n, Populations{0.25, 0.25, 0.25, 0.25});
    const double c = 4.0 * std::numbers::ln2 / (levels.inhom_fwhm * levels.inhom_fwhm);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(static_cast<long long>(i) - half) * grid_step;
        ens.detunings[i] = d;
        ens.weights[i] = std::exp(-c * d * d);
    }
    const SpectrumGrid at0 = spectrum_from_ensemble(ens, levels, FrequencyAxis{0.0, grid_step, 1});
    const double scale = levels.peak_od / at0.values[0];
    for (auto& w : ens.weights) w *= scale;
    return ens;
}

Transfer pulse_transfer(double detuning, const PumpPulse& pulse, const LevelSystem& levels) {
    check_pulse(pulse);
    return transfer_from(make_context(levels, pulse.pol), detuning, pulse);
}

void apply_pulse(ClassEnsemble& ens, const PumpPulse& pulse, const LevelSystem& levels) {
    check_pulse(pulse);
    if (pulse.rate == 0.0) return;
    const Context c = make_context(levels, pulse.pol);
    for (std::size_t i = 0; i < ens.size(); ++i) {
        const Transfer m = transfer_from(c, ens.detunings[i], pulse);
        if (!is_identity(m)) apply_transfer(m, ens.populations[i]);
    }
}

void apply_relaxation(ClassEnsemble& ens, const RelaxationParams& params, double dt) {
    relax_with_factor(ens, relaxation_factor(params, dt));
}

void run_sequence(ClassEnsemble& ens, const PumpSequence& seq, const LevelSystem& levels,
                  const std::optional<RelaxationParams>& relax) {
    if (seq.repetitions == 0) return;
    if (seq.pulses.empty()) throw ValidationError("pump sequence has no pulses");

    // Per-class maps are identical on every repetition; build them once.
    struct Stage {
        std::vector<Transfer> maps;
        std::vector<char> active;
        double relax_factor = 1.0;
    };
    std::vector<Stage> stages;
    stages.reserve(seq.pulses.size());
    for (const auto& pulse : seq.pulses) {
        check_pulse(pulse);
        const Context c = make_context(levels, pulse.pol);
        Stage st;
        st.maps.resize(ens.size());
        st.active.assign(ens.size(), 0);
        if (pulse.rate > 0.0) {
            for (std::size_t i = 0; i < ens.size(); ++i) {
                st.maps[i] = transfer_from(c, ens.detunings[i], pulse);
                st.active[i] = !is_identity(st.maps[i]);
            }
        }
        if (relax) st.relax_factor = relaxation_factor(*relax, pulse.duration);
        stages.push_back(std::move(st));
    }

    for (std::size_t rep = 0; rep < seq.repetitions; ++rep) {
        for (const auto& st : stages) {
            for (std::size_t i = 0; i < ens.size(); ++i)
                if (st.active[i]) apply_transfer(st.maps[i], ens.populations[i]);
            if (relax) relax_with_factor(ens, st.relax_factor);
        }
    }
}

SpectrumGrid spectrum_from_ensemble(const ClassEnsemble& ens, const LevelSystem& levels, const FrequencyAxis& axis,
                                    const LineOptions& line, const std::optional<DetuningWindow>& window) {
    if (!(axis.step > 0.0) || axis.size == 0) throw ValidationError("empty or degenerate spectrum axis");
    const Table s = strengths(levels, line.pol);
    const Table nu = transition_table(levels);
    SpectrumGrid out{axis, std::vector<double>(axis.size, 0.0)};
    const double h = ens.grid_step;
    const double lo_edge = axis.start - 0.5 * axis.step;
    const double hi_edge = lo_edge + axis.step * static_cast<double>(axis.size);
    const double gamma = line.fwhm > 0.0 ? line.fwhm : h;
    const double hw = 0.5 * gamma;

    for (std::size_t i = 0; i < ens.size(); ++i) {
        const double d = ens.detunings[i];
        if (window && !(d > window->lo && d < window->hi)) continue;
        for (int g = 0; g < 4; ++g) {
            const double pw = ens.weights[i] * ens.populations[i][g];
            if (pw == 0.0) continue;
            for (int e = 0; e < 4; ++e) {
                const double a = pw * s[g][e];
                if (a == 0.0) continue;
                const double x = nu[g][e] + d;
                if (line.shape == LineShape::box) {
                    const double a0 = x - 0.5 * h, a1 = x + 0.5 * h;
                    if (a1 <= lo_edge || a0 >= hi_edge) continue;
                    const auto k0 = static_cast<long long>(std::floor((a0 - lo_edge) / axis.step));
                    const auto k1 = static_cast<long long>(std::floor((a1 - lo_edge) / axis.step));
                    for (long long k = std::max(0LL, k0); k <= std::min<long long>(k1, axis.size - 1); ++k) {
                        const double b0 = lo_edge + axis.step * static_cast<double>(k);
                        const double len = std::min(a1, b0 + axis.step) - std::max(a0, b0);
                        if (len > 0.0) out.values[k] += a * len / axis.step;
                    }
                } else {
                    const double area = a * h / (std::numbers::pi * axis.step);
                    for (std::size_t k = 0; k < axis.size; ++k) {
                        const double b0 = lo_edge + axis.step * static_cast<double>(k);
                        out.values[k] += area * (std::atan((b0 + axis.step - x) / hw) - std::atan((b0 - x) / hw));
                    }
                }
            }
        }
    }
    return out;
}

PumpSequence class_cleaning_sequence(const std::array<double, 4>& centers, double width, std::size_t repetitions,
                                     const PumpPulse& proto) {
    PumpSequence seq;
    seq.repetitions = repetitions;
    for (double c : centers) {
        PumpPulse p = proto;
        p.center = c;
        p.scan_width = width;
        seq.pulses.push_back(p);
    }
    return seq;
}

PumpSequence spin_polarisation_sequence(const LevelSystem& levels, double width, std::size_t repetitions,
                                        const PumpPulse& proto) {
    const Table nu = transition_table(levels);
    PumpSequence seq;
    seq.repetitions = repetitions;
    for (auto [g, e] : {std::pair{0, 0}, std::pair{1, 2}, std::pair{2, 3}}) {
        PumpPulse p = proto;
        p.center = nu[g][e];
        p.scan_width = width;
        seq.pulses.push_back(p);
    }
    return seq;
}

ScanResult bandwidth_limit_scan(const LevelSystem& levels, const std::array<double, 4>& cc_centers,
                                const std::vector<double>& widths, const ScanOptions& opts) {
    validate(levels);
    const ClassEnsemble base = initial_ensemble(levels, opts.grid_step, opts.span);
    ScanResult res;
    for (double w : widths) {
        if (!(w > 0.0)) throw ValidationError("scan widths must be positive");
        ClassEnsemble ens = base;
        run_sequence(ens, class_cleaning_sequence(cc_centers, w, opts.cc_repetitions, opts.pulse), levels);
        run_sequence(ens, spin_polarisation_sequence(levels, w, opts.sp_repetitions, opts.pulse), levels);

        const double h = opts.grid_step;
        const auto kmax = static_cast<long long>(std::ceil(0.5 * w / h));
        const FrequencyAxis axis{-static_cast<double>(kmax) * h, h, static_cast<std::size_t>(2 * kmax + 1)};
        const auto tot = spectrum_from_ensemble(ens, levels, axis, opts.line);
        const auto sel = spectrum_from_ensemble(ens, levels, axis, opts.line, DetuningWindow{-0.5 * w, 0.5 * w});
        double m = 0.0;
        for (std::size_t k = 0; k < axis.size; ++k)
            if (std::abs(axis.at(k)) < 0.5 * w) m = std::max(m, tot.values[k] - sel.values[k]);
        ScanPoint pt{w, m, m / levels.peak_od};
        if (!res.knee && pt.metric_rel > opts.threshold) res.knee = w;
        res.points.push_back(pt);
    }
    return res;
}

LifetimeTrace lifetime_trace(const LevelSystem& levels, const RelaxationParams& relax, const std::vector<double>& delays,
                             double width, const ScanOptions& opts) {
    validate(levels);
    ClassEnsemble ens = initial_ensemble(levels, opts.grid_step, opts.span);
    const FrequencyAxis at0{0.0, opts.grid_step, 1};
    const double od0 = spectrum_from_ensemble(ens, levels, at0, opts.line).values[0];
    run_sequence(ens, class_cleaning_sequence(kDefaultCcCenters, width, opts.cc_repetitions, opts.pulse), levels);
    run_sequence(ens, spin_polarisation_sequence(levels, width, opts.sp_repetitions, opts.pulse), levels);

    LifetimeTrace tr;
    for (double t : delays) {
        ClassEnsemble e = ens;
        apply_relaxation(e, relax, t);
        tr.delays.push_back(t);
        tr.d_rel.push_back(spectrum_from_ensemble(e, levels, at0, opts.line).values[0] - od0);
    }
    return tr;
}

}  // namespace afc::pump
