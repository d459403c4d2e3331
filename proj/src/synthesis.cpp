#include "afc/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "afc/errors.hpp"
#include "fft.hpp"

namespace afc {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

std::string to_string(Method m) {
    switch (m) {
        case Method::freq_domain: return "freq-domain";
        case Method::circular_permutation: return "circular-permutation";
        case Method::dirac_sum: return "dirac-sum";
        case Method::exact_envelope: return "exact-envelope";
    }
    return "unknown";
}

std::string to_string(PhaseConstructor p) {
    switch (p) {
        case PhaseConstructor::two_scale: return "two-scale";
        case PhaseConstructor::schroeder_integral: return "schroeder-integral";
        case PhaseConstructor::zero: return "zero";
        case PhaseConstructor::automatic: return "auto";
    }
    return "unknown";
}

Method parse_method(const std::string& s) {
    if (s == "freq-domain") return Method::freq_domain;
    if (s == "circular-permutation") return Method::circular_permutation;
    if (s == "dirac-sum") return Method::dirac_sum;
    if (s == "exact-envelope" || s == "exact") return Method::exact_envelope;
    throw ValidationError("unknown method: " + s);
}

PhaseConstructor parse_phase_constructor(const std::string& s) {
    if (s == "two-scale") return PhaseConstructor::two_scale;
    if (s == "schroeder-integral" || s == "schroeder") return PhaseConstructor::schroeder_integral;
    if (s == "zero") return PhaseConstructor::zero;
    if (s == "auto") return PhaseConstructor::automatic;
    throw ValidationError("unknown phase constructor: " + s);
}

SynthGrid synth_grid(const SynthParams& p) {
    validate(p.comb);
    if (!std::isfinite(p.duration) || !(p.duration > 0.0)) throw ValidationError("duration must be positive");
    if (!std::isfinite(p.sample_rate) || !(p.sample_rate > 0.0)) throw ValidationError("sample rate must be positive");
    if (p.sign != 1 && p.sign != -1) throw ValidationError("sign must be +1 or -1");
    if (!(p.sample_rate > p.comb.bandwidth)) throw ValidationError("sample rate must exceed the comb bandwidth");

    SynthGrid g;
    const long long m = std::llround(p.duration * p.sample_rate);
    if (m < 2) throw ValidationError("fewer than two samples");
    g.n_samples = static_cast<std::size_t>(m);
    g.n_teeth = p.comb.n_teeth();
    const long long per = integer_ratio(p.comb.delta * p.duration, 1.0, "delta*duration");
    const long long w = integer_ratio(p.comb.pump_tooth_width() * p.duration, 1.0, "pump tooth width*duration");
    if (w < 1) throw ValidationError("pump tooth narrower than one spectral bin (need sigma*T >= 1)");
    if (w >= per) throw ValidationError("pump tooth must be narrower than the tooth spacing");
    g.period = static_cast<std::size_t>(per);
    g.width = static_cast<std::size_t>(w);
    if (g.n_teeth * g.period > g.n_samples)
        throw ValidationError("comb does not fit in the sampled band (bandwidth*duration > samples)");
    return g;
}

std::size_t estimate_bytes(const SynthParams& p) {
    const SynthGrid g = synth_grid(p);
    // spectrum/signal buffer, phase or chirp table, roots table
    return g.n_samples * (2 * sizeof(cplx) + sizeof(double) + sizeof(cplx));
}

namespace {

void check_memory(const SynthParams& p) {
    if (p.max_bytes == 0) return;
    const std::size_t need = estimate_bytes(p);
    if (need > p.max_bytes)
        throw ResourceError("estimated working memory " + std::to_string(need) + " bytes exceeds cap of " +
                            std::to_string(p.max_bytes) + " bytes");
}

PhaseConstructor resolve(const SynthParams& p, std::size_t n_teeth) {
    if (p.phase != PhaseConstructor::automatic) return p.phase;
    return n_teeth < p.auto_threshold ? PhaseConstructor::schroeder_integral : PhaseConstructor::two_scale;
}

double normalize_peak(std::vector<cplx>& s) {
    double peak = 0.0;
    for (const auto& v : s) peak = std::max(peak, std::abs(v));
    if (!(peak > 0.0) || !std::isfinite(peak)) throw ValidationError("synthesized signal is identically zero");
    const double inv = 1.0 / peak;
    for (auto& v : s) v *= inv;
    return peak;
}

// s_-[k] = conj(s_+[(M-k) mod M]): same PSD support, reversed sweep.
void apply_time_reversal(std::vector<cplx>& s) {
    const std::size_t m = s.size();
    std::vector<cplx> out(m);
    for (std::size_t k = 0; k < m; ++k) out[k] = std::conj(s[(m - k) % m]);
    s.swap(out);
}

// (per*k mod M)/M, i.e. delta*t modulo 1.
inline double tooth_fraction(std::size_t k, std::size_t per, std::size_t m) {
    const auto pk = static_cast<unsigned __int128>(per) * k;
    return static_cast<double>(static_cast<std::uint64_t>(pk % m)) / static_cast<double>(m);
}

Signal finish(std::vector<cplx>&& s, const SynthParams& p, PhaseConstructor used, bool time_domain) {
    if (time_domain && p.sign < 0) apply_time_reversal(s);
    Signal out;
    out.peak_norm = normalize_peak(s);
    out.samples = std::move(s);
    out.sample_rate = p.sample_rate;
    out.params = p;
    out.phase_used = used;
    return out;
}

}  // namespace

double two_scale_phase(double f, const CombSpec& comb, double duration) {
    validate(comb);
    if (!(duration > 0.0)) throw ValidationError("duration must be positive");
    if (!(f >= 0.0) || !(f < comb.bandwidth)) throw ValidationError("frequency outside the comb band");
    const double n = std::floor(f / comb.delta);
    const double r = f - n * comb.delta;
    const double coarse = (n * comb.delta) * (n * comb.delta) / comb.delta / (2.0 * comb.bandwidth);
    const double fine = r * r * duration / (2.0 * comb.pump_tooth_width());
    return 2.0 * kPi * (coarse + fine);
}

std::vector<double> two_scale_phase_bins(const SynthGrid& g) {
    std::vector<double> th(g.n_samples, 0.0);
    const std::uint64_t two_n = 2 * static_cast<std::uint64_t>(g.n_teeth);
    const std::uint64_t two_m = 2 * static_cast<std::uint64_t>(g.width);
    for (std::size_t n = 0; n < g.n_teeth; ++n) {
        const std::uint64_t n2 = static_cast<std::uint64_t>(n) * n % two_n;
        const double coarse = kPi * static_cast<double>(n2) / static_cast<double>(g.n_teeth);
        for (std::size_t r = 0; r < g.width; ++r) {
            const std::uint64_t r2 = static_cast<std::uint64_t>(r) * r % two_m;
            th[n * g.period + r] = coarse + kPi * static_cast<double>(r2) / static_cast<double>(g.width);
        }
    }
    return th;
}

std::vector<double> schroeder_integral_phase(const std::vector<double>& psd, double df, double duration, int sign) {
    if (sign != 1 && sign != -1) throw ValidationError("sign must be +1 or -1");
    if (!(df > 0.0) || !(duration > 0.0)) throw ValidationError("grid step and duration must be positive");
    double total = 0.0;
    for (double v : psd) {
        if (!std::isfinite(v) || v < 0.0) throw ValidationError("psd must be finite and non-negative");
        total += v;
    }
    if (!(total > 0.0)) throw ValidationError("psd is identically zero");

    std::vector<double> th(psd.size());
    double cum = 0.0;
    double c = 0.0;
    const double scale = sign * 2.0 * kPi * duration * df / total;
    for (std::size_t k = 0; k < psd.size(); ++k) {
        th[k] = scale * c;
        cum += psd[k];
        c += cum - 0.5 * psd[k];
    }
    return th;
}

std::vector<double> schroeder_integral_phase(const SpectrumGrid& psd, double duration, int sign) {
    return schroeder_integral_phase(psd.values, psd.axis.step, duration, sign);
}

std::uint64_t default_circ_stride(std::uint64_t n) {
    if (n <= 2) return 1;
    const double target = static_cast<double>(n) / std::numbers::phi;
    const auto base = static_cast<std::int64_t>(std::llround(target));
    for (std::int64_t off = 0; off < static_cast<std::int64_t>(n); ++off) {
        for (std::int64_t cand : {base - off, base + off}) {
            if (cand >= 1 && cand < static_cast<std::int64_t>(n) && std::gcd(static_cast<std::uint64_t>(cand), n) == 1)
                return static_cast<std::uint64_t>(cand);
        }
    }
    return 1;
}

std::vector<double> spectral_amplitude(const SynthParams& p) {
    const SynthGrid g = synth_grid(p);
    std::vector<double> prof(g.n_teeth, 1.0);
    if (!p.tooth_profile.empty()) {
        if (p.tooth_profile.size() != g.n_teeth) throw ValidationError("tooth profile length must equal tooth count");
        bool any = false;
        for (double v : p.tooth_profile) {
            if (!std::isfinite(v) || v < 0.0) throw ValidationError("tooth profile must be finite and non-negative");
            any = any || v > 0.0;
        }
        if (!any) throw ValidationError("tooth profile is identically zero");
        prof = p.tooth_profile;
    }
    std::vector<double> amp(g.n_samples, 0.0);
    for (std::size_t n = 0; n < g.n_teeth; ++n)
        for (std::size_t r = 0; r < g.width; ++r) amp[n * g.period + r] = prof[n];
    return amp;
}

Signal synth_freq_domain(const SynthParams& p) {
    const SynthGrid g = synth_grid(p);
    check_memory(p);
    const PhaseConstructor used = resolve(p, g.n_teeth);
    const std::vector<double> amp = spectral_amplitude(p);

    std::vector<double> theta;
    switch (used) {
        case PhaseConstructor::two_scale:
            if (p.tooth_profile.empty()) {
                theta = two_scale_phase_bins(g);
            } else {
                std::vector<double> g2(g.n_teeth);
                for (std::size_t n = 0; n < g.n_teeth; ++n) g2[n] = p.tooth_profile[n] * p.tooth_profile[n];
                const std::vector<double> coarse = schroeder_integral_phase(g2, p.comb.delta, 1.0 / p.comb.delta, 1);
                theta.assign(g.n_samples, 0.0);
                const std::uint64_t two_m = 2 * static_cast<std::uint64_t>(g.width);
                for (std::size_t n = 0; n < g.n_teeth; ++n)
                    for (std::size_t r = 0; r < g.width; ++r) {
                        const std::uint64_t r2 = static_cast<std::uint64_t>(r) * r % two_m;
                        theta[n * g.period + r] =
                            coarse[n] + kPi * static_cast<double>(r2) / static_cast<double>(g.width);
                    }
            }
            break;
        case PhaseConstructor::schroeder_integral: {
            std::vector<double> psd(amp.size());
            for (std::size_t k = 0; k < amp.size(); ++k) psd[k] = amp[k] * amp[k];
            theta = schroeder_integral_phase(psd, 1.0 / p.duration, p.duration, 1);
            break;
        }
        case PhaseConstructor::zero:
        case PhaseConstructor::automatic:
            theta.assign(g.n_samples, 0.0);
            break;
    }

    std::vector<cplx> s(g.n_samples, cplx{0.0, 0.0});
    for (std::size_t k = 0; k < g.n_samples; ++k)
        if (amp[k] > 0.0) s[k] = std::polar(amp[k], -p.sign * theta[k]);
    detail::dft_inplace(s, +1);
    return finish(std::move(s), p, used, false);
}

Signal synth_circular_permutation(const SynthParams& p) {
    if (!p.tooth_profile.empty()) throw ValidationError("tooth profile is only supported by freq-domain synthesis");
    const SynthGrid g = synth_grid(p);
    check_memory(p);
    const std::size_t m = g.n_samples;
    const std::uint64_t n_teeth = g.n_teeth;
    const std::uint64_t stride = p.circ_stride ? p.circ_stride : default_circ_stride(n_teeth);
    if (n_teeth > 1 && std::gcd(stride, n_teeth) != 1) throw ValidationError("circular stride must be coprime to N");

    std::vector<cplx> chirp(m), roots(m);
    for (std::size_t j = 0; j < m; ++j) {
        const double x = static_cast<double>(j) / static_cast<double>(m);
        chirp[j] = std::polar(1.0, kPi * static_cast<double>(g.width) * x * x);
        roots[j] = std::polar(1.0, 2.0 * kPi * x);
    }

    std::vector<cplx> s(m, cplx{0.0, 0.0});
    for (std::uint64_t n = 0; n < n_teeth; ++n) {
        const std::uint64_t slot = (n * stride) % n_teeth;
        const auto delay = static_cast<std::size_t>(
            std::llround(static_cast<double>(slot) * static_cast<double>(m) / static_cast<double>(n_teeth)) % m);
        const std::size_t step = static_cast<std::size_t>((n * g.period) % m);
        std::size_t j = (m - delay) % m;
        std::size_t q = static_cast<std::size_t>(static_cast<unsigned __int128>(step) * j % m);
        for (std::size_t k = 0; k < m; ++k) {
            s[k] += chirp[j] * roots[q];
            if (++j == m) {
                j = 0;
                q = 0;
            } else {
                q += step;
                if (q >= m) q -= m;
            }
        }
    }
    return finish(std::move(s), p, p.phase, true);
}

Signal synth_dirac_sum(const SynthParams& p) {
    if (!p.tooth_profile.empty()) throw ValidationError("tooth profile is only supported by freq-domain synthesis");
    const SynthGrid g = synth_grid(p);
    check_memory(p);
    const std::size_t m = g.n_samples;
    const double n = static_cast<double>(g.n_teeth);
    std::vector<cplx> s(m);
    for (std::size_t k = 0; k < m; ++k) {
        const double t = static_cast<double>(k) / static_cast<double>(m);
        const cplx chirp = std::polar(1.0, kPi * static_cast<double>(g.width) * t * t);
        const double x = tooth_fraction(k, g.period, m);
        cplx comb;
        if (x == 0.0) {
            comb = n;
        } else {
            comb = (std::sin(kPi * n * x) / std::sin(kPi * x)) * std::polar(1.0, kPi * (n - 1.0) * x);
        }
        s[k] = chirp * comb;
    }
    return finish(std::move(s), p, p.phase, true);
}

Signal synth_exact_envelope(const SynthParams& p) {
    if (!p.tooth_profile.empty()) throw ValidationError("tooth profile is only supported by freq-domain synthesis");
    const SynthGrid g = synth_grid(p);
    check_memory(p);
    const std::size_t m = g.n_samples;
    const double n = static_cast<double>(g.n_teeth);
    std::vector<cplx> s(m);
    for (std::size_t k = 0; k < m; ++k) {
        const double t = static_cast<double>(k) / static_cast<double>(m);
        const double x = tooth_fraction(k, g.period, m);
        s[k] = std::polar(1.0, kPi * static_cast<double>(g.width) * t * t + kPi * n * x * x);
    }
    return finish(std::move(s), p, p.phase, true);
}

Signal synthesize(const SynthParams& p) {
    switch (p.method) {
        case Method::freq_domain: return synth_freq_domain(p);
        case Method::circular_permutation: return synth_circular_permutation(p);
        case Method::dirac_sum: return synth_dirac_sum(p);
        case Method::exact_envelope: return synth_exact_envelope(p);
    }
    throw ValidationError("unknown method");
}

std::vector<double> power_spectrum(const std::vector<cplx>& s) {
    std::vector<cplx> buf = s;
    detail::dft_inplace(buf, -1);
    std::vector<double> out(buf.size());
    for (std::size_t k = 0; k < buf.size(); ++k) out[k] = std::norm(buf[k]);
    return out;
}

double crest_factor(const std::vector<cplx>& s) {
    if (s.empty()) throw ValidationError("empty signal");
    double peak = 0.0, power = 0.0;
    for (const auto& v : s) {
        peak = std::max(peak, std::abs(v));
        power += std::norm(v);
    }
    power /= static_cast<double>(s.size());
    if (!(power > 0.0)) throw ValidationError("signal has zero power");
    return peak / std::sqrt(power);
}

SignalMetrics signal_metrics(const Signal& sig, const CombSpec& comb) {
    if (sig.samples.size() < 2) throw ValidationError("signal needs at least two samples");
    if (!(sig.sample_rate > 0.0)) throw ValidationError("sample rate must be positive");
    SignalMetrics out;
    double power = 0.0;
    for (const auto& v : sig.samples) {
        out.peak_amplitude = std::max(out.peak_amplitude, std::abs(v));
        power += std::norm(v);
    }
    out.rms_power = power / static_cast<double>(sig.samples.size());
    if (!(out.rms_power > 0.0)) throw ValidationError("signal has zero power");
    out.crest_factor = out.peak_amplitude / std::sqrt(out.rms_power);

    const std::size_t m = sig.samples.size();
    const double duration = static_cast<double>(m) / sig.sample_rate;
    const SpectrumGrid mask = target_psd(comb, FrequencyAxis{0.0, 1.0 / duration, m});
    const std::vector<double> psd = power_spectrum(sig.samples);
    double in = 0.0, outside = 0.0;
    double lo = INFINITY, hi = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        if (mask.values[k] > 0.0) {
            in += psd[k];
            lo = std::min(lo, psd[k]);
            hi = std::max(hi, psd[k]);
        } else {
            outside += psd[k];
        }
    }
    out.oob_energy_fraction = outside / (in + outside);
    out.inband_ripple = lo > 0.0 ? hi / lo - 1.0 : INFINITY;
    return out;
}

}  // namespace afc
