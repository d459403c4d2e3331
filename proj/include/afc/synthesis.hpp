#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "afc/comb.hpp"

namespace afc {

enum class Method { freq_domain, circular_permutation, dirac_sum, exact_envelope };

// automatic picks schroeder_integral below `auto_threshold` teeth, two_scale otherwise.
enum class PhaseConstructor { two_scale, schroeder_integral, zero, automatic };

std::string to_string(Method m);
std::string to_string(PhaseConstructor p);
Method parse_method(const std::string& s);
PhaseConstructor parse_phase_constructor(const std::string& s);

struct SynthParams {
    CombSpec comb;
    double duration = 0.0;     // s
    double sample_rate = 0.0;  // samples/s
    Method method = Method::freq_domain;
    PhaseConstructor phase = PhaseConstructor::two_scale;
    int sign = +1;  // +1: instantaneous frequency rises with time

    // Optional per-tooth amplitude profile |G_n| (freq-domain only). Empty means flat.
    std::vector<double> tooth_profile;
    std::size_t auto_threshold = 100;
    // Circular-permutation stride K; 0 selects the coprime integer nearest N/golden ratio.
    std::uint64_t circ_stride = 0;
    // Upper bound on working memory in bytes; 0 disables the check.
    std::size_t max_bytes = 0;
};

// Integer bin geometry on the 1/T grid.
struct SynthGrid {
    std::size_t n_samples = 0;  // M = round(T f_s)
    std::size_t n_teeth = 0;    // N
    std::size_t period = 0;     // delta*T
    std::size_t width = 0;      // sigma*T
};

SynthGrid synth_grid(const SynthParams& p);  // throws ValidationError on misalignment
std::size_t estimate_bytes(const SynthParams& p);

struct Signal {
    std::vector<std::complex<double>> samples;  // peak |s| = 1
    double sample_rate = 0.0;
    SynthParams params;
    PhaseConstructor phase_used = PhaseConstructor::two_scale;
    double peak_norm = 1.0;  // peak |s| before normalization
};

struct SignalMetrics {
    double crest_factor = 0.0;
    double rms_power = 0.0;  // mean |s|^2
    double peak_amplitude = 0.0;
    double oob_energy_fraction = 0.0;
    double inband_ripple = 0.0;  // max/min - 1 over pump-tooth bins
};

// Continuous two-scale phase (rad) for 0 <= f < bandwidth.
double two_scale_phase(double f, const CombSpec& comb, double duration);

// Two-scale phase on the bins of the 1/T grid, reduced exactly modulo 2*pi.
std::vector<double> two_scale_phase_bins(const SynthGrid& g);

// sign * 2*pi*T*df * C_k / E, with C the trapezoid-centred double cumulative sum of psd.
std::vector<double> schroeder_integral_phase(const std::vector<double>& psd, double df, double duration, int sign);
std::vector<double> schroeder_integral_phase(const SpectrumGrid& psd, double duration, int sign);

// Spectrum magnitudes assumed by synth_freq_domain for the given parameters (u, not u^2).
std::vector<double> spectral_amplitude(const SynthParams& p);

Signal synth_freq_domain(const SynthParams& p);
Signal synth_circular_permutation(const SynthParams& p);
Signal synth_dirac_sum(const SynthParams& p);
Signal synth_exact_envelope(const SynthParams& p);
Signal synthesize(const SynthParams& p);  // dispatch on p.method

std::uint64_t default_circ_stride(std::uint64_t n_teeth);

// |DFT|^2 of the samples (forward transform, unnormalized).
std::vector<double> power_spectrum(const std::vector<std::complex<double>>& s);

SignalMetrics signal_metrics(const Signal& sig, const CombSpec& comb);
double crest_factor(const std::vector<std::complex<double>>& s);

}  // namespace afc
