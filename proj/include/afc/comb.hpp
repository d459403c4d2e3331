#pragma once

#include <cstddef>
#include <vector>

namespace afc {

// AFC geometry. Frequencies in Hz.
struct CombSpec {
    double delta = 0.0;      // tooth spacing
    double bandwidth = 0.0;  // total comb bandwidth
    double finesse = 0.0;    // AFC finesse F > 1

    double pump_finesse() const { return 1.0 / (1.0 - 1.0 / finesse); }
    double pump_tooth_width() const { return delta / pump_finesse(); }
    double afc_tooth_width() const { return delta / finesse; }
    std::size_t n_teeth() const;  // throws unless bandwidth/delta is an integer
};

// Validated construction; returns the checked spec.
CombSpec make_comb(double delta_hz, double bandwidth_hz, double finesse);
void validate(const CombSpec& spec);

struct CombMeasurement {
    double peak_od = 0.0;
    double finesse = 0.0;
    double background_od = 0.0;
};

struct DecayModel {
    double eta0 = 0.0;
    double t2_afc = 0.0;  // s
};

struct HoleDecayModel {
    double amp_fast = 0.0;
    double amp_slow = 0.0;
    double t1_fast = 0.0;  // s
    double t1_slow = 0.0;  // s
};

// Uniform frequency axis: f_k = start + k*step, k = 0..size-1.
struct FrequencyAxis {
    double start = 0.0;
    double step = 0.0;
    std::size_t size = 0;

    double at(std::size_t k) const { return start + step * static_cast<double>(k); }
};

struct SpectrumGrid {
    FrequencyAxis axis;
    std::vector<double> values;
};

// sinc(x) = sin(x)/x, unnormalized.
double sinc(double x);

double mean_optical_depth(double d, double finesse);
double afc_efficiency(double d, double finesse);
double afc_efficiency_with_background(double d, double finesse, double d0);
double optimal_finesse(double d);
double efficiency_decay(double storage_time, const DecayModel& model);
// Storage time taken as 1/delta.
double efficiency_decay_at_delta(const DecayModel& model, double delta_hz);
double hole_decay(double t, const HoleDecayModel& model);

// Ideal pump PSD: 1 on [n*delta, n*delta + sigma), 0 elsewhere, n = 0..N-1.
// Grid step must divide delta and sigma, and the start must be on the step lattice.
SpectrumGrid target_psd(const CombSpec& spec, const FrequencyAxis& grid);

}  // namespace afc

namespace afc {

// Returns round(num/den) if num/den is within 1e-9 (relative) of an integer, else throws
// ValidationError naming `what`.
long long integer_ratio(double num, double den, const char* what);

}  // namespace afc
