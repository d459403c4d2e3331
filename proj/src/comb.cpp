#include "afc/comb.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "afc/errors.hpp"

namespace afc {

namespace {

void require_finite(double x, const char* name) {
    if (!std::isfinite(x)) throw ValidationError(std::string(name) + " must be finite");
}

}  // namespace

long long integer_ratio(double num, double den, const char* what) {
    if (!(den > 0.0) || !std::isfinite(num) || !std::isfinite(den))
        throw ValidationError(std::string(what) + ": invalid ratio operands");
    const double r = num / den;
    const double n = std::round(r);
    if (std::abs(r - n) > 1e-9 * std::max(1.0, std::abs(r)))
        throw ValidationError(std::string(what) + " is not an integer (ratio " + std::to_string(r) + ")");
    return static_cast<long long>(n);
}

std::size_t CombSpec::n_teeth() const {
    const long long n = integer_ratio(bandwidth, delta, "bandwidth/delta");
    if (n < 1) throw ValidationError("bandwidth must be at least one tooth spacing");
    return static_cast<std::size_t>(n);
}

void validate(const CombSpec& spec) {
    require_finite(spec.delta, "delta");
    require_finite(spec.bandwidth, "bandwidth");
    require_finite(spec.finesse, "finesse");
    if (!(spec.delta > 0.0)) throw ValidationError("delta must be positive");
    if (!(spec.finesse > 1.0)) throw ValidationError("finesse must exceed 1");
    (void)spec.n_teeth();
}

CombSpec make_comb(double delta_hz, double bandwidth_hz, double finesse) {
    CombSpec s{delta_hz, bandwidth_hz, finesse};
    validate(s);
    return s;
}

double sinc(double x) {
    if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
    return std::sin(x) / x;
}

double mean_optical_depth(double d, double finesse) {
    require_finite(d, "d");
    require_finite(finesse, "finesse");
    if (d < 0.0) throw ValidationError("optical depth must be non-negative");
    if (!(finesse > 0.0)) throw ValidationError("finesse must be positive");
    return d / finesse;
}

double afc_efficiency(double d, double finesse) {
    require_finite(finesse, "finesse");
    if (!(finesse > 1.0)) throw ValidationError("finesse must exceed 1");
    const double dt = mean_optical_depth(d, finesse);
    const double s = sinc(std::numbers::pi / finesse);
    const double eta = dt * dt * std::exp(-dt) * s * s;
    if (!(eta >= 0.0 && eta <= 1.0)) throw ValidationError("efficiency out of [0,1]");
    return eta;
}

double afc_efficiency_with_background(double d, double finesse, double d0) {
    require_finite(d0, "d0");
    if (d0 < 0.0) throw ValidationError("background optical depth must be non-negative");
    return afc_efficiency(d, finesse) * std::exp(-d0);
}

double optimal_finesse(double d) {
    require_finite(d, "d");
    if (!(d > 0.0)) throw ValidationError("optimal finesse needs d > 0");
    return std::numbers::pi / std::atan(2.0 * std::numbers::pi / d);
}

double efficiency_decay(double storage_time, const DecayModel& model) {
    require_finite(storage_time, "storage_time");
    require_finite(model.t2_afc, "t2_afc");
    if (!(model.t2_afc > 0.0)) throw ValidationError("T2 must be positive");
    if (storage_time < 0.0) throw ValidationError("storage time must be non-negative");
    if (model.eta0 < 0.0 || model.eta0 > 1.0) throw ValidationError("eta0 must lie in [0,1]");
    return model.eta0 * std::exp(-4.0 * storage_time / model.t2_afc);
}

double efficiency_decay_at_delta(const DecayModel& model, double delta_hz) {
    if (!(delta_hz > 0.0)) throw ValidationError("delta must be positive");
    return efficiency_decay(1.0 / delta_hz, model);
}

double hole_decay(double t, const HoleDecayModel& m) {
    require_finite(t, "t");
    if (t < 0.0) throw ValidationError("time must be non-negative");
    if (!(m.t1_fast > 0.0) || !(m.t1_slow > 0.0)) throw ValidationError("lifetimes must be positive");
    if (!(m.t1_fast < m.t1_slow)) throw ValidationError("t1_fast must be shorter than t1_slow");
    return m.amp_fast * std::exp(-t / m.t1_fast) + m.amp_slow * std::exp(-t / m.t1_slow);
}

SpectrumGrid target_psd(const CombSpec& spec, const FrequencyAxis& grid) {
    validate(spec);
    if (!(grid.step > 0.0) || grid.size == 0) throw ValidationError("empty or degenerate frequency grid");
    const long long per = integer_ratio(spec.delta, grid.step, "delta/grid step");
    const long long width = integer_ratio(spec.pump_tooth_width(), grid.step, "pump tooth width/grid step");
    const long long j0 = std::llround(grid.start / grid.step);
    if (std::abs(grid.start - static_cast<double>(j0) * grid.step) > 1e-9 * grid.step)
        throw ValidationError("grid start is not on the grid lattice");
    if (width < 1 || width >= per) throw ValidationError("pump tooth must span between 1 and delta/step - 1 bins");
    const long long end = per * static_cast<long long>(spec.n_teeth());

    SpectrumGrid out{grid, std::vector<double>(grid.size, 0.0)};
    for (std::size_t k = 0; k < grid.size; ++k) {
        const long long j = j0 + static_cast<long long>(k);
        if (j < 0 || j >= end) continue;
        if (j % per < width) out.values[k] = 1.0;
    }
    return out;
}

}  // namespace afc
