#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "afc/comb.hpp"

namespace afc::pump {

// Frequencies in MHz relative to the |4g>-|1e> line unless noted; times in s.

enum class Polarization { D2, b, diag45 };
std::string to_string(Polarization p);
Polarization parse_polarization(const std::string& s);

using Table = std::array<std::array<double, 4>, 4>;  // [ground][excited]

struct LevelSystem {
    std::array<double, 4> ground{};   // relative to |1g>
    std::array<double, 4> excited{};  // relative to |1e>
    Table d2{};
    Table b{};
    double inhom_fwhm = 1000.0;  // MHz
    double peak_od = 0.97;       // unpumped OD at the |4g>-|1e> line
};

// Every violated constraint, one message each. Empty when valid.
std::vector<std::string> constraint_violations(const LevelSystem& levels);
void validate(const LevelSystem& levels);  // throws ValidationError joining all violations

LevelSystem default_level_system();

Table strengths(const LevelSystem& levels, Polarization pol);
// beta[e][g']: probability that an ion excited to e decays to g'.
Table emission_branching(const LevelSystem& levels);
Table transition_table(const LevelSystem& levels);

struct PumpPulse {
    double center = 0.0;      // MHz
    double scan_width = 0.0;  // MHz
    double duration = 2e-3;   // s
    double rate = 15000.0;    // 1/s at full overlap and unit strength
    Polarization pol = Polarization::diag45;
    // Full width of the linear roll-off at each band edge (MHz); 0 gives hard edges.
    double edge_width = 2.0;
};

struct PumpSequence {
    std::vector<PumpPulse> pulses;
    std::size_t repetitions = 1;
};

struct RelaxationParams {
    double rate_fast = 1.0 / 0.370;
    double rate_slow = 1.0 / 4.7;
    double fraction_fast = 0.5;
};

using Populations = std::array<double, 4>;

struct ClassEnsemble {
    double grid_step = 1.0;  // MHz
    std::vector<double> detunings;
    std::vector<double> weights;
    std::vector<Populations> populations;

    std::size_t size() const { return detunings.size(); }
};

// Fraction of the pump rate seen at absolute offset x (MHz).
double band_overlap(double x, const PumpPulse& pulse);

// span <= 0 selects 4 inhomogeneous FWHM.
ClassEnsemble initial_ensemble(const LevelSystem& levels, double grid_step = 1.0, double span = 0.0);

// Per-class column-stochastic map for one pulse: p' = M p, M[g'][g].
using Transfer = std::array<std::array<double, 4>, 4>;
Transfer pulse_transfer(double detuning, const PumpPulse& pulse, const LevelSystem& levels);

void apply_pulse(ClassEnsemble& ens, const PumpPulse& pulse, const LevelSystem& levels);
void apply_relaxation(ClassEnsemble& ens, const RelaxationParams& params, double dt);
void run_sequence(ClassEnsemble& ens, const PumpSequence& seq, const LevelSystem& levels,
                  const std::optional<RelaxationParams>& relax = std::nullopt);

enum class LineShape { box, lorentzian };

struct LineOptions {
    Polarization pol = Polarization::diag45;
    LineShape shape = LineShape::box;
    double fwhm = 0.0;  // lorentzian FWHM (MHz); <= 0 means one grid step
};

struct DetuningWindow {
    double lo = 0.0;  // open interval (lo, hi)
    double hi = 0.0;
};

// Bin-averaged OD over the axis bins [f_k - step/2, f_k + step/2].
SpectrumGrid spectrum_from_ensemble(const ClassEnsemble& ens, const LevelSystem& levels, const FrequencyAxis& axis,
                                    const LineOptions& line = {},
                                    const std::optional<DetuningWindow>& window = std::nullopt);

// Default prepare steps.
PumpSequence class_cleaning_sequence(const std::array<double, 4>& centers, double width, std::size_t repetitions,
                                     const PumpPulse& proto = {});
PumpSequence spin_polarisation_sequence(const LevelSystem& levels, double width, std::size_t repetitions,
                                        const PumpPulse& proto = {});

constexpr std::array<double, 4> kDefaultCcCenters{0.0, 3025.5, 5359.7, 6913.7};

struct ScanOptions {
    double grid_step = 1.0;
    double span = 0.0;
    std::size_t cc_repetitions = 40;
    std::size_t sp_repetitions = 40;
    PumpPulse pulse{};  // prototype for duration, rate, polarization, edge width
    LineOptions line{};
    double threshold = 1e-2;  // relative to peak_od
};

struct ScanPoint {
    double width = 0.0;
    double metric = 0.0;       // max over band of OD_total - OD_selected
    double metric_rel = 0.0;   // metric / peak_od
};

struct ScanResult {
    std::vector<ScanPoint> points;
    std::optional<double> knee;  // smallest width with metric_rel > threshold
};

ScanResult bandwidth_limit_scan(const LevelSystem& levels, const std::array<double, 4>& cc_centers,
                                const std::vector<double>& widths, const ScanOptions& opts = {});

struct LifetimeTrace {
    std::vector<double> delays;  // s
    std::vector<double> d_rel;   // OD(t) - unpumped OD at the |4g>-|1e> line
};

// Runs CC and SP at `width`, then lets the ensemble relax for each delay.
LifetimeTrace lifetime_trace(const LevelSystem& levels, const RelaxationParams& relax, const std::vector<double>& delays,
                             double width = 50.0, const ScanOptions& opts = {});

}  // namespace afc::pump
