#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "afc/fitting.hpp"
#include "afc/pump.hpp"
#include "afc/synthesis.hpp"

namespace afc::io {

struct WaveformMeta {
    double sample_rate_hz = 0.0;
    std::size_t n_samples = 0;
    double delta_hz = 0.0;
    double bandwidth_hz = 0.0;
    double finesse = 0.0;
    std::string method;
    std::string phase_constructor;
    int sign = 1;
    double peak_norm = 1.0;
};

WaveformMeta meta_from_signal(const Signal& sig);

// Little-endian float32 interleaved I/Q.
void write_iq(const std::string& path, const std::vector<std::complex<double>>& samples);
void write_iq(const std::string& path, const std::vector<std::complex<float>>& samples);
std::vector<std::complex<float>> read_iq(const std::string& path);

void write_meta(const std::string& path, const WaveformMeta& meta);
WaveformMeta read_meta(const std::string& path);

// Level files: ground_energies_mhz, excited_energies_mhz, branching_d2, branching_b,
// inhom_fwhm_mhz, peak_od. Throws ConfigError on malformed input, ValidationError
// listing every violated constraint.
pump::LevelSystem load_level_system(const std::string& path);
pump::LevelSystem parse_level_system(const std::string& json_text);
std::string level_system_to_json(const pump::LevelSystem& levels);

// Two-column numeric CSV with an optional header line.
std::vector<DataPoint> read_xy_csv(const std::string& path);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;
};
void write_csv(const std::string& path, const CsvTable& table);

}  // namespace afc::io
