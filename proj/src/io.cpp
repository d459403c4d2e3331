#include "afc/io.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <sstream>

#include "afc/errors.hpp"

namespace afc::io {

using nlohmann::json;

namespace {

std::uint32_t to_le(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::big) return __builtin_bswap32(v);
    return v;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

template <class T>
T field(const json& j, const char* key) {
    if (!j.contains(key)) throw ConfigError(std::string("missing field: ") + key);
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad field ") + key + ": " + e.what());
    }
}

}  // namespace

WaveformMeta meta_from_signal(const Signal& sig) {
    WaveformMeta m;
    m.sample_rate_hz = sig.sample_rate;
    m.n_samples = sig.samples.size();
    m.delta_hz = sig.params.comb.delta;
    m.bandwidth_hz = sig.params.comb.bandwidth;
    m.finesse = sig.params.comb.finesse;
    m.method = to_string(sig.params.method);
    m.phase_constructor = to_string(sig.phase_used);
    m.sign = sig.params.sign;
    m.peak_norm = sig.peak_norm;
    return m;
}

void write_iq(const std::string& path, const std::vector<std::complex<float>>& samples) {
    std::vector<std::uint32_t> buf(2 * samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        buf[2 * i] = to_le(std::bit_cast<std::uint32_t>(samples[i].real()));
        buf[2 * i + 1] = to_le(std::bit_cast<std::uint32_t>(samples[i].imag()));
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
    if (!out) throw ConfigError("write failed: " + path);
}

void write_iq(const std::string& path, const std::vector<std::complex<double>>& samples) {
    std::vector<std::complex<float>> f(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        f[i] = {static_cast<float>(samples[i].real()), static_cast<float>(samples[i].imag())};
    write_iq(path, f);
}

std::vector<std::complex<float>> read_iq(const std::string& path) {
    const std::string raw = slurp(path);
    if (raw.size() % 8 != 0) throw ConfigError("I/Q file size is not a multiple of 8 bytes: " + path);
    std::vector<std::complex<float>> out(raw.size() / 8);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint32_t re, im;
        std::memcpy(&re, raw.data() + 8 * i, 4);
        std::memcpy(&im, raw.data() + 8 * i + 4, 4);
        out[i] = {std::bit_cast<float>(to_le(re)), std::bit_cast<float>(to_le(im))};
    }
    return out;
}

void write_meta(const std::string& path, const WaveformMeta& m) {
    json j = {{"sample_rate_hz", m.sample_rate_hz}, {"n_samples", m.n_samples},
              {"delta_hz", m.delta_hz},             {"bandwidth_hz", m.bandwidth_hz},
              {"finesse", m.finesse},               {"method", m.method},
              {"phase_constructor", m.phase_constructor}, {"sign", m.sign},
              {"peak_norm", m.peak_norm},           {"format", "float32le interleaved I/Q"}};
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path);
    out << std::setprecision(17) << j.dump(2) << "\n";
}

WaveformMeta read_meta(const std::string& path) {
    json j;
    try {
        j = json::parse(slurp(path));
    } catch (const json::parse_error& e) {
        throw ConfigError("malformed metadata " + path + ": " + e.what());
    }
    WaveformMeta m;
    m.sample_rate_hz = field<double>(j, "sample_rate_hz");
    m.n_samples = field<std::size_t>(j, "n_samples");
    m.delta_hz = field<double>(j, "delta_hz");
    m.bandwidth_hz = field<double>(j, "bandwidth_hz");
    m.finesse = field<double>(j, "finesse");
    m.method = field<std::string>(j, "method");
    m.phase_constructor = field<std::string>(j, "phase_constructor");
    m.sign = field<int>(j, "sign");
    m.peak_norm = field<double>(j, "peak_norm");
    return m;
}

pump::LevelSystem parse_level_system(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed level file: ") + e.what());
    }
    pump::LevelSystem L;
    L.ground = field<std::array<double, 4>>(j, "ground_energies_mhz");
    L.excited = field<std::array<double, 4>>(j, "excited_energies_mhz");
    L.d2 = field<pump::Table>(j, "branching_d2");
    L.b = field<pump::Table>(j, "branching_b");
    L.inhom_fwhm = j.contains("inhom_fwhm_mhz") ? field<double>(j, "inhom_fwhm_mhz") : 1000.0;
    L.peak_od = j.contains("peak_od") ? field<double>(j, "peak_od") : 0.97;
    pump::validate(L);
    return L;
}

pump::LevelSystem load_level_system(const std::string& path) { return parse_level_system(slurp(path)); }

std::string level_system_to_json(const pump::LevelSystem& L) {
    json j = {{"ground_energies_mhz", L.ground}, {"excited_energies_mhz", L.excited},
              {"branching_d2", L.d2},            {"branching_b", L.b},
              {"inhom_fwhm_mhz", L.inhom_fwhm},  {"peak_od", L.peak_od}};
    return j.dump(2);
}

std::vector<DataPoint> read_xy_csv(const std::string& path) {
    std::istringstream in(slurp(path));
    std::vector<DataPoint> pts;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double x, y;
        std::string extra;
        if (!(ls >> x >> y)) {
            if (pts.empty() && lineno == 1) continue;  // header
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected two numeric columns");
        }
        if (ls >> extra) throw ConfigError(path + ":" + std::to_string(lineno) + ": more than two columns");
        pts.push_back({x, y});
    }
    if (pts.empty()) throw ConfigError(path + ": no data rows");
    return pts;
}

void write_csv(const std::string& path, const CsvTable& t) {
    if (t.columns.size() != t.header.size()) throw std::logic_error("csv header/column count mismatch");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path);
    for (std::size_t c = 0; c < t.header.size(); ++c) out << (c ? "," : "") << t.header[c];
    out << "\n" << std::setprecision(12);
    const std::size_t rows = t.columns.empty() ? 0 : t.columns.front().size();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << t.columns[c][r];
        out << "\n";
    }
}

}  // namespace afc::io
