#include <doctest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "afc/errors.hpp"
#include "afc/io.hpp"
#include "afc/synthesis.hpp"

using namespace afc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "afc_test_io";
    fs::create_directories(dir);
    return dir / name;
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

}  // namespace

TEST_CASE("waveform binary round trip is bit exact") {
    SynthParams p;
    p.comb = make_comb(1e6, 20e6, 2.0);
    p.duration = 20e-6;
    p.sample_rate = 25e6;
    const Signal s = synthesize(p);
    std::vector<std::complex<float>> f(s.samples.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::complex<float>(s.samples[i]);

    const auto path = scratch("w.iq").string();
    io::write_iq(path, s.samples);
    const auto back = io::read_iq(path);
    REQUIRE(back.size() == f.size());
    CHECK(std::memcmp(back.data(), f.data(), f.size() * sizeof(f[0])) == 0);
    CHECK(fs::file_size(path) == f.size() * 8);

    io::write_iq(path, back);
    CHECK(io::read_iq(path) == back);

    // Little-endian interleaved I/Q.
    std::ifstream in(path, std::ios::binary);
    unsigned char raw[8];
    in.read(reinterpret_cast<char*>(raw), 8);
    const std::uint32_t ibits = raw[0] | raw[1] << 8 | raw[2] << 16 | std::uint32_t(raw[3]) << 24;
    CHECK(std::bit_cast<float>(ibits) == back[0].real());
}

TEST_CASE("sidecar metadata round trip") {
    SynthParams p;
    p.comb = make_comb(1e6, 20e6, 2.0);
    p.duration = 20e-6;
    p.sample_rate = 25e6;
    p.sign = -1;
    p.phase = PhaseConstructor::automatic;
    const Signal s = synthesize(p);
    const io::WaveformMeta m = io::meta_from_signal(s);
    CHECK(m.n_samples == 500);
    CHECK(m.phase_constructor == "schroeder-integral");
    const auto path = scratch("w.json").string();
    io::write_meta(path, m);
    const io::WaveformMeta r = io::read_meta(path);
    CHECK(r.sample_rate_hz == m.sample_rate_hz);
    CHECK(r.n_samples == m.n_samples);
    CHECK(r.delta_hz == m.delta_hz);
    CHECK(r.bandwidth_hz == m.bandwidth_hz);
    CHECK(r.finesse == m.finesse);
    CHECK(r.method == m.method);
    CHECK(r.phase_constructor == m.phase_constructor);
    CHECK(r.sign == -1);
    CHECK(r.peak_norm == m.peak_norm);
}

TEST_CASE("shipped level file equals the built-in defaults") {
    const pump::LevelSystem a = io::load_level_system(AFC_DATA_DIR "/levels_default.json");
    const pump::LevelSystem b = pump::default_level_system();
    CHECK(a.ground == b.ground);
    CHECK(a.excited == b.excited);
    CHECK(a.d2 == b.d2);
    CHECK(a.b == b.b);
    CHECK(a.inhom_fwhm == b.inhom_fwhm);
    CHECK(a.peak_od == b.peak_od);
    const pump::LevelSystem c = io::parse_level_system(io::level_system_to_json(b));
    CHECK(c.d2 == b.d2);
}

TEST_CASE("level files are validated on load") {
    std::string text = io::level_system_to_json(pump::default_level_system());
    const auto pos = text.find("0.71");
    text.replace(pos, 4, "0.91");
    CHECK_THROWS_AS(io::parse_level_system(text), ValidationError);
    CHECK_THROWS_AS(io::parse_level_system("{not json"), ConfigError);
    CHECK_THROWS_AS(io::parse_level_system("{\"ground_energies_mhz\": [0, 1, 2]}"), ConfigError);
    CHECK_THROWS_AS(io::load_level_system("/nonexistent/levels.json"), ConfigError);
}

TEST_CASE("two-column CSV reader") {
    const auto p = scratch("xy.csv");
    write_text(p, "storage_time_s,efficiency\n1e-6,0.2\n2e-6, 0.19\r\n\n3e-6,0.18\n");
    const auto pts = io::read_xy_csv(p.string());
    REQUIRE(pts.size() == 3);
    CHECK(pts[1].y == 0.19);
    write_text(p, "1,2\n3,4\n");
    CHECK(io::read_xy_csv(p.string()).size() == 2);
    write_text(p, "a,b\n1,2\nx,3\n");
    CHECK_THROWS_AS(io::read_xy_csv(p.string()), ConfigError);
    write_text(p, "1,2,3\n");
    CHECK_THROWS_AS(io::read_xy_csv(p.string()), ConfigError);
    write_text(p, "just a header\n");
    CHECK_THROWS_AS(io::read_xy_csv(p.string()), ConfigError);
}

TEST_CASE("CSV writer") {
    const auto p = scratch("t.csv");
    io::write_csv(p.string(), {{"frequency_mhz", "od_total"}, {{1.0, 2.0}, {0.5, 0.25}}});
    std::ifstream in(p);
    std::string l1, l2;
    std::getline(in, l1);
    std::getline(in, l2);
    CHECK(l1 == "frequency_mhz,od_total");
    CHECK(l2 == "1,0.5");
}
