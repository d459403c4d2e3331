#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <sstream>
#include <string>

#include "afc/comb.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
    int rc;
    std::string out, err;
};

const fs::path& dir() {
    static const fs::path d = [] {
        fs::path p = fs::temp_directory_path() / "afc_test_cli";
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

Run run_cli(const std::string& args, const std::string& env = "") {
    const fs::path errf = dir() / "stderr.txt";
    const std::string cmd = env + " " AFC_CLI_PATH " " + args + " 2>" + errf.string();
    Run r{0, {}, {}};
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    const int status = pclose(pipe);
    r.rc = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = slurp(errf);
    return r;
}

double value_of(const std::string& out, const std::string& key) {
    std::istringstream in(out);
    std::string line;
    while (std::getline(in, line))
        if (line.rfind(key + ",", 0) == 0) return std::stod(line.substr(key.size() + 1));
    FAIL("key not found: " << key);
    return NAN;
}

std::string p(const std::string& name) { return (dir() / name).string(); }

void write_text(const std::string& path, const std::string& s) { std::ofstream(path) << s; }

}  // namespace

TEST_CASE("comb optimize") {
    const Run r = run_cli("comb optimize --d 2.75");
    CHECK(r.rc == 0);
    CHECK(value_of(r.out, "finesse_opt") == doctest::Approx(2.71).epsilon(0.002));
    CHECK(value_of(r.out, "efficiency") == doctest::Approx(0.233).epsilon(0.004));
    const Run z = run_cli("comb optimize --d 0");
    CHECK(z.rc == 0);
    CHECK(value_of(z.out, "efficiency") == 0.0);
    CHECK(run_cli("comb optimize --d -1").rc == 3);
}

TEST_CASE("comb decay and efficiency tables") {
    const Run r = run_cli("comb decay --eta0 0.202 --t2 348e-6 --time 125e-6");
    CHECK(r.rc == 0);
    CHECK(r.out.rfind("storage_time_s,efficiency\n", 0) == 0);
    CHECK(value_of(r.out, "0.000125") == doctest::Approx(0.0480).epsilon(0.002));
    const Run t = run_cli("comb efficiency --d 2.75 --points 11 --finesse-min 2 --finesse-max 4");
    CHECK(t.rc == 0);
    CHECK(std::count(t.out.begin(), t.out.end(), '\n') == 12);
    CHECK(run_cli("comb efficiency --d 2.75 --finesse 1.0").rc == 3);
}

TEST_CASE("synth writes waveform, sidecar and metrics") {
    const std::string pre = p("wave");
    const Run r = run_cli("synth --delta-hz 10e6 --bandwidth-hz 250e6 --finesse 2.45 --duration-s 4e-3 "
                      "--sample-rate-hz 312.5e6 --method freq-domain --out " + pre);
    CHECK(r.rc == 0);
    CHECK(fs::file_size(pre + ".iq") == 1250000u * 8u);
    const json meta = json::parse(slurp(pre + ".json"));
    CHECK(meta["n_samples"] == 1250000);
    CHECK(meta["method"] == "freq-domain");
    const json m = json::parse(slurp(pre + ".metrics.json"));
    CHECK(m["crest_factor"].get<double>() < 2.0);
    CHECK(m["oob_energy_fraction"].get<double>() < 1e-9);
    CHECK(std::abs(m["realized_finesse"].get<double>() - 2.45) < 1e-3);

    const std::string again = p("wave2");
    run_cli("synth --delta-hz 10e6 --bandwidth-hz 250e6 --finesse 2.45 --duration-s 4e-3 "
        "--sample-rate-hz 312.5e6 --method freq-domain --out " + again);
    CHECK(slurp(pre + ".iq") == slurp(again + ".iq"));
}

TEST_CASE("synth exact envelope reports unit crest factor") {
    const std::string pre = p("exact");
    const Run r = run_cli("synth --delta-hz 1e6 --bandwidth-hz 20e6 --finesse 2 --duration-s 40e-6 "
                      "--sample-rate-hz 25e6 --method exact --out " + pre);
    CHECK(r.rc == 0);
    const json m = json::parse(slurp(pre + ".metrics.json"));
    CHECK(std::abs(m["crest_factor"].get<double>() - 1.0) < 1e-9);
}

TEST_CASE("synth failures map to exit codes and write nothing") {
    const std::string pre = p("bad");
    const Run v = run_cli("synth --delta-hz 10e6 --bandwidth-hz 255e6 --finesse 2 --duration-s 4e-3 "
                      "--sample-rate-hz 312.5e6 --out " + pre);
    CHECK(v.rc == 3);
    CHECK(v.err.find("error: validation:") != std::string::npos);
    CHECK_FALSE(fs::exists(pre + ".iq"));
    const Run s = run_cli("synth --delta-hz 10e6 --bandwidth-hz 250e6 --finesse 2.45 --duration-s 4e-3 "
                      "--sample-rate-hz 312.5e6 --grid-policy strict --out " + pre);
    CHECK(s.rc == 3);
    const Run cap = run_cli("synth --delta-hz 10e6 --bandwidth-hz 250e6 --finesse 2 --duration-s 4e-3 "
                        "--sample-rate-hz 312.5e6 --out " + pre, "AFC_MAX_SAMPLE_BYTES=1000000");
    CHECK(cap.rc == 4);
    CHECK(cap.err.find("error: resource:") != std::string::npos);
    CHECK_FALSE(fs::exists(pre + ".iq"));
    CHECK(run_cli("synth --delta-hz 10e6").rc == 2);
    CHECK(run_cli("synth --delta-hz 10e6 --bandwidth-hz 250e6 --finesse 2 --duration-s 4e-3 "
              "--sample-rate-hz 312.5e6 --out /nonexistent/dir/w").rc == 2);
    CHECK(run_cli("frobnicate").rc == 2);
}

TEST_CASE("bench with a single tooth count gives one row per method") {
    const Run r = run_cli("bench --n-teeth 25 --duration-s 40e-6 --methods freq-domain --repeats 3");
    CHECK(r.rc == 0);
    CHECK(r.out.rfind("method,n_teeth,sample_count,wall_time_s,crest_factor,rms_power_at_unit_peak", 0) == 0);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 2);
    CHECK(run_cli("bench --n-teeth 25 --repeats 2").rc == 3);
}

TEST_CASE("pump simulate without repetitions gives the unpumped spectrum") {
    const std::string out = p("unpumped.csv");
    const Run r = run_cli("pump simulate --repetitions 0 --f-min-mhz -10 --f-max-mhz 10 --out " + out);
    CHECK(r.rc == 0);
    const std::string csv = slurp(out);
    CHECK(csv.rfind("frequency_mhz,od_total,od_selected\n", 0) == 0);
    const auto pos = csv.find("\n0,");
    REQUIRE(pos != std::string::npos);
    CHECK(std::stod(csv.substr(pos + 3)) == doctest::Approx(0.97).epsilon(1e-9));
}

TEST_CASE("pump rejects level files that break the constraints and lists each one") {
    std::string text = slurp(AFC_DATA_DIR "/levels_default.json");
    const auto at = text.find("3025.5\n");
    text.replace(at, 6, "3000.0");
    const std::string f = p("broken_levels.json");
    write_text(f, text);
    const std::string before = slurp(f);
    const Run r = run_cli("pump simulate --levels " + f + " --out " + p("x.csv"));
    CHECK(r.rc == 3);
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') >= 4);
    CHECK(slurp(f) == before);
}

TEST_CASE("pump bwlimit finds the knee") {
    const Run r = run_cli("pump bwlimit --w-min-mhz 284 --w-max-mhz 292 --levels " AFC_DATA_DIR "/levels_default.json");
    CHECK(r.rc == 0);
    CHECK(r.out.rfind("bandwidth_mhz,parasitic_od,parasitic_rel_peak_od\n", 0) == 0);
    const auto k = r.err.find("knee_mhz,");
    REQUIRE(k != std::string::npos);
    CHECK(std::abs(std::stod(r.err.substr(k + 9)) - 288.0) <= 1.0);
}

TEST_CASE("pump lifetime defaults round-trip the relaxation times") {
    const Run r = run_cli("pump lifetime --out " + p("life.csv"));
    CHECK(r.rc == 0);
    CHECK(value_of(r.err, "fit t1_fast_s") == doctest::Approx(0.370).epsilon(0.05));
    CHECK(value_of(r.err, "fit t1_slow_s") == doctest::Approx(4.7).epsilon(0.05));
}

TEST_CASE("fit commands") {
    std::ostringstream dec;
    dec << "storage_time_s,efficiency\n";
    for (int i = 0; i < 10; ++i) {
        const double t = 1e-6 + 124e-6 * i / 9;
        dec << t << "," << afc::efficiency_decay(t, {0.202, 348e-6}) << "\n";
    }
    write_text(p("decay.csv"), dec.str());
    const Run r = run_cli("fit decay --input " + p("decay.csv") + " --out " + p("decay.json"));
    CHECK(r.rc == 0);
    const json j = json::parse(slurp(p("decay.json")));
    CHECK(j["converged"] == true);
    CHECK(j["parameters"][1]["name"] == "t2_afc");
    CHECK(j["parameters"][1]["value"].get<double>() == doctest::Approx(348e-6).epsilon(1e-5));

    std::ostringstream dx;
    for (int i = 0; i < 40; ++i) {
        const double t = 0.01 * std::pow(3000.0, i / 39.0);
        dx << t << "," << afc::hole_decay(t, {1.2, 0.6, 0.37, 4.7}) << "\n";
    }
    write_text(p("dexp.csv"), dx.str());
    const Run d = run_cli("fit double-exp --input " + p("dexp.csv"));
    CHECK(d.rc == 0);
    const json dj = json::parse(d.out);
    CHECK(dj["parameters"].size() == 4);
    CHECK(dj["parameters"][3]["value"].get<double>() == doctest::Approx(4.7).epsilon(1e-4));
    CHECK(dj["parameters"][3]["uncertainty"].get<double>() >= 0.0);

    std::ostringstream cs;
    cs << "frequency_mhz,od\n";
    for (int k = 0; k < 1000; ++k) {
        const double f = k * 0.1 + 0.05;
        cs << f << "," << (std::fmod(f, 10.0) < 10.0 / 2.45 ? 2.835 : 0.085) << "\n";
    }
    write_text(p("comb.csv"), cs.str());
    const Run c = run_cli("fit comb --delta-hz 10 --input " + p("comb.csv"));
    CHECK(c.rc == 0);
    const json cj = json::parse(c.out);
    CHECK(cj["parameters"][0]["value"].get<double>() == doctest::Approx(2.75).epsilon(1e-9));

    write_text(p("bad.csv"), "t,y\n1,2\nthree,4\n");
    CHECK(run_cli("fit decay --input " + p("bad.csv")).rc == 2);
    CHECK(run_cli("fit decay --input " + p("missing.csv")).rc == 2);
}
