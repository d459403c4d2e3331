#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "afc/comb.hpp"
#include "afc/errors.hpp"
#include "afc/fitting.hpp"
#include "afc/lsq.hpp"

using namespace afc;
using doctest::Approx;

namespace {

std::vector<DataPoint> decay_points(double eta0, double t2, int n, double t0, double t1) {
    std::vector<DataPoint> p;
    for (int i = 0; i < n; ++i) {
        const double t = t0 + (t1 - t0) * i / (n - 1);
        p.push_back({t, eta0 * std::exp(-4.0 * t / t2)});
    }
    return p;
}

std::vector<DataPoint> dexp_points(double a, double b, double tf, double ts, int n = 40) {
    std::vector<DataPoint> p;
    for (int i = 0; i < n; ++i) {
        const double t = 0.01 * std::pow(3000.0, i / double(n - 1));
        p.push_back({t, a * std::exp(-t / tf) + b * std::exp(-t / ts)});
    }
    return p;
}

// Square comb sampled on a grid, optionally convolved numerically with a Lorentzian of FWHM gamma.
SpectrumGrid comb_spectrum(double d, double F, double d0, double delta, double step, std::size_t n, double gamma) {
    const double w = delta / F;
    auto square = [&](double f) {
        double ph = std::fmod(f, delta);
        if (ph < 0) ph += delta;
        return (ph < w) ? d0 + d : d0;
    };
    SpectrumGrid g{{0.0, step, n}, std::vector<double>(n)};
    if (gamma <= 0) {
        for (std::size_t k = 0; k < n; ++k) g.values[k] = square((k + 0.5) * step);
        return g;
    }
    const double fine = step / 8;
    const double hw = 0.5 * gamma;
    const int half = static_cast<int>(std::ceil(400 * gamma / fine));
    std::vector<double> ker(2 * half + 1);
    double ks = 0;
    for (int j = -half; j <= half; ++j) {
        const double x = j * fine;
        ks += ker[j + half] = hw / (std::numbers::pi * (x * x + hw * hw));
    }
    for (auto& v : ker) v /= ks;
    for (std::size_t k = 0; k < n; ++k) {
        const double f = (k + 0.5) * step;
        double acc = 0;
        for (int j = -half; j <= half; ++j) acc += ker[j + half] * square(f - j * fine);
        g.values[k] = acc;
    }
    return g;
}

}  // namespace

TEST_CASE("decay fit recovers noiseless parameters") {
    const FitResult r = fit_afc_decay(decay_points(0.202, 348e-6, 10, 1e-6, 125e-6));
    CHECK(r.converged);
    CHECK(r.value("eta0") == Approx(0.202).epsilon(1e-6));
    CHECK(r.value("t2_afc") == Approx(348e-6).epsilon(1e-6));
    CHECK(r.uncertainty("t2_afc") >= 0.0);
}

TEST_CASE("decay fit through two points is exact") {
    const FitResult r = fit_afc_decay({{10e-6, 0.15}, {80e-6, 0.05}});
    CHECK(r.residual_norm < 1e-12);
    CHECK(r.value("eta0") * std::exp(-4 * 10e-6 / r.value("t2_afc")) == Approx(0.15).epsilon(1e-10));
}

TEST_CASE("decay fit argument checks") {
    CHECK_THROWS_AS(fit_afc_decay({{1e-6, 0.2}}), ValidationError);
    CHECK_THROWS_AS(fit_afc_decay({{1e-6, 0.2}, {2e-6, -0.1}}), ValidationError);
    CHECK_THROWS_AS(fit_afc_decay({{1e-6, 0.1}, {2e-6, 0.2}, {3e-6, 0.3}}), FitError);
}

TEST_CASE("decay fit with 2% noise") {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> noise(0.0, 0.02);
    int good = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
        auto p = decay_points(0.202, 348e-6, 10, 1e-6, 125e-6);
        for (auto& q : p) q.y *= 1.0 + noise(rng);
        const FitResult r = fit_afc_decay(p);
        REQUIRE(r.converged);
        if (std::abs(r.value("t2_afc") - 348e-6) <= 15e-6) ++good;
    }
    CHECK(good >= 0.9 * trials);
}

TEST_CASE("uncertainties shrink with replicated data") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> noise(0.0, 0.02);
    auto p = decay_points(0.202, 348e-6, 10, 1e-6, 125e-6);
    for (auto& q : p) q.y *= 1.0 + noise(rng);
    std::vector<DataPoint> p4;
    for (int k = 0; k < 4; ++k) p4.insert(p4.end(), p.begin(), p.end());
    const FitResult a = fit_afc_decay(p), b = fit_afc_decay(p4);
    CHECK(b.value("t2_afc") == Approx(a.value("t2_afc")).epsilon(1e-8));
    // Same residuals repeated: sigma ratio is sqrt((m-p)/(4m-p)).
    CHECK(b.uncertainty("t2_afc") / a.uncertainty("t2_afc") == Approx(std::sqrt(8.0 / 38.0)).epsilon(1e-5));
}

TEST_CASE("fits do not depend on point order") {
    auto p = decay_points(0.2, 300e-6, 12, 1e-6, 150e-6);
    p[3].y *= 1.03;
    auto q = p;
    std::mt19937 rng(1);
    std::shuffle(q.begin(), q.end(), rng);
    CHECK(fit_afc_decay(p).value("t2_afc") == fit_afc_decay(q).value("t2_afc"));
    auto d = dexp_points(1.0, 0.5, 0.37, 4.7);
    d[5].y += 0.01;
    auto e = d;
    std::shuffle(e.begin(), e.end(), rng);
    CHECK(fit_double_exponential(d).value("t1_slow") == fit_double_exponential(e).value("t1_slow"));
}

TEST_CASE("cost is non-increasing across iterations") {
    auto d = dexp_points(1.2, 0.4, 0.37, 4.7);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> noise(0.0, 0.01);
    for (auto& q : d) q.y += noise(rng);
    const FitResult r = fit_double_exponential(d);
    REQUIRE(r.cost_history.size() >= 2);
    for (std::size_t i = 1; i < r.cost_history.size(); ++i) CHECK(r.cost_history[i] <= r.cost_history[i - 1]);
}

TEST_CASE("double exponential recovers noiseless parameters") {
    for (auto [a, b] : {std::pair{1.0, 1.0}, std::pair{1.5, 0.7}, std::pair{0.3, 2.0}}) {
        const FitResult r = fit_double_exponential(dexp_points(a, b, 0.370, 4.7));
        CHECK(r.converged);
        CHECK(r.value("A") == Approx(a).epsilon(1e-4));
        CHECK(r.value("B") == Approx(b).epsilon(1e-4));
        CHECK(r.value("t1_fast") == Approx(0.370).epsilon(1e-4));
        CHECK(r.value("t1_slow") == Approx(4.7).epsilon(1e-4));
        CHECK(r.value("t1_fast") < r.value("t1_slow"));
    }
}

TEST_CASE("double exponential flags degenerate data") {
    const FitResult r = fit_double_exponential(dexp_points(1.0, 0.0, 0.370, 4.7));
    CHECK(r.has_flag("single_exponential"));
    CHECK_THROWS_AS(fit_double_exponential({{1, 1}, {2, .5}, {3, .3}, {4, .2}, {5, .1}}), ValidationError);
    CHECK_THROWS_AS(fit_double_exponential({{1, 1}, {20, .5}}), ValidationError);
}

TEST_CASE("comb fit on an ideal square comb is exact") {
    const SpectrumGrid g = comb_spectrum(2.75, 2.5, 0.085, 10.0, 0.05, 2000, 0.0);
    const FitResult r = fit_comb_parameters(g, CombSpec{10.0, 100.0, 2.5});
    CHECK(r.value("d") == Approx(2.75).epsilon(1e-12));
    CHECK(r.value("F") == Approx(2.5).epsilon(1e-9));
    CHECK(r.value("d0") == Approx(0.085).epsilon(1e-12));
    CHECK_FALSE(r.has_flag("broadened"));
}

TEST_CASE("comb fit on a Lorentzian-broadened comb") {
    const double delta = 10.0;
    const SpectrumGrid g = comb_spectrum(2.75, 2.45, 0.085, delta, 0.1, 1000, delta / 20);
    const FitResult r = fit_comb_parameters(g, CombSpec{delta, 100.0, 2.45});
    CHECK(r.converged);
    CHECK(r.value("d") == Approx(2.75).epsilon(0.05));
    CHECK(r.value("F") == Approx(2.45).epsilon(0.10));
    CHECK(r.value("d0") == Approx(0.085).epsilon(0.5));
}

TEST_CASE("comb fit rejects spectra without a comb") {
    SpectrumGrid flat{{0.0, 0.1, 1000}, std::vector<double>(1000, 0.7)};
    CHECK_THROWS_AS(fit_comb_parameters(flat, CombSpec{10.0, 100.0, 2.0}), ValidationError);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& v : flat.values) v = u(rng);
    CHECK_THROWS_AS(fit_comb_parameters(flat, CombSpec{10.0, 100.0, 2.0}), ValidationError);
    const SpectrumGrid shortg = comb_spectrum(2.0, 2.0, 0.0, 10.0, 0.1, 250, 0.0);
    CHECK_THROWS_AS(fit_comb_parameters(shortg, CombSpec{10.0, 100.0, 2.0}), ValidationError);
}

TEST_CASE("solver on a linear problem converges in one accepted step") {
    const ResidualFn fn = [](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
        r.resize(3);
        r << p(0) - 1.0, p(1) + 2.0, p(0) + p(1);
        if (J) {
            J->resize(3, 2);
            *J << 1, 0, 0, 1, 1, 1;
        }
    };
    const LsqSolution s = levenberg_marquardt(fn, Eigen::Vector2d(10, 10));
    CHECK(s.converged);
    CHECK(s.params(0) == Approx(4.0 / 3.0));
    CHECK(s.params(1) == Approx(-5.0 / 3.0));
}
