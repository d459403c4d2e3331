#include "afc/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <tuple>

#include "afc/errors.hpp"
#include "afc/lsq.hpp"

namespace afc {

const FitParameter& FitResult::get(const std::string& name) const {
    for (const auto& p : parameters)
        if (p.name == name) return p;
    throw std::out_of_range("no fit parameter named " + name);
}

bool FitResult::has_flag(const std::string& f) const {
    return std::find(flags.begin(), flags.end(), f) != flags.end();
}

namespace {

struct Prepared {
    std::vector<double> x, y, sw;  // sw = sqrt(weight)
    double data_norm = 0.0;
};

Prepared prepare(const std::vector<DataPoint>& pts, const std::vector<double>& weights) {
    if (!weights.empty() && weights.size() != pts.size())
        throw ValidationError("weights must match the number of points");
    std::vector<std::tuple<double, double, double>> rows;
    rows.reserve(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        if (!std::isfinite(pts[i].x) || !std::isfinite(pts[i].y)) throw ValidationError("non-finite data point");
        if (!(w > 0.0) || !std::isfinite(w)) throw ValidationError("weights must be positive");
        rows.emplace_back(pts[i].x, pts[i].y, w);
    }
    std::sort(rows.begin(), rows.end());
    Prepared p;
    for (const auto& [x, y, w] : rows) {
        p.x.push_back(x);
        p.y.push_back(y);
        p.sw.push_back(std::sqrt(w));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < p.y.size(); ++i) s += p.sw[i] * p.sw[i] * p.y[i] * p.y[i];
    p.data_norm = std::sqrt(s);
    return p;
}

// Least-squares line ln(y) = a + b x over the given index range; false if fewer than 2 usable points.
bool log_linear(const std::vector<double>& x, const std::vector<double>& y, std::size_t lo, std::size_t hi, double& a,
                double& b) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t i = lo; i < hi; ++i) {
        if (!(y[i] > 0.0)) continue;
        const double ly = std::log(y[i]);
        sx += x[i];
        sy += ly;
        sxx += x[i] * x[i];
        sxy += x[i] * ly;
        ++n;
    }
    if (n < 2) return false;
    const double den = static_cast<double>(n) * sxx - sx * sx;
    if (!(std::abs(den) > 0.0)) return false;
    b = (static_cast<double>(n) * sxy - sx * sy) / den;
    a = (sy - b * sx) / static_cast<double>(n);
    return std::isfinite(a) && std::isfinite(b);
}

FitResult pack(const LsqSolution& s) {
    FitResult r;
    r.residual_norm = s.residuals.norm();
    r.converged = s.converged;
    r.iterations = s.iterations;
    r.cost_history = s.cost_history;
    if (!s.converged) r.flags.push_back("not_converged");
    return r;
}

double sd(const LsqSolution& s, int i) { return std::sqrt(std::max(0.0, s.covariance(i, i))); }

}  // namespace

FitResult fit_afc_decay(const std::vector<DataPoint>& points, const std::vector<double>& weights) {
    if (points.size() < 2) throw ValidationError("decay fit needs at least two points");
    const Prepared d = prepare(points, weights);
    for (std::size_t i = 0; i < d.x.size(); ++i) {
        if (d.x[i] < 0.0) throw ValidationError("storage times must be non-negative");
        if (!(d.y[i] > 0.0)) throw ValidationError("efficiencies must be positive");
    }
    double a = 0, b = 0;
    if (!log_linear(d.x, d.y, 0, d.x.size(), a, b)) throw ValidationError("storage times must not all coincide");
    if (!(b < 0.0)) throw FitError("efficiency does not decay with storage time");
    const double t2 = -4.0 / b;
    const double eta0 = d.y.front() * std::exp(4.0 * d.x.front() / t2);

    const std::size_t n = d.x.size();
    ResidualFn fn = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
        r.resize(n);
        if (J) J->resize(n, 2);
        const double T = std::exp(p(1));
        for (std::size_t i = 0; i < n; ++i) {
            const double e = std::exp(-4.0 * d.x[i] / T);
            r(i) = d.sw[i] * (p(0) * e - d.y[i]);
            if (J) {
                (*J)(i, 0) = d.sw[i] * e;
                (*J)(i, 1) = d.sw[i] * p(0) * e * 4.0 * d.x[i] / T;
            }
        }
    };
    LsqOptions opts;
    opts.data_norm = d.data_norm;
    const LsqSolution s = levenberg_marquardt(fn, Eigen::Vector2d(eta0, std::log(t2)), opts);
    FitResult out = pack(s);
    const double T = std::exp(s.params(1));
    out.parameters = {{"eta0", "", s.params(0), sd(s, 0)}, {"t2_afc", "s", T, T * sd(s, 1)}};
    return out;
}

FitResult fit_double_exponential(const std::vector<DataPoint>& points, const std::vector<double>& weights) {
    if (points.size() < 5) throw ValidationError("double-exponential fit needs at least five points");
    const Prepared d = prepare(points, weights);
    const std::size_t n = d.x.size();
    if (d.x.front() < 0.0) throw ValidationError("times must be non-negative");
    double tmin = 0.0;
    for (double t : d.x)
        if (t > 0.0) {
            tmin = t;
            break;
        }
    if (!(tmin > 0.0) || d.x.back() / tmin < 10.0)
        throw ValidationError("times must span at least a factor of 10 to separate two time scales");

    // Tail regression for the slow component, then the fast component from what remains.
    const std::size_t tail = std::max<std::size_t>(2, n / 3);
    double a = 0, b = 0;
    double ts = d.x.back() / 2.0, B = std::max(d.y.back(), 0.0);
    if (log_linear(d.x, d.y, n - tail, n, a, b) && b < 0.0) {
        ts = -1.0 / b;
        B = std::exp(a);
    }
    std::vector<double> rem(n);
    for (std::size_t i = 0; i < n; ++i) rem[i] = d.y[i] - B * std::exp(-d.x[i] / ts);
    double tf = ts / 10.0, A = d.y.front() - B;
    if (log_linear(d.x, rem, 0, n - tail, a, b) && b < 0.0 && -1.0 / b < ts) {
        tf = -1.0 / b;
        A = rem.front() * std::exp(d.x.front() / tf);
    }
    const double ratio = ts / tf;
    const double z0 = ratio > 1.0001 ? std::log(ratio - 1.0) : std::log(9.0);

    ResidualFn fn = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
        r.resize(n);
        if (J) J->resize(n, 4);
        const double tfa = std::exp(p(2));
        const double ez = std::exp(p(3));
        const double tsl = tfa * (1.0 + ez);
        for (std::size_t i = 0; i < n; ++i) {
            const double t = d.x[i];
            const double ef = std::exp(-t / tfa), es = std::exp(-t / tsl);
            r(i) = d.sw[i] * (p(0) * ef + p(1) * es - d.y[i]);
            if (J) {
                (*J)(i, 0) = d.sw[i] * ef;
                (*J)(i, 1) = d.sw[i] * es;
                (*J)(i, 2) = d.sw[i] * (p(0) * ef * t / tfa + p(1) * es * t / tsl);
                (*J)(i, 3) = d.sw[i] * p(1) * es * t / (tsl * tsl) * tfa * ez;
            }
        }
    };
    LsqOptions opts;
    opts.data_norm = d.data_norm;
    Eigen::Vector4d p0(A, B, std::log(tf), z0);
    const LsqSolution s = levenberg_marquardt(fn, p0, opts);
    FitResult out = pack(s);

    const double tfa = std::exp(s.params(2));
    const double ez = std::exp(s.params(3));
    const double tsl = tfa * (1.0 + ez);
    // Delta method through (u, z) -> (t1_fast, t1_slow).
    Eigen::Matrix2d G;
    G << tfa, 0.0, tsl, tfa * ez;
    const Eigen::Matrix2d C = G * s.covariance.block<2, 2>(2, 2) * G.transpose();
    out.parameters = {{"A", "", s.params(0), sd(s, 0)},
                      {"B", "", s.params(1), sd(s, 1)},
                      {"t1_fast", "s", tfa, std::sqrt(std::max(0.0, C(0, 0)))},
                      {"t1_slow", "s", tsl, std::sqrt(std::max(0.0, C(1, 1)))}};
    const double amp = std::abs(s.params(0)) + std::abs(s.params(1));
    const int weak = std::abs(s.params(0)) < std::abs(s.params(1)) ? 0 : 1;
    if (std::abs(s.params(weak)) <= std::max(2.0 * sd(s, weak), 1e-6 * amp)) out.flags.push_back("single_exponential");
    if (tsl / tfa < 1.05) out.flags.push_back("scale_degenerate");
    return out;
}

namespace {

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

FitResult fit_comb_parameters(const SpectrumGrid& spectrum, const CombSpec& spec) {
    if (!(spec.delta > 0.0)) throw ValidationError("tooth spacing must be positive");
    const auto& v = spectrum.values;
    const double step = spectrum.axis.step;
    if (v.size() != spectrum.axis.size || !(step > 0.0)) throw ValidationError("inconsistent spectrum grid");
    for (double x : v)
        if (!std::isfinite(x)) throw ValidationError("non-finite spectrum value");
    const long long per = integer_ratio(spec.delta, step, "delta/spectrum step");
    if (per < 4) throw ValidationError("need at least 4 samples per comb period");
    const std::size_t P = static_cast<std::size_t>(per);
    const std::size_t periods = v.size() / P;
    if (periods < 3) throw ValidationError("spectrum must cover at least three comb periods");
    const std::size_t used = periods * P;

    // Periodicity: correlation of the record with itself shifted by one period.
    {
        double mean = 0.0;
        for (std::size_t k = 0; k < used; ++k) mean += v[k];
        mean /= static_cast<double>(used);
        double num = 0.0, var = 0.0;
        for (std::size_t k = 0; k + P < used; ++k) num += (v[k] - mean) * (v[k + P] - mean);
        for (std::size_t k = 0; k < used; ++k) var += (v[k] - mean) * (v[k] - mean);
        const double scale = std::max(1.0, std::abs(mean));
        if (!(var > 1e-18 * scale * scale * static_cast<double>(used)) ||
            num / var * static_cast<double>(used) / static_cast<double>(used - P) < 0.5)
            throw ValidationError("spectrum shows no detectable comb periodicity");
    }

    std::vector<double> fold(P, 0.0);
    for (std::size_t k = 0; k < used; ++k) fold[k % P] += v[k];
    for (auto& x : fold) x /= static_cast<double>(periods);
    std::size_t jmin = 0;
    {
        const auto [fmn, fmx] = std::minmax_element(fold.begin(), fold.end());
        const double mid = 0.5 * (*fmn + *fmx);
        std::size_t best = 0, run = 0, best_end = 0;
        for (std::size_t i = 0; i < 2 * P; ++i) {
            run = fold[i % P] < mid ? run + 1 : 0;
            if (run > best && run <= P) best = run, best_end = i;
        }
        jmin = (best_end + P - best / 2) % P;
    }

    // Windows start at the gap centre so no tooth is split.
    std::vector<double> hi, lo;
    for (std::size_t s = jmin; s + P <= v.size(); s += P) {
        const auto [mn, mx] = std::minmax_element(v.begin() + static_cast<long>(s), v.begin() + static_cast<long>(s + P));
        lo.push_back(*mn);
        hi.push_back(*mx);
    }
    const double d0 = median(lo);
    const double peak = median(hi);
    const double d = peak - d0;
    if (!(d > 1e-9 * std::max(1.0, std::abs(peak)))) throw ValidationError("spectrum shows no detectable comb");

    const double th = d0 + 0.5 * d;
    std::vector<double> w(P);
    for (std::size_t i = 0; i < P; ++i) w[i] = fold[(jmin + i) % P];
    std::size_t ir = P, jf = 0;
    for (std::size_t i = 0; i < P; ++i)
        if (w[i] >= th) {
            if (ir == P) ir = i;
            jf = i;
        }
    if (ir == P || ir == 0 || jf + 1 >= P) throw ValidationError("could not locate tooth edges");
    const double xr = static_cast<double>(ir - 1) + (th - w[ir - 1]) / (w[ir] - w[ir - 1]);
    const double xf = static_cast<double>(jf) + (w[jf] - th) / (w[jf] - w[jf + 1]);
    const double width = (xf - xr) * step;
    const double F = spec.delta / width;
    const double centre = spectrum.axis.start + (static_cast<double>(jmin) + 0.5 * (xr + xf)) * step;

    // Residual of the ideal square comb implied by the estimates.
    auto square = [&](double f) {
        double ph = std::fmod(f - centre, spec.delta);
        if (ph < -0.5 * spec.delta) ph += spec.delta;
        if (ph > 0.5 * spec.delta) ph -= spec.delta;
        return std::abs(ph) < 0.5 * width ? d0 + d : d0;
    };
    double ss = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        const double e = v[k] - square(spectrum.axis.at(k));
        ss += e * e;
    }
    const double rms = std::sqrt(ss / static_cast<double>(v.size()));

    FitResult out;
    if (rms <= 1e-9 * d) {
        out.parameters = {{"d", "", d, 0.0}, {"F", "", F, 0.0}, {"d0", "", d0, 0.0}};
        out.residual_norm = std::sqrt(ss);
        out.converged = true;
        return out;
    }

    // Lorentzian-broadened square comb: d0 + d * sum_j [atan((f-c_j+w/2)/hw) - atan((f-c_j-w/2)/hw)] / pi.
    const double f_lo = spectrum.axis.start, f_hi = spectrum.axis.at(v.size() - 1);
    const long long j_lo = static_cast<long long>(std::floor((f_lo - centre) / spec.delta)) - 50;
    const long long j_hi = static_cast<long long>(std::ceil((f_hi - centre) / spec.delta)) + 50;
    auto model = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
        const double dd = p(0), bg = p(1), ww = spec.delta / p(2), hw = 0.5 * std::exp(p(3)), c = p(4);
        r.resize(static_cast<Eigen::Index>(v.size()));
        for (std::size_t k = 0; k < v.size(); ++k) {
            const double f = spectrum.axis.at(k);
            double s = 0.0;
            for (long long j = j_lo; j <= j_hi; ++j) {
                const double x = f - (c + static_cast<double>(j) * spec.delta);
                s += std::atan((x + 0.5 * ww) / hw) - std::atan((x - 0.5 * ww) / hw);
            }
            r(static_cast<Eigen::Index>(k)) = bg + dd * s / std::numbers::pi - v[k];
        }
    };
    Eigen::VectorXd p0(5);
    p0 << d, d0, F, std::log(2.0 * step), centre;
    LsqOptions opts;
    opts.data_norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    const LsqSolution s = levenberg_marquardt(with_numeric_jacobian(model), p0, opts);
    out = pack(s);
    const double gam = std::exp(s.params(3));
    out.parameters = {{"d", "", s.params(0), sd(s, 0)},
                      {"F", "", s.params(2), sd(s, 2)},
                      {"d0", "", s.params(1), sd(s, 1)},
                      {"linewidth", "", gam, gam * sd(s, 3)}};
    out.flags.push_back("broadened");
    return out;
}

}  // namespace afc
