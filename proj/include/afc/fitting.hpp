#pragma once

#include <string>
#include <vector>

#include "afc/comb.hpp"

namespace afc {

struct DataPoint {
    double x = 0.0;
    double y = 0.0;
};

struct FitParameter {
    std::string name;
    std::string unit;
    double value = 0.0;
    double uncertainty = 0.0;
};

struct FitResult {
    std::vector<FitParameter> parameters;
    double residual_norm = 0.0;  // |r|
    bool converged = false;
    std::size_t iterations = 0;
    std::vector<double> cost_history;
    std::vector<std::string> flags;

    const FitParameter& get(const std::string& name) const;
    double value(const std::string& name) const { return get(name).value; }
    double uncertainty(const std::string& name) const { return get(name).uncertainty; }
    bool has_flag(const std::string& f) const;
};

// eta(t) = eta0 exp(-4 t / t2_afc). Parameters: eta0, t2_afc.
FitResult fit_afc_decay(const std::vector<DataPoint>& points, const std::vector<double>& weights = {});

// d(t) = A exp(-t/t1_fast) + B exp(-t/t1_slow), t1_fast < t1_slow.
// Parameters: A, B, t1_fast, t1_slow. Flag "single_exponential" when B is consistent with 0.
FitResult fit_double_exponential(const std::vector<DataPoint>& points, const std::vector<double>& weights = {});

// Peak OD d, finesse F and background d0 of a measured comb. Adds "linewidth" when the teeth are
// visibly broadened and the Lorentzian-broadened model is refined.
FitResult fit_comb_parameters(const SpectrumGrid& spectrum, const CombSpec& spec);

}  // namespace afc
