#include "dqd/resonance.hpp"

#include <Eigen/Core>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "dqd/errors.hpp"

namespace dqd {

double lorentzian(double t, double center, double width, double amplitude, double background) {
    const double g = 0.5 * width;
    const double d = t - center;
    return background + amplitude * g * g / (d * d + g * g);
}

double fano(double t, double center, double width, double amplitude, double background, double q) {
    const double e = 2.0 * (t - center) / width;
    return background + amplitude * (q + e) * (q + e) / (1.0 + e * e);
}

const char* to_string(Lineshape shape) { return shape == Lineshape::lorentzian ? "lorentzian" : "fano"; }

namespace {

// Parameters: center, width, amplitude, background[, q].
double profile(Lineshape shape, const Eigen::VectorXd& p, double t) {
    const double w = std::abs(p[1]);
    return shape == Lineshape::lorentzian ? lorentzian(t, p[0], w, p[2], p[3]) : fano(t, p[0], w, p[2], p[3], p[4]);
}

struct Residuals {
    using Scalar = double;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;

    const std::vector<double>* t;
    const std::vector<double>* y;
    Lineshape shape;
    int n_params;

    int inputs() const { return n_params; }
    int values() const { return static_cast<int>(t->size()); }
    int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& f) const {
        for (int i = 0; i < values(); ++i) f[i] = profile(shape, p, (*t)[i]) - (*y)[i];
        return 0;
    }
};

double r_squared(Lineshape shape, const Eigen::VectorXd& p, const std::vector<double>& t,
                 const std::vector<double>& y) {
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double r = profile(shape, p, t[i]) - y[i];
        ss_res += r * r;
        ss_tot += (y[i] - mean) * (y[i] - mean);
    }
    return ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
}

Eigen::VectorXd minimize(Lineshape shape, Eigen::VectorXd p, const std::vector<double>& t,
                         const std::vector<double>& y) {
    Residuals r{&t, &y, shape, static_cast<int>(p.size())};
    Eigen::NumericalDiff<Residuals, Eigen::Central> diff(r);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<Residuals, Eigen::Central>> lm(diff);
    lm.parameters.ftol = 1e-15;
    lm.parameters.xtol = 1e-15;
    lm.parameters.maxfev = 4000;
    lm.minimize(p);
    p[1] = std::abs(p[1]);
    return p;
}

}  // namespace

ResonanceFit fit_lineshape(const std::vector<double>& t, const std::vector<double>& y, Lineshape shape) {
    ResonanceFit fit;
    fit.shape = shape;
    const std::size_t n = t.size();
    if (n != y.size()) throw ConfigError("lineshape fit needs as many values as energies");
    if (n < 7) {
        fit.reason = "fewer than 7 samples";
        return fit;
    }
    const auto [lo_it, hi_it] = std::minmax_element(y.begin(), y.end());
    const std::size_t i_lo = static_cast<std::size_t>(lo_it - y.begin());
    const std::size_t i_hi = static_cast<std::size_t>(hi_it - y.begin());
    const double edge = 0.5 * (y.front() + y.back());
    const bool peak = std::abs(*hi_it - edge) >= std::abs(*lo_it - edge);
    const std::size_t i_ext = peak ? i_hi : i_lo;
    if (i_ext == 0 || i_ext + 1 == n || *hi_it == *lo_it) {
        fit.reason = "no interior extremum in range";
        return fit;
    }

    // Width guess from the half-height crossings around the sampled extremum.
    const double half = 0.5 * (y[i_ext] + edge);
    auto beyond = [&](std::size_t i) { return peak ? y[i] < half : y[i] > half; };
    std::size_t a = i_ext, b = i_ext;
    while (a > 0 && !beyond(a)) --a;
    while (b + 1 < n && !beyond(b)) ++b;
    double width = std::max(t[b] - t[a], 2.0 * (t[1] - t[0]));

    Eigen::VectorXd lp(4);
    lp << t[i_ext], width, y[i_ext] - edge, edge;
    lp = minimize(Lineshape::lorentzian, lp, t, y);
    Eigen::VectorXd best = lp;
    double best_r2 = r_squared(Lineshape::lorentzian, lp, t, y);

    if (shape == Lineshape::fano) {
        best_r2 = -std::numeric_limits<double>::infinity();
        const double range = *hi_it - *lo_it;
        for (double q : {-5.0, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 5.0}) {
            for (double sign : {1.0, -1.0}) {
                Eigen::VectorXd p(5);
                const double amp = sign * range / (1.0 + q * q);
                p << lp[0] - lp[1] / (2.0 * q), lp[1], amp, sign > 0 ? *lo_it : *hi_it, q;
                p = minimize(Lineshape::fano, p, t, y);
                const double r2 = r_squared(Lineshape::fano, p, t, y);
                if (std::isfinite(r2) && r2 > best_r2) best_r2 = r2, best = p;
            }
        }
    }

    fit.found = true;
    fit.center = best[0];
    fit.width = best[1];
    fit.amplitude = best[2];
    fit.background = best[3];
    fit.q = shape == Lineshape::fano ? best[4] : 0.0;
    fit.r_squared = best_r2;

    // Extremum of the fitted profile inside the data range, measured from its far-field value.
    const double far = shape == Lineshape::fano ? fit.background + fit.amplitude : fit.background;
    const int samples = 4001;
    double dev = -1.0;
    for (int k = 0; k < samples; ++k) {
        const double tk = t.front() + (t.back() - t.front()) * k / (samples - 1);
        const double f = profile(shape, best, tk);
        if (std::abs(f - far) > dev) dev = std::abs(f - far), fit.extremum = tk, fit.extremum_value = f;
    }
    if (shape == Lineshape::lorentzian && fit.center > t.front() && fit.center < t.back()) {
        fit.extremum = fit.center;
        fit.extremum_value = profile(shape, best, fit.center);
        dev = std::abs(fit.extremum_value - far);
    }
    if (dev > 0.0) {
        const double right = profile(shape, best, fit.extremum + fit.width);
        const double left = profile(shape, best, fit.extremum - fit.width);
        fit.skew = (right - left) / dev;
    }
    return fit;
}

std::vector<double> spectrum(const ResultBundle& bundle, int channel, SpectrumQuantity quantity,
                             std::vector<double>* energies) {
    std::vector<double> y;
    if (energies) energies->clear();
    for (const auto& r : bundle.records) {
        if (!r.ok() || channel >= static_cast<int>(r.channels.size())) continue;
        const ChannelRecord& ch = r.channels[channel];
        const double v = quantity == SpectrumQuantity::total        ? ch.reflection + ch.transmission
                         : quantity == SpectrumQuantity::reflection ? ch.reflection
                                                                    : ch.transmission;
        y.push_back(v);
        if (energies) energies->push_back(r.kinetic_energy);
    }
    return y;
}

ResonanceFit find_resonance(const ResultBundle& bundle, int channel, SpectrumQuantity quantity, Lineshape shape) {
    std::vector<double> t;
    const std::vector<double> y = spectrum(bundle, channel, quantity, &t);
    return fit_lineshape(t, y, shape);
}

}  // namespace dqd
