#pragma once

#include <string>
#include <vector>

#include "dqd/sweep.hpp"

namespace dqd {

enum class Lineshape { lorentzian, fano };
enum class SpectrumQuantity { total, reflection, transmission };

// Lorentzian: f = B + A (G/2)^2 / ((T - T_r)^2 + (G/2)^2).
// Fano:       f = B + A (q + e)^2 / (1 + e^2),  e = 2 (T - T_r) / G.
struct ResonanceFit {
    bool found = false;
    std::string reason;  // why nothing was found
    Lineshape shape = Lineshape::lorentzian;
    double center = 0.0;  // T_r, meV
    double width = 0.0;   // G (FWHM for the Lorentzian), meV
    double amplitude = 0.0;
    double background = 0.0;
    double q = 0.0;  // Fano asymmetry parameter, 0 for the Lorentzian
    double r_squared = 0.0;
    // Extremum of the fitted profile and its value.
    double extremum = 0.0;
    double extremum_value = 0.0;
    // (f(T_e + G) - f(T_e - G)) / |f(T_e) - B| around the fitted extremum T_e: zero for a
    // symmetric profile.
    double skew = 0.0;
};

double lorentzian(double t, double center, double width, double amplitude, double background);
double fano(double t, double center, double width, double amplitude, double background, double q);

// Needs at least 7 samples and an extremum away from both ends of the range.
ResonanceFit fit_lineshape(const std::vector<double>& t, const std::vector<double>& y, Lineshape shape);

// Spectrum of channel n over the successful records.
std::vector<double> spectrum(const ResultBundle& bundle, int channel, SpectrumQuantity quantity,
                             std::vector<double>* energies = nullptr);

ResonanceFit find_resonance(const ResultBundle& bundle, int channel,
                            SpectrumQuantity quantity = SpectrumQuantity::total,
                            Lineshape shape = Lineshape::lorentzian);

const char* to_string(Lineshape shape);

}  // namespace dqd
