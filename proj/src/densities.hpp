#pragma once

#include <cmath>
#include <vector>

namespace lfmm {

inline constexpr double log_2pi = 1.8378770664093454836;

inline double log_normal_pdf(double x, double mean, double var) {
    double d = x - mean;
    return -0.5 * (log_2pi + std::log(var)) - d * d / (2.0 * var);
}

/// Gamma(shape, rate) density in x > 0.
inline double log_gamma_pdf(double x, double shape, double rate) {
    return shape * std::log(rate) - std::lgamma(shape) +
           (shape - 1.0) * std::log(x) - rate * x;
}

/// Inverse-Gamma(shape, rate) density in x > 0.
inline double log_inv_gamma_pdf(double x, double shape, double rate) {
    return shape * std::log(rate) - std::lgamma(shape) -
           (shape + 1.0) * std::log(x) - rate / x;
}

/// Half-Cauchy(0, scale) density in x > 0.
inline double log_half_cauchy_pdf(double x, double scale) {
    return std::log(2.0 / M_PI) - std::log(scale) -
           std::log1p((x / scale) * (x / scale));
}

/// Symmetric-concentration Dirichlet density at a simplex point.
inline double log_dirichlet_pdf(const std::vector<double>& x,
                                double concentration) {
    int m = static_cast<int>(x.size());
    double lp = std::lgamma(concentration) -
                m * std::lgamma(concentration / m);
    for (double xi : x) lp += (concentration / m - 1.0) * std::log(xi);
    return lp;
}

/// Mass of one specific label sequence with per-label counts `counts`, the
/// symmetric Dirichlet(concentration/num_labels) mixing weights integrated
/// out (Polya urn).
inline double log_polya_sequence_mass(const std::vector<long long>& counts,
                                      double concentration, int num_labels) {
    long long total = 0;
    double lp = 0.0;
    double a = concentration / num_labels;
    for (long long c : counts) {
        total += c;
        if (c > 0) lp += std::lgamma(a + c) - std::lgamma(a);
    }
    lp += std::lgamma(concentration) - std::lgamma(concentration + total);
    return lp;
}

}  // namespace lfmm
