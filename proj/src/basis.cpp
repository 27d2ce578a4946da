#include "basis.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lfmm {

KnotGrid build_grid(double t_min, double t_max, int num_knots) {
    if (num_knots < 2)
        throw std::invalid_argument("build_grid: need at least 2 knots, got " +
                                    std::to_string(num_knots));
    if (!std::isfinite(t_min) || !std::isfinite(t_max))
        throw std::invalid_argument("build_grid: bounds must be finite");
    if (!(t_min < t_max))
        throw std::invalid_argument("build_grid: empty time interval");
    KnotGrid g;
    g.t_min = t_min;
    g.t_max = t_max;
    g.num_knots = num_knots;
    g.knots.resize(num_knots);
    const double h = (t_max - t_min) / (num_knots - 1);
    for (int k = 0; k < num_knots; ++k) g.knots[k] = t_min + h * k;
    g.knots.back() = t_max;  // exact endpoint despite rounding
    return g;
}

std::vector<std::pair<int, double>> eval_basis(const KnotGrid& grid, double t) {
    if (t < grid.t_min || t > grid.t_max)
        throw std::invalid_argument("eval_basis: t=" + std::to_string(t) +
                                    " outside [" + std::to_string(grid.t_min) + ", " +
                                    std::to_string(grid.t_max) + "]");
    const double h = grid.spacing();
    int left = static_cast<int>(std::floor((t - grid.t_min) / h));
    if (left >= grid.num_knots - 1) left = grid.num_knots - 2;
    const double w = (t - grid.knots[left]) / h;
    if (w <= 0.0) return {{left, 1.0}};
    if (w >= 1.0) return {{left + 1, 1.0}};
    return {{left, 1.0 - w}, {left + 1, w}};
}

double eval_curve(const KnotGrid& grid, const std::vector<double>& coeffs, double t) {
    if (static_cast<int>(coeffs.size()) != grid.num_knots)
        throw std::invalid_argument("eval_curve: expected " + std::to_string(grid.num_knots) +
                                    " coefficients, got " + std::to_string(coeffs.size()));
    double v = 0.0;
    for (const auto& [idx, w] : eval_basis(grid, t)) v += w * coeffs[idx];
    return v;
}

}  // namespace lfmm
