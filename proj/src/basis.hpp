#pragma once

#include <utility>
#include <vector>

namespace lfmm {

/// Linear B-spline (hat function) basis on a uniform knot grid. With knots at
/// the observed time points the spline interpolates its coefficients, so each
/// coefficient is the curve value at its knot.
struct KnotGrid {
    double t_min = 0.0;
    double t_max = 1.0;
    int num_knots = 2;
    std::vector<double> knots;

    double spacing() const { return (t_max - t_min) / (num_knots - 1); }
};

/// Build a grid of `num_knots` equally spaced knots on [t_min, t_max].
/// Throws std::invalid_argument if num_knots < 2 or the interval is empty.
KnotGrid build_grid(double t_min, double t_max, int num_knots);

/// Basis weights at time t: at most two adjacent knots carry nonzero weight,
/// returned as (index, weight) pairs; weights are nonnegative and sum to one.
/// Throws std::invalid_argument for t outside [t_min, t_max].
std::vector<std::pair<int, double>> eval_basis(const KnotGrid& grid, double t);

/// Evaluate the spline with the given coefficients at time t.
/// Throws std::invalid_argument on coefficient length mismatch or t out of range.
double eval_curve(const KnotGrid& grid, const std::vector<double>& coeffs, double t);

}  // namespace lfmm
