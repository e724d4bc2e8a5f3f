#pragma once
#include <msafe/piecewise.hpp>

#include <span>

namespace msafe {

struct SmootherOptions
{
    int order = 6;           // B-spline order (degree + 1)
    int penalty_order = 3;   // derivative in the roughness penalty
    int max_intervals = 60;  // upper bound on uniform knot intervals
};

/**
 * Penalized regression spline z(t) = sum_j c_j B_j(t) minimizing
 * ||z - B c||^2 + alpha * int (z^(m))^2, with alpha chosen by generalized
 * cross-validation through the Demmler-Reinsch basis.
 */
class SmoothingSpline
{
public:
    /// Throws DataError for too few or non-increasing samples.
    static SmoothingSpline fit(std::span<const double> t, std::span<const double> z, const SmootherOptions& options = {});

    double operator()(double t) const;
    double derivative(double t) const;

    double alpha() const { return alpha_; }
    double effective_df() const { return edf_; }
    double gcv() const { return gcv_; }

private:
    double to_unit(double t) const;

    double t0_ = 0.0;
    double t1_ = 1.0;
    PiecewisePolynomial curve_;
    PiecewisePolynomial slope_;  // derivative in unit time
    double alpha_ = 0.0;
    double edf_ = 0.0;
    double gcv_ = 0.0;
};

} // namespace msafe
