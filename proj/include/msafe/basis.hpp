#pragma once
#include <msafe/piecewise.hpp>

#include <Eigen/Dense>
#include <array>
#include <vector>

namespace msafe {

enum class BasisKind
{
    multiscale,
    spline,
};

const char* to_string(BasisKind kind);

/**
 * Ordered family of functions on [0,1] with cached Gram matrices.
 *
 * Multiscale sets are ordered by level (all level-0 functions, then level 1,
 * ...), and within a level from left to right by support, so truncating at
 * level m means keeping the first count_through_level(m) functions.
 */
struct BasisSet
{
    BasisKind kind = BasisKind::spline;
    int degree = 3;   // p for multiscale, spline degree otherwise
    int level = 0;    // n, multiscale only
    std::vector<PiecewisePolynomial> functions;
    std::vector<int> levels;  // per-function level, all zero for splines
    Eigen::MatrixXd gram;     // (f_i, f_j)
    Eigen::MatrixXd d2gram;   // (f_i'', f_j''), second derivatives taken piecewise

    std::size_t size() const { return functions.size(); }

    /// Number of leading functions with level <= m. For spline sets this is
    /// always size().
    std::size_t count_through_level(int m) const;

    bool same_layout(const BasisSet& other) const;
};

/// Explicit cubic seed: interpolation points (i+1)/5, the four level-0
/// cubics and the four level-1 piecewise cubics with four vanishing moments.
struct CollocationSeed
{
    std::array<double, 4> t_points;
    std::vector<PiecewisePolynomial> w0;
    std::vector<PiecewisePolynomial> w1;
};

const CollocationSeed& cubic_seed();

/// Multiscale basis of degree p through level n (2^n (p+1) functions).
/// Only p = 3 has a seed; other degrees throw UsageError.
BasisSet build_multiscale_basis(int p, int n);

/// Generates level-(l+1) functions from level-l ones: all T_0 images first,
/// then all T_1 images. Works for any degree.
std::vector<PiecewisePolynomial> next_level(const std::vector<PiecewisePolynomial>& level);

/// q cubic B-splines on a uniform clamped knot vector over [0,1], q >= 4.
BasisSet build_spline_basis(int q);

/// B-splines of the given order (degree + 1) for an arbitrary clamped knot
/// vector on [0,1], each converted to exact piecewise form.
std::vector<PiecewisePolynomial> bspline_functions(const std::vector<double>& knots, int order);

/// Clamped uniform knot vector on [0,1] with `count` basis functions.
std::vector<double> clamped_uniform_knots(int count, int order);

/// Gram and piecewise second-derivative Gram matrices of a function family.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> gram_matrices(const std::vector<PiecewisePolynomial>& functions);

/// Symmetric matrix of (f_i^(d), f_j^(d)).
Eigen::MatrixXd derivative_gram(const std::vector<PiecewisePolynomial>& functions, int d);

/// Constant of the coefficient decay bound for a multiscale set:
/// sqrt(2p+3) / ((p+1)! 2^(p+1)) * max_{v in W_1} ||v||.
double decay_constant(const BasisSet& basis);

} // namespace msafe
