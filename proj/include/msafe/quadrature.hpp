#pragma once
#include <span>

namespace msafe {

/// Gauss-Legendre rule mapped to [0,1]. Exact for polynomials of degree
/// <= 2*size()-1.
struct GaussRule
{
    std::span<const double> nodes;
    std::span<const double> weights;

    std::size_t size() const { return nodes.size(); }
};

inline constexpr int max_gauss_points = 64;

/// Returns the n-point rule, 1 <= n <= max_gauss_points. Rules are computed
/// once and cached for the lifetime of the process.
GaussRule gauss_legendre(int n);

/// Smallest rule that integrates a polynomial of the given degree exactly.
GaussRule gauss_legendre_for_degree(int degree);

} // namespace msafe
