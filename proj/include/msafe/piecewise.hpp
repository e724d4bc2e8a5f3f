#pragma once
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace msafe {

/**
 * Piecewise polynomial on [0,1].
 *
 * Each piece [b_i, b_{i+1}] stores coefficients c_0..c_d of a polynomial in
 * the local coordinate s = (x - b_i) / (b_{i+1} - b_i), s in [0,1]. Local
 * coordinates keep dilation and translation exact: rescaling a function onto
 * a sub-interval only moves breakpoints.
 *
 * Evaluation at an interior breakpoint uses the right-hand piece; x = 1 uses
 * the last piece.
 */
class PiecewisePolynomial
{
public:
    /// Identically zero function with a single piece.
    PiecewisePolynomial();

    PiecewisePolynomial(std::vector<double> breakpoints, int degree, std::vector<double> coefficients);

    static PiecewisePolynomial constant(double value);

    /// Builds from per-piece monomial coefficients in the global variable x
    /// (ascending powers). All pieces are padded to the largest degree.
    static PiecewisePolynomial from_global(std::vector<double> breakpoints,
                                           const std::vector<std::vector<double>>& pieces);

    int degree() const { return degree_; }
    std::size_t piece_count() const { return breaks_.size() - 1; }
    std::span<const double> breakpoints() const { return breaks_; }
    std::span<const double> piece(std::size_t i) const
    {
        return {coeffs_.data() + i * stride(), stride()};
    }
    bool piece_is_zero(std::size_t i) const;

    /// Index of the piece that owns x under the right-closed convention.
    std::size_t locate(double x) const;

    double operator()(double x) const;

    /// Evaluates piece i at global x without a domain check.
    double evaluate_piece(std::size_t i, double x) const;

    /// Piecewise derivative; jumps at breakpoints are ignored.
    PiecewisePolynomial derivative(int order = 1) const;

    /// (T_0 f)(x) = f(2x) on [0,1/2], (T_1 f)(x) = f(2x-1) on [1/2,1]; zero
    /// elsewhere.
    PiecewisePolynomial dilate(int branch) const;

    /// Smallest [lo,hi] outside of which the function is identically zero.
    /// Returns {0,0} for the zero function.
    std::pair<double, double> support() const;

    /// Polynomial coefficients of piece i in the global variable x.
    std::vector<double> global_piece(std::size_t i) const;

    friend bool operator==(const PiecewisePolynomial&, const PiecewisePolynomial&) = default;

private:
    std::size_t stride() const { return static_cast<std::size_t>(degree_) + 1; }
    void validate() const;
    void merge_zero_pieces();

    std::vector<double> breaks_;
    int degree_ = 0;
    std::vector<double> coeffs_;
};

/// Exact integral over [0,1].
double integrate(const PiecewisePolynomial& f);

/// Exact L2 inner product via merged breakpoints and Gauss-Legendre
/// quadrature of sufficient order on each merged piece.
double inner_product(const PiecewisePolynomial& f, const PiecewisePolynomial& g);

/// Integral of f * h for an arbitrary integrand h, using `points` Gauss
/// nodes on each piece of f where f is nonzero.
double integrate_against(const PiecewisePolynomial& f, const std::function<double(double)>& h, int points);

/// Monomial x^k as a single-piece polynomial.
PiecewisePolynomial monomial(int k);

} // namespace msafe
