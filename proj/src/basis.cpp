#include <msafe/basis.hpp>
#include <msafe/error.hpp>

#include <cmath>

namespace msafe {
namespace {

CollocationSeed make_cubic_seed()
{
    CollocationSeed seed;
    seed.t_points = {0.2, 0.4, 0.6, 0.8};

    const std::vector<std::vector<double>> w0 = {
        {4.0, -65.0 / 3.0, 75.0 / 2.0, -125.0 / 6.0},
        {-6.0, 95.0 / 2.0, -100.0, 125.0 / 2.0},
        {4.0, -35.0, 175.0 / 2.0, -125.0 / 2.0},
        {-1.0, 55.0 / 6.0, -25.0, 125.0 / 6.0},
    };
    for (const auto& c : w0) {
        seed.w0.push_back(PiecewisePolynomial::from_global({0.0, 1.0}, {c}));
    }

    // numerators over 48, ascending powers, left piece [0,1/2) then [1/2,1]
    const std::vector<std::array<std::vector<double>, 2>> w1 = {
        {{{19.0, -320.0, 1080.0, -920.0}, {-2669.0, 11360.0, -15720.0, 7080.0}}},
        {{{91.0, -2700.0, 15720.0, -23480.0}, {-101.0, 660.0, -1080.0, 520.0}}},
        {{{-1.0, -60.0, 480.0, -520.0}, {-10369.0, 41700.0, -54720.0, 23480.0}}},
        {{{51.0, -1160.0, 5520.0, -7080.0}, {-141.0, 920.0, -1680.0, 920.0}}},
    };
    for (const auto& pieces : w1) {
        std::vector<std::vector<double>> scaled;
        for (const auto& p : pieces) {
            std::vector<double> s(p);
            for (double& v : s) v /= 48.0;
            scaled.push_back(std::move(s));
        }
        seed.w1.push_back(PiecewisePolynomial::from_global({0.0, 0.5, 1.0}, scaled));
    }
    return seed;
}

// Nonzero B-spline values N_{span-deg..span} at x, evaluated with the
// polynomial of the given span (valid at both span endpoints).
std::vector<double> basis_funs(const std::vector<double>& knots, int degree, std::size_t span, double x)
{
    std::vector<double> n(degree + 1, 0.0), left(degree + 1, 0.0), right(degree + 1, 0.0);
    n[0] = 1.0;
    for (int j = 1; j <= degree; ++j) {
        left[j] = x - knots[span + 1 - j];
        right[j] = knots[span + j] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double temp = n[r] / (right[r + 1] + left[j - r]);
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }
    return n;
}

} // namespace

const char* to_string(BasisKind kind)
{
    return kind == BasisKind::multiscale ? "multiscale" : "spline";
}

std::size_t BasisSet::count_through_level(int m) const
{
    if (kind != BasisKind::multiscale) return size();
    std::size_t count = 0;
    for (int l : levels) {
        if (l <= m) ++count;
    }
    return count;
}

bool BasisSet::same_layout(const BasisSet& other) const
{
    return kind == other.kind && degree == other.degree && level == other.level && size() == other.size();
}

const CollocationSeed& cubic_seed()
{
    static const CollocationSeed seed = make_cubic_seed();
    return seed;
}

std::vector<PiecewisePolynomial> next_level(const std::vector<PiecewisePolynomial>& level)
{
    std::vector<PiecewisePolynomial> out;
    out.reserve(2 * level.size());
    for (int branch = 0; branch < 2; ++branch) {
        for (const auto& w : level) {
            out.push_back(w.dilate(branch));
        }
    }
    return out;
}

BasisSet build_multiscale_basis(int p, int n)
{
    if (p < 0 || n < 0) throw UsageError("multiscale basis: degree and level must be non-negative");
    if (p != 3) {
        throw UsageError("multiscale basis: seed basis unavailable for degree " + std::to_string(p)
                         + " (only p = 3 is seeded)");
    }
    if (n > 12) throw UsageError("multiscale basis: level " + std::to_string(n) + " is too large");

    const auto& seed = cubic_seed();
    BasisSet basis;
    basis.kind = BasisKind::multiscale;
    basis.degree = p;
    basis.level = n;
    for (const auto& w : seed.w0) {
        basis.functions.push_back(w);
        basis.levels.push_back(0);
    }
    std::vector<PiecewisePolynomial> current = seed.w1;
    for (int l = 1; l <= n; ++l) {
        if (l > 1) current = next_level(current);
        for (const auto& w : current) {
            basis.functions.push_back(w);
            basis.levels.push_back(l);
        }
    }
    std::tie(basis.gram, basis.d2gram) = gram_matrices(basis.functions);
    return basis;
}

std::vector<double> clamped_uniform_knots(int count, int order)
{
    if (order < 1 || count < order) {
        throw UsageError("clamped knots: need at least `order` basis functions");
    }
    const int intervals = count - order + 1;
    std::vector<double> knots;
    knots.reserve(count + order);
    for (int i = 0; i < order; ++i) knots.push_back(0.0);
    for (int i = 1; i < intervals; ++i) knots.push_back(static_cast<double>(i) / intervals);
    for (int i = 0; i < order; ++i) knots.push_back(1.0);
    return knots;
}

std::vector<PiecewisePolynomial> bspline_functions(const std::vector<double>& knots, int order)
{
    const int degree = order - 1;
    if (order < 1 || knots.size() < 2 * static_cast<std::size_t>(order)) {
        throw UsageError("bspline: knot vector too short for order " + std::to_string(order));
    }
    const std::size_t count = knots.size() - order;

    std::vector<double> breaks;
    std::vector<std::size_t> spans;
    for (std::size_t s = 0; s + 1 < knots.size(); ++s) {
        if (knots[s + 1] > knots[s]) {
            if (breaks.empty()) breaks.push_back(knots[s]);
            breaks.push_back(knots[s + 1]);
            spans.push_back(s);
        }
    }
    if (breaks.front() != 0.0 || breaks.back() != 1.0) {
        throw UsageError("bspline: knots must span [0,1]");
    }

    // Interpolate each span polynomial at degree+1 Chebyshev points in local
    // coordinates; a degree-d polynomial is recovered exactly up to rounding.
    const int np = degree + 1;
    Eigen::VectorXd nodes(np);
    for (int k = 0; k < np; ++k) {
        nodes[k] = np == 1 ? 0.5 : 0.5 - 0.5 * std::cos(M_PI * (2.0 * k + 1.0) / (2.0 * np));
    }
    Eigen::MatrixXd vander(np, np);
    for (int k = 0; k < np; ++k) {
        for (int j = 0; j < np; ++j) vander(k, j) = std::pow(nodes[k], j);
    }
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(vander);

    const std::size_t pieces = spans.size();
    std::vector<std::vector<double>> coeffs(count, std::vector<double>(pieces * np, 0.0));
    Eigen::MatrixXd values(np, np);
    for (std::size_t piece = 0; piece < pieces; ++piece) {
        const std::size_t span = spans[piece];
        const double a = breaks[piece];
        const double h = breaks[piece + 1] - a;
        for (int k = 0; k < np; ++k) {
            const auto v = basis_funs(knots, degree, span, a + h * nodes[k]);
            for (int r = 0; r < np; ++r) values(k, r) = v[r];
        }
        const Eigen::MatrixXd c = lu.solve(values);
        for (int r = 0; r < np; ++r) {
            const std::size_t f = span - degree + r;
            for (int j = 0; j < np; ++j) {
                const double cj = c(j, r);
                coeffs[f][piece * np + j] = std::abs(cj) < 1e-15 ? 0.0 : cj;
            }
        }
    }

    std::vector<PiecewisePolynomial> out;
    out.reserve(count);
    for (std::size_t f = 0; f < count; ++f) {
        out.emplace_back(breaks, degree, std::move(coeffs[f]));
    }
    return out;
}

BasisSet build_spline_basis(int q)
{
    if (q < 4) throw UsageError("spline basis: dimension must be at least 4, got " + std::to_string(q));
    BasisSet basis;
    basis.kind = BasisKind::spline;
    basis.degree = 3;
    basis.level = 0;
    basis.functions = bspline_functions(clamped_uniform_knots(q, 4), 4);
    basis.levels.assign(basis.functions.size(), 0);
    std::tie(basis.gram, basis.d2gram) = gram_matrices(basis.functions);
    return basis;
}

Eigen::MatrixXd derivative_gram(const std::vector<PiecewisePolynomial>& functions, int d)
{
    std::vector<PiecewisePolynomial> derivs;
    derivs.reserve(functions.size());
    for (const auto& f : functions) derivs.push_back(f.derivative(d));
    const auto n = static_cast<Eigen::Index>(functions.size());
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            const double v = inner_product(derivs[i], derivs[j]);
            g(i, j) = v;
            g(j, i) = v;
        }
    }
    return g;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> gram_matrices(const std::vector<PiecewisePolynomial>& functions)
{
    return {derivative_gram(functions, 0), derivative_gram(functions, 2)};
}

double decay_constant(const BasisSet& basis)
{
    if (basis.kind != BasisKind::multiscale) {
        throw UsageError("decay constant is defined for multiscale bases only");
    }
    const int p = basis.degree;
    double max_norm = 0.0;
    for (std::size_t i = 0; i < basis.size(); ++i) {
        if (basis.levels[i] == 1) max_norm = std::max(max_norm, std::sqrt(basis.gram(i, i)));
    }
    if (max_norm == 0.0) {
        // level-0 only set: fall back to the seed's first wavelet level
        for (const auto& v : cubic_seed().w1) {
            max_norm = std::max(max_norm, std::sqrt(inner_product(v, v)));
        }
    }
    return std::sqrt(2.0 * p + 3.0) / (std::tgamma(p + 2.0) * std::pow(2.0, p + 1)) * max_norm;
}

} // namespace msafe
