#include <msafe/piecewise.hpp>
#include <msafe/error.hpp>
#include <msafe/quadrature.hpp>

#include <algorithm>
#include <cmath>

namespace msafe {
namespace {

double horner(std::span<const double> c, double s)
{
    double v = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) {
        v = v * s + c[k];
    }
    return v;
}

double binomial(int n, int k)
{
    double r = 1.0;
    for (int i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i;
    }
    return r;
}

} // namespace

PiecewisePolynomial::PiecewisePolynomial()
    : breaks_{0.0, 1.0}, degree_(0), coeffs_{0.0}
{}

PiecewisePolynomial::PiecewisePolynomial(std::vector<double> breakpoints, int degree,
                                         std::vector<double> coefficients)
    : breaks_(std::move(breakpoints)), degree_(degree), coeffs_(std::move(coefficients))
{
    validate();
}

void PiecewisePolynomial::validate() const
{
    if (degree_ < 0) throw UsageError("piecewise polynomial: negative degree");
    if (breaks_.size() < 2) throw UsageError("piecewise polynomial: need at least two breakpoints");
    if (breaks_.front() != 0.0 || breaks_.back() != 1.0) {
        throw UsageError("piecewise polynomial: breakpoints must start at 0 and end at 1");
    }
    for (std::size_t i = 1; i < breaks_.size(); ++i) {
        if (!(breaks_[i] > breaks_[i - 1])) {
            throw UsageError("piecewise polynomial: breakpoints must be strictly increasing");
        }
    }
    if (coeffs_.size() != piece_count() * stride()) {
        throw UsageError("piecewise polynomial: coefficient count does not match pieces");
    }
}

PiecewisePolynomial PiecewisePolynomial::constant(double value)
{
    return PiecewisePolynomial({0.0, 1.0}, 0, {value});
}

PiecewisePolynomial PiecewisePolynomial::from_global(std::vector<double> breakpoints,
                                                     const std::vector<std::vector<double>>& pieces)
{
    if (pieces.size() + 1 != breakpoints.size()) {
        throw UsageError("piecewise polynomial: piece count must equal breakpoint count - 1");
    }
    std::size_t width = 1;
    for (const auto& p : pieces) width = std::max(width, p.size());
    const int degree = static_cast<int>(width) - 1;

    std::vector<double> coeffs(pieces.size() * width, 0.0);
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        const double a = breakpoints[i];
        const double h = breakpoints[i + 1] - a;
        // sum_k g_k (a + h s)^k = sum_j s^j h^j sum_{k>=j} g_k C(k,j) a^(k-j)
        for (std::size_t j = 0; j < width; ++j) {
            double acc = 0.0;
            for (std::size_t k = j; k < pieces[i].size(); ++k) {
                acc += pieces[i][k] * binomial(static_cast<int>(k), static_cast<int>(j))
                       * std::pow(a, static_cast<double>(k - j));
            }
            coeffs[i * width + j] = acc * std::pow(h, static_cast<double>(j));
        }
    }
    return PiecewisePolynomial(std::move(breakpoints), degree, std::move(coeffs));
}

bool PiecewisePolynomial::piece_is_zero(std::size_t i) const
{
    const auto c = piece(i);
    return std::all_of(c.begin(), c.end(), [](double v) { return v == 0.0; });
}

std::size_t PiecewisePolynomial::locate(double x) const
{
    const auto it = std::upper_bound(breaks_.begin() + 1, breaks_.end() - 1, x);
    return static_cast<std::size_t>(it - breaks_.begin()) - 1;
}

double PiecewisePolynomial::operator()(double x) const
{
    if (!(x >= 0.0 && x <= 1.0)) {
        throw DataError("piecewise polynomial: evaluation point " + std::to_string(x) + " outside [0,1]");
    }
    return evaluate_piece(locate(x), x);
}

double PiecewisePolynomial::evaluate_piece(std::size_t i, double x) const
{
    const double a = breaks_[i];
    const double h = breaks_[i + 1] - a;
    return horner(piece(i), (x - a) / h);
}

PiecewisePolynomial PiecewisePolynomial::derivative(int order) const
{
    if (order < 0) throw UsageError("piecewise polynomial: negative derivative order");
    if (order == 0) return *this;
    if (degree_ == 0) {
        return PiecewisePolynomial(breaks_, 0, std::vector<double>(piece_count(), 0.0));
    }
    const int nd = degree_ - 1;
    const std::size_t ns = static_cast<std::size_t>(nd) + 1;
    std::vector<double> out(piece_count() * ns, 0.0);
    for (std::size_t i = 0; i < piece_count(); ++i) {
        const double h = breaks_[i + 1] - breaks_[i];
        const auto c = piece(i);
        for (std::size_t k = 1; k < c.size(); ++k) {
            out[i * ns + k - 1] = static_cast<double>(k) * c[k] / h;
        }
    }
    return PiecewisePolynomial(breaks_, nd, std::move(out)).derivative(order - 1);
}

PiecewisePolynomial PiecewisePolynomial::dilate(int branch) const
{
    if (branch != 0 && branch != 1) throw UsageError("dilate: branch must be 0 or 1");
    std::vector<double> breaks;
    std::vector<double> coeffs;
    breaks.reserve(breaks_.size() + 1);
    coeffs.reserve(coeffs_.size() + stride());
    if (branch == 1) {
        breaks.push_back(0.0);
        coeffs.insert(coeffs.end(), stride(), 0.0);
    }
    for (double b : breaks_) {
        breaks.push_back(0.5 * (b + branch));
    }
    coeffs.insert(coeffs.end(), coeffs_.begin(), coeffs_.end());
    if (branch == 0) {
        breaks.push_back(1.0);
        coeffs.insert(coeffs.end(), stride(), 0.0);
    }
    PiecewisePolynomial out(std::move(breaks), degree_, std::move(coeffs));
    out.merge_zero_pieces();
    return out;
}

void PiecewisePolynomial::merge_zero_pieces()
{
    std::vector<double> breaks{breaks_.front()};
    std::vector<double> coeffs;
    bool previous_zero = false;
    for (std::size_t i = 0; i < piece_count(); ++i) {
        const bool zero = piece_is_zero(i);
        if (zero && previous_zero) {
            breaks.back() = breaks_[i + 1];
            continue;
        }
        breaks.push_back(breaks_[i + 1]);
        const auto c = piece(i);
        coeffs.insert(coeffs.end(), c.begin(), c.end());
        previous_zero = zero;
    }
    breaks_ = std::move(breaks);
    coeffs_ = std::move(coeffs);
}

std::pair<double, double> PiecewisePolynomial::support() const
{
    std::size_t first = piece_count();
    std::size_t last = 0;
    for (std::size_t i = 0; i < piece_count(); ++i) {
        if (!piece_is_zero(i)) {
            first = std::min(first, i);
            last = i;
        }
    }
    if (first == piece_count()) return {0.0, 0.0};
    return {breaks_[first], breaks_[last + 1]};
}

std::vector<double> PiecewisePolynomial::global_piece(std::size_t i) const
{
    // sum_k c_k ((x - a)/h)^k expanded in powers of x
    const double a = breaks_[i];
    const double h = breaks_[i + 1] - a;
    const auto c = piece(i);
    std::vector<double> g(c.size(), 0.0);
    for (std::size_t k = 0; k < c.size(); ++k) {
        const double scale = c[k] / std::pow(h, static_cast<double>(k));
        for (std::size_t j = 0; j <= k; ++j) {
            g[j] += scale * binomial(static_cast<int>(k), static_cast<int>(j))
                    * std::pow(-a, static_cast<double>(k - j));
        }
    }
    return g;
}

double integrate(const PiecewisePolynomial& f)
{
    double total = 0.0;
    const auto b = f.breakpoints();
    for (std::size_t i = 0; i < f.piece_count(); ++i) {
        const auto c = f.piece(i);
        double s = 0.0;
        for (std::size_t k = 0; k < c.size(); ++k) {
            s += c[k] / static_cast<double>(k + 1);
        }
        total += s * (b[i + 1] - b[i]);
    }
    return total;
}

double inner_product(const PiecewisePolynomial& f, const PiecewisePolynomial& g)
{
    // Walk the nonzero pieces of the function with fewer pieces and locate
    // the overlapping pieces of the other by bisection.
    const PiecewisePolynomial& outer = f.piece_count() <= g.piece_count() ? f : g;
    const PiecewisePolynomial& inner = f.piece_count() <= g.piece_count() ? g : f;
    const GaussRule rule = gauss_legendre_for_degree(f.degree() + g.degree());
    const auto ob = outer.breakpoints();
    const auto ib = inner.breakpoints();

    double total = 0.0;
    for (std::size_t i = 0; i < outer.piece_count(); ++i) {
        if (outer.piece_is_zero(i)) continue;
        const double lo = ob[i];
        const double hi = ob[i + 1];
        for (std::size_t j = inner.locate(lo); j < inner.piece_count() && ib[j] < hi; ++j) {
            const double a = std::max(lo, ib[j]);
            const double b = std::min(hi, ib[j + 1]);
            if (!(b > a) || inner.piece_is_zero(j)) continue;
            const double h = b - a;
            double s = 0.0;
            for (std::size_t q = 0; q < rule.size(); ++q) {
                const double x = a + h * rule.nodes[q];
                s += rule.weights[q] * outer.evaluate_piece(i, x) * inner.evaluate_piece(j, x);
            }
            total += s * h;
        }
    }
    return total;
}

double integrate_against(const PiecewisePolynomial& f, const std::function<double(double)>& h, int points)
{
    const GaussRule rule = gauss_legendre(points);
    const auto b = f.breakpoints();
    double total = 0.0;
    for (std::size_t i = 0; i < f.piece_count(); ++i) {
        if (f.piece_is_zero(i)) continue;
        const double width = b[i + 1] - b[i];
        double s = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const double x = b[i] + width * rule.nodes[q];
            s += rule.weights[q] * f.evaluate_piece(i, x) * h(x);
        }
        total += s * width;
    }
    return total;
}

PiecewisePolynomial monomial(int k)
{
    if (k < 0) throw UsageError("monomial: negative power");
    std::vector<double> c(static_cast<std::size_t>(k) + 1, 0.0);
    c.back() = 1.0;
    return PiecewisePolynomial({0.0, 1.0}, k, std::move(c));
}

} // namespace msafe
