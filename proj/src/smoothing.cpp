#include <msafe/basis.hpp>
#include <msafe/error.hpp>
#include <msafe/smoothing.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace msafe {
namespace {

struct GcvCurve
{
    Eigen::VectorXd s;  // penalty eigenvalues in the Demmler-Reinsch basis
    Eigen::VectorXd z;  // projected data
    double outside = 0.0;  // ||y||^2 - ||z||^2, the part no spline can fit
    double n = 0.0;

    double rss(double alpha) const
    {
        double r = outside;
        for (Eigen::Index i = 0; i < s.size(); ++i) {
            const double shrink = alpha * s[i] / (1.0 + alpha * s[i]);
            r += shrink * shrink * z[i] * z[i];
        }
        return std::max(r, 0.0);
    }

    double trace(double alpha) const { return (1.0 / (1.0 + alpha * s.array())).sum(); }

    double score(double alpha) const
    {
        const double denom = n - trace(alpha);
        if (denom <= 1e-9 * n) return std::numeric_limits<double>::infinity();
        return n * rss(alpha) / (denom * denom);
    }
};

} // namespace

SmoothingSpline SmoothingSpline::fit(std::span<const double> t, std::span<const double> z, const SmootherOptions& options)
{
    if (t.size() != z.size()) throw DataError("smoother: time and value counts differ");
    const int min_samples = options.order + 2;
    if (static_cast<int>(t.size()) < min_samples) {
        throw DataError("smoother: need at least " + std::to_string(min_samples) + " samples, got "
                        + std::to_string(t.size()));
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!std::isfinite(t[i]) || !std::isfinite(z[i])) throw DataError("smoother: non-finite sample");
        if (i > 0 && !(t[i] > t[i - 1])) throw DataError("smoother: sample times must be strictly increasing");
    }

    SmoothingSpline out;
    out.t0_ = t.front();
    out.t1_ = t.back();
    const auto n = static_cast<Eigen::Index>(t.size());

    const int intervals = std::clamp(static_cast<int>(t.size()) / 3, 1, options.max_intervals);
    const int count = intervals + options.order - 1;
    const auto basis = bspline_functions(clamped_uniform_knots(count, options.order), options.order);
    const Eigen::MatrixXd penalty = derivative_gram(basis, options.penalty_order);

    Eigen::MatrixXd b(n, count);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = out.to_unit(t[static_cast<std::size_t>(i)]);
        for (int j = 0; j < count; ++j) b(i, j) = basis[static_cast<std::size_t>(j)](x);
    }
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = z[static_cast<std::size_t>(i)];

    // B^T B = R^T R; a tiny ridge keeps R invertible when a span holds no samples
    Eigen::MatrixXd btb = b.transpose() * b;
    btb.diagonal().array() += 1e-10 * btb.diagonal().maxCoeff();
    const Eigen::LLT<Eigen::MatrixXd> llt(btb);
    if (llt.info() != Eigen::Success) throw NumericalError("smoother: normal matrix is not positive definite");
    const Eigen::MatrixXd r = llt.matrixU();
    const auto ru = r.triangularView<Eigen::Upper>();
    const Eigen::MatrixXd rinv_t_p = ru.transpose().solve(penalty);
    const Eigen::MatrixXd scaled = ru.transpose().solve(rinv_t_p.transpose());  // R^{-T} P R^{-1}
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (scaled + scaled.transpose()));
    if (eig.info() != Eigen::Success) throw NumericalError("smoother: eigendecomposition failed");

    GcvCurve curve;
    curve.n = static_cast<double>(n);
    curve.s = eig.eigenvalues().cwiseMax(0.0);
    const Eigen::MatrixXd& u = eig.eigenvectors();
    curve.z = u.transpose() * ru.transpose().solve(b.transpose() * y);
    curve.outside = y.squaredNorm() - curve.z.squaredNorm();

    // coarse log grid, then golden-section refinement around the best point
    const double smax = std::max(curve.s.maxCoeff(), 1e-300);
    const double lo = -12.0 - std::log10(smax);
    const double hi = 6.0 - std::log10(smax) + 12.0;
    const int steps = 121;
    double best_log = lo;
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < steps; ++k) {
        const double la = lo + (hi - lo) * k / (steps - 1);
        const double v = curve.score(std::pow(10.0, la));
        if (v < best) {
            best = v;
            best_log = la;
        }
    }
    if (!std::isfinite(best)) throw NumericalError("smoother: GCV undefined (too few samples for the basis)");
    const double step = (hi - lo) / (steps - 1);
    double a = best_log - step, c = best_log + step;
    const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = c - golden * (c - a), x2 = a + golden * (c - a);
    double f1 = curve.score(std::pow(10.0, x1)), f2 = curve.score(std::pow(10.0, x2));
    for (int it = 0; it < 60; ++it) {
        if (f1 < f2) {
            c = x2;
            x2 = x1;
            f2 = f1;
            x1 = c - golden * (c - a);
            f1 = curve.score(std::pow(10.0, x1));
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + golden * (c - a);
            f2 = curve.score(std::pow(10.0, x2));
        }
    }
    const double refined = 0.5 * (a + c);
    if (curve.score(std::pow(10.0, refined)) < best) best_log = refined;
    out.alpha_ = std::pow(10.0, best_log);
    out.gcv_ = curve.score(out.alpha_);
    out.edf_ = curve.trace(out.alpha_);

    const Eigen::VectorXd shrunk = curve.z.array() / (1.0 + out.alpha_ * curve.s.array());
    const Eigen::VectorXd coef = ru.solve(u * shrunk);

    const auto breaks = basis.front().breakpoints();
    std::vector<double> sum(basis.front().piece_count() * static_cast<std::size_t>(options.order), 0.0);
    for (int j = 0; j < count; ++j) {
        const auto& f = basis[static_cast<std::size_t>(j)];
        for (std::size_t p = 0; p < f.piece_count(); ++p) {
            const auto cp = f.piece(p);
            for (std::size_t k = 0; k < cp.size(); ++k) sum[p * cp.size() + k] += coef[j] * cp[k];
        }
    }
    out.curve_ = PiecewisePolynomial({breaks.begin(), breaks.end()}, options.order - 1, std::move(sum));
    out.slope_ = out.curve_.derivative();
    return out;
}

double SmoothingSpline::to_unit(double t) const
{
    return std::clamp((t - t0_) / (t1_ - t0_), 0.0, 1.0);
}

double SmoothingSpline::operator()(double t) const { return curve_(to_unit(t)); }

double SmoothingSpline::derivative(double t) const { return slope_(to_unit(t)) / (t1_ - t0_); }

} // namespace msafe
