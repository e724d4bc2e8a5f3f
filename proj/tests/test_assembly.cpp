#include <doctest.h>
#include <msafe/assembly.hpp>
#include <msafe/error.hpp>
#include <msafe/penalty.hpp>

#include <Eigen/SVD>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace msafe;

namespace {

Dataset make_dataset(const std::function<double(double)>& signal, std::size_t samples, std::vector<double> times,
                     double window = 1.0 / 3.0)
{
    Dataset d;
    d.window = window;
    d.signals.values.resize(static_cast<Eigen::Index>(samples), 1);
    for (std::size_t i = 0; i < samples; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(samples - 1);
        d.signals.time.push_back(t);
        d.signals.values(static_cast<Eigen::Index>(i), 0) = signal(t);
    }
    d.times = std::move(times);
    for (std::size_t i = 0; i < d.times.size(); ++i) {
        d.positions.push_back(static_cast<double>(i));
        d.responses.push_back(0.0);
    }
    return d;
}

std::vector<double> uniform_times(double lo, double hi, std::size_t n)
{
    std::vector<double> t;
    for (std::size_t i = 0; i < n; ++i) t.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
    return t;
}

// Fitted slope of log2(values) against x by least squares.
double log2_slope(const std::vector<double>& x, const std::vector<double>& values)
{
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double y = std::log2(values[i]);
        sx += x[i];
        sy += y;
        sxx += x[i] * x[i];
        sxy += x[i] * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Three-point Gauss rule on sub-cells of a uniform grid fine enough to
// contain every breakpoint; written out by hand.
std::vector<std::pair<double, double>> tensor_rule_1d(int cells, int sub)
{
    const double g = std::sqrt(3.0 / 5.0);
    const double xs[3] = {-g, 0.0, g};
    const double ws[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    std::vector<std::pair<double, double>> rule;
    const double h = 1.0 / (cells * sub);
    for (int c = 0; c < cells * sub; ++c) {
        const double mid = (c + 0.5) * h;
        for (int k = 0; k < 3; ++k) rule.emplace_back(mid + 0.5 * h * xs[k], 0.5 * h * ws[k]);
    }
    return rule;
}

} // namespace

TEST_CASE("linear interpolation of samples")
{
    const auto f = interpolate_signal(std::vector<double>{0.0, 1.0}, std::vector<double>{0.0, 2.0});
    CHECK(f(0.5) == doctest::Approx(1.0));
    CHECK_THROWS_AS(interpolate_signal(std::vector<double>{0.0, 0.0}, std::vector<double>{1.0, 2.0}), DataError);
    CHECK_THROWS_AS(interpolate_signal(std::vector<double>{0.0}, std::vector<double>{1.0}), DataError);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<double> t{0.0}, v{u(rng)};
    for (int i = 1; i < 50; ++i) {
        t.push_back(t.back() + 0.01 + 0.02 * (u(rng) + 1.0));
        v.push_back(u(rng));
    }
    const auto g = interpolate_signal(t, v);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(g(t[i]) == v[i]);

    const auto c = interpolate_signal(t, std::vector<double>(t.size(), 2.5));
    const auto window = historical_window(c, 0.9, 0.3);
    CHECK(integrate(window) * 0.3 == doctest::Approx(2.5 * 0.3).epsilon(1e-14));
}

TEST_CASE("historical window is time reversed and rescaled")
{
    const auto ramp = interpolate_signal(std::vector<double>{0.0, 0.5, 2.0}, std::vector<double>{0.0, 0.5, 2.0});
    const auto w = historical_window(ramp, 1.0, 1.0 / 3.0);
    CHECK(w(0.0) == doctest::Approx(1.0));
    CHECK(w(1.0) == doctest::Approx(2.0 / 3.0));
    CHECK(w(0.5) == doctest::Approx(1.0 - 0.5 / 3.0));
    CHECK_THROWS_AS(historical_window(ramp, 0.2, 1.0 / 3.0), DataError);
    CHECK_THROWS_AS(historical_window(ramp, 2.5, 1.0 / 3.0), DataError);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<double> t, v;
    for (int i = 0; i <= 200; ++i) {
        t.push_back(i * 0.005);
        v.push_back(u(rng));
    }
    const auto s = interpolate_signal(t, v);
    for (double ti : {0.4, 0.517, 0.99, 1.0}) {
        const auto win = historical_window(s, ti, 1.0 / 3.0);
        CHECK(win(0.0) == doctest::Approx(s(ti)).epsilon(1e-13));
        CHECK(win(1.0) == doctest::Approx(s(ti - 1.0 / 3.0)).epsilon(1e-13));
        for (int k = 0; k < 25; ++k) {
            const double tau = (u(rng) + 1.0) / 2.0;
            CHECK(std::abs(win(tau) - s(ti - tau / 3.0)) < 1e-13);
        }
    }
}

TEST_CASE("dataset window validation")
{
    Dataset d = make_dataset([](double) { return 1.0; }, 11, {0.4});
    CHECK_NOTHROW(d.validate());
    d.times = {0.2};
    CHECK_THROWS_AS(d.validate(), DataError);
    d.times = {0.4, 0.5};
    CHECK_THROWS_AS(d.validate(), DataError);  // lengths differ
}

TEST_CASE("constant signal assembles to level-0 entries only")
{
    const BasisSet t_basis = build_multiscale_basis(3, 2);
    const BasisSet z_basis = build_spline_basis(10);
    Dataset d = make_dataset([](double) { return 1.0; }, 11, uniform_times(0.4, 1.0, 7));
    const DesignBlock block = assemble_block(d, 0, t_basis, z_basis, 2);
    CHECK(block.cols() == 160);
    CHECK(block.truncation_level == -1);
    const Eigen::MatrixXd dense = block.matrix;
    for (std::size_t l = 0; l < 10; ++l) {
        for (std::size_t j = 4; j < 16; ++j) {
            CHECK(dense.col(static_cast<Eigen::Index>(block.column(j, l))).cwiseAbs().maxCoeff() < 1e-14);
        }
    }
    // row 0 has the smallest position, so s_1(z_0) = 1
    CHECK(dense(0, 0) == doctest::Approx(11.0 / 24.0).epsilon(1e-14));
}

TEST_CASE("truncated assembly equals dropping trailing columns")
{
    const BasisSet t_basis = build_multiscale_basis(3, 3);
    const BasisSet z_basis = build_spline_basis(6);
    Dataset d = make_dataset([](double t) { return std::sin(7.0 * t) + 0.3 * t * t; }, 301, uniform_times(0.34, 1.0, 23));
    const DesignBlock full = assemble_block(d, 0, t_basis, z_basis, 3);
    for (int m = 0; m <= 2; ++m) {
        const DesignBlock trunc = assemble_block(d, 0, t_basis, z_basis, m);
        CHECK(trunc.truncation_level == m);
        const Eigen::MatrixXd a = full.matrix;
        const Eigen::MatrixXd b = trunc.matrix;
        const std::size_t keep = t_basis.count_through_level(m);
        double gap = 0.0;
        for (Eigen::Index c = 0; c < a.cols(); ++c) {
            const bool kept = static_cast<std::size_t>(c) % full.t_dim < keep;
            const Eigen::VectorXd expected = kept ? Eigen::VectorXd(a.col(c)) : Eigen::VectorXd::Zero(a.rows());
            gap = std::max(gap, (expected - b.col(c)).cwiseAbs().maxCoeff());
        }
        CHECK(gap < 1e-12);
        for (Eigen::Index c : trunc.occupied_columns()) CHECK(static_cast<std::size_t>(c) % full.t_dim < keep);
    }
}

TEST_CASE("assembled entries match a midpoint-rule oracle")
{
    const BasisSet t_basis = build_multiscale_basis(3, 2);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<double> t, v;
    for (int i = 0; i <= 37; ++i) {
        t.push_back(i / 37.0);
        v.push_back(u(rng));
    }
    const auto s = interpolate_signal(t, v);
    Dataset d;
    d.signals.time = t;
    d.signals.values = Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    d.times = {0.5, 0.77, 1.0};
    d.positions = {0, 0, 0};
    d.responses = {0, 0, 0};
    const Eigen::MatrixXd c = window_coefficients(d, 0, t_basis, t_basis.size());

    const int panels = 100000;
    for (std::size_t i = 0; i < d.times.size(); ++i) {
        for (std::size_t j = 0; j < t_basis.size(); ++j) {
            double sum = 0.0;
            for (int k = 0; k < panels; ++k) {
                const double tau = (k + 0.5) / panels;
                sum += s(d.times[i] - tau / 3.0) * t_basis.functions[j](tau);
            }
            CHECK(std::abs(c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - sum / panels) < 1e-8);
        }
    }
}

TEST_CASE("coefficients of a smooth window decay by level")
{
    const BasisSet t_basis = build_multiscale_basis(3, 4);
    const BasisSet z_basis = build_spline_basis(4);
    Dataset d = make_dataset([](double t) { return std::cos(5.0 * t) + std::sin(2.0 * t); }, 20001,
                             uniform_times(0.4, 1.0, 9));
    const Eigen::MatrixXd c = window_coefficients(d, 0, t_basis, t_basis.size());
    std::vector<double> levels, maxima;
    for (int n = 1; n <= 4; ++n) {
        double mx = 0.0;
        for (std::size_t j = 0; j < t_basis.size(); ++j) {
            if (t_basis.levels[j] == n) mx = std::max(mx, c.col(static_cast<Eigen::Index>(j)).cwiseAbs().maxCoeff());
        }
        levels.push_back(n);
        maxima.push_back(mx);
    }
    CHECK(log2_slope(levels, maxima) <= -(3 + 1) + 0.5);
}

TEST_CASE("sparsify keeps the largest entries")
{
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g;
    Eigen::MatrixXd dense(20, 12);
    for (Eigen::Index i = 0; i < dense.size(); ++i) dense.data()[i] = g(rng);
    DesignBlock block;
    block.matrix = dense.sparseView();
    block.t_dim = 4;
    block.z_dim = 3;

    const DesignBlock same = sparsify(block, 1.0);
    CHECK(Eigen::MatrixXd(same.matrix) == dense);

    const DesignBlock tenth = sparsify(block, 0.1);
    CHECK(tenth.nonzeros() == 24);
    std::vector<double> mags(dense.data(), dense.data() + dense.size());
    for (double& m : mags) m = std::abs(m);
    std::sort(mags.begin(), mags.end(), std::greater<>());
    const double threshold = mags[23];
    for (Eigen::Index c = 0; c < tenth.matrix.outerSize(); ++c) {
        for (SparseMatrix::InnerIterator it(tenth.matrix, c); it; ++it) {
            CHECK(std::abs(it.value()) >= threshold);
            CHECK(it.value() == dense(it.row(), it.col()));
        }
    }
    CHECK(tenth.kept_fraction == doctest::Approx(0.1));

    const DesignBlock again = sparsify(tenth, 0.1);
    CHECK(Eigen::MatrixXd(again.matrix) == Eigen::MatrixXd(tenth.matrix));

    // ties go to the earliest (row, col)
    DesignBlock ties;
    ties.matrix = Eigen::MatrixXd::Ones(2, 5).sparseView();
    const DesignBlock kept = sparsify(ties, 0.2);
    const Eigen::MatrixXd k = kept.matrix;
    CHECK(k(0, 0) == 1.0);
    CHECK(k(0, 1) == 1.0);
    CHECK(k.sum() == 2.0);
    CHECK_THROWS_AS(sparsify(block, 0.0), UsageError);
}

TEST_CASE("spectral norm and truncation error")
{
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    Eigen::MatrixXd a(30, 8);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
    const double exact = Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues()[0];
    CHECK(spectral_norm(a.sparseView()) == doctest::Approx(exact).epsilon(1e-7));

    const BasisSet t_basis = build_multiscale_basis(3, 4);
    const BasisSet z_basis = build_spline_basis(5);
    Dataset lin = make_dataset([](double t) { return 2.0 - 3.0 * t; }, 5, uniform_times(0.34, 1.0, 12));
    const DesignBlock flat = assemble_block(lin, 0, t_basis, z_basis, 4);
    CHECK(truncation_error(flat, t_basis, 0) < 1e-12);
    CHECK(truncation_error(flat, t_basis, 4) == 0.0);

    Dataset smooth = make_dataset([](double t) { return std::sin(6.0 * t) + 0.5 * std::cos(11.0 * t); }, 40001,
                                  uniform_times(0.34, 1.0, 40));
    const DesignBlock full = assemble_block(smooth, 0, t_basis, z_basis, 4);
    std::vector<double> ms, errors;
    for (int m = 0; m <= 2; ++m) {
        ms.push_back(m);
        errors.push_back(truncation_error(full, t_basis, m));
    }
    CHECK(errors[1] < errors[0]);
    CHECK(errors[2] < errors[1]);
    CHECK(log2_slope(ms, errors) <= -3 + 0.5);
}

TEST_CASE("block dump round trip")
{
    const BasisSet t_basis = build_multiscale_basis(3, 2);
    const BasisSet z_basis = build_spline_basis(10);
    Dataset d = make_dataset([](double t) { return std::exp(t) * std::sin(9 * t); }, 301, uniform_times(0.34, 1.0, 15));
    const DesignBlock block = sparsify(assemble_block(d, 0, t_basis, z_basis, 1), 0.1);
    std::stringstream ss;
    write_block(ss, block);
    const DesignBlock back = read_block(ss);
    CHECK(back.t_dim == 16);
    CHECK(back.z_dim == 10);
    CHECK(back.truncation_level == 1);
    CHECK(back.kept_fraction == block.kept_fraction);
    CHECK(Eigen::MatrixXd(back.matrix) == Eigen::MatrixXd(block.matrix));

    std::stringstream bad("2,2,1\n0,5,1.0\n");
    CHECK_THROWS_AS(read_block(bad), DataError);
}

TEST_CASE("penalty components and Kronecker convention")
{
    const BasisSet t_basis = build_multiscale_basis(3, 2);
    const BasisSet z_basis = build_spline_basis(10);
    const PenaltyComponents pc = PenaltyComponents::build(t_basis, z_basis);
    const PenaltyMatrix p = build_penalty(pc, 1.0, 1.0, 1.0, 0.0, 0.0);
    CHECK((p.matrix() - kron(z_basis.gram, t_basis.gram)).cwiseAbs().maxCoeff() == 0.0);
    const Eigen::MatrixXd llt = p.factor() * p.factor().transpose();
    CHECK((llt - p.matrix()).norm() / p.matrix().norm() < 1e-10);

    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    Eigen::MatrixXd b(16, 10);
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = g(rng);
    const Eigen::VectorXd vec_b = Eigen::Map<Eigen::VectorXd>(b.data(), b.size());
    const Eigen::MatrixXd rhs = t_basis.gram * b * z_basis.gram.transpose();
    const Eigen::VectorXd lhs = pc.gram * vec_b;
    CHECK((lhs - Eigen::Map<const Eigen::VectorXd>(rhs.data(), rhs.size())).cwiseAbs().maxCoeff() < 1e-12);

    // kernel norms by tensor quadrature on the reconstructed kernel; 1/56
    // cells contain all breakpoints of both bases
    const auto rule = tensor_rule_1d(56, 6);
    const auto q = static_cast<Eigen::Index>(rule.size());
    Eigen::MatrixXd wt(q, 16), wt2(q, 16), sz(q, 10), sz2(q, 10);
    for (Eigen::Index r = 0; r < q; ++r) {
        const double x = rule[static_cast<std::size_t>(r)].first;
        for (int j = 0; j < 16; ++j) {
            wt(r, j) = t_basis.functions[j](x);
            wt2(r, j) = t_basis.functions[j].derivative(2)(x);
        }
        for (int l = 0; l < 10; ++l) {
            sz(r, l) = z_basis.functions[l](x);
            sz2(r, l) = z_basis.functions[l].derivative(2)(x);
        }
    }
    Eigen::VectorXd wq(q);
    for (Eigen::Index r = 0; r < q; ++r) wq[r] = rule[static_cast<std::size_t>(r)].second;
    auto tensor_norm2 = [&](const Eigen::MatrixXd& ft, const Eigen::MatrixXd& fz) {
        const Eigen::MatrixXd grid = ft * b * fz.transpose();  // gamma(tau_r, z_s)
        return (wq.asDiagonal() * grid.cwiseAbs2() * wq.asDiagonal()).sum();
    };
    const auto norms = pc.norms2(vec_b);
    CHECK(norms[0] == doctest::Approx(tensor_norm2(wt, sz)).epsilon(1e-8));
    CHECK(norms[1] == doctest::Approx(tensor_norm2(wt2, sz)).epsilon(1e-8));
    CHECK(norms[2] == doctest::Approx(tensor_norm2(wt, sz2)).epsilon(1e-8));

    CHECK_THROWS_AS(build_penalty(pc, 0.0, 1, 1, 1, 1), UsageError);
    CHECK_THROWS_WITH_AS(PenaltyMatrix(Eigen::MatrixXd::Zero(3, 3)), "penalty not SPD", NumericalError);

    for (int trial = 0; trial < 3; ++trial) {
        const Eigen::VectorXd beta = Eigen::VectorXd::NullaryExpr(160, [&] { return g(rng); });
        const PenaltyMatrix pm = build_penalty(pc, 0.7, 2.0, 3.0, 1e-3, 1e-2);
        const Eigen::VectorXd u = pm.substitute(beta);
        CHECK(u.squaredNorm() == doctest::Approx(beta.dot(pm.matrix() * beta)).epsilon(1e-10));
        CHECK((pm.recover(u) - beta).norm() < 1e-9 * beta.norm());
    }
}

TEST_CASE("reduced penalty eliminates empty design columns exactly")
{
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g;
    const Eigen::Index d = 12;
    Eigen::MatrixXd r(d, d);
    for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = g(rng);
    const Eigen::MatrixXd penalty = r * r.transpose() + 0.5 * Eigen::MatrixXd::Identity(d, d);
    const std::vector<Eigen::Index> kept{1, 4, 5, 9, 11};

    const ReducedPenalty rp(penalty, kept);
    CHECK(rp.reduced_dim() == 5);
    const Eigen::VectorXd u = Eigen::VectorXd::NullaryExpr(5, [&] { return g(rng); });
    const Eigen::VectorXd beta = rp.expand(u);
    CHECK(beta.dot(penalty * beta) == doctest::Approx(u.squaredNorm()).epsilon(1e-10));

    // design with zero columns outside `kept`
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(7, d);
    Eigen::MatrixXd a_kept(7, 5);
    for (Eigen::Index c = 0; c < 5; ++c) {
        for (Eigen::Index i = 0; i < 7; ++i) a_kept(i, c) = a(i, kept[static_cast<std::size_t>(c)]) = g(rng);
    }
    const Eigen::MatrixXd l22 = rp.factor();
    const Eigen::VectorXd reduced_pred = a_kept * l22.transpose().triangularView<Eigen::Upper>().solve(u);
    CHECK((a * beta - reduced_pred).norm() < 1e-10 * reduced_pred.norm());

    // expand_kept gives the penalty-minimal completion
    const Eigen::VectorXd v = Eigen::VectorXd::NullaryExpr(5, [&] { return g(rng); });
    const Eigen::VectorXd full = rp.expand_kept(v);
    for (std::size_t c = 0; c < kept.size(); ++c) CHECK(full[kept[c]] == doctest::Approx(v[static_cast<Eigen::Index>(c)]));
    const double base = full.dot(penalty * full);
    for (Eigen::Index i : {0, 2, 3}) {
        Eigen::VectorXd moved = full;
        moved[i] += 1e-3;
        CHECK(moved.dot(penalty * moved) > base);
    }
    CHECK(v.dot(rp.schur() * v) == doctest::Approx(base).epsilon(1e-10));
}
