#include <doctest.h>
#include <msafe/error.hpp>
#include <msafe/pipeline.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

using namespace msafe;

namespace {

// Random sums of eight sinusoids on [0, 2] sampled at 201 points; rows at
// t >= 0.4 with oscillating positions.
Dataset synthetic(std::size_t sensors, std::size_t rows, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Dataset d;
    d.window = 1.0 / 3.0;
    const int samples = 201;
    d.signals.values.resize(samples, static_cast<Eigen::Index>(sensors));
    for (int i = 0; i < samples; ++i) d.signals.time.push_back(2.0 * i / (samples - 1));
    for (std::size_t k = 0; k < sensors; ++k) {
        double a[8], w[8], p[8];
        for (int j = 0; j < 8; ++j) {
            a[j] = 0.5 + u(rng);
            w[j] = 1.0 + 24.0 * u(rng);
            p[j] = 2.0 * std::numbers::pi * u(rng);
        }
        for (int i = 0; i < samples; ++i) {
            double v = 0.0;
            for (int j = 0; j < 8; ++j) v += a[j] * std::sin(w[j] * d.signals.time[static_cast<std::size_t>(i)] + p[j]);
            d.signals.values(i, static_cast<Eigen::Index>(k)) = v;
        }
    }
    for (std::size_t i = 0; i < rows; ++i) {
        d.times.push_back(0.4 + 1.6 * static_cast<double>(i) / static_cast<double>(rows - 1));
        d.positions.push_back(std::sin(7.0 * d.times.back()) + 0.3 * u(rng));
        d.responses.push_back(0.0);
    }
    return d;
}

PipelineConfig small_config(BasisKind mode)
{
    PipelineConfig c = mode == BasisKind::multiscale ? PipelineConfig::multiscale_defaults()
                                                     : PipelineConfig::spline_defaults();
    c.n = 1;
    c.m = 1;
    c.q = 5;
    c.t_q = 5;
    c.keep_fraction = 1.0;
    c.stages = 2;
    c.grid = CvGrid::with_lambda_step(1.0);
    c.grid.log_lambda = grid_range(-12.0, 0.0, 1.0);
    c.grid.log_phi_t = {-10.0, -5.0};
    c.grid.log_phi_z = {-10.0, -5.0};
    c.grid.log10_phi = {-3.0, -5.0};
    return c;
}

// Sets responses to sum_k A_k b_k plus noise, where each b_k is a smooth
// kernel: random level-0 coefficients in t times a bump in z.
void plant(Dataset& d, const AssembledDesign& design, const std::vector<std::size_t>& truth, double noise,
           std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d.rows()));
    for (std::size_t k : truth) {
        Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(design.blocks[k].cols()));
        const std::size_t td = design.t_basis.size();
        const std::size_t lead = std::min<std::size_t>(4, td);
        std::vector<double> ct(lead);
        for (double& c : ct) c = g(rng);
        const double zd = static_cast<double>(design.z_basis.size());
        for (std::size_t l = 0; l < design.z_basis.size(); ++l) {
            const double cz = std::exp(-std::pow((static_cast<double>(l) + 0.5) / zd - 0.5, 2) / 0.08);
            for (std::size_t j = 0; j < lead; ++j) b[static_cast<Eigen::Index>(l * td + j)] = ct[j] * cz;
        }
        y += design.blocks[k].matrix * b;
    }
    const double scale = std::sqrt(y.squaredNorm() / static_cast<double>(y.size()));
    for (std::size_t i = 0; i < d.rows(); ++i) d.responses[i] = y[static_cast<Eigen::Index>(i)] / scale + noise * g(rng);
}

std::vector<std::pair<double, double>> gauss_rule(int cells)
{
    const double g = std::sqrt(3.0 / 5.0);
    const double xs[3] = {-g, 0.0, g};
    const double ws[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    std::vector<std::pair<double, double>> rule;
    const double h = 1.0 / cells;
    for (int c = 0; c < cells; ++c) {
        for (int k = 0; k < 3; ++k) rule.emplace_back((c + 0.5) * h + 0.5 * h * xs[k], 0.5 * h * ws[k]);
    }
    return rule;
}

} // namespace

TEST_CASE("grids and config validation")
{
    const CvGrid g = CvGrid::standard();
    CHECK(g.log_lambda.size() == 81);
    CHECK(g.log_lambda.front() == -20.0);
    CHECK(g.log_lambda.back() == 0.0);
    CHECK(g.log_phi_t == std::vector<double>{-10.0, -7.5, -5.0, -2.5, 0.0});
    CHECK(g.log10_phi.size() == 5);
    CHECK(CvGrid::with_lambda_step(2.0).log_lambda.size() == 11);
    CHECK_THROWS_AS(grid_range(0.0, 1.0, 0.0), UsageError);

    PipelineConfig c;
    CHECK_NOTHROW(c.validate());
    c.m = 3;
    CHECK_THROWS_AS(c.validate(), UsageError);
    c = PipelineConfig{};
    c.keep_fraction = 0.0;
    CHECK_THROWS_AS(c.validate(), UsageError);
    c = PipelineConfig{};
    c.grid.folds = 1;
    CHECK_THROWS_AS(c.validate(), UsageError);
    CHECK(PipelineConfig::spline_defaults().keep_fraction == 1.0);
}

TEST_CASE("fold assignment is deterministic, balanced and contiguous after rotation")
{
    const auto a = fold_assignment(103, 5, 7);
    CHECK(a == fold_assignment(103, 5, 7));
    CHECK(a != fold_assignment(103, 5, 8));
    std::vector<int> sizes(5, 0);
    for (int f : a) ++sizes[static_cast<std::size_t>(f)];
    for (int s : sizes) CHECK((s == 20 || s == 21));
    // at most one descending step around the cycle
    int changes = 0;
    for (std::size_t i = 0; i < a.size(); ++i) changes += a[i] != a[(i + 1) % a.size()];
    CHECK(changes == 5);
    CHECK_THROWS_AS(fold_assignment(3, 5, 1), DataError);
}

TEST_CASE("lambda above lambda_max selects nothing")
{
    Dataset d = synthetic(4, 80, 3);
    PipelineConfig c = small_config(BasisKind::multiscale);
    const AssembledDesign design = assemble_design(d, c);
    plant(d, design, {1}, 0.1, 4);
    c.grid.log_lambda = {12.0, 14.0};
    const auto stages = select_sensors(d, design, c);
    REQUIRE(stages.size() == 1);
    CHECK(stages[0].selected.empty());
    CHECK(stages[0].lambda == doctest::Approx(std::exp(14.0)));  // ties favour larger lambda
    CHECK(stages[0].lambdas_evaluated == 2 * 4);

    const RunResult run = run_full(d, c);
    CHECK(run.fit.selected.empty());
    CHECK(run.fit.cv_mse > 0.0);
    CHECK(predict(run.fit, d).isZero(0.0));
}

TEST_CASE("selection recovers planted sensors with consistent stage states")
{
    for (BasisKind mode : {BasisKind::multiscale, BasisKind::spline}) {
        Dataset d = synthetic(6, 300, 11);
        PipelineConfig c = small_config(mode);
        c.keep_fraction = mode == BasisKind::multiscale ? 0.5 : 1.0;
        const AssembledDesign design = assemble_design(d, c);
        plant(d, design, {0, 3}, 0.05, 12);
        const auto stages = select_sensors(d, design, c);
        REQUIRE(!stages.empty());
        for (std::size_t r = 0; r < stages.size(); ++r) {
            const auto& s = stages[r];
            CHECK(std::includes(s.candidates.begin(), s.candidates.end(), s.selected.begin(), s.selected.end()));
            if (r > 0) CHECK(s.candidates == stages[r - 1].selected);
            REQUIRE(s.beta.size() == s.selected.size());
            for (std::size_t i = 0; i < s.selected.size(); ++i) {
                const auto norms = design.components.norms2(s.beta[i]);
                CHECK(s.f[i] == doctest::Approx(1.0 / std::sqrt(norms[0])).epsilon(1e-12));
                CHECK(s.g[i] == doctest::Approx(1.0 / std::sqrt(norms[1])).epsilon(1e-12));
                CHECK(s.h[i] == doctest::Approx(1.0 / std::sqrt(norms[2])).epsilon(1e-12));
            }
        }
        const auto& final_set = stages.back().selected;
        CHECK(std::find(final_set.begin(), final_set.end(), 0) != final_set.end());
        CHECK(std::find(final_set.begin(), final_set.end(), 3) != final_set.end());
        CHECK(final_set.size() <= 4);

        const FitResult fit = estimate_kernels(d, design, final_set, c);
        const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(d.responses.data(), static_cast<Eigen::Index>(d.rows()));
        const Eigen::VectorXd yhat = predict(fit, d);
        const double r2 = 1.0 - (y - yhat).squaredNorm() / (y.array() - y.mean()).square().sum();
        CHECK(r2 > 0.99);
        CHECK(fit.cv_mse < (y.array() - y.mean()).square().mean());  // beats the constant predictor
    }
}

TEST_CASE("ridge estimate satisfies the normal equations")
{
    for (double keep : {1.0, 0.3}) {
        Dataset d = synthetic(3, 120, 21);
        PipelineConfig c = small_config(BasisKind::multiscale);
        c.keep_fraction = keep;
        const AssembledDesign design = assemble_design(d, c);
        plant(d, design, {0, 2}, 0.1, 22);
        const std::vector<std::size_t> active{0, 2};
        const FitResult fit = estimate_kernels(d, design, active, c);
        CHECK_FALSE(fit.ridge_fallback);

        const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(d.responses.data(), static_cast<Eigen::Index>(d.rows()));
        Eigen::VectorXd r = y;
        for (std::size_t i = 0; i < active.size(); ++i) r -= design.blocks[active[i]].matrix * fit.beta[i];
        const Eigen::MatrixXd g = design.components.combine(fit.phi, fit.phi_t, fit.phi_z);
        double worst = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < active.size(); ++i) {
            const Eigen::VectorXd at_r = design.blocks[active[i]].matrix.transpose() * r;
            const Eigen::VectorXd gb = g * fit.beta[i];
            worst = std::max(worst, (at_r - gb).cwiseAbs().maxCoeff());
            scale = std::max(scale, gb.cwiseAbs().maxCoeff());
        }
        CHECK(worst < 1e-8 * std::max(1.0, scale));
    }
}

TEST_CASE("singular unpenalized ridge falls back to the smallest phi")
{
    Dataset d = synthetic(2, 100, 31);
    d.signals.values.col(1) = d.signals.values.col(0);
    PipelineConfig c = small_config(BasisKind::spline);
    const AssembledDesign design = assemble_design(d, c);
    plant(d, design, {0}, 0.1, 32);
    const FitResult fit = estimate_kernels(d, design, std::vector<std::size_t>{0, 1}, c);
    CHECK(fit.ridge_fallback);
    CHECK(fit.phi == doctest::Approx(1e-5));
}

TEST_CASE("kernel evaluation agrees with quadratic-form norms")
{
    Dataset d = synthetic(2, 100, 41);
    PipelineConfig c = small_config(BasisKind::multiscale);
    const AssembledDesign design = assemble_design(d, c);
    plant(d, design, {1}, 0.1, 42);
    const FitResult fit = estimate_kernels(d, design, std::vector<std::size_t>{1}, c);
    const auto rule = gauss_rule(240);
    double integral = 0.0;
    for (const auto& [tau, wt] : rule) {
        for (const auto& [s, ws] : rule) {
            const double z = fit.map.lo + s * (fit.map.hi - fit.map.lo);
            const double v = fit.kernel(0, tau, z);
            integral += wt * ws * v * v;
        }
    }
    const auto norms = fit.kernel_norms2(0);
    CHECK(norms[0] == doctest::Approx(integral).epsilon(1e-6));
    CHECK(norms == design.components.norms2(fit.beta[0]));
}

TEST_CASE("prediction reuses the fitted position map")
{
    Dataset d = synthetic(3, 90, 51);
    PipelineConfig c = small_config(BasisKind::multiscale);
    c.keep_fraction = 0.4;
    const AssembledDesign design = assemble_design(d, c);
    plant(d, design, {2}, 0.1, 52);
    const FitResult fit = estimate_kernels(d, design, std::vector<std::size_t>{2}, c);
    const Eigen::VectorXd full = predict(fit, d);
    const Eigen::VectorXd direct = design.blocks[2].matrix * fit.beta[0];
    CHECK((full - direct).cwiseAbs().maxCoeff() < 1e-12);

    // rows 10..29 only: positions no longer span the training range
    std::vector<std::size_t> rows;
    for (std::size_t i = 10; i < 30; ++i) rows.push_back(i);
    const Dataset part = d.subset(rows);
    PipelineConfig unsparse = c;
    unsparse.keep_fraction = 1.0;
    const AssembledDesign dense = assemble_design(d, unsparse);
    const FitResult fit_dense = estimate_kernels(d, dense, std::vector<std::size_t>{2}, unsparse);
    const Eigen::VectorXd whole = predict(fit_dense, d);
    const Eigen::VectorXd sub = predict(fit_dense, part);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(sub[static_cast<Eigen::Index>(i)] == doctest::Approx(whole[static_cast<Eigen::Index>(rows[i])]).epsilon(1e-10));
    }
}

TEST_CASE("threads do not change results")
{
    Dataset d = synthetic(4, 100, 61);
    PipelineConfig c = small_config(BasisKind::multiscale);
    c.keep_fraction = 0.5;
    {
        const AssembledDesign design = assemble_design(d, c);
        plant(d, design, {1, 2}, 0.1, 62);
    }
    const RunResult one = run_full(d, c);
    c.threads = 4;
    const RunResult four = run_full(d, c);
    CHECK(one.fit.selected == four.fit.selected);
    REQUIRE(one.stages.size() == four.stages.size());
    for (std::size_t r = 0; r < one.stages.size(); ++r) {
        CHECK(one.stages[r].lambda == four.stages[r].lambda);
        CHECK(one.stages[r].cv_mse == four.stages[r].cv_mse);
    }
    CHECK(one.fit.cv_mse == four.fit.cv_mse);
    CHECK(one.timings.selection > 0.0);
}

TEST_CASE("adaptive weights are capped for vanishing norms")
{
    CHECK(adaptive_weight(4.0) == 0.5);
    CHECK(adaptive_weight(0.0) == 1e12);
    CHECK(adaptive_weight(1e-30) == 1e12);
    CHECK(adaptive_weight(-1e-20) == 1e12);
}

TEST_CASE("prediction of a single basis kernel on a constant signal")
{
    Dataset d;
    d.window = 1.0 / 3.0;
    d.signals.values = Eigen::MatrixXd::Ones(11, 1);
    for (int i = 0; i < 11; ++i) d.signals.time.push_back(0.1 * i);
    for (int i = 0; i < 7; ++i) {
        d.times.push_back(0.4 + 0.1 * i);
        d.positions.push_back(static_cast<double>(i));
        d.responses.push_back(0.0);
    }
    FitResult fit;
    fit.t_basis = build_multiscale_basis(3, 2);
    fit.z_basis = build_spline_basis(10);
    fit.map = d.position_map();
    fit.selected = {0};
    fit.beta = {Eigen::VectorXd::Zero(160)};
    CHECK(predict(fit, d).isZero(0.0));
    fit.beta[0][0] = 1.0;  // w_00(tau) s_1(z)
    const Eigen::VectorXd yhat = predict(fit, d);
    CHECK(yhat[0] == doctest::Approx(11.0 / 24.0).epsilon(1e-14));
    CHECK(fit.kernel(0, 0.2, 0.0) == doctest::Approx(fit.t_basis.functions[0](0.2)).epsilon(1e-14));

    fit.selected = {3};
    CHECK_THROWS_AS(predict(fit, d), DataError);
}

TEST_CASE("noise-free data is reproduced with small penalties")
{
    Dataset d = synthetic(2, 200, 71);
    PipelineConfig c = small_config(BasisKind::multiscale);
    c.grid.log10_phi = {-9.0};
    c.grid.log_phi_t = {-20.0};
    c.grid.log_phi_z = {-20.0};
    const AssembledDesign design = assemble_design(d, c);
    plant(d, design, {1}, 0.0, 72);
    const FitResult fit = estimate_kernels(d, design, std::vector<std::size_t>{1}, c);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(d.responses.data(), static_cast<Eigen::Index>(d.rows()));
    CHECK((y - predict(fit, d)).squaredNorm() / static_cast<double>(d.rows()) < 1e-6);
}
