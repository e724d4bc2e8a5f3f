#include <doctest.h>
#include <msafe/error.hpp>
#include <msafe/report.hpp>
#include <msafe/simulation.hpp>

#include <cmath>
#include <fstream>

using namespace msafe;

namespace {

SimSettings tiny_settings()
{
    SimSettings s;
    s.thetas = {0.25};
    s.etas = {10.0};
    s.replicates = 2;
    s.grid = CvGrid::with_lambda_step(4.0);
    s.grid.log_phi_t = {-5.0};
    s.grid.log_phi_z = {-5.0};
    s.grid.log10_phi = {-3.0};
    return s;
}

Dataset small_dataset()
{
    SyntheticOptions o;
    o.rows = 60;
    o.sensors = 12;
    return synthetic_dataset(o);
}

} // namespace

TEST_CASE("covariance is symmetric with the stated diagonal and factors at every setting")
{
    for (double theta : {0.25, 10.0, 100.0}) {
        for (double eta : {10.0, 100.0}) {
            const NoiseModel m{theta, eta, 0.7, 198};
            const Eigen::MatrixXd s = m.covariance();
            CHECK((s - s.transpose()).cwiseAbs().maxCoeff() == 0.0);
            for (Eigen::Index i = 0; i < s.rows(); ++i) CHECK(s(i, i) == doctest::Approx(0.49 * (1.0 + theta)).epsilon(1e-14));
            const Eigen::MatrixXd l = m.cholesky_factor();
            CHECK((l * l.transpose() - s).cwiseAbs().maxCoeff() < 1e-9 * s.cwiseAbs().maxCoeff());
        }
    }
    CHECK_THROWS_AS(NoiseModel({0.0, 10.0, 1.0, 10}).validate(), UsageError);
    CHECK_THROWS_AS(NoiseModel({1.0, -1.0, 1.0, 10}).validate(), UsageError);
    CHECK_THROWS_AS(NoiseModel({1.0, 1.0, 1.0, 0}).validate(), UsageError);
}

TEST_CASE("nearly independent noise has negligible lag-1 correlation")
{
    const NoiseModel m{1e-9, 10.0, 1.0, 40};
    const Eigen::MatrixXd l = m.cholesky_factor();
    double cross = 0.0, square = 0.0;
    for (std::uint64_t draw = 0; draw < 10000; ++draw) {
        const Eigen::VectorXd e = l * standard_normal(m.length, {7, draw});
        cross += e.head(e.size() - 1).dot(e.tail(e.size() - 1)) / static_cast<double>(e.size() - 1);
        square += e.squaredNorm() / static_cast<double>(e.size());
    }
    CHECK(std::abs(cross / square) < 0.05);
}

TEST_CASE("strongly dependent noise has marginal variance sigma^2 (1 + theta)")
{
    const NoiseModel m{100.0, 100.0, 0.5, 198};
    const Eigen::MatrixXd l = m.cholesky_factor();
    const int draws = 10000;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(198), sum2 = Eigen::VectorXd::Zero(198);
    for (int d = 0; d < draws; ++d) {
        const Eigen::VectorXd e = l * standard_normal(m.length, {11, static_cast<std::uint64_t>(d)});
        sum += e;
        sum2 += e.cwiseProduct(e);
    }
    const double expected = 0.25 * 101.0;
    for (Eigen::Index i : {Eigen::Index{0}, Eigen::Index{99}, Eigen::Index{197}}) {
        const double mean = sum[i] / draws;
        const double var = (sum2[i] - draws * mean * mean) / (draws - 1);
        CHECK(std::abs(var / expected - 1.0) < 0.05);
    }
}

TEST_CASE("noise is a pure function of the seed")
{
    const NoiseModel m{10.0, 10.0, 1.0, 50};
    CHECK(sample_noise(m, 3) == sample_noise(m, 3));
    CHECK(sample_noise(m, 3) != sample_noise(m, 4));
    CHECK(standard_normal(5, {1, 2}) != standard_normal(5, {2, 1}));
}

TEST_CASE("synthetic dataset is valid and reproducible")
{
    const Dataset a = synthetic_dataset();
    const Dataset b = synthetic_dataset();
    CHECK(a.rows() == 198);
    CHECK(a.sensors() == 16);
    CHECK(a.signals.values == b.signals.values);
    CHECK(a.positions == b.positions);
    CHECK_NOTHROW(a.validate());
    CHECK(a.times.front() - a.window >= a.signals.time.front());
    CHECK(a.times.back() <= a.signals.time.back());
    SyntheticOptions o;
    o.seed = 2;
    CHECK(synthetic_dataset(o).signals.values != a.signals.values);
    o.first_time = 0.2;
    CHECK_THROWS_AS(synthetic_dataset(o), UsageError);
}

TEST_CASE("truth fixture matches the built-in kernels")
{
    std::ifstream in(std::string(MSAFE_SOURCE_DIR) + "/data/truth_kernels.json");
    REQUIRE(in.good());
    const Truth fixture = truth_from_json(Json::parse(in));
    const Truth builtin = default_truth();
    REQUIRE(fixture.kernels.size() == builtin.kernels.size());
    CHECK(fixture.sensors() == std::vector<std::size_t>{6, 11});
    for (std::size_t i = 0; i < builtin.kernels.size(); ++i) {
        CHECK(fixture.kernels[i].sensor == builtin.kernels[i].sensor);
        CHECK(fixture.kernels[i].t_coefficients == builtin.kernels[i].t_coefficients);
        CHECK(fixture.kernels[i].z_coefficients == builtin.kernels[i].z_coefficients);
    }
    const Truth back = truth_from_json(to_json(builtin));
    CHECK(back.beta(1) == builtin.beta(1));
    CHECK_THROWS_AS(truth_from_json(Json::parse(R"({"p":3,"n":2,"q":10,"kernels":[{"sensor":0}]})")), UsageError);
}

TEST_CASE("truth coefficients are the outer product of the factors")
{
    const Truth t = default_truth();
    const Eigen::VectorXd b = t.beta(0);
    REQUIRE(b.size() == 160);
    CHECK(b[3 * 16 + 1] == t.kernels[0].z_coefficients[3] * t.kernels[0].t_coefficients[1]);
    CHECK(b[9 * 16 + 15] == 0.0);
}

TEST_CASE("generated responses")
{
    const Dataset d = small_dataset();

    Truth zero = default_truth();
    for (auto& k : zero.kernels) std::fill(k.t_coefficients.begin(), k.t_coefficients.end(), 0.0);
    CHECK(truth_signal(d, zero).cwiseAbs().maxCoeff() == 0.0);

    // prediction from the truth coefficients reproduces the noise-free signal
    const Truth truth = default_truth();
    const Eigen::VectorXd signal = truth_signal(d, truth);
    CHECK(signal.norm() > 0.0);
    FitResult fit;
    fit.t_basis = build_multiscale_basis(3, 2);
    fit.z_basis = build_spline_basis(10);
    fit.map = d.position_map();
    fit.selected = truth.sensors();
    for (std::size_t i = 0; i < truth.kernels.size(); ++i) fit.beta.push_back(truth.beta(i));
    CHECK((predict(fit, d) - signal).cwiseAbs().maxCoeff() < 1e-10 * signal.cwiseAbs().maxCoeff());

    const double theta = 10.0;
    const double sigma = noise_sigma(signal, theta, 10.0);
    CHECK(sigma * sigma * (1.0 + theta) * static_cast<double>(d.rows()) * 100.0 ==
          doctest::Approx(signal.squaredNorm()).epsilon(1e-12));
    const NoiseModel noise{theta, 10.0, sigma, d.rows()};
    CHECK(generate_responses(signal, noise, 5) == signal + sample_noise(noise, 5));

    Truth far = truth;
    far.kernels[1].sensor = 20;
    CHECK_THROWS_AS(truth_signal(d, far), DataError);
}

TEST_CASE("false positives exclude truth and the excluded sensors")
{
    CHECK(count_false_positives({4, 6, 11}, {6, 11}, {4}) == 0);
    CHECK(count_false_positives({0, 6, 7}, {6, 11}, {4}) == 2);
    CHECK(count_false_positives({}, {6, 11}, {4}) == 0);
}

TEST_CASE("single replicate summary equals the replicate")
{
    ReplicateRow r;
    r.theta = 10.0;
    r.eta = 100.0;
    r.selected = {1, 6, 11};
    r.false_positives = 1;
    r.recovered = true;
    r.cv_mse = 0.25;
    r.time = 1.5;
    const SimSummary s = summarize({r});
    CHECK(s.replicates == 1);
    CHECK(s.mean_size == 3.0);
    CHECK(s.mean_false_positive == 1.0);
    CHECK(s.mean_cv_mse == 0.25);
    CHECK(s.mean_time == 1.5);
    CHECK(s.size_sd == 0.0);
    CHECK(s.recovered == 1);
    CHECK_THROWS_AS(summarize({}), UsageError);
}

TEST_CASE("simulation study is reproducible and internally consistent")
{
    const Dataset d = small_dataset();
    SimSettings s = tiny_settings();
    const SimReport a = run_sim(d, default_truth(), s);
    const SimReport b = run_sim(d, default_truth(), s);
    REQUIRE(a.summaries.size() == 2);
    REQUIRE(a.rows.size() == 4);
    CHECK(a.truth == std::vector<std::size_t>{6, 11});
    CHECK(a.excluded == std::vector<std::size_t>{4});
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].selected == b.rows[i].selected);
        CHECK(a.rows[i].cv_mse == b.rows[i].cv_mse);
        CHECK(a.rows[i].false_positives <= a.rows[i].selected.size());
    }
    for (const auto& sum : a.summaries) {
        CHECK(sum.replicates == 2);
        CHECK(sum.mean_false_positive <= sum.mean_size);
    }

    s.replicates = 1;
    s.modes = {BasisKind::multiscale};
    const SimReport one = run_sim(d, default_truth(), s);
    REQUIRE(one.rows.size() == 1);
    // replicate 0 sees the same noise regardless of J
    CHECK(one.rows[0].selected == a.rows[2].selected);
    CHECK(one.summaries[0].mean_size == static_cast<double>(one.rows[0].selected.size()));
    CHECK(one.summaries[0].mean_cv_mse == one.rows[0].cv_mse);

    s.replicates = 0;
    CHECK_THROWS_AS(run_sim(d, default_truth(), s), UsageError);
}
