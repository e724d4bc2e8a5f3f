#include <doctest.h>
#include <msafe/bench.hpp>
#include <msafe/error.hpp>
#include <msafe/report.hpp>

#include <algorithm>
#include <sstream>

using namespace msafe;

namespace {

PipelineConfig fast(BasisKind mode)
{
    PipelineConfig c = mode == BasisKind::spline ? PipelineConfig::spline_defaults() : PipelineConfig{};
    c.stages = 1;
    c.grid.log_lambda = grid_range(-12.0, 0.0, 3.0);
    c.grid.log_phi_t = {-5.0};
    c.grid.log_phi_z = {-5.0};
    c.grid.log10_phi = {-3.0};
    return c;
}

Dataset planted_small()
{
    SyntheticOptions o;
    o.rows = 60;
    o.sensors = 12;
    Dataset d = synthetic_dataset(o);
    const Eigen::VectorXd s = truth_signal(d, default_truth());
    const NoiseModel noise{0.25, 10.0, noise_sigma(s, 0.25, 10.0), d.rows()};
    const Eigen::VectorXd y = generate_responses(s, noise, 1);
    d.responses.assign(y.data(), y.data() + y.size());
    return d;
}

} // namespace

TEST_CASE("config json round trip")
{
    PipelineConfig c;
    c.mode = BasisKind::spline;
    c.m = 0;
    c.keep_fraction = 0.25;
    c.seed = 99;
    c.solver = SolverMethod::exact_block;
    c.storage = OperatorStorage::factored;
    c.grid = CvGrid::with_lambda_step(0.5);
    const Json j = to_json(c);
    const PipelineConfig back = config_from_json(j);
    CHECK(to_json(back) == j);
    CHECK(back.solver == SolverMethod::exact_block);
    CHECK(back.grid.log_lambda == c.grid.log_lambda);

    for (auto m : {SolverMethod::kernel_newton, SolverMethod::exact_block, SolverMethod::majorized}) {
        CHECK(parse_solver(to_string(m)) == m);
    }
    CHECK_THROWS_AS(parse_solver("newton"), UsageError);
    CHECK_THROWS_AS(config_from_json(Json::parse(R"({"lambda": 1})")), UsageError);
    CHECK_THROWS_AS(config_from_json(Json::parse(R"({"grids": {"log_mu": [1]}})")), UsageError);
    CHECK_THROWS_AS(config_from_json(Json::parse(R"({"stages": "two"})")), UsageError);

    const PipelineConfig ranged = config_from_json(Json::parse(R"({"grids": {"log_lambda": {"lo": -4, "hi": 0, "step": 2}}})"));
    CHECK(ranged.grid.log_lambda == std::vector<double>{-4.0, -2.0, 0.0});
    CHECK(ranged.grid.log_phi_t == CvGrid::standard().log_phi_t);
}

TEST_CASE("mode key selects the defaults the other keys refine")
{
    const PipelineConfig s = config_from_json(Json::parse(R"({"mode": "spline", "stages": 2})"));
    CHECK(s.keep_fraction == 1.0);
    CHECK(s.storage == OperatorStorage::dense);
    CHECK(s.stages == 2);
    const PipelineConfig m = config_from_json(Json::parse(R"({"mode": "multiscale"})"));
    CHECK(m.keep_fraction == 0.1);
}

TEST_CASE("simulation settings parsing")
{
    const SimSettings s = sim_settings_from_json(Json::parse(
        R"({"thetas": [1], "etas": [5, 50], "replicates": 3, "modes": ["multiscale"], "seed": 4, "snr": 5,
            "stages": 3, "folds": 4, "grids": {"log_lambda": {"lo": -2, "hi": 0, "step": 1}}})"));
    CHECK(s.thetas == std::vector<double>{1.0});
    CHECK(s.etas == std::vector<double>{5.0, 50.0});
    CHECK(s.replicates == 3);
    CHECK(s.modes == std::vector<BasisKind>{BasisKind::multiscale});
    CHECK(s.seed == 4);
    CHECK(s.snr == 5.0);
    CHECK(s.stages == 3);
    CHECK(s.grid.folds == 4);
    CHECK(s.grid.log_lambda == std::vector<double>{-2.0, -1.0, 0.0});
    const SimSettings back = sim_settings_from_json(to_json(s));
    CHECK(to_json(back) == to_json(s));
    CHECK_THROWS_AS(sim_settings_from_json(Json::parse(R"({"sigma": 1})")), UsageError);
    CHECK_THROWS_AS(sim_settings_from_json(Json::parse(R"({"modes": [3]})")), UsageError);
    CHECK_THROWS_AS(sim_settings_from_json(Json::parse("[]")), UsageError);
}

TEST_CASE("simulation csv has one line per replicate")
{
    SimReport r;
    ReplicateRow row;
    row.theta = 0.25;
    row.eta = 10.0;
    row.selected = {6, 11};
    row.recovered = true;
    r.rows = {row, row};
    std::ostringstream out;
    write_sim_csv(out, r);
    const std::string text = out.str();
    CHECK(text.rfind("theta,eta,mode,replicate,size,false_positives,recovered,cv_mse,time,selected\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
    CHECK(text.find("7;12") != std::string::npos);
}

TEST_CASE("magnitude histogram bins")
{
    MagnitudeHistogram h;
    h.decades = 3;
    Eigen::MatrixXd m(1, 6);
    m << 1.0, -0.5, 0.05, 0.1, 1e-5, 0.0;
    h.add(m);
    REQUIRE(h.counts.size() == 4);
    CHECK(h.total == 6);
    CHECK(h.counts[0] == 2);  // (1e-1, 1]
    CHECK(h.counts[1] == 2);  // 0.1 is not above 1e-1
    CHECK(h.counts[2] == 0);
    CHECK(h.counts[3] == 2);
    CHECK(h.fraction(0) == doctest::Approx(1.0 / 3.0));
    CHECK(h.lower_edge(0) == doctest::Approx(0.1));
    CHECK(h.lower_edge(3) == 0.0);

    CHECK(small_entry_fraction({m}, 1e-3) == doctest::Approx(2.0 / 6.0));
    // each matrix is scaled by its own maximum
    CHECK(small_entry_fraction({m, 100.0 * m}, 1e-3) == doctest::Approx(2.0 / 6.0));
}

TEST_CASE("bench reports block sparsity and agrees with a plain run")
{
    const Dataset d = planted_small();
    const PipelineConfig base = fast(BasisKind::spline);
    const PipelineConfig cand = fast(BasisKind::multiscale);
    const BenchReport r = run_bench(d, base, cand);
    CHECK(r.baseline.mode == BasisKind::spline);
    CHECK(r.candidate.mode == BasisKind::multiscale);
    CHECK(r.time_ratio() > 0.0);

    // at most 4 of the 10 cubic z splines are nonzero at a position
    for (double f : r.baseline.block_nnz_fraction) {
        CHECK(f > 0.3);
        CHECK(f <= 0.4 + 1e-12);
    }
    for (double f : r.candidate.block_nnz_fraction) CHECK(f <= 0.1 + 1e-12);

    const RunResult plain = run_full(d, cand);
    CHECK(r.candidate.cv_mse == plain.fit.cv_mse);
    CHECK(r.candidate.selected == plain.fit.selected);

    // identical configs give identical metrics apart from time
    const BenchReport same = run_bench(d, cand, cand);
    CHECK(same.baseline.cv_mse == same.candidate.cv_mse);
    CHECK(same.baseline.histogram.counts == same.candidate.histogram.counts);
    CHECK(same.baseline.small_fraction == same.candidate.small_fraction);

    std::size_t total = 0;
    for (std::size_t c : r.candidate.histogram.counts) total += c;
    CHECK(total == r.candidate.histogram.total);
    CHECK(r.candidate.histogram.total == d.sensors() * d.rows() * 16);

    std::ostringstream csv;
    write_bench_csv(csv, r);
    const std::string table = csv.str();
    CHECK(std::count(table.begin(), table.end(), '\n') == 3);
    const Json j = to_json(r);
    CHECK(j["time_ratio"].get<double>() == r.time_ratio());
    CHECK(j["candidate"]["selected"].size() == r.candidate.selected.size());

    PipelineConfig other = cand;
    other.seed = 2;
    CHECK_THROWS_AS(run_bench(d, base, other), UsageError);
}
