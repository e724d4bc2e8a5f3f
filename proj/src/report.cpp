#include <msafe/error.hpp>
#include <msafe/io.hpp>
#include <msafe/report.hpp>

#include <ostream>
#include <set>

namespace msafe {
namespace {

Json vector_json(const Eigen::VectorXd& v)
{
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

Json sensors_json(const std::vector<std::size_t>& sensors)
{
    Json out = Json::array();
    for (std::size_t k : sensors) out.push_back(k + 1);
    return out;
}

std::vector<double> grid_from_json(const Json& j, const std::string& key)
{
    try {
        if (j.is_array()) return j.get<std::vector<double>>();
        if (j.is_object()) return grid_range(j.at("lo").get<double>(), j.at("hi").get<double>(), j.at("step").get<double>());
    } catch (const Json::exception& e) {
        throw UsageError("config: grid '" + key + "': " + e.what());
    }
    throw UsageError("config: grid '" + key + "' must be a list or {lo, hi, step}");
}

template<class T>
T get(const Json& j, const char* key)
{
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception&) {
        throw UsageError(std::string("config: bad value for '") + key + "'");
    }
}

} // namespace

BasisKind parse_mode(const std::string& name)
{
    if (name == "multiscale") return BasisKind::multiscale;
    if (name == "spline") return BasisKind::spline;
    throw UsageError("unknown mode '" + name + "' (expected multiscale or spline)");
}

OperatorStorage parse_storage(const std::string& name)
{
    if (name == "automatic") return OperatorStorage::automatic;
    if (name == "dense") return OperatorStorage::dense;
    if (name == "factored") return OperatorStorage::factored;
    throw UsageError("unknown storage '" + name + "' (expected automatic, dense or factored)");
}

const char* to_string(OperatorStorage storage)
{
    switch (storage) {
    case OperatorStorage::automatic: return "automatic";
    case OperatorStorage::dense: return "dense";
    case OperatorStorage::factored: return "factored";
    }
    return "?";
}

SolverMethod parse_solver(const std::string& name)
{
    if (name == "kernel_newton") return SolverMethod::kernel_newton;
    if (name == "exact_block") return SolverMethod::exact_block;
    if (name == "majorized") return SolverMethod::majorized;
    throw UsageError("unknown solver '" + name + "' (expected kernel_newton, exact_block or majorized)");
}

const char* to_string(SolverMethod method)
{
    switch (method) {
    case SolverMethod::kernel_newton: return "kernel_newton";
    case SolverMethod::exact_block: return "exact_block";
    case SolverMethod::majorized: return "majorized";
    }
    return "?";
}

Json to_json(const PipelineConfig& c)
{
    Json j;
    j["mode"] = to_string(c.mode);
    j["p"] = c.p;
    j["n"] = c.n;
    j["m"] = c.m;
    j["q"] = c.q;
    j["t_q"] = c.t_q;
    j["keep_fraction"] = c.keep_fraction;
    j["stages"] = c.stages;
    j["folds"] = c.grid.folds;
    j["seed"] = c.seed;
    j["solver"] = to_string(c.solver);
    j["tol"] = c.tol;
    j["max_iter"] = c.max_iter;
    j["early_exit"] = c.early_exit;
    j["storage"] = to_string(c.storage);
    j["threads"] = c.threads;
    j["grids"] = {{"log_lambda", c.grid.log_lambda},
                  {"log_phi_t", c.grid.log_phi_t},
                  {"log_phi_z", c.grid.log_phi_z},
                  {"log10_phi", c.grid.log10_phi}};
    return j;
}

PipelineConfig config_from_json(const Json& j, PipelineConfig c)
{
    if (!j.is_object()) throw UsageError("config: expected a JSON object");
    static const std::set<std::string> known{"mode",     "p",    "n",        "m",          "q",       "t_q",
                                             "keep_fraction", "stages", "folds", "seed", "solver", "tol", "max_iter",
                                             "early_exit", "storage", "threads", "grids"};
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) throw UsageError("config: unknown key '" + key + "'");
    }
    // a mode switch starts from that mode's defaults
    if (j.contains("mode")) {
        const BasisKind mode = parse_mode(get<std::string>(j, "mode"));
        if (mode != c.mode) {
            const PipelineConfig d = mode == BasisKind::spline ? PipelineConfig::spline_defaults()
                                                               : PipelineConfig::multiscale_defaults();
            c.mode = mode;
            c.keep_fraction = d.keep_fraction;
            c.storage = d.storage;
        }
    }
    if (j.contains("p")) c.p = get<int>(j, "p");
    if (j.contains("n")) c.n = get<int>(j, "n");
    if (j.contains("m")) c.m = get<int>(j, "m");
    if (j.contains("q")) c.q = get<int>(j, "q");
    if (j.contains("t_q")) c.t_q = get<int>(j, "t_q");
    if (j.contains("keep_fraction")) c.keep_fraction = get<double>(j, "keep_fraction");
    if (j.contains("stages")) c.stages = get<int>(j, "stages");
    if (j.contains("folds")) c.grid.folds = get<int>(j, "folds");
    if (j.contains("seed")) c.seed = get<std::uint64_t>(j, "seed");
    if (j.contains("solver")) c.solver = parse_solver(get<std::string>(j, "solver"));
    if (j.contains("tol")) c.tol = get<double>(j, "tol");
    if (j.contains("max_iter")) c.max_iter = get<long>(j, "max_iter");
    if (j.contains("early_exit")) c.early_exit = get<bool>(j, "early_exit");
    if (j.contains("storage")) c.storage = parse_storage(get<std::string>(j, "storage"));
    if (j.contains("threads")) c.threads = get<int>(j, "threads");
    if (j.contains("grids")) {
        const Json& g = j.at("grids");
        if (!g.is_object()) throw UsageError("config: 'grids' must be an object");
        for (const auto& [key, value] : g.items()) {
            if (key == "log_lambda") c.grid.log_lambda = grid_from_json(value, key);
            else if (key == "log_phi_t") c.grid.log_phi_t = grid_from_json(value, key);
            else if (key == "log_phi_z") c.grid.log_phi_z = grid_from_json(value, key);
            else if (key == "log10_phi") c.grid.log10_phi = grid_from_json(value, key);
            else throw UsageError("config: unknown grid '" + key + "'");
        }
    }
    c.validate();
    return c;
}

Json to_json(const StageState& s)
{
    Json j;
    j["stage"] = s.stage;
    j["candidates"] = sensors_json(s.candidates);
    j["selected"] = sensors_json(s.selected);
    j["lambda"] = s.lambda;
    j["phi_t"] = s.phi_t;
    j["phi_z"] = s.phi_z;
    j["cv_mse"] = s.cv_mse;
    j["lambdas_evaluated"] = s.lambdas_evaluated;
    j["weights"] = {{"f", s.f}, {"g", s.g}, {"h", s.h}};
    return j;
}

Json to_json(const FitResult& fit)
{
    Json j;
    j["mode"] = to_string(fit.mode);
    j["t_dim"] = fit.t_basis.size();
    j["z_dim"] = fit.z_basis.size();
    j["truncation_level"] = fit.truncation_level;
    j["keep_fraction"] = fit.keep_fraction;
    j["position_range"] = {fit.map.lo, fit.map.hi};
    j["selected"] = sensors_json(fit.selected);
    j["phi"] = fit.phi;
    j["phi_t"] = fit.phi_t;
    j["phi_z"] = fit.phi_z;
    j["cv_mse"] = fit.cv_mse;
    j["ridge_fallback"] = fit.ridge_fallback;
    Json kernels = Json::array();
    for (std::size_t i = 0; i < fit.selected.size(); ++i) {
        const auto norms = fit.kernel_norms2(i);
        kernels.push_back({{"sensor", fit.selected[i] + 1},
                           {"norm2", norms[0]},
                           {"t_roughness2", norms[1]},
                           {"z_roughness2", norms[2]},
                           {"beta", vector_json(fit.beta[i])}});
    }
    j["kernels"] = std::move(kernels);
    return j;
}

Json to_json(const Timings& t)
{
    return {{"assembly", t.assembly}, {"selection", t.selection}, {"estimation", t.estimation},
            {"total", t.assembly + t.selection + t.estimation}};
}

Json run_report(const RunResult& run, const PipelineConfig& config)
{
    Json j;
    j["config"] = to_json(config);
    Json stages = Json::array();
    for (const auto& s : run.stages) stages.push_back(to_json(s));
    j["stages"] = std::move(stages);
    j["selected"] = sensors_json(run.fit.selected);
    j["cv_mse"] = run.fit.cv_mse;
    j["fit"] = to_json(run.fit);
    return j;
}

Json to_json(const Truth& truth)
{
    Json kernels = Json::array();
    for (const auto& k : truth.kernels) {
        kernels.push_back(
            {{"sensor", k.sensor + 1}, {"t_coefficients", k.t_coefficients}, {"z_coefficients", k.z_coefficients}});
    }
    return {{"p", truth.p}, {"n", truth.n}, {"q", truth.q}, {"kernels", std::move(kernels)}};
}

Truth truth_from_json(const Json& j)
{
    Truth t;
    try {
        t.p = j.at("p").get<int>();
        t.n = j.at("n").get<int>();
        t.q = j.at("q").get<int>();
        for (const auto& k : j.at("kernels")) {
            const auto sensor = k.at("sensor").get<std::size_t>();
            if (sensor < 1) throw UsageError("truth: sensors are one-based");
            t.kernels.push_back({sensor - 1, k.at("t_coefficients").get<std::vector<double>>(),
                                 k.at("z_coefficients").get<std::vector<double>>()});
        }
    } catch (const Json::exception& e) {
        throw UsageError(std::string("truth: ") + e.what());
    }
    t.validate();
    return t;
}

Json to_json(const SimSettings& s)
{
    Json modes = Json::array();
    for (BasisKind m : s.modes) modes.push_back(to_string(m));
    return {{"thetas", s.thetas},
            {"etas", s.etas},
            {"replicates", s.replicates},
            {"modes", std::move(modes)},
            {"seed", s.seed},
            {"snr", s.snr},
            {"stages", s.stages},
            {"folds", s.grid.folds},
            {"grids",
             {{"log_lambda", s.grid.log_lambda},
              {"log_phi_t", s.grid.log_phi_t},
              {"log_phi_z", s.grid.log_phi_z},
              {"log10_phi", s.grid.log10_phi}}}};
}

SimSettings sim_settings_from_json(const Json& j, SimSettings s)
{
    if (!j.is_object()) throw UsageError("settings: expected a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (key == "thetas") s.thetas = get<std::vector<double>>(j, "thetas");
        else if (key == "etas") s.etas = get<std::vector<double>>(j, "etas");
        else if (key == "replicates") s.replicates = get<int>(j, "replicates");
        else if (key == "modes") {
            s.modes.clear();
            for (const auto& m : value) {
                if (!m.is_string()) throw UsageError("settings: modes must be strings");
                s.modes.push_back(parse_mode(m.get<std::string>()));
            }
        }
        else if (key == "seed") s.seed = get<std::uint64_t>(j, "seed");
        else if (key == "snr") s.snr = get<double>(j, "snr");
        else if (key == "stages") s.stages = get<int>(j, "stages");
        else if (key == "folds") s.grid.folds = get<int>(j, "folds");
        else if (key == "threads") s.threads = get<int>(j, "threads");
        else if (key == "grids") {
            if (!value.is_object()) throw UsageError("settings: 'grids' must be an object");
            for (const auto& [g, v] : value.items()) {
                if (g == "log_lambda") s.grid.log_lambda = grid_from_json(v, g);
                else if (g == "log_phi_t") s.grid.log_phi_t = grid_from_json(v, g);
                else if (g == "log_phi_z") s.grid.log_phi_z = grid_from_json(v, g);
                else if (g == "log10_phi") s.grid.log10_phi = grid_from_json(v, g);
                else throw UsageError("settings: unknown grid '" + g + "'");
            }
        }
        else throw UsageError("settings: unknown key '" + key + "'");
    }
    s.validate();
    return s;
}

Json to_json(const SimReport& report)
{
    Json summaries = Json::array();
    for (const auto& s : report.summaries) {
        summaries.push_back({{"theta", s.theta},
                             {"eta", s.eta},
                             {"mode", to_string(s.mode)},
                             {"replicates", s.replicates},
                             {"mean_size", s.mean_size},
                             {"size_sd", s.size_sd},
                             {"mean_false_positive", s.mean_false_positive},
                             {"mean_cv_mse", s.mean_cv_mse},
                             {"cv_mse_sd", s.cv_mse_sd},
                             {"mean_time", s.mean_time},
                             {"recovered", s.recovered}});
    }
    Json rows = Json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"theta", r.theta},
                        {"eta", r.eta},
                        {"mode", to_string(r.mode)},
                        {"replicate", r.replicate},
                        {"selected", sensors_json(r.selected)},
                        {"false_positives", r.false_positives},
                        {"recovered", r.recovered},
                        {"cv_mse", r.cv_mse},
                        {"time", r.time}});
    }
    return {{"truth", sensors_json(report.truth)},
            {"excluded", sensors_json(report.excluded)},
            {"summaries", std::move(summaries)},
            {"replicates", std::move(rows)}};
}

void write_sim_csv(std::ostream& out, const SimReport& report)
{
    out << "theta,eta,mode,replicate,size,false_positives,recovered,cv_mse,time,selected\n";
    for (const auto& r : report.rows) {
        out << format_double(r.theta) << ',' << format_double(r.eta) << ',' << to_string(r.mode) << ','
            << r.replicate << ',' << r.selected.size() << ',' << r.false_positives << ',' << (r.recovered ? 1 : 0)
            << ',' << format_double(r.cv_mse) << ',' << format_double(r.time) << ',';
        for (std::size_t i = 0; i < r.selected.size(); ++i) out << (i ? ";" : "") << r.selected[i] + 1;
        out << '\n';
    }
}

Json to_json(const ModeBench& b)
{
    Json bins = Json::array();
    for (std::size_t i = 0; i < b.histogram.counts.size(); ++i) {
        bins.push_back({{"lower", b.histogram.lower_edge(i)},
                        {"count", b.histogram.counts[i]},
                        {"fraction", b.histogram.fraction(i)}});
    }
    return {{"mode", to_string(b.mode)},
            {"timings", to_json(b.timings)},
            {"cv_mse", b.cv_mse},
            {"selected", sensors_json(b.selected)},
            {"block_nnz_fraction", b.block_nnz_fraction},
            {"small_entry_fraction", b.small_fraction},
            {"histogram", std::move(bins)}};
}

Json to_json(const BenchReport& r)
{
    return {{"baseline", to_json(r.baseline)}, {"candidate", to_json(r.candidate)}, {"time_ratio", r.time_ratio()}};
}

void write_bench_csv(std::ostream& out, const BenchReport& r)
{
    const std::size_t bins = r.baseline.histogram.counts.size();
    out << "slot,mode,assembly,selection,estimation,total,cv_mse,selected,mean_nnz_fraction,small_entry_fraction";
    for (std::size_t i = 0; i < bins; ++i) out << ",bin" << i;
    out << '\n';
    auto line = [&](const char* slot, const ModeBench& b) {
        double nnz = 0.0;
        for (double f : b.block_nnz_fraction) nnz += f;
        if (!b.block_nnz_fraction.empty()) nnz /= static_cast<double>(b.block_nnz_fraction.size());
        out << slot << ',' << to_string(b.mode) << ',' << format_double(b.timings.assembly) << ','
            << format_double(b.timings.selection) << ',' << format_double(b.timings.estimation) << ','
            << format_double(b.total_time()) << ',' << format_double(b.cv_mse) << ',' << b.selected.size() << ','
            << format_double(nnz) << ',' << format_double(b.small_fraction);
        for (std::size_t i = 0; i < b.histogram.counts.size(); ++i) out << ',' << format_double(b.histogram.fraction(i));
        out << '\n';
    };
    line("baseline", r.baseline);
    line("candidate", r.candidate);
}

} // namespace msafe
