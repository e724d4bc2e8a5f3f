#include <msafe/msafe.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

// Carries a library status out of a failed call.
struct Failure
{
    msafe_status status;
    std::string message;
};

void check(msafe_status s)
{
    if (s != MSAFE_OK) throw Failure{s, msafe_last_error()};
}

void usage_error(const std::string& message) { throw Failure{MSAFE_USAGE, message}; }

struct StringDeleter
{
    void operator()(char* s) const { msafe_string_free(s); }
};
using OwnedString = std::unique_ptr<char, StringDeleter>;

struct DatasetDeleter
{
    void operator()(msafe_dataset* d) const { msafe_dataset_free(d); }
};
struct DesignDeleter
{
    void operator()(msafe_design* d) const { msafe_design_free(d); }
};
struct RunDeleter
{
    void operator()(msafe_run* r) const { msafe_run_free(r); }
};
using Dataset = std::unique_ptr<msafe_dataset, DatasetDeleter>;
using Design = std::unique_ptr<msafe_design, DesignDeleter>;
using Run = std::unique_ptr<msafe_run, RunDeleter>;

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) usage_error("cannot read '" + path + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) usage_error("cannot write '" + path.string() + "'");
    out << text;
}

Json parse_file(const std::string& path)
{
    try {
        return Json::parse(read_file(path));
    } catch (const Json::parse_error& e) {
        usage_error(path + ": " + e.what());
    }
    return {};
}

std::string hash_of(const std::string& path)
{
    char hex[41];
    check(msafe_file_hash(path.c_str(), hex));
    return hex;
}

// Options shared by the subcommands that read a recording and a config.
struct Common
{
    std::string signals;
    std::string positions;
    double window = 1.0 / 3.0;
    std::string config;
    std::vector<std::string> sets;
    std::string mode;
    long long seed = -1;
    int threads = 0;
    std::string out;

    void add_data(CLI::App* app)
    {
        app->add_option("--signals", signals, "Signals CSV (time,<sensors>)")->required()->check(CLI::ExistingFile);
        app->add_option("--positions", positions, "Positions CSV (time,position[,response])")
            ->required()
            ->check(CLI::ExistingFile);
        app->add_option("--window", window, "Historical window width in seconds")->capture_default_str();
    }

    void add_config(CLI::App* app)
    {
        app->add_option("--config", config, "JSON config file")->check(CLI::ExistingFile);
        app->add_option("--set", sets, "Override a config key, key=value (value parsed as JSON when possible)");
        app->add_option("--mode", mode, "multiscale or spline");
        app->add_option("--seed", seed, "Fold seed");
        app->add_option("--threads", threads, "Worker threads");
    }

    void add_out(CLI::App* app, bool required)
    {
        auto* o = app->add_option("--out", out, "Output directory");
        if (required) o->required();
    }

    Json overrides() const
    {
        Json j = config.empty() ? Json::object() : parse_file(config);
        if (!j.is_object()) usage_error(config + ": config must be a JSON object");
        if (!mode.empty()) j["mode"] = mode;
        if (seed >= 0) j["seed"] = seed;
        if (threads > 0) j["threads"] = threads;
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos || eq == 0) usage_error("--set expects key=value, got '" + s + "'");
            const std::string value = s.substr(eq + 1);
            j[s.substr(0, eq)] = Json::accept(value) ? Json::parse(value) : Json(value);
        }
        return j;
    }

    // Config with every key filled in.
    std::string resolved() const
    {
        char* text = nullptr;
        check(msafe_config_resolve(overrides().dump().c_str(), &text));
        OwnedString owned(text);
        return owned.get();
    }

    Dataset load() const
    {
        msafe_dataset* d = nullptr;
        check(msafe_dataset_load(signals.c_str(), positions.c_str(), window, &d));
        return Dataset(d);
    }

    fs::path out_dir() const
    {
        const fs::path dir(out);
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) usage_error("cannot create '" + out + "': " + ec.message());
        return dir;
    }

    Json manifest(const std::string& command, const std::string& resolved_config) const
    {
        Json m;
        m["tool"] = "msafe";
        m["version"] = msafe_version();
        m["command"] = command;
        m["config"] = Json::parse(resolved_config);
        Json inputs = Json::array();
        for (const std::string& path : {signals, positions, config}) {
            if (path.empty()) continue;
            inputs.push_back({{"path", path}, {"sha1", hash_of(path)}});
        }
        m["inputs"] = inputs;
        m["window"] = window;
        return m;
    }
};

// Writes to <out>/<name> when an output directory is given, else stdout.
void emit(const Common& c, const std::string& name, const std::string& text)
{
    if (c.out.empty()) std::cout << text;
    else write_file(c.out_dir() / name, text);
}

std::vector<std::size_t> parse_sensors(const std::string& list)
{
    std::vector<std::size_t> out;
    std::stringstream s(list);
    std::string item;
    while (std::getline(s, item, ',')) {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(item, &used);
            if (used != item.size() || v < 1) throw std::invalid_argument(item);
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            usage_error("--sensors expects one-based indices like 7,12; got '" + item + "'");
        }
    }
    if (out.empty()) usage_error("--sensors is empty");
    return out;
}

void write_predictions(const fs::path& path, const msafe_run* run, const msafe_dataset* data,
                       const std::string& positions_path)
{
    std::size_t rows = 0;
    check(msafe_dataset_shape(data, &rows, nullptr));
    std::vector<double> y(rows), y_hat(rows);
    check(msafe_dataset_responses(data, y.data(), rows));
    check(msafe_run_predict(run, data, y_hat.data(), rows));
    // row times come from the positions file
    std::ifstream in(positions_path);
    std::string line;
    std::getline(in, line);
    std::ostringstream out;
    out << "time,y,y_hat\n";
    out.precision(17);
    for (std::size_t i = 0; i < rows && std::getline(in, line); ++i) {
        out << line.substr(0, line.find(',')) << ',' << y[i] << ',' << y_hat[i] << '\n';
    }
    write_file(path, out.str());
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Multiscale sensor selection and kernel estimation for historical functional linear models"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(msafe_version()));

    Common c;

    auto* inspect = app.add_subcommand("inspect-basis", "Basis sizes, moments and orthogonality as JSON");
    c.add_config(inspect);
    c.add_out(inspect, false);

    auto* assemble = app.add_subcommand("assemble", "Assemble the design blocks and summarize them");
    c.add_data(assemble);
    c.add_config(assemble);
    c.add_out(assemble, true);
    std::vector<std::size_t> dump_blocks;
    assemble->add_option("--dump-block", dump_blocks, "Write the triplet dump of a sensor (one-based)");

    auto* select = app.add_subcommand("select", "Multistage group-lasso sensor selection");
    c.add_data(select);
    c.add_config(select);
    c.add_out(select, false);

    auto* estimate = app.add_subcommand("estimate", "Ridge kernel estimation on given sensors");
    c.add_data(estimate);
    c.add_config(estimate);
    c.add_out(estimate, true);
    std::string sensor_list;
    estimate->add_option("--sensors", sensor_list, "One-based sensors, comma separated")->required();

    auto* run = app.add_subcommand("run", "Assembly, selection and estimation");
    c.add_data(run);
    c.add_config(run);
    c.add_out(run, true);
    bool predictions = false;
    run->add_flag("--predictions", predictions, "Also write predictions.csv (time,y,y_hat)");

    auto* synth = app.add_subcommand("synth", "Write a synthetic recording with planted responses");
    c.add_out(synth, true);
    std::string truth_path;
    Json synth_options = Json::object();
    Json plant_options = Json::object();
    std::size_t synth_sensors = 16, synth_rows = 198;
    std::uint64_t data_seed = 1, noise_seed = 1;
    double theta = 0.25, eta = 10.0, snr = 10.0;
    synth->add_option("--sensors", synth_sensors, "Number of sensors")->capture_default_str();
    synth->add_option("--rows", synth_rows, "Number of response rows")->capture_default_str();
    synth->add_option("--data-seed", data_seed, "Seed of the signals")->capture_default_str();
    synth->add_option("--noise-seed", noise_seed, "Seed of the response noise")->capture_default_str();
    synth->add_option("--theta", theta, "Noise correlation weight")->capture_default_str();
    synth->add_option("--eta", eta, "Noise correlation length in rows")->capture_default_str();
    synth->add_option("--snr", snr, "Signal-to-noise ratio")->capture_default_str();
    synth->add_option("--truth", truth_path, "Truth kernels JSON (default: built-in)")->check(CLI::ExistingFile);

    auto* simulate = app.add_subcommand("simulate", "Selection study over noise settings and replicates");
    c.add_data(simulate);
    c.add_out(simulate, true);
    std::string settings_path;
    std::vector<std::string> sim_sets;
    simulate->add_option("--truth", truth_path, "Truth kernels JSON (default: built-in)")->check(CLI::ExistingFile);
    simulate->add_option("--settings", settings_path, "Simulation settings JSON")->check(CLI::ExistingFile);
    simulate->add_option("--set", sim_sets, "Override a settings key, key=value");

    auto* bench = app.add_subcommand("bench", "Time and compare two configurations on the same data");
    c.add_data(bench);
    c.add_out(bench, true);
    std::string baseline_path, candidate_path;
    bench->add_option("--baseline", baseline_path, "Baseline config JSON (default: spline mode)")
        ->check(CLI::ExistingFile);
    bench->add_option("--candidate", candidate_path, "Candidate config JSON (default: multiscale mode)")
        ->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : MSAFE_USAGE;
    }

    try {
        if (inspect->parsed()) {
            char* text = nullptr;
            check(msafe_basis_inspect(c.overrides().dump().c_str(), &text));
            OwnedString owned(text);
            emit(c, "basis.json", owned.get());
        } else if (assemble->parsed()) {
            const std::string config = c.resolved();
            const Dataset data = c.load();
            msafe_design* raw = nullptr;
            check(msafe_design_assemble(data.get(), config.c_str(), &raw));
            const Design design(raw);
            char* text = nullptr;
            check(msafe_design_summary(design.get(), &text));
            OwnedString owned(text);
            const fs::path dir = c.out_dir();
            write_file(dir / "design.json", owned.get());
            for (std::size_t k : dump_blocks) {
                const fs::path path = dir / ("block_" + std::to_string(k) + ".txt");
                check(msafe_design_write_block(design.get(), k, path.string().c_str()));
            }
            write_file(dir / "manifest.json", c.manifest("assemble", config).dump(2) + "\n");
        } else if (select->parsed()) {
            const std::string config = c.resolved();
            const Dataset data = c.load();
            msafe_design* raw = nullptr;
            check(msafe_design_assemble(data.get(), config.c_str(), &raw));
            const Design design(raw);
            char* text = nullptr;
            check(msafe_select(data.get(), design.get(), config.c_str(), &text));
            OwnedString owned(text);
            emit(c, "stages.json", owned.get());
            if (!c.out.empty()) write_file(c.out_dir() / "manifest.json", c.manifest("select", config).dump(2) + "\n");
        } else if (estimate->parsed()) {
            const std::string config = c.resolved();
            const std::vector<std::size_t> sensors = parse_sensors(sensor_list);
            const Dataset data = c.load();
            msafe_design* raw_design = nullptr;
            check(msafe_design_assemble(data.get(), config.c_str(), &raw_design));
            const Design design(raw_design);
            msafe_run* raw = nullptr;
            check(msafe_estimate(data.get(), design.get(), config.c_str(), sensors.data(), sensors.size(), &raw));
            const Run result(raw);
            char* text = nullptr;
            check(msafe_run_report(result.get(), &text));
            OwnedString owned(text);
            const fs::path dir = c.out_dir();
            write_file(dir / "report.json", owned.get());
            write_file(dir / "manifest.json", c.manifest("estimate", config).dump(2) + "\n");
        } else if (run->parsed()) {
            const std::string config = c.resolved();
            const Dataset data = c.load();
            msafe_run* raw = nullptr;
            check(msafe_run_full(data.get(), config.c_str(), &raw));
            const Run result(raw);
            const fs::path dir = c.out_dir();
            char* report = nullptr;
            check(msafe_run_report(result.get(), &report));
            OwnedString owned_report(report);
            write_file(dir / "report.json", owned_report.get());
            char* timings = nullptr;
            check(msafe_run_timings(result.get(), &timings));
            OwnedString owned_timings(timings);
            write_file(dir / "timings.json", owned_timings.get());
            write_file(dir / "manifest.json", c.manifest("run", config).dump(2) + "\n");
            if (predictions) write_predictions(dir / "predictions.csv", result.get(), data.get(), c.positions);
        } else if (synth->parsed()) {
            synth_options = {{"sensors", synth_sensors}, {"rows", synth_rows}, {"seed", data_seed}};
            plant_options = {{"theta", theta}, {"eta", eta}, {"snr", snr}, {"seed", noise_seed}};
            msafe_dataset* raw = nullptr;
            check(msafe_dataset_synthetic(synth_options.dump().c_str(), &raw));
            const Dataset data(raw);
            const std::string truth = truth_path.empty() ? std::string() : read_file(truth_path);
            check(msafe_dataset_plant(data.get(), truth_path.empty() ? nullptr : truth.c_str(),
                                      plant_options.dump().c_str()));
            const fs::path dir = c.out_dir();
            check(msafe_dataset_save(data.get(), (dir / "signals.csv").string().c_str(),
                                     (dir / "positions.csv").string().c_str()));
            Json m;
            m["tool"] = "msafe";
            m["version"] = msafe_version();
            m["command"] = "synth";
            m["synthetic"] = synth_options;
            m["plant"] = plant_options;
            if (!truth_path.empty()) m["truth"] = {{"path", truth_path}, {"sha1", hash_of(truth_path)}};
            write_file(dir / "manifest.json", m.dump(2) + "\n");
        } else if (simulate->parsed()) {
            Json settings = settings_path.empty() ? Json::object() : parse_file(settings_path);
            for (const auto& s : sim_sets) {
                const auto eq = s.find('=');
                if (eq == std::string::npos || eq == 0) usage_error("--set expects key=value, got '" + s + "'");
                const std::string value = s.substr(eq + 1);
                settings[s.substr(0, eq)] = Json::accept(value) ? Json::parse(value) : Json(value);
            }
            const Dataset data = c.load();
            const std::string truth = truth_path.empty() ? std::string() : read_file(truth_path);
            char* report = nullptr;
            char* csv = nullptr;
            check(msafe_simulate(data.get(), truth_path.empty() ? nullptr : truth.c_str(), settings.dump().c_str(),
                                 &report, &csv));
            OwnedString owned_report(report), owned_csv(csv);
            const fs::path dir = c.out_dir();
            write_file(dir / "simulation.json", owned_report.get());
            write_file(dir / "replicates.csv", owned_csv.get());
        } else if (bench->parsed()) {
            const std::string baseline =
                baseline_path.empty() ? std::string(R"({"mode":"spline"})") : read_file(baseline_path);
            const std::string candidate =
                candidate_path.empty() ? std::string(R"({"mode":"multiscale"})") : read_file(candidate_path);
            const Dataset data = c.load();
            char* report = nullptr;
            char* csv = nullptr;
            check(msafe_bench(data.get(), baseline.c_str(), candidate.c_str(), &report, &csv));
            OwnedString owned_report(report), owned_csv(csv);
            const fs::path dir = c.out_dir();
            write_file(dir / "bench.json", owned_report.get());
            write_file(dir / "bench.csv", owned_csv.get());
        }
    } catch (const Failure& f) {
        std::cerr << "msafe: " << f.message << "\n";
        return static_cast<int>(f.status);
    }
    return 0;
}
