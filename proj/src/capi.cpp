#include <msafe/bench.hpp>
#include <msafe/error.hpp>
#include <msafe/io.hpp>
#include <msafe/msafe.h>
#include <msafe/report.hpp>
#include <msafe/simulation.hpp>

#include <openssl/evp.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <sstream>
#include <string>

struct msafe_dataset
{
    msafe::Dataset data;
};

struct msafe_design
{
    msafe::PipelineConfig config;
    msafe::AssembledDesign design;
};

struct msafe_run
{
    msafe::PipelineConfig config;
    msafe::RunResult result;
};

namespace {

thread_local std::string last_error;

template<class F>
msafe_status guarded(F&& body)
{
    try {
        body();
        last_error.clear();
        return MSAFE_OK;
    } catch (const msafe::Error& e) {
        last_error = e.what();
        switch (e.kind()) {
        case msafe::ErrorKind::usage: return MSAFE_USAGE;
        case msafe::ErrorKind::data: return MSAFE_DATA;
        case msafe::ErrorKind::numerical: return MSAFE_NUMERICAL;
        }
        return MSAFE_INTERNAL;
    } catch (const msafe::Json::exception& e) {
        last_error = std::string("json: ") + e.what();
        return MSAFE_USAGE;
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return MSAFE_INTERNAL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return MSAFE_INTERNAL;
    }
}

void require(const void* p, const char* what)
{
    if (!p) throw msafe::UsageError(std::string(what) + " must not be null");
}

char* copy_string(const std::string& s)
{
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

msafe::Json parse_json(const char* text, const char* what)
{
    if (!text || !*text) return msafe::Json::object();
    try {
        return msafe::Json::parse(text);
    } catch (const msafe::Json::parse_error& e) {
        throw msafe::UsageError(std::string(what) + ": " + e.what());
    }
}

msafe::PipelineConfig parse_config(const char* text)
{
    return msafe::config_from_json(parse_json(text, "config"));
}

std::string dump(const msafe::Json& j) { return j.dump(2) + "\n"; }

msafe::Json basis_report(const msafe::PipelineConfig& c)
{
    const auto [t, z] = msafe::build_bases(c);
    auto describe = [](const msafe::BasisSet& b) {
        msafe::Json j;
        j["kind"] = msafe::to_string(b.kind);
        j["degree"] = b.degree;
        j["size"] = b.size();
        j["levels"] = b.levels;
        if (b.kind == msafe::BasisKind::multiscale) {
            double moment = 0.0, cross = 0.0, interpolation = 0.0;
            for (std::size_t i = 0; i < b.size(); ++i) {
                if (b.levels[i] >= 1) {
                    for (int k = 0; k <= b.degree; ++k) {
                        moment = std::max(moment, std::abs(msafe::inner_product(b.functions[i], msafe::monomial(k))));
                    }
                }
                for (std::size_t jdx = 0; jdx < b.size(); ++jdx) {
                    if (b.levels[i] != b.levels[jdx]) cross = std::max(cross, std::abs(b.gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(jdx))));
                }
            }
            const auto& seed = msafe::cubic_seed();
            for (std::size_t i = 0; i < seed.w0.size(); ++i) {
                for (std::size_t p = 0; p < seed.t_points.size(); ++p) {
                    interpolation = std::max(interpolation, std::abs(seed.w0[i](seed.t_points[p]) - (i == p ? 1.0 : 0.0)));
                }
            }
            j["max_vanishing_moment"] = moment;
            j["max_cross_level_gram"] = cross;
            j["max_interpolation_error"] = interpolation;
            j["decay_constant"] = msafe::decay_constant(b);
        }
        return j;
    };
    msafe::Json out;
    out["t_basis"] = describe(t);
    out["z_basis"] = describe(z);
    if (c.mode == msafe::BasisKind::multiscale) out["kept_t_functions"] = t.count_through_level(c.m);
    return out;
}

} // namespace

extern "C" {

const char* msafe_last_error(void) { return last_error.c_str(); }

const char* msafe_version(void) { return "0.1.0"; }

void msafe_string_free(char* s) { std::free(s); }

msafe_status msafe_config_resolve(const char* config_json, char** resolved_json)
{
    return guarded([&] {
        require(resolved_json, "output");
        *resolved_json = copy_string(dump(msafe::to_json(parse_config(config_json))));
    });
}

msafe_status msafe_dataset_load(const char* signals_path, const char* positions_path, double window,
                                msafe_dataset** out)
{
    return guarded([&] {
        require(signals_path, "signals path");
        require(positions_path, "positions path");
        require(out, "output");
        if (!(window > 0.0)) throw msafe::UsageError("window must be positive");
        auto d = std::make_unique<msafe_dataset>();
        d->data = msafe::load_dataset(signals_path, positions_path, window);
        *out = d.release();
    });
}

msafe_status msafe_dataset_synthetic(const char* options_json, msafe_dataset** out)
{
    return guarded([&] {
        require(out, "output");
        const msafe::Json j = parse_json(options_json, "synthetic options");
        msafe::SyntheticOptions o;
        for (const auto& [key, value] : j.items()) {
            if (key == "sensors") o.sensors = value.get<std::size_t>();
            else if (key == "rows") o.rows = value.get<std::size_t>();
            else if (key == "seed") o.seed = value.get<std::uint64_t>();
            else if (key == "smoothing") o.smoothing = value.get<double>();
            else if (key == "shared") o.shared = value.get<double>();
            else if (key == "window") o.window = value.get<double>();
            else throw msafe::UsageError("synthetic options: unknown key '" + key + "'");
        }
        auto d = std::make_unique<msafe_dataset>();
        d->data = msafe::synthetic_dataset(o);
        *out = d.release();
    });
}

msafe_status msafe_dataset_plant(msafe_dataset* data, const char* truth_json, const char* options_json)
{
    return guarded([&] {
        require(data, "dataset");
        const msafe::Truth truth =
            truth_json && *truth_json ? msafe::truth_from_json(parse_json(truth_json, "truth")) : msafe::default_truth();
        double theta = 0.25, eta = 10.0, snr = 10.0;
        std::uint64_t seed = 1;
        const msafe::Json options = parse_json(options_json, "plant options");
        for (const auto& [key, value] : options.items()) {
            if (key == "theta") theta = value.get<double>();
            else if (key == "eta") eta = value.get<double>();
            else if (key == "snr") snr = value.get<double>();
            else if (key == "seed") seed = value.get<std::uint64_t>();
            else throw msafe::UsageError("plant options: unknown key '" + key + "'");
        }
        if (!(snr > 0.0)) throw msafe::UsageError("plant options: snr must be positive");
        const Eigen::VectorXd signal = msafe::truth_signal(data->data, truth);
        const msafe::NoiseModel noise{theta, eta, msafe::noise_sigma(signal, theta, snr), data->data.rows()};
        noise.validate();
        const Eigen::VectorXd y = msafe::generate_responses(signal, noise, seed);
        data->data.responses.assign(y.data(), y.data() + y.size());
    });
}

msafe_status msafe_dataset_save(const msafe_dataset* data, const char* signals_path, const char* positions_path)
{
    return guarded([&] {
        require(data, "dataset");
        require(signals_path, "signals path");
        require(positions_path, "positions path");
        msafe::save_dataset(data->data, signals_path, positions_path);
    });
}

msafe_status msafe_dataset_shape(const msafe_dataset* data, size_t* rows, size_t* sensors)
{
    return guarded([&] {
        require(data, "dataset");
        if (rows) *rows = data->data.rows();
        if (sensors) *sensors = data->data.sensors();
    });
}

msafe_status msafe_dataset_set_responses(msafe_dataset* data, const double* y, size_t n)
{
    return guarded([&] {
        require(data, "dataset");
        require(y, "responses");
        if (n != data->data.rows()) throw msafe::UsageError("responses: length must equal the number of rows");
        for (size_t i = 0; i < n; ++i) {
            if (!std::isfinite(y[i])) throw msafe::DataError("responses: non-finite value");
        }
        data->data.responses.assign(y, y + n);
    });
}

msafe_status msafe_dataset_responses(const msafe_dataset* data, double* y, size_t n)
{
    return guarded([&] {
        require(data, "dataset");
        require(y, "responses");
        if (n != data->data.rows()) throw msafe::UsageError("responses: length must equal the number of rows");
        std::copy(data->data.responses.begin(), data->data.responses.end(), y);
    });
}

void msafe_dataset_free(msafe_dataset* data) { delete data; }

msafe_status msafe_basis_inspect(const char* config_json, char** report_json)
{
    return guarded([&] {
        require(report_json, "output");
        *report_json = copy_string(dump(basis_report(parse_config(config_json))));
    });
}

msafe_status msafe_design_assemble(const msafe_dataset* data, const char* config_json, msafe_design** out)
{
    return guarded([&] {
        require(data, "dataset");
        require(out, "output");
        auto d = std::make_unique<msafe_design>();
        d->config = parse_config(config_json);
        d->design = msafe::assemble_design(data->data, d->config);
        *out = d.release();
    });
}

msafe_status msafe_design_summary(const msafe_design* design, char** summary_json)
{
    return guarded([&] {
        require(design, "design");
        require(summary_json, "output");
        msafe::Json blocks = msafe::Json::array();
        for (const auto& b : design->design.blocks) {
            blocks.push_back({{"sensor", b.sensor + 1},
                              {"rows", b.rows()},
                              {"cols", b.cols()},
                              {"nonzeros", b.nonzeros()},
                              {"nnz_fraction", static_cast<double>(b.nonzeros()) /
                                                   (static_cast<double>(b.rows()) * static_cast<double>(b.cols()))},
                              {"occupied_columns", b.occupied_columns().size()}});
        }
        msafe::Json j;
        j["mode"] = msafe::to_string(design->config.mode);
        j["t_dim"] = design->design.t_basis.size();
        j["z_dim"] = design->design.z_basis.size();
        j["truncation_level"] = design->design.truncation_level;
        j["keep_fraction"] = design->design.keep_fraction;
        j["position_range"] = {design->design.map.lo, design->design.map.hi};
        j["blocks"] = std::move(blocks);
        *summary_json = copy_string(dump(j));
    });
}

msafe_status msafe_design_write_block(const msafe_design* design, size_t sensor, const char* path)
{
    return guarded([&] {
        require(design, "design");
        require(path, "path");
        if (sensor < 1 || sensor > design->design.blocks.size()) throw msafe::UsageError("block: sensor out of range");
        std::ofstream out(path);
        if (!out) throw msafe::UsageError(std::string("cannot write '") + path + "'");
        msafe::write_block(out, design->design.blocks[sensor - 1]);
    });
}

void msafe_design_free(msafe_design* design) { delete design; }

msafe_status msafe_select(const msafe_dataset* data, const msafe_design* design, const char* config_json,
                          char** stages_json)
{
    return guarded([&] {
        require(data, "dataset");
        require(design, "design");
        require(stages_json, "output");
        const auto states = msafe::select_sensors(data->data, design->design, parse_config(config_json));
        msafe::Json j = msafe::Json::array();
        for (const auto& s : states) j.push_back(msafe::to_json(s));
        *stages_json = copy_string(dump(j));
    });
}

msafe_status msafe_estimate(const msafe_dataset* data, const msafe_design* design, const char* config_json,
                            const size_t* sensors, size_t count, msafe_run** out)
{
    return guarded([&] {
        require(data, "dataset");
        require(design, "design");
        require(out, "output");
        if (count > 0) require(sensors, "sensors");
        std::vector<std::size_t> active;
        for (size_t i = 0; i < count; ++i) {
            if (sensors[i] < 1 || sensors[i] > data->data.sensors()) throw msafe::UsageError("estimate: sensor out of range");
            active.push_back(sensors[i] - 1);
        }
        auto r = std::make_unique<msafe_run>();
        r->config = parse_config(config_json);
        r->result.fit = msafe::estimate_kernels(data->data, design->design, active, r->config);
        r->result.timings = r->result.fit.timings;
        *out = r.release();
    });
}

msafe_status msafe_run_full(const msafe_dataset* data, const char* config_json, msafe_run** out)
{
    return guarded([&] {
        require(data, "dataset");
        require(out, "output");
        auto r = std::make_unique<msafe_run>();
        r->config = parse_config(config_json);
        r->result = msafe::run_full(data->data, r->config);
        *out = r.release();
    });
}

msafe_status msafe_run_report(const msafe_run* run, char** report_json)
{
    return guarded([&] {
        require(run, "run");
        require(report_json, "output");
        *report_json = copy_string(dump(msafe::run_report(run->result, run->config)));
    });
}

msafe_status msafe_run_timings(const msafe_run* run, char** timings_json)
{
    return guarded([&] {
        require(run, "run");
        require(timings_json, "output");
        *timings_json = copy_string(dump(msafe::to_json(run->result.timings)));
    });
}

msafe_status msafe_run_predict(const msafe_run* run, const msafe_dataset* data, double* y_hat, size_t n)
{
    return guarded([&] {
        require(run, "run");
        require(data, "dataset");
        require(y_hat, "output");
        if (n != data->data.rows()) throw msafe::UsageError("predict: output length must equal the number of rows");
        const Eigen::VectorXd p = msafe::predict(run->result.fit, data->data);
        std::copy(p.data(), p.data() + p.size(), y_hat);
    });
}

msafe_status msafe_run_kernel(const msafe_run* run, size_t index, double tau, double z, double* value)
{
    return guarded([&] {
        require(run, "run");
        require(value, "output");
        if (index >= run->result.fit.selected.size()) throw msafe::UsageError("kernel: index out of range");
        *value = run->result.fit.kernel(index, tau, z);
    });
}

void msafe_run_free(msafe_run* run) { delete run; }

msafe_status msafe_simulate(const msafe_dataset* data, const char* truth_json, const char* settings_json,
                            char** report_json, char** replicates_csv)
{
    return guarded([&] {
        require(data, "dataset");
        const msafe::Truth truth =
            truth_json && *truth_json ? msafe::truth_from_json(parse_json(truth_json, "truth")) : msafe::default_truth();
        const msafe::SimSettings settings = msafe::sim_settings_from_json(parse_json(settings_json, "settings"));
        const msafe::SimReport report = msafe::run_sim(data->data, truth, settings);
        if (report_json) {
            msafe::Json j;
            j["settings"] = msafe::to_json(settings);
            j["report"] = msafe::to_json(report);
            *report_json = copy_string(dump(j));
        }
        if (replicates_csv) {
            std::ostringstream csv;
            msafe::write_sim_csv(csv, report);
            *replicates_csv = copy_string(csv.str());
        }
    });
}

msafe_status msafe_bench(const msafe_dataset* data, const char* baseline_json, const char* candidate_json,
                         char** report_json, char** table_csv)
{
    return guarded([&] {
        require(data, "dataset");
        const msafe::BenchReport r =
            msafe::run_bench(data->data, parse_config(baseline_json), parse_config(candidate_json));
        if (report_json) *report_json = copy_string(dump(msafe::to_json(r)));
        if (table_csv) {
            std::ostringstream csv;
            msafe::write_bench_csv(csv, r);
            *table_csv = copy_string(csv.str());
        }
    });
}

msafe_status msafe_file_hash(const char* path, char hex[41])
{
    return guarded([&] {
        require(path, "path");
        require(hex, "output");
        std::ifstream in(path, std::ios::binary);
        if (!in) throw msafe::UsageError(std::string("cannot read '") + path + "'");
        const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        const std::string header = "blob " + std::to_string(content.size()) + '\0';
        unsigned char digest[EVP_MAX_MD_SIZE];
        unsigned int length = 0;
        std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
        if (!ctx || !EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) ||
            !EVP_DigestUpdate(ctx.get(), header.data(), header.size()) ||
            !EVP_DigestUpdate(ctx.get(), content.data(), content.size()) ||
            !EVP_DigestFinal_ex(ctx.get(), digest, &length) || length != 20) {
            throw std::runtime_error("sha1 digest failed");
        }
        static const char* digits = "0123456789abcdef";
        for (int i = 0; i < 20; ++i) {
            hex[2 * i] = digits[digest[i] >> 4];
            hex[2 * i + 1] = digits[digest[i] & 0xf];
        }
        hex[40] = '\0';
    });
}

} // extern "C"
