#include <msafe/error.hpp>
#include <msafe/simulation.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

namespace msafe {
namespace {

std::mt19937_64 seeded(std::initializer_list<std::uint64_t> seed)
{
    std::vector<std::uint32_t> words;
    for (std::uint64_t s : seed) {
        words.push_back(static_cast<std::uint32_t>(s));
        words.push_back(static_cast<std::uint32_t>(s >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    return std::mt19937_64(seq);
}

// White noise on an extended grid smoothed by a truncated Gaussian, scaled
// to unit sample variance.
Eigen::VectorXd smoothed_noise(std::mt19937_64& rng, std::size_t length, double width)
{
    std::normal_distribution<double> normal;
    const int half = std::max(1, static_cast<int>(std::ceil(4.0 * width)));
    Eigen::VectorXd raw(static_cast<Eigen::Index>(length) + 2 * half);
    for (Eigen::Index i = 0; i < raw.size(); ++i) raw[i] = normal(rng);
    Eigen::VectorXd weights(2 * half + 1);
    for (int d = -half; d <= half; ++d) weights[d + half] = std::exp(-0.5 * (d / width) * (d / width));
    Eigen::VectorXd out(static_cast<Eigen::Index>(length));
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = raw.segment(i, weights.size()).dot(weights);
    out.array() -= out.mean();
    const double sd = std::sqrt(out.squaredNorm() / static_cast<double>(std::max<Eigen::Index>(out.size() - 1, 1)));
    if (sd > 0.0) out /= sd;
    return out;
}

std::vector<std::size_t> one_based(std::initializer_list<std::size_t> sensors)
{
    std::vector<std::size_t> out;
    for (std::size_t s : sensors) out.push_back(s - 1);
    return out;
}

PipelineConfig mode_config(BasisKind mode, const SimSettings& settings)
{
    PipelineConfig c =
        mode == BasisKind::spline ? PipelineConfig::spline_defaults() : PipelineConfig::multiscale_defaults();
    c.stages = settings.stages;
    c.grid = settings.grid;
    c.seed = settings.seed;
    c.threads = settings.threads;
    return c;
}

double sample_sd(const std::vector<double>& values, double mean)
{
    if (values.size() < 2) return 0.0;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

} // namespace

Eigen::MatrixXd NoiseModel::covariance() const
{
    validate();
    const auto n = static_cast<Eigen::Index>(length);
    Eigen::MatrixXd s(n, n);
    const double s2 = sigma * sigma;
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = j; i < n; ++i) {
            const double lag = static_cast<double>(i - j);
            const double v = s2 * ((i == j ? 1.0 : 0.0) + theta * std::exp(-(lag * lag) / (eta * eta)));
            s(i, j) = v;
            s(j, i) = v;
        }
    }
    return s;
}

Eigen::MatrixXd NoiseModel::cholesky_factor() const
{
    Eigen::LLT<Eigen::MatrixXd> llt(covariance());
    if (llt.info() != Eigen::Success) throw NumericalError("noise covariance is not positive definite");
    return llt.matrixL();
}

void NoiseModel::validate() const
{
    if (!(theta > 0.0) || !(eta > 0.0) || !(sigma > 0.0)) {
        throw UsageError("noise model: theta, eta and sigma must be positive");
    }
    if (length == 0) throw UsageError("noise model: length must be at least 1");
}

Eigen::VectorXd standard_normal(std::size_t length, std::initializer_list<std::uint64_t> seed)
{
    auto rng = seeded(seed);
    std::normal_distribution<double> normal;
    Eigen::VectorXd g(static_cast<Eigen::Index>(length));
    for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = normal(rng);
    return g;
}

Eigen::VectorXd sample_noise(const NoiseModel& model, std::uint64_t seed)
{
    return model.cholesky_factor() * standard_normal(model.length, {seed});
}

Dataset synthetic_dataset(const SyntheticOptions& o)
{
    if (o.sensors == 0 || o.rows < 2) throw UsageError("synthetic data: need sensors and at least 2 rows");
    if (!(o.sample_step > 0.0) || !(o.first_time - o.window >= 0.0) || !(o.last_time > o.first_time)) {
        throw UsageError("synthetic data: inconsistent time range");
    }
    if (o.shared < 0.0 || o.shared > 1.0) throw UsageError("synthetic data: shared must lie in [0, 1]");

    auto rng = seeded({o.seed, 0x5157ULL});
    const auto samples = static_cast<std::size_t>(std::llround(o.last_time / o.sample_step)) + 1;
    Dataset d;
    d.window = o.window;
    d.signals.time.resize(samples);
    for (std::size_t i = 0; i < samples; ++i) d.signals.time[i] = static_cast<double>(i) * o.sample_step;
    d.signals.time.back() = std::max(d.signals.time.back(), o.last_time);

    const double width = o.smoothing / o.sample_step;
    const Eigen::VectorXd common = smoothed_noise(rng, samples, width);
    d.signals.values.resize(static_cast<Eigen::Index>(samples), static_cast<Eigen::Index>(o.sensors));
    for (std::size_t k = 0; k < o.sensors; ++k) {
        d.signals.values.col(static_cast<Eigen::Index>(k)) =
            std::sqrt(1.0 - o.shared) * smoothed_noise(rng, samples, width) + std::sqrt(o.shared) * common;
    }

    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    const double p1 = phase(rng);
    const double p2 = phase(rng);
    d.times.resize(o.rows);
    d.positions.resize(o.rows);
    d.responses.assign(o.rows, 0.0);
    for (std::size_t i = 0; i < o.rows; ++i) {
        const double t = o.first_time + (o.last_time - o.first_time) * static_cast<double>(i) /
                                            static_cast<double>(o.rows - 1);
        d.times[i] = t;
        d.positions[i] = std::sin(2.0 * std::numbers::pi * t / o.position_period + p1) +
                         0.3 * std::sin(2.0 * std::numbers::pi * t / 1.3 + p2);
    }
    d.validate();
    return d;
}

std::vector<std::size_t> Truth::sensors() const
{
    std::vector<std::size_t> out;
    for (const auto& k : kernels) out.push_back(k.sensor);
    return out;
}

Eigen::VectorXd Truth::beta(std::size_t index) const
{
    const auto& k = kernels.at(index);
    const std::size_t td = k.t_coefficients.size();
    Eigen::VectorXd b(static_cast<Eigen::Index>(td * k.z_coefficients.size()));
    for (std::size_t l = 0; l < k.z_coefficients.size(); ++l) {
        for (std::size_t j = 0; j < td; ++j) b[static_cast<Eigen::Index>(l * td + j)] = k.z_coefficients[l] * k.t_coefficients[j];
    }
    return b;
}

void Truth::validate() const
{
    if (p != 3 || n < 0 || q < 4) throw UsageError("truth: unsupported basis (p must be 3, n >= 0, q >= 4)");
    const std::size_t td = static_cast<std::size_t>(p + 1) << n;
    std::vector<std::size_t> seen;
    for (const auto& k : kernels) {
        if (k.t_coefficients.size() != td || k.z_coefficients.size() != static_cast<std::size_t>(q)) {
            throw UsageError("truth: kernel coefficient counts do not match the basis");
        }
        if (std::find(seen.begin(), seen.end(), k.sensor) != seen.end()) throw UsageError("truth: duplicate sensor");
        seen.push_back(k.sensor);
    }
}

Truth default_truth()
{
    Truth t;
    const auto sensors = one_based({7, 12});
    t.kernels.push_back({sensors[0],
                         {0.8, 1.2, -0.5, 0.3, 0.25, -0.2, 0.15, 0.1, 0, 0, 0, 0, 0, 0, 0, 0},
                         {0.1054, 0.3679, 0.7788, 1.0, 0.7788, 0.3679, 0.1054, 0.0183, 0.0019, 0.0001}});
    t.kernels.push_back({sensors[1],
                         {-0.6, 0.9, 1.0, -0.4, 0, 0.2, -0.15, 0.1, 0, 0, 0, 0, 0, 0, 0, 0},
                         {0.0032, 0.0183, 0.0773, 0.2369, 0.5273, 0.8521, 1.0, 0.8521, 0.5273, 0.2369}});
    return t;
}

Eigen::VectorXd truth_signal(const Dataset& data, const Truth& truth)
{
    truth.validate();
    const BasisSet t_basis = build_multiscale_basis(truth.p, truth.n);
    const BasisSet z_basis = build_spline_basis(truth.q);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(data.rows()));
    for (std::size_t i = 0; i < truth.kernels.size(); ++i) {
        const std::size_t k = truth.kernels[i].sensor;
        if (k >= data.sensors()) {
            throw DataError("truth sensor " + std::to_string(k + 1) + " out of range (dataset has " +
                            std::to_string(data.sensors()) + ")");
        }
        y += assemble_block(data, k, t_basis, z_basis, -1).matrix * truth.beta(i);
    }
    return y;
}

double noise_sigma(const Eigen::VectorXd& signal, double theta, double snr)
{
    if (!(snr > 0.0) || !(theta >= 0.0) || signal.size() == 0) throw UsageError("noise scale: need snr > 0");
    const double v = signal.squaredNorm() / (snr * snr * static_cast<double>(signal.size()));
    return std::sqrt(v / (1.0 + theta));
}

Eigen::VectorXd generate_responses(const Eigen::VectorXd& signal, const NoiseModel& noise, std::uint64_t seed)
{
    if (static_cast<Eigen::Index>(noise.length) != signal.size()) throw UsageError("noise length must match rows");
    return signal + sample_noise(noise, seed);
}

void SimSettings::validate() const
{
    if (replicates < 1) throw UsageError("simulation: replicates must be at least 1");
    if (thetas.empty() || etas.empty() || modes.empty()) throw UsageError("simulation: empty settings");
    for (double t : thetas) {
        if (!(t > 0.0)) throw UsageError("simulation: theta must be positive");
    }
    for (double e : etas) {
        if (!(e > 0.0)) throw UsageError("simulation: eta must be positive");
    }
    if (!(snr > 0.0)) throw UsageError("simulation: snr must be positive");
    if (stages < 1) throw UsageError("simulation: stages must be at least 1");
}

std::size_t count_false_positives(const std::vector<std::size_t>& selected, const std::vector<std::size_t>& truth,
                                  const std::vector<std::size_t>& excluded)
{
    std::size_t count = 0;
    for (std::size_t k : selected) {
        const bool known = std::find(truth.begin(), truth.end(), k) != truth.end() ||
                           std::find(excluded.begin(), excluded.end(), k) != excluded.end();
        if (!known) ++count;
    }
    return count;
}

SimSummary summarize(const std::vector<ReplicateRow>& rows)
{
    if (rows.empty()) throw UsageError("summary of no replicates");
    SimSummary s;
    s.theta = rows.front().theta;
    s.eta = rows.front().eta;
    s.mode = rows.front().mode;
    s.replicates = static_cast<int>(rows.size());
    std::vector<double> sizes, mses;
    for (const auto& r : rows) {
        sizes.push_back(static_cast<double>(r.selected.size()));
        mses.push_back(r.cv_mse);
        s.mean_false_positive += static_cast<double>(r.false_positives);
        s.mean_time += r.time;
        if (r.recovered) ++s.recovered;
    }
    const double j = static_cast<double>(rows.size());
    for (double v : sizes) s.mean_size += v;
    for (double v : mses) s.mean_cv_mse += v;
    s.mean_size /= j;
    s.mean_cv_mse /= j;
    s.mean_false_positive /= j;
    s.mean_time /= j;
    s.size_sd = sample_sd(sizes, s.mean_size);
    s.cv_mse_sd = sample_sd(mses, s.mean_cv_mse);
    return s;
}

SimReport run_sim(const Dataset& data, const Truth& truth, const SimSettings& settings)
{
    settings.validate();
    SimReport report;
    report.truth = truth.sensors();
    report.excluded = one_based({5});
    const Eigen::VectorXd signal = truth_signal(data, truth);
    const std::size_t rows = data.rows();

    std::vector<Eigen::VectorXd> normals;
    for (int j = 0; j < settings.replicates; ++j) {
        normals.push_back(standard_normal(rows, {settings.seed, static_cast<std::uint64_t>(j)}));
    }

    for (BasisKind mode : settings.modes) {
        const PipelineConfig config = mode_config(mode, settings);
        const AssembledDesign design = assemble_design(data, config);
        for (double theta : settings.thetas) {
            for (double eta : settings.etas) {
                const NoiseModel noise{theta, eta, noise_sigma(signal, theta, settings.snr), rows};
                const Eigen::MatrixXd factor = noise.cholesky_factor();
                std::vector<ReplicateRow> block;
                for (int j = 0; j < settings.replicates; ++j) {
                    Dataset d = data;
                    const Eigen::VectorXd y = signal + factor * normals[static_cast<std::size_t>(j)];
                    d.responses.assign(y.data(), y.data() + y.size());
                    const RunResult run = run_on_design(d, design, config);

                    ReplicateRow r;
                    r.theta = theta;
                    r.eta = eta;
                    r.mode = mode;
                    r.replicate = j;
                    r.selected = run.fit.selected;
                    r.false_positives = count_false_positives(r.selected, report.truth, report.excluded);
                    r.recovered = std::all_of(report.truth.begin(), report.truth.end(), [&](std::size_t k) {
                        return std::find(r.selected.begin(), r.selected.end(), k) != r.selected.end();
                    });
                    r.cv_mse = run.fit.cv_mse;
                    r.time = run.timings.selection + run.timings.estimation;
                    block.push_back(std::move(r));
                }
                report.summaries.push_back(summarize(block));
                report.rows.insert(report.rows.end(), block.begin(), block.end());
            }
        }
    }
    return report;
}

} // namespace msafe
