#include <msafe/bench.hpp>
#include <msafe/error.hpp>

#include "parallel.hpp"

#include <chrono>
#include <cmath>

namespace msafe {

void MagnitudeHistogram::add(const Eigen::MatrixXd& m)
{
    if (decades < 1) throw UsageError("histogram: need at least one decade");
    counts.resize(static_cast<std::size_t>(decades) + 1, 0);
    const double top = m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            const double r = top > 0.0 ? std::abs(m(i, j)) / top : 0.0;
            std::size_t bin = static_cast<std::size_t>(decades);
            for (int d = 0; d < decades; ++d) {
                if (r > std::pow(10.0, -(d + 1))) {
                    bin = static_cast<std::size_t>(d);
                    break;
                }
            }
            ++counts[bin];
            ++total;
        }
    }
}

double MagnitudeHistogram::fraction(std::size_t bin) const
{
    return total ? static_cast<double>(counts.at(bin)) / static_cast<double>(total) : 0.0;
}

double MagnitudeHistogram::lower_edge(std::size_t bin) const
{
    return bin >= static_cast<std::size_t>(decades) ? 0.0 : std::pow(10.0, -static_cast<double>(bin + 1));
}

double small_entry_fraction(const std::vector<Eigen::MatrixXd>& matrices, double threshold)
{
    std::size_t small = 0, total = 0;
    for (const auto& m : matrices) {
        const double top = m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
        small += static_cast<std::size_t>((m.array().abs() < threshold * top).count());
        total += static_cast<std::size_t>(m.size());
    }
    return total ? static_cast<double>(small) / static_cast<double>(total) : 0.0;
}

std::vector<Eigen::MatrixXd> coefficient_matrices(const Dataset& data, const PipelineConfig& config)
{
    const auto bases = build_bases(config);
    std::vector<Eigen::MatrixXd> out(data.sensors());
    detail::parallel_for(data.sensors(), config.threads, [&](std::size_t k) {
        out[k] = window_coefficients(data, k, bases.first, bases.first.size());
    });
    return out;
}

ModeBench bench_mode(const Dataset& data, const PipelineConfig& config)
{
    ModeBench b;
    b.mode = config.mode;
    const auto start = std::chrono::steady_clock::now();
    const AssembledDesign design = assemble_design(data, config);
    const double assembly = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const RunResult run = run_on_design(data, design, config);
    b.timings = run.timings;
    b.timings.assembly = assembly;
    b.cv_mse = run.fit.cv_mse;
    b.selected = run.fit.selected;

    for (const auto& block : design.blocks) {
        b.block_nnz_fraction.push_back(static_cast<double>(block.nonzeros()) /
                                       (static_cast<double>(block.rows()) * static_cast<double>(block.cols())));
    }
    const auto coefficients = coefficient_matrices(data, config);
    for (const auto& c : coefficients) b.histogram.add(c);
    b.small_fraction = small_entry_fraction(coefficients, 1e-3);
    return b;
}

double BenchReport::time_ratio() const
{
    const double base = baseline.total_time();
    return base > 0.0 ? candidate.total_time() / base : 0.0;
}

BenchReport run_bench(const Dataset& data, const PipelineConfig& baseline, const PipelineConfig& candidate)
{
    if (baseline.seed != candidate.seed) throw UsageError("bench: both configs must share the seed");
    BenchReport r;
    r.baseline = bench_mode(data, baseline);
    r.candidate = bench_mode(data, candidate);
    return r;
}

} // namespace msafe
