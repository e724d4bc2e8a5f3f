#pragma once
#include <msafe/pipeline.hpp>

#include <array>
#include <string>
#include <vector>

namespace msafe {

/// Histogram of |x| / max|x| over decades: bin 0 is (1e-1, 1], bin d is
/// (1e-(d+1), 1e-d], and the last bin collects everything at or below
/// 1e-decades, zeros included.
struct MagnitudeHistogram
{
    int decades = 6;
    std::vector<std::size_t> counts;  // decades + 1 bins, largest magnitudes first
    std::size_t total = 0;

    void add(const Eigen::MatrixXd& m);
    double fraction(std::size_t bin) const;
    /// Lower edge of a bin relative to the maximum; 0 for the last bin.
    double lower_edge(std::size_t bin) const;
};

/// Fraction of entries with |x| < threshold * max|x|, pooled over matrices
/// with each matrix scaled by its own maximum.
double small_entry_fraction(const std::vector<Eigen::MatrixXd>& matrices, double threshold);

/// Untruncated t-coefficient matrices (rows x t_dim, entries int X w_j) of
/// every sensor for the mode's t basis.
std::vector<Eigen::MatrixXd> coefficient_matrices(const Dataset& data, const PipelineConfig& config);

struct ModeBench
{
    BasisKind mode = BasisKind::multiscale;
    Timings timings;
    double cv_mse = 0.0;
    std::vector<std::size_t> selected;
    std::vector<double> block_nnz_fraction;  // stored entries / (rows * cols) per sensor
    MagnitudeHistogram histogram;            // of the coefficient matrices
    double small_fraction = 0.0;             // below 1e-3 of the maximum

    double total_time() const { return timings.assembly + timings.selection + timings.estimation; }
};

/// Usually baseline = spline mode, candidate = multiscale mode.
struct BenchReport
{
    ModeBench baseline;
    ModeBench candidate;

    /// candidate / baseline total wall time.
    double time_ratio() const;
};

/// Runs both pipelines on the same data. The configs must agree on seed.
BenchReport run_bench(const Dataset& data, const PipelineConfig& baseline, const PipelineConfig& candidate);

ModeBench bench_mode(const Dataset& data, const PipelineConfig& config);

} // namespace msafe
