#pragma once
#include <msafe/pipeline.hpp>

#include <Eigen/Dense>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace msafe {

/// Gaussian noise with covariance sigma^2 [delta_ij + theta exp(-(i-j)^2 / eta^2)].
struct NoiseModel
{
    double theta = 0.25;
    double eta = 10.0;
    double sigma = 1.0;
    std::size_t length = 0;

    Eigen::MatrixXd covariance() const;
    /// Lower Cholesky factor of the covariance; NumericalError if it fails.
    Eigen::MatrixXd cholesky_factor() const;
    /// Throws UsageError unless theta, eta, sigma > 0 and length >= 1.
    void validate() const;
};

/// Standard normal vector from a generator seeded with the sequence of
/// `seed` values.
Eigen::VectorXd standard_normal(std::size_t length, std::initializer_list<std::uint64_t> seed);

/// L g with L the Cholesky factor of the model's covariance.
Eigen::VectorXd sample_noise(const NoiseModel& model, std::uint64_t seed);

/// Seeded stand-in for a multichannel recording: band-limited signals from
/// Gaussian-smoothed white noise with a shared component, and positions
/// oscillating around a slow drift.
struct SyntheticOptions
{
    std::size_t sensors = 16;
    std::size_t rows = 198;
    double sample_step = 0.01;
    double first_time = 0.35;
    double last_time = 2.3;
    double window = 1.0 / 3.0;
    double smoothing = 0.013;     // sd of the smoothing kernel, seconds
    double shared = 0.3;          // variance share of the common component
    double position_period = 0.4;
    std::uint64_t seed = 1;
};

/// Signals and positions; responses are left at zero.
Dataset synthetic_dataset(const SyntheticOptions& options = {});

/// Ground-truth kernels gamma_k(tau, z) = (sum_j a_j w_j(tau)) (sum_l b_l s_l(z))
/// on the multiscale t basis and a spline z basis.
struct TruthKernel
{
    std::size_t sensor = 0;  // zero-based
    std::vector<double> t_coefficients;
    std::vector<double> z_coefficients;
};

struct Truth
{
    int p = 3;
    int n = 2;
    int q = 10;
    std::vector<TruthKernel> kernels;

    std::vector<std::size_t> sensors() const;
    /// Column-stacked coefficients, entry l * t_dim + j = b_l a_j.
    Eigen::VectorXd beta(std::size_t index) const;
    void validate() const;
};

/// Kernels on sensors 7 and 12 (one-based) of 16.
Truth default_truth();

/// Noise-free responses sum_k A_k beta_k with untruncated, unsparsified
/// blocks at the truth's resolution. DataError for a sensor out of range.
Eigen::VectorXd truth_signal(const Dataset& data, const Truth& truth);

/// sigma with sigma^2 (1 + theta) = ||signal||^2 / (snr^2 N), so the
/// expected signal-to-noise ratio is `snr` for every theta.
double noise_sigma(const Eigen::VectorXd& signal, double theta, double snr);

/// signal + noise.
Eigen::VectorXd generate_responses(const Eigen::VectorXd& signal, const NoiseModel& noise, std::uint64_t seed);

struct SimSettings
{
    std::vector<double> thetas{0.25, 10.0, 100.0};
    std::vector<double> etas{10.0, 100.0};
    int replicates = 20;
    std::vector<BasisKind> modes{BasisKind::spline, BasisKind::multiscale};
    std::uint64_t seed = 1;
    double snr = 10.0;
    int stages = 2;
    CvGrid grid = CvGrid::standard();
    int threads = 1;

    void validate() const;
};

struct ReplicateRow
{
    double theta = 0.0;
    double eta = 0.0;
    BasisKind mode = BasisKind::multiscale;
    int replicate = 0;
    std::vector<std::size_t> selected;
    std::size_t false_positives = 0;
    bool recovered = false;
    double cv_mse = 0.0;
    double time = 0.0;  // selection + estimation, seconds
};

struct SimSummary
{
    double theta = 0.0;
    double eta = 0.0;
    BasisKind mode = BasisKind::multiscale;
    int replicates = 0;
    double mean_size = 0.0;
    double size_sd = 0.0;
    double mean_false_positive = 0.0;
    double mean_cv_mse = 0.0;
    double cv_mse_sd = 0.0;
    double mean_time = 0.0;
    int recovered = 0;
};

struct SimReport
{
    std::vector<std::size_t> truth;
    std::vector<std::size_t> excluded;  // sensors never counted as false positives
    std::vector<SimSummary> summaries;
    std::vector<ReplicateRow> rows;
};

/// Summary of the rows of one setting and mode. Sample standard deviations
/// are zero for a single replicate.
SimSummary summarize(const std::vector<ReplicateRow>& rows);

/// Selected sensors outside truth and `excluded`.
std::size_t count_false_positives(const std::vector<std::size_t>& selected, const std::vector<std::size_t>& truth,
                                  const std::vector<std::size_t>& excluded);

/// Every (theta, eta) setting and mode over J noise replicates. Replicate j
/// draws the same standard normals in every setting and mode, so modes are
/// compared on paired noise. Sensor 5 (one-based) is excluded from false
/// positives.
SimReport run_sim(const Dataset& data, const Truth& truth, const SimSettings& settings);

} // namespace msafe
