#pragma once
#include <msafe/assembly.hpp>
#include <msafe/group_lasso.hpp>
#include <msafe/penalty.hpp>

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace msafe {

/// Cross-validation grids. Lambda uses the natural log; the ridge parameter
/// phi is listed by log10.
struct CvGrid
{
    std::vector<double> log_lambda;
    std::vector<double> log_phi_t;
    std::vector<double> log_phi_z;
    std::vector<double> log10_phi;
    int folds = 5;

    /// ln lambda in -20..0 step 0.25, ln phi_t, ln phi_z in -10..0 step 2.5,
    /// log10 phi in {-1..-5}, 5 folds.
    static CvGrid standard();

    /// Same ranges with a coarser lambda step.
    static CvGrid with_lambda_step(double step);
};

/// Inclusive arithmetic range lo, lo+step, ..., hi.
std::vector<double> grid_range(double lo, double hi, double step);

struct PipelineConfig
{
    BasisKind mode = BasisKind::multiscale;
    int p = 3;
    int n = 2;
    int m = 1;
    int q = 10;     // z spline dimension
    int t_q = 10;   // t spline dimension in spline mode
    double keep_fraction = 0.1;
    int stages = 5;
    CvGrid grid = CvGrid::standard();
    std::uint64_t seed = 1;
    SolverMethod solver = SolverMethod::kernel_newton;
    double tol = 1e-8;
    long max_iter = 100000;
    bool early_exit = true;
    OperatorStorage storage = OperatorStorage::automatic;
    int threads = 1;

    /// Defaults of the spline (single-scale) mode: 10 x 10 splines, no
    /// sparsification, dense substituted operators.
    static PipelineConfig spline_defaults();
    static PipelineConfig multiscale_defaults();

    /// Throws UsageError on inconsistent settings.
    void validate() const;
};

/// Bases and per-sensor blocks for one dataset.
struct AssembledDesign
{
    BasisSet t_basis;
    BasisSet z_basis;
    PositionMap map;
    int truncation_level = -1;
    double keep_fraction = 1.0;
    std::vector<DesignBlock> blocks;
    PenaltyComponents components;
};

std::pair<BasisSet, BasisSet> build_bases(const PipelineConfig& config);

AssembledDesign assemble_design(const Dataset& data, const PipelineConfig& config);

/// Blocks for new data with the bases and position map of an existing design.
std::vector<DesignBlock> assemble_blocks(const Dataset& data, const AssembledDesign& like,
                                         std::span<const std::size_t> sensors);

/// Fold index of every row: contiguous blocks after a seeded rotation.
std::vector<int> fold_assignment(std::size_t rows, int folds, std::uint64_t seed);

/// Outcome of one selection stage. `selected` is the active set K^r; beta
/// and the updated weights f, g, h are listed per selected sensor.
struct StageState
{
    int stage = 0;
    std::vector<std::size_t> candidates;  // K^{r-1}, zero-based sensors
    std::vector<std::size_t> selected;    // K^r
    std::vector<Eigen::VectorXd> beta;
    std::vector<double> f, g, h;
    double lambda = 0.0;
    double phi_t = 0.0;
    double phi_z = 0.0;
    double cv_mse = 0.0;
    std::size_t lambdas_evaluated = 0;  // grid points with a full set of folds
};

/// 1/||gamma|| from a squared norm; 1e12 when the norm is below 1e-12.
double adaptive_weight(double norm2);

/// Multistage adaptive group-lasso selection. Returns one state per stage
/// run; stops early when the active set and weights stabilize or become
/// empty.
std::vector<StageState> select_sensors(const Dataset& data, const AssembledDesign& design,
                                       const PipelineConfig& config);

struct Timings
{
    double assembly = 0.0;
    double selection = 0.0;
    double estimation = 0.0;
};

struct FitResult
{
    BasisKind mode = BasisKind::multiscale;
    BasisSet t_basis;
    BasisSet z_basis;
    PositionMap map;
    int truncation_level = -1;
    double keep_fraction = 1.0;
    std::vector<std::size_t> selected;
    std::vector<Eigen::VectorXd> beta;  // per selected sensor, column-stacked
    double phi = 0.0;
    double phi_t = 0.0;
    double phi_z = 0.0;
    double cv_mse = 0.0;
    bool ridge_fallback = false;
    Timings timings;

    /// gamma_k(tau, z) for the i-th selected sensor, z in raw units.
    double kernel(std::size_t index, double tau, double z) const;
    /// {||gamma||^2, ||d2_t gamma||^2, ||d2_z gamma||^2} by quadratic forms.
    std::array<double, 3> kernel_norms2(std::size_t index) const;
};

/// Ridge estimation over (phi, phi_t, phi_z) with k-fold CV, then a final
/// fit on all rows. Spline mode fixes phi = 0.
FitResult estimate_kernels(const Dataset& data, const AssembledDesign& design, std::span<const std::size_t> active,
                           const PipelineConfig& config);

/// Predictions sum_k A_k beta_k. Blocks are assembled with the fit's bases,
/// position map, truncation and sparsification, so predicting on the
/// training data reproduces the fitted values.
Eigen::VectorXd predict(const FitResult& fit, const Dataset& data);

struct RunResult
{
    FitResult fit;
    std::vector<StageState> stages;
    Timings timings;
};

/// Selection then estimation on an assembled design; an empty selection
/// reports the CV error of the zero predictor. Assembly time is left at 0.
RunResult run_on_design(const Dataset& data, const AssembledDesign& design, const PipelineConfig& config);

RunResult run_full(const Dataset& data, const PipelineConfig& config);

} // namespace msafe
