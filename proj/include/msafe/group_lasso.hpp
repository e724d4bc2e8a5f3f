#pragma once
#include <msafe/assembly.hpp>
#include <msafe/penalty.hpp>

#include <Eigen/Dense>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

namespace msafe {

/**
 * Design of one group in substituted coordinates, A_k L_k^{-T}.
 *
 * Implementations differ only in storage; all of them compute the same
 * products.
 */
class GroupOperator
{
public:
    virtual ~GroupOperator() = default;

    virtual Eigen::Index rows() const = 0;
    virtual Eigen::Index cols() const = 0;

    /// out = A u
    virtual void apply(const Eigen::VectorXd& u, Eigen::VectorXd& out) const = 0;
    /// out = A^T r
    virtual void apply_transpose(const Eigen::VectorXd& r, Eigen::VectorXd& out) const = 0;

    /// Same operator on a subset of rows, in the given order.
    virtual std::shared_ptr<const GroupOperator> restrict_rows(std::span<const Eigen::Index> rows) const = 0;

    /// Approximate flops of one apply plus one apply_transpose.
    virtual double cost() const = 0;

    Eigen::MatrixXd to_dense() const;
};

using GroupOperatorPtr = std::shared_ptr<const GroupOperator>;

GroupOperatorPtr make_dense_operator(Eigen::MatrixXd a);
GroupOperatorPtr make_sparse_operator(SparseMatrix a);

/// A_kept L22^{-T} applied through a sparse product and triangular solves.
GroupOperatorPtr make_factored_operator(SparseMatrix a_kept, std::shared_ptr<const Eigen::MatrixXd> lower);

/// Dense substituted block A L^{-T} for a full penalty factor.
Eigen::MatrixXd substitute(const DesignBlock& block, const PenaltyMatrix& penalty);

/// Columns of a sparse matrix, in the given order.
SparseMatrix select_columns(const SparseMatrix& a, std::span<const Eigen::Index> columns);

enum class OperatorStorage
{
    automatic,  // cheaper of dense and factored by flop estimate
    dense,
    factored,
};

/// Substituted operator of a block whose empty columns are eliminated by a
/// reduced penalty factor.
GroupOperatorPtr reduced_operator(const DesignBlock& block, const ReducedPenalty& penalty, OperatorStorage storage);

/// Eigendecomposition A^T A = V diag(values) V^T of one group.
struct GroupSpectrum
{
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};

struct GroupProblem
{
    std::vector<GroupOperatorPtr> groups;
    Eigen::VectorXd response;
    /// Majorization constants, >= the largest eigenvalue of 2 A_k^T A_k.
    /// Computed by prepare() when empty.
    std::vector<double> eta;
    /// Per-group spectra for exact block updates; filled on demand.
    std::vector<std::shared_ptr<const GroupSpectrum>> spectra;
    /// Row-space kernels A_k A_k^T; filled on demand.
    std::vector<std::shared_ptr<const Eigen::MatrixXd>> kernels;

    void prepare();
    void prepare_spectra();
    void prepare_kernels();
    Eigen::Index rows() const { return response.size(); }
    /// Row subset. Majorization constants carry over and kernels are
    /// restricted; spectra are dropped.
    GroupProblem restrict_rows(std::span<const Eigen::Index> rows) const;
};

GroupSpectrum group_spectrum(const GroupOperator& a);

/// Largest eigenvalue of 2 A^T A by power iteration, slightly inflated.
double majorization_constant(const GroupOperator& a);

enum class SolverMethod
{
    kernel_newton,  // projected Newton on the per-group scales (see solve)
    exact_block,    // cyclic descent, each group minimized exactly
    majorized,      // cyclic descent, one soft-threshold step of size 1/eta
};

struct SolverOptions
{
    SolverMethod method = SolverMethod::kernel_newton;
    double tol = 1e-8;
    long max_iter = 100000;
    std::ostream* trace = nullptr;  // JSON lines per sweep
};

struct SolverReport
{
    long iterations = 0;
    double objective = 0.0;
    double kkt = 0.0;
    std::size_t active = 0;
    bool converged = false;
};

using GroupCoefficients = std::vector<Eigen::VectorXd>;

struct GroupSolution
{
    double lambda = 0.0;
    GroupCoefficients coefficients;  // substituted coordinates u_k
    Eigen::VectorXd residual;        // y - sum_k A_k u_k
    SolverReport report;
};

/// max_k 2 ||A_k^T y||
double lambda_max(const GroupProblem& problem);

double objective(const GroupProblem& problem, double lambda, const GroupCoefficients& u);

/// Max over groups of the stationarity violation.
double kkt_residual(const GroupProblem& problem, double lambda, const GroupCoefficients& u);

GroupCoefficients zero_coefficients(const GroupProblem& problem);

/**
 * Solves min ||y - sum_k A_k u_k||^2 + lambda sum_k ||u_k||.
 *
 * kernel_newton minimizes the equivalent convex problem in the scales
 * nu_k = ||u_k|| / lambda >= 0,
 *   Phi(nu) = y^T (I + 2 sum_k nu_k K_k)^{-1} y + lambda^2 / 2 sum_k nu_k,
 * with K_k = A_k A_k^T, by projected Newton; then r = (I + 2 sum nu K)^{-1} y
 * and u_k = 2 nu_k A_k^T r. It stops when the KKT residual is below tol.
 *
 * The cyclic methods sweep all groups, then iterate on the active ones, and
 * stop when max_k eta_k ||delta u_k||_inf < tol.
 */
GroupSolution solve(const GroupProblem& problem, double lambda, const SolverOptions& options = {},
                    const GroupCoefficients* warm = nullptr);

struct PathOptions
{
    SolverOptions solver;
    bool early_exit = false;
    double max_deviance_ratio = 0.999;
    double min_relative_change = 1e-5;
};

/// Warm-started solves over a strictly descending lambda list. With early
/// exit, the path stops once the fit saturates and the result is shorter
/// than the list.
std::vector<GroupSolution> solve_path(const GroupProblem& problem, std::span<const double> lambdas,
                                      const PathOptions& options = {});

} // namespace msafe
