#pragma once
#include <msafe/basis.hpp>
#include <msafe/dataset.hpp>

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <iosfwd>
#include <span>

namespace msafe {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

/**
 * Design block of one sensor: N rows, t_dim * z_dim columns.
 *
 * The entry for t-function j and z-function l sits in column l * t_dim + j
 * (column-stacked coefficient matrix). Columns of multiscale levels above
 * the truncation level are structurally empty.
 */
struct DesignBlock
{
    std::size_t sensor = 0;  // zero-based
    SparseMatrix matrix;
    std::size_t t_dim = 0;
    std::size_t z_dim = 0;
    int truncation_level = -1;  // -1: nothing truncated
    double kept_fraction = 1.0;

    std::size_t rows() const { return static_cast<std::size_t>(matrix.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(matrix.cols()); }
    std::size_t nonzeros() const { return static_cast<std::size_t>(matrix.nonZeros()); }
    std::size_t column(std::size_t j, std::size_t l) const { return l * t_dim + j; }

    /// Indices of columns holding at least one stored entry, ascending.
    std::vector<Eigen::Index> occupied_columns() const;
};

/// c_ij = int_0^1 X_k(t_i - delta tau) w_j(tau) dtau for the first `count`
/// functions of the t basis. Exact for the piecewise-linear signal model.
Eigen::MatrixXd window_coefficients(const Dataset& data, std::size_t sensor, const BasisSet& t_basis,
                                    std::size_t count);

/// s_l(z_i) for normalized positions.
Eigen::MatrixXd position_values(const BasisSet& z_basis, std::span<const double> z);

/// Tensor block from precomputed factors: row i is vec(c_i s(z_i)^T).
/// `coefficients` may have fewer columns than t_dim (truncation).
DesignBlock tensor_block(std::size_t sensor, const Eigen::MatrixXd& coefficients, const Eigen::MatrixXd& z_values,
                         std::size_t t_dim, int truncation_level);

/// Assembles the block of one sensor, computing only the columns of levels
/// <= m (m < 0 or m >= n keeps everything; ignored for spline t bases).
DesignBlock assemble_block(const Dataset& data, std::size_t sensor, const BasisSet& t_basis,
                           const BasisSet& z_basis, int m);

/// Keeps the ceil(keep * rows * cols) largest-magnitude entries; ties are
/// resolved in (row, col) order.
DesignBlock sparsify(const DesignBlock& block, double keep);

/// Largest singular value by power iteration on A^T A with a fixed start.
double spectral_norm(const SparseMatrix& a, int max_iter = 10000, double tol = 1e-8);

/// Spectral norm of the columns that truncation at level m drops from an
/// untruncated block.
double truncation_error(const DesignBlock& full, const BasisSet& t_basis, int m);

/// Row-ordered triplet text format: a '#' metadata line, then
/// "rows,cols,nnz", then one "row,col,value" record per entry.
void write_block(std::ostream& out, const DesignBlock& block);
DesignBlock read_block(std::istream& in);

} // namespace msafe
