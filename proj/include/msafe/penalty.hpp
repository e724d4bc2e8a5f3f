#pragma once
#include <msafe/basis.hpp>

#include <Eigen/Dense>
#include <array>
#include <vector>

namespace msafe {

/// Kronecker product a (x) b.
Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Tensor Gram components in the column-stacked coefficient convention:
/// gram = G_s (x) G_w, t_roughness = G_s (x) D_w, z_roughness = D_s (x) G_w.
struct PenaltyComponents
{
    Eigen::MatrixXd gram;
    Eigen::MatrixXd t_roughness;
    Eigen::MatrixXd z_roughness;

    static PenaltyComponents build(const BasisSet& t_basis, const BasisSet& z_basis);

    Eigen::Index dim() const { return gram.rows(); }

    /// a * gram + b * t_roughness + c * z_roughness
    Eigen::MatrixXd combine(double a, double b, double c) const;

    /// {beta' gram beta, beta' t_roughness beta, beta' z_roughness beta}
    std::array<double, 3> norms2(const Eigen::VectorXd& beta) const;
};

/// Symmetric positive-definite penalty with its lower Cholesky factor.
class PenaltyMatrix
{
public:
    /// Throws NumericalError("penalty not SPD") if the factorization fails.
    explicit PenaltyMatrix(Eigen::MatrixXd matrix);

    const Eigen::MatrixXd& matrix() const { return matrix_; }
    const Eigen::MatrixXd& factor() const { return factor_; }

    /// u = L^T beta
    Eigen::VectorXd substitute(const Eigen::VectorXd& beta) const;
    /// beta = L^{-T} u
    Eigen::VectorXd recover(const Eigen::VectorXd& u) const;

private:
    Eigen::MatrixXd matrix_;
    Eigen::MatrixXd factor_;
};

/// f * gram + phi_t * g * t_roughness + phi_z * h * z_roughness.
PenaltyMatrix build_penalty(const PenaltyComponents& components, double f, double g, double h, double phi_t,
                            double phi_z);

/**
 * Cholesky factor of a penalty with the structurally empty design columns
 * ordered first.
 *
 * With the permutation P = [dropped, kept] and P G P^T = L L^T, substituted
 * design columns of dropped coordinates are exactly zero, so only the kept
 * block L22 of the factor (a Cholesky factor of the Schur complement) enters
 * the reduced problem. expand() maps reduced coordinates back to the full
 * coefficient vector.
 */
class ReducedPenalty
{
public:
    /// Throws NumericalError("penalty not SPD") if the factorization fails.
    ReducedPenalty(const Eigen::MatrixXd& penalty, std::vector<Eigen::Index> kept);

    const std::vector<Eigen::Index>& kept() const { return kept_; }
    Eigen::Index dim() const { return full_dim_; }
    Eigen::Index reduced_dim() const { return static_cast<Eigen::Index>(kept_.size()); }

    /// Lower-triangular factor of the Schur complement on kept coordinates.
    Eigen::MatrixXd::ConstBlockXpr factor() const
    {
        return factor_.bottomRightCorner(reduced_dim(), reduced_dim());
    }

    /// Schur complement S = L22 L22^T.
    Eigen::MatrixXd schur() const;

    /// Full beta = P^T L^{-T} [0; u] for reduced coordinates u.
    Eigen::VectorXd expand(const Eigen::VectorXd& u) const;

    /// Full beta minimizing beta' G beta subject to its kept part equal to v.
    Eigen::VectorXd expand_kept(const Eigen::VectorXd& v) const;

private:
    Eigen::Index full_dim_ = 0;
    std::vector<Eigen::Index> kept_;
    std::vector<Eigen::Index> order_;  // dropped then kept
    Eigen::MatrixXd factor_;           // permuted full factor
};

} // namespace msafe
