#include <msafe/error.hpp>
#include <msafe/penalty.hpp>

#include <algorithm>

namespace msafe {

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b)
{
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

PenaltyComponents PenaltyComponents::build(const BasisSet& t_basis, const BasisSet& z_basis)
{
    PenaltyComponents c;
    c.gram = kron(z_basis.gram, t_basis.gram);
    c.t_roughness = kron(z_basis.gram, t_basis.d2gram);
    c.z_roughness = kron(z_basis.d2gram, t_basis.gram);
    return c;
}

Eigen::MatrixXd PenaltyComponents::combine(double a, double b, double c) const
{
    return a * gram + b * t_roughness + c * z_roughness;
}

std::array<double, 3> PenaltyComponents::norms2(const Eigen::VectorXd& beta) const
{
    return {beta.dot(gram * beta), beta.dot(t_roughness * beta), beta.dot(z_roughness * beta)};
}

PenaltyMatrix::PenaltyMatrix(Eigen::MatrixXd matrix) : matrix_(std::move(matrix))
{
    Eigen::LLT<Eigen::MatrixXd> llt(matrix_);
    if (llt.info() != Eigen::Success) throw NumericalError("penalty not SPD");
    factor_ = llt.matrixL();
    if (!(factor_.diagonal().array() > 0.0).all()) throw NumericalError("penalty not SPD");
}

Eigen::VectorXd PenaltyMatrix::substitute(const Eigen::VectorXd& beta) const
{
    return factor_.transpose() * beta;
}

Eigen::VectorXd PenaltyMatrix::recover(const Eigen::VectorXd& u) const
{
    return factor_.transpose().triangularView<Eigen::Upper>().solve(u);
}

PenaltyMatrix build_penalty(const PenaltyComponents& components, double f, double g, double h, double phi_t,
                            double phi_z)
{
    if (!(f > 0.0)) throw UsageError("penalty: f must be positive");
    if (g < 0.0 || h < 0.0 || phi_t < 0.0 || phi_z < 0.0) {
        throw UsageError("penalty: weights and smoothing parameters must be non-negative");
    }
    return PenaltyMatrix(components.combine(f, phi_t * g, phi_z * h));
}

ReducedPenalty::ReducedPenalty(const Eigen::MatrixXd& penalty, std::vector<Eigen::Index> kept)
    : full_dim_(penalty.rows()), kept_(std::move(kept))
{
    std::sort(kept_.begin(), kept_.end());
    std::vector<char> is_kept(static_cast<std::size_t>(full_dim_), 0);
    for (Eigen::Index k : kept_) {
        if (k < 0 || k >= full_dim_) throw UsageError("reduced penalty: kept index out of range");
        is_kept[static_cast<std::size_t>(k)] = 1;
    }
    for (Eigen::Index i = 0; i < full_dim_; ++i) {
        if (!is_kept[static_cast<std::size_t>(i)]) order_.push_back(i);
    }
    order_.insert(order_.end(), kept_.begin(), kept_.end());

    Eigen::MatrixXd permuted(full_dim_, full_dim_);
    for (Eigen::Index i = 0; i < full_dim_; ++i) {
        for (Eigen::Index j = 0; j < full_dim_; ++j) {
            permuted(i, j) = penalty(order_[static_cast<std::size_t>(i)], order_[static_cast<std::size_t>(j)]);
        }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(permuted);
    if (llt.info() != Eigen::Success) throw NumericalError("penalty not SPD");
    factor_ = llt.matrixL();
    if (!(factor_.diagonal().array() > 0.0).all()) throw NumericalError("penalty not SPD");
}

Eigen::MatrixXd ReducedPenalty::schur() const
{
    const auto l22 = factor();
    return l22 * l22.transpose();
}

Eigen::VectorXd ReducedPenalty::expand(const Eigen::VectorXd& u) const
{
    if (u.size() != reduced_dim()) throw UsageError("reduced penalty: coordinate size mismatch");
    Eigen::VectorXd x = Eigen::VectorXd::Zero(full_dim_);
    x.tail(reduced_dim()) = u;
    factor_.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
    Eigen::VectorXd beta(full_dim_);
    for (Eigen::Index i = 0; i < full_dim_; ++i) beta[order_[static_cast<std::size_t>(i)]] = x[i];
    return beta;
}

Eigen::VectorXd ReducedPenalty::expand_kept(const Eigen::VectorXd& v) const
{
    return expand(factor().transpose() * v);
}

} // namespace msafe
