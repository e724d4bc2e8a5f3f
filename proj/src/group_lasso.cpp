#include <msafe/error.hpp>
#include <msafe/group_lasso.hpp>

#include <algorithm>
#include <cmath>
#include <ostream>

namespace msafe {
namespace {

SparseMatrix select_rows(const SparseMatrix& a, std::span<const Eigen::Index> rows)
{
    std::vector<Eigen::Index> position(static_cast<std::size_t>(a.rows()), -1);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Eigen::Index r = rows[i];
        if (r < 0 || r >= a.rows()) throw UsageError("row subset: index out of range");
        position[static_cast<std::size_t>(r)] = static_cast<Eigen::Index>(i);
    }
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(a.nonZeros()));
    for (Eigen::Index c = 0; c < a.outerSize(); ++c) {
        for (SparseMatrix::InnerIterator it(a, c); it; ++it) {
            const Eigen::Index p = position[static_cast<std::size_t>(it.row())];
            if (p >= 0) triplets.emplace_back(p, c, it.value());
        }
    }
    SparseMatrix out(static_cast<Eigen::Index>(rows.size()), a.cols());
    out.setFromTriplets(triplets.begin(), triplets.end());
    out.makeCompressed();
    return out;
}

class DenseOperator final : public GroupOperator
{
public:
    explicit DenseOperator(Eigen::MatrixXd a) : a_(std::move(a)) {}

    Eigen::Index rows() const override { return a_.rows(); }
    Eigen::Index cols() const override { return a_.cols(); }
    void apply(const Eigen::VectorXd& u, Eigen::VectorXd& out) const override { out.noalias() = a_ * u; }
    void apply_transpose(const Eigen::VectorXd& r, Eigen::VectorXd& out) const override
    {
        out.noalias() = a_.transpose() * r;
    }
    GroupOperatorPtr restrict_rows(std::span<const Eigen::Index> rows) const override
    {
        Eigen::MatrixXd sub(static_cast<Eigen::Index>(rows.size()), a_.cols());
        for (std::size_t i = 0; i < rows.size(); ++i) sub.row(static_cast<Eigen::Index>(i)) = a_.row(rows[i]);
        return std::make_shared<DenseOperator>(std::move(sub));
    }
    double cost() const override { return 4.0 * static_cast<double>(a_.size()); }

private:
    Eigen::MatrixXd a_;
};

class SparseOperator final : public GroupOperator
{
public:
    explicit SparseOperator(SparseMatrix a) : a_(std::move(a)) { a_.makeCompressed(); }

    Eigen::Index rows() const override { return a_.rows(); }
    Eigen::Index cols() const override { return a_.cols(); }
    void apply(const Eigen::VectorXd& u, Eigen::VectorXd& out) const override { out.noalias() = a_ * u; }
    void apply_transpose(const Eigen::VectorXd& r, Eigen::VectorXd& out) const override
    {
        out.noalias() = a_.transpose() * r;
    }
    GroupOperatorPtr restrict_rows(std::span<const Eigen::Index> rows) const override
    {
        return std::make_shared<SparseOperator>(select_rows(a_, rows));
    }
    double cost() const override { return 4.0 * static_cast<double>(a_.nonZeros()); }

private:
    SparseMatrix a_;
};

class FactoredOperator final : public GroupOperator
{
public:
    FactoredOperator(SparseMatrix a, std::shared_ptr<const Eigen::MatrixXd> lower)
        : a_(std::move(a)), lower_(std::move(lower))
    {
        a_.makeCompressed();
        if (lower_->rows() != a_.cols() || lower_->cols() != a_.cols()) {
            throw UsageError("factored operator: factor does not match the design columns");
        }
    }

    Eigen::Index rows() const override { return a_.rows(); }
    Eigen::Index cols() const override { return a_.cols(); }
    void apply(const Eigen::VectorXd& u, Eigen::VectorXd& out) const override
    {
        Eigen::VectorXd x = lower_->transpose().triangularView<Eigen::Upper>().solve(u);
        out.noalias() = a_ * x;
    }
    void apply_transpose(const Eigen::VectorXd& r, Eigen::VectorXd& out) const override
    {
        out.noalias() = a_.transpose() * r;
        lower_->triangularView<Eigen::Lower>().solveInPlace(out);
    }
    GroupOperatorPtr restrict_rows(std::span<const Eigen::Index> rows) const override
    {
        return std::make_shared<FactoredOperator>(select_rows(a_, rows), lower_);
    }
    double cost() const override
    {
        const auto d = static_cast<double>(a_.cols());
        return 4.0 * static_cast<double>(a_.nonZeros()) + 2.0 * d * d;
    }

private:
    SparseMatrix a_;
    std::shared_ptr<const Eigen::MatrixXd> lower_;
};

double group_norm(const Eigen::VectorXd& v) { return v.size() ? v.norm() : 0.0; }

} // namespace

Eigen::MatrixXd GroupOperator::to_dense() const
{
    Eigen::MatrixXd out(rows(), cols());
    Eigen::VectorXd e = Eigen::VectorXd::Zero(cols());
    Eigen::VectorXd col;
    for (Eigen::Index j = 0; j < cols(); ++j) {
        e[j] = 1.0;
        apply(e, col);
        out.col(j) = col;
        e[j] = 0.0;
    }
    return out;
}

GroupOperatorPtr make_dense_operator(Eigen::MatrixXd a) { return std::make_shared<DenseOperator>(std::move(a)); }

GroupOperatorPtr make_sparse_operator(SparseMatrix a) { return std::make_shared<SparseOperator>(std::move(a)); }

GroupOperatorPtr make_factored_operator(SparseMatrix a_kept, std::shared_ptr<const Eigen::MatrixXd> lower)
{
    return std::make_shared<FactoredOperator>(std::move(a_kept), std::move(lower));
}

Eigen::MatrixXd substitute(const DesignBlock& block, const PenaltyMatrix& penalty)
{
    if (penalty.factor().rows() != block.matrix.cols()) {
        throw UsageError("substitute: penalty dimension does not match the block");
    }
    const Eigen::MatrixXd at = Eigen::MatrixXd(block.matrix).transpose();
    return penalty.factor().triangularView<Eigen::Lower>().solve(at).transpose();
}

SparseMatrix select_columns(const SparseMatrix& a, std::span<const Eigen::Index> columns)
{
    std::vector<Eigen::Triplet<double>> triplets;
    for (std::size_t j = 0; j < columns.size(); ++j) {
        const Eigen::Index c = columns[j];
        if (c < 0 || c >= a.cols()) throw UsageError("column subset: index out of range");
        for (SparseMatrix::InnerIterator it(a, c); it; ++it) {
            triplets.emplace_back(it.row(), static_cast<Eigen::Index>(j), it.value());
        }
    }
    SparseMatrix out(a.rows(), static_cast<Eigen::Index>(columns.size()));
    out.setFromTriplets(triplets.begin(), triplets.end());
    out.makeCompressed();
    return out;
}

GroupOperatorPtr reduced_operator(const DesignBlock& block, const ReducedPenalty& penalty, OperatorStorage storage)
{
    if (penalty.dim() != block.matrix.cols()) {
        throw UsageError("reduced operator: penalty dimension does not match the block");
    }
    SparseMatrix kept = select_columns(block.matrix, penalty.kept());
    auto lower = std::make_shared<const Eigen::MatrixXd>(penalty.factor());
    const auto d = static_cast<double>(kept.cols());
    const double dense_cost = 4.0 * static_cast<double>(kept.rows()) * d;
    const double factored_cost = 4.0 * static_cast<double>(kept.nonZeros()) + 2.0 * d * d;
    const bool dense = storage == OperatorStorage::dense
                       || (storage == OperatorStorage::automatic && dense_cost <= factored_cost);
    if (!dense) return make_factored_operator(std::move(kept), std::move(lower));
    const Eigen::MatrixXd at = Eigen::MatrixXd(kept).transpose();
    return make_dense_operator(lower->triangularView<Eigen::Lower>().solve(at).transpose());
}

double majorization_constant(const GroupOperator& a)
{
    if (a.cols() == 0 || a.rows() == 0) return 0.0;
    Eigen::VectorXd v(a.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = 1.0 + 0.5 * std::sin(1.0 + static_cast<double>(i));
    v.normalize();
    Eigen::VectorXd av, w;
    double estimate = 0.0;
    for (int it = 0; it < 5000; ++it) {
        a.apply(v, av);
        a.apply_transpose(av, w);
        const double next = w.norm();
        if (next == 0.0) return 0.0;
        v = w / next;
        const bool done = std::abs(next - estimate) <= 1e-9 * next;
        estimate = next;
        if (done) break;
    }
    return 2.0 * estimate * (1.0 + 1e-6);
}

void GroupProblem::prepare()
{
    for (const auto& g : groups) {
        if (g->rows() != response.size()) throw UsageError("group problem: block rows differ from the response length");
    }
    if (eta.size() == groups.size()) return;
    eta.clear();
    for (const auto& g : groups) eta.push_back(majorization_constant(*g));
}

GroupSpectrum group_spectrum(const GroupOperator& a)
{
    const Eigen::MatrixXd dense = a.to_dense();
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(dense.cols(), dense.cols());
    gram.selfadjointView<Eigen::Lower>().rankUpdate(dense.transpose());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram.selfadjointView<Eigen::Lower>());
    if (eig.info() != Eigen::Success) throw NumericalError("group spectrum: eigendecomposition failed");
    return {eig.eigenvalues().cwiseMax(0.0), eig.eigenvectors()};
}

void GroupProblem::prepare_kernels()
{
    if (kernels.size() == groups.size()) return;
    kernels.clear();
    for (const auto& g : groups) {
        const Eigen::MatrixXd dense = g->to_dense();
        auto k = std::make_shared<Eigen::MatrixXd>(Eigen::MatrixXd::Zero(dense.rows(), dense.rows()));
        k->selfadjointView<Eigen::Lower>().rankUpdate(dense);
        *k = k->selfadjointView<Eigen::Lower>();
        kernels.push_back(std::move(k));
    }
}

void GroupProblem::prepare_spectra()
{
    if (spectra.size() == groups.size()) return;
    spectra.clear();
    for (const auto& g : groups) spectra.push_back(std::make_shared<const GroupSpectrum>(group_spectrum(*g)));
}

GroupProblem GroupProblem::restrict_rows(std::span<const Eigen::Index> rows) const
{
    GroupProblem out;
    for (const auto& g : groups) out.groups.push_back(g->restrict_rows(rows));
    out.response.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out.response[static_cast<Eigen::Index>(i)] = response[rows[i]];
    // A row subset has A_s^T A_s <= A^T A, so the full constants still majorize.
    out.eta = eta;
    const auto n = static_cast<Eigen::Index>(rows.size());
    for (const auto& k : kernels) {
        auto sub = std::make_shared<Eigen::MatrixXd>(n, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index i = 0; i < n; ++i) (*sub)(i, j) = (*k)(rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(j)]);
        }
        out.kernels.push_back(std::move(sub));
    }
    return out;
}

double lambda_max(const GroupProblem& problem)
{
    double best = 0.0;
    Eigen::VectorXd g;
    for (const auto& op : problem.groups) {
        op->apply_transpose(problem.response, g);
        best = std::max(best, 2.0 * group_norm(g));
    }
    return best;
}

GroupCoefficients zero_coefficients(const GroupProblem& problem)
{
    GroupCoefficients u;
    for (const auto& op : problem.groups) u.push_back(Eigen::VectorXd::Zero(op->cols()));
    return u;
}

namespace {

// Minimizes ||r - A u||^2 + lambda ||u|| in the eigenbasis of A^T A, where c
// holds V^T A^T r for the residual without this group. On return c holds
// V^T u. Returns false when the minimizer is zero.
bool exact_block_minimizer(const Eigen::VectorXd& values, Eigen::VectorXd& c, double lambda)
{
    const double t = 0.5 * lambda;
    const double norm = c.norm();
    if (norm <= t) return false;
    const double top = values.size() ? values.maxCoeff() : 0.0;
    if (t == 0.0) {
        for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = values[i] > 1e-14 * top ? c[i] / values[i] : 0.0;
        return true;
    }
    // mu = lambda / (2 ||u||) solves sum c_i^2 mu^2 / (values_i + mu)^2 = t^2,
    // whose left side increases in mu.
    auto excess = [&](double mu, double* slope) {
        double q = 0.0, dq = 0.0;
        for (Eigen::Index i = 0; i < c.size(); ++i) {
            const double a = mu / (values[i] + mu);
            q += c[i] * c[i] * a * a;
            dq += c[i] * c[i] * a * values[i] / ((values[i] + mu) * (values[i] + mu));
        }
        const double root = std::sqrt(q);
        if (slope) *slope = root > 0.0 ? dq / root : 0.0;
        return root - t;
    };
    double lo = values.minCoeff() * t / (norm - t);
    double hi = top * t / (norm - t);
    double mu = hi;
    if (hi > lo) {
        mu = 0.5 * (lo + hi);
        for (int iter = 0; iter < 200; ++iter) {
            double slope = 0.0;
            const double f = excess(mu, &slope);
            if (f == 0.0) break;
            (f > 0.0 ? hi : lo) = mu;
            double next = slope > 0.0 ? mu - f / slope : 0.5 * (lo + hi);
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            if (std::abs(next - mu) <= 1e-15 * mu || hi - lo <= 1e-15 * hi) {
                mu = next;
                break;
            }
            mu = next;
        }
    }
    for (Eigen::Index i = 0; i < c.size(); ++i) c[i] /= values[i] + mu;
    return true;
}

Eigen::VectorXd residual_of(const GroupProblem& problem, const GroupCoefficients& u)
{
    Eigen::VectorXd r = problem.response;
    Eigen::VectorXd tmp;
    for (std::size_t k = 0; k < problem.groups.size(); ++k) {
        if (u[k].size() == 0 || u[k].isZero(0.0)) continue;
        problem.groups[k]->apply(u[k], tmp);
        r -= tmp;
    }
    return r;
}

double objective_from_residual(const Eigen::VectorXd& r, double lambda, const GroupCoefficients& u)
{
    double penalty = 0.0;
    for (const auto& v : u) penalty += group_norm(v);
    return r.squaredNorm() + lambda * penalty;
}

double kkt_from_residual(const GroupProblem& problem, const Eigen::VectorXd& r, double lambda,
                         const GroupCoefficients& u)
{
    double worst = 0.0;
    Eigen::VectorXd g;
    for (std::size_t k = 0; k < problem.groups.size(); ++k) {
        problem.groups[k]->apply_transpose(r, g);
        g *= -2.0;  // gradient of the loss
        const double norm = group_norm(u[k]);
        const double violation = norm > 0.0 ? (g + lambda * u[k] / norm).norm() : std::max(0.0, group_norm(g) - lambda);
        worst = std::max(worst, violation);
    }
    return worst;
}

GroupSolution solve_kernel(const GroupProblem& problem, double lambda, const SolverOptions& options,
                           const GroupCoefficients* warm)
{
    if (problem.kernels.size() != problem.groups.size()) {
        GroupProblem with = problem;
        with.prepare_kernels();
        return solve_kernel(with, lambda, options, warm);
    }
    const std::size_t groups = problem.groups.size();
    const Eigen::Index n = problem.rows();
    const Eigen::VectorXd& y = problem.response;
    const double half_l2 = 0.5 * lambda * lambda;

    Eigen::VectorXd nu = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(groups));
    if (warm) {
        if (warm->size() != groups) throw UsageError("group lasso: warm start has wrong size");
        for (std::size_t k = 0; k < groups; ++k) nu[static_cast<Eigen::Index>(k)] = group_norm((*warm)[k]) / lambda;
    }

    // State at nu: factor of I + 2 sum nu_k K_k, r, Phi, w_k = K_k r, gradient.
    struct State
    {
        Eigen::LLT<Eigen::MatrixXd> llt;
        Eigen::VectorXd r;
        double phi = 0.0;
    };
    auto evaluate = [&](const Eigen::VectorXd& v, State& st) {
        Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
        for (std::size_t k = 0; k < groups; ++k) {
            if (v[static_cast<Eigen::Index>(k)] > 0.0) m += (2.0 * v[static_cast<Eigen::Index>(k)]) * *problem.kernels[k];
        }
        st.llt.compute(m);
        if (st.llt.info() != Eigen::Success) throw NumericalError("group lasso: kernel system not positive definite");
        st.r = st.llt.solve(y);
        st.phi = y.dot(st.r) + half_l2 * v.sum();
    };

    GroupSolution sol;
    sol.lambda = lambda;
    State st;
    evaluate(nu, st);
    Eigen::MatrixXd w(n, static_cast<Eigen::Index>(groups));
    Eigen::VectorXd grad(static_cast<Eigen::Index>(groups));
    std::vector<Eigen::Index> free;
    double kkt = 0.0;

    auto refresh = [&] {
        kkt = 0.0;
        for (std::size_t k = 0; k < groups; ++k) {
            const auto j = static_cast<Eigen::Index>(k);
            w.col(j).noalias() = *problem.kernels[k] * st.r;
            const double s2 = std::max(st.r.dot(w.col(j)), 0.0);
            grad[j] = half_l2 - 2.0 * s2;
            const double gap = 2.0 * std::sqrt(s2) - lambda;
            kkt = std::max(kkt, nu[j] > 0.0 ? std::abs(gap) : std::max(0.0, gap));
        }
    };
    auto trace = [&] {
        if (!options.trace) return;
        const auto precision = options.trace->precision(17);
        *options.trace << "{\"lambda\":" << lambda << ",\"iteration\":" << sol.report.iterations
                       << ",\"sweep\":\"newton\",\"objective\":" << st.phi << ",\"kkt\":" << kkt << "}\n";
        options.trace->precision(precision);
    };

    refresh();
    while (kkt >= options.tol && sol.report.iterations < options.max_iter) {
        free.clear();
        for (std::size_t k = 0; k < groups; ++k) {
            const auto j = static_cast<Eigen::Index>(k);
            if (nu[j] > 0.0 || grad[j] < 0.0) free.push_back(j);
        }
        const auto f = static_cast<Eigen::Index>(free.size());
        Eigen::MatrixXd wf(n, f);
        Eigen::VectorXd gf(f);
        for (Eigen::Index i = 0; i < f; ++i) {
            wf.col(i) = w.col(free[static_cast<std::size_t>(i)]);
            gf[i] = grad[free[static_cast<std::size_t>(i)]];
        }
        Eigen::MatrixXd hess = 8.0 * wf.transpose() * st.llt.solve(wf);
        hess.diagonal().array() += 1e-14 * std::max(hess.diagonal().maxCoeff(), 1e-300);
        Eigen::VectorXd step = -hess.ldlt().solve(gf);
        if (!step.allFinite() || step.dot(gf) >= 0.0) step = -gf;

        // projected backtracking line search
        State trial;
        Eigen::VectorXd next;
        double t = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
            next = nu;
            for (Eigen::Index i = 0; i < f; ++i) {
                const Eigen::Index j = free[static_cast<std::size_t>(i)];
                next[j] = std::max(0.0, nu[j] + t * step[i]);
            }
            evaluate(next, trial);
            const double decrease = grad.dot(next - nu);
            if (trial.phi <= st.phi + 1e-4 * decrease + 1e-15 * std::abs(st.phi)) {
                accepted = true;
                break;
            }
        }
        ++sol.report.iterations;
        if (!accepted) break;
        const double moved = (next - nu).cwiseAbs().maxCoeff();
        nu = next;
        st = std::move(trial);
        refresh();
        trace();
        if (moved == 0.0) break;
    }

    sol.coefficients.resize(groups);
    Eigen::VectorXd g;
    for (std::size_t k = 0; k < groups; ++k) {
        const auto j = static_cast<Eigen::Index>(k);
        if (nu[j] > 0.0) {
            problem.groups[k]->apply_transpose(st.r, g);
            sol.coefficients[k] = (2.0 * nu[j]) * g;
        } else {
            sol.coefficients[k] = Eigen::VectorXd::Zero(problem.groups[k]->cols());
        }
    }
    sol.residual = residual_of(problem, sol.coefficients);
    sol.report.objective = objective_from_residual(sol.residual, lambda, sol.coefficients);
    sol.report.kkt = kkt_from_residual(problem, sol.residual, lambda, sol.coefficients);
    sol.report.converged = kkt < options.tol;
    for (const auto& u : sol.coefficients) {
        if (!u.isZero(0.0)) ++sol.report.active;
    }
    return sol;
}

} // namespace

double objective(const GroupProblem& problem, double lambda, const GroupCoefficients& u)
{
    return objective_from_residual(residual_of(problem, u), lambda, u);
}

double kkt_residual(const GroupProblem& problem, double lambda, const GroupCoefficients& u)
{
    return kkt_from_residual(problem, residual_of(problem, u), lambda, u);
}

GroupSolution solve(const GroupProblem& problem, double lambda, const SolverOptions& options,
                    const GroupCoefficients* warm)
{
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw UsageError("group lasso: lambda must be finite and >= 0");
    if (problem.eta.size() != problem.groups.size()) {
        throw UsageError("group lasso: majorization constants missing (call prepare())");
    }
    if (!problem.response.allFinite()) throw DataError("group lasso: non-finite response");

    if (options.method == SolverMethod::kernel_newton) {
        if (lambda > 0.0) return solve_kernel(problem, lambda, options, warm);
        SolverOptions cyclic = options;
        cyclic.method = SolverMethod::exact_block;  // the scales are unbounded at lambda = 0
        return solve(problem, lambda, cyclic, warm);
    }
    const bool exact = options.method == SolverMethod::exact_block;
    if (exact && problem.spectra.size() != problem.groups.size()) {
        GroupProblem with = problem;
        with.prepare_spectra();
        return solve(with, lambda, options, warm);
    }

    GroupSolution sol;
    sol.lambda = lambda;
    sol.coefficients = warm ? *warm : zero_coefficients(problem);
    if (sol.coefficients.size() != problem.groups.size()) throw UsageError("group lasso: warm start has wrong size");
    sol.residual = residual_of(problem, sol.coefficients);

    const std::size_t groups = problem.groups.size();
    Eigen::VectorXd grad, v, delta, tmp, rotated;

    auto update = [&](std::size_t k) {
        const double eta = problem.eta[k];
        if (eta <= 0.0) return 0.0;
        Eigen::VectorXd& u = sol.coefficients[k];
        problem.groups[k]->apply_transpose(sol.residual, grad);
        if (exact) {
            const GroupSpectrum& s = *problem.spectra[k];
            // eigen coordinates of A^T (r + A u)
            rotated.noalias() = s.vectors.transpose() * grad;
            if (!u.isZero(0.0)) rotated.array() += s.values.array() * (s.vectors.transpose() * u).array();
            if (!exact_block_minimizer(s.values, rotated, lambda)) {
                if (u.isZero(0.0)) return 0.0;
                v.setZero(u.size());
            } else {
                v.noalias() = s.vectors * rotated;
            }
            delta = v - u;
            u = v;
            const double change = delta.size() ? delta.cwiseAbs().maxCoeff() : 0.0;
            if (change == 0.0) return 0.0;
            problem.groups[k]->apply(delta, tmp);
            sol.residual -= tmp;
            return eta * change;
        }
        v = u + (2.0 / eta) * grad;
        const double norm = group_norm(v);
        const double threshold = lambda / eta;
        if (norm <= threshold) {
            if (u.isZero(0.0)) return 0.0;
            delta = -u;
            u.setZero();
        } else {
            v *= 1.0 - threshold / norm;
            delta = v - u;
            u = v;
        }
        const double change = delta.cwiseAbs().maxCoeff();
        if (change == 0.0) return 0.0;
        problem.groups[k]->apply(delta, tmp);
        sol.residual -= tmp;
        return eta * change;
    };

    auto trace = [&](const char* kind) {
        if (!options.trace) return;
        const auto precision = options.trace->precision(17);
        *options.trace << "{\"lambda\":" << lambda << ",\"iteration\":" << sol.report.iterations << ",\"sweep\":\""
                       << kind << "\",\"objective\":" << objective_from_residual(sol.residual, lambda, sol.coefficients)
                       << ",\"kkt\":" << kkt_from_residual(problem, sol.residual, lambda, sol.coefficients) << "}\n";
        options.trace->precision(precision);
    };

    std::vector<std::size_t> active;
    while (sol.report.iterations < options.max_iter) {
        double change = 0.0;
        for (std::size_t k = 0; k < groups; ++k) change = std::max(change, update(k));
        ++sol.report.iterations;
        trace("full");
        if (change < options.tol) {
            sol.report.converged = true;
            break;
        }
        active.clear();
        for (std::size_t k = 0; k < groups; ++k) {
            if (!sol.coefficients[k].isZero(0.0)) active.push_back(k);
        }
        while (sol.report.iterations < options.max_iter) {
            double inner = 0.0;
            for (std::size_t k : active) inner = std::max(inner, update(k));
            ++sol.report.iterations;
            trace("active");
            if (inner < options.tol) break;
        }
    }

    // refresh the residual to shed accumulated rounding from the updates
    sol.residual = residual_of(problem, sol.coefficients);
    sol.report.objective = objective_from_residual(sol.residual, lambda, sol.coefficients);
    sol.report.kkt = kkt_from_residual(problem, sol.residual, lambda, sol.coefficients);
    sol.report.active = 0;
    for (const auto& u : sol.coefficients) {
        if (!u.isZero(0.0)) ++sol.report.active;
    }
    return sol;
}

std::vector<GroupSolution> solve_path(const GroupProblem& problem, std::span<const double> lambdas,
                                      const PathOptions& options)
{
    for (std::size_t i = 1; i < lambdas.size(); ++i) {
        if (!(lambdas[i] < lambdas[i - 1])) throw UsageError("solve_path: lambdas must be strictly descending");
    }
    const bool needs_spectra =
        options.solver.method == SolverMethod::exact_block && problem.spectra.size() != problem.groups.size();
    const bool needs_kernels =
        options.solver.method == SolverMethod::kernel_newton && problem.kernels.size() != problem.groups.size();
    if (needs_spectra || needs_kernels) {
        GroupProblem with = problem;
        if (needs_spectra) with.prepare_spectra();
        if (needs_kernels) with.prepare_kernels();
        return solve_path(with, lambdas, options);
    }
    std::vector<GroupSolution> path;
    path.reserve(lambdas.size());
    const double null_rss = problem.response.squaredNorm();
    double previous_ratio = 0.0;
    const GroupCoefficients* warm = nullptr;
    for (double lambda : lambdas) {
        path.push_back(solve(problem, lambda, options.solver, warm));
        warm = &path.back().coefficients;
        if (!options.early_exit || null_rss == 0.0 || path.back().report.active == 0) continue;
        const double ratio = 1.0 - path.back().residual.squaredNorm() / null_rss;
        if (ratio >= options.max_deviance_ratio) break;
        if (ratio - previous_ratio < options.min_relative_change * ratio) break;
        previous_ratio = ratio;
    }
    return path;
}

} // namespace msafe
