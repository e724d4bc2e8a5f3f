#include "parallel.hpp"

#include <msafe/error.hpp>
#include <msafe/pipeline.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

namespace msafe {
namespace {

constexpr double active_threshold = 1e-10;
constexpr double weight_cap = 1e12;
constexpr double weight_tolerance = 1e-6;

double seconds_since(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

bool well_posed(const Eigen::LLT<Eigen::MatrixXd>& llt)
{
    return llt.info() == Eigen::Success && llt.rcond() > 1e-14;
}

DesignBlock assemble_one(const Dataset& data, std::size_t sensor, const BasisSet& t_basis, const BasisSet& z_basis,
                         const PositionMap& map, int m, double keep)
{
    std::size_t count = t_basis.size();
    int level = -1;
    if (t_basis.kind == BasisKind::multiscale && m >= 0 && m < t_basis.level) {
        level = m;
        count = t_basis.count_through_level(m);
    }
    std::vector<double> z(data.positions.size());
    std::transform(data.positions.begin(), data.positions.end(), z.begin(), map);
    const Eigen::MatrixXd c = window_coefficients(data, sensor, t_basis, count);
    DesignBlock block = tensor_block(sensor, c, position_values(z_basis, z), t_basis.size(), level);
    if (keep < 1.0) block = sparsify(block, keep);
    return block;
}

struct FoldRows
{
    std::vector<Eigen::Index> train;
    std::vector<Eigen::Index> validation;
};

std::vector<FoldRows> fold_rows(std::size_t rows, int folds, std::uint64_t seed)
{
    const auto assignment = fold_assignment(rows, folds, seed);
    std::vector<FoldRows> out(static_cast<std::size_t>(folds));
    for (std::size_t i = 0; i < rows; ++i) {
        for (int f = 0; f < folds; ++f) {
            auto& target = assignment[i] == f ? out[static_cast<std::size_t>(f)].validation : out[static_cast<std::size_t>(f)].train;
            target.push_back(static_cast<Eigen::Index>(i));
        }
    }
    return out;
}

Eigen::VectorXd response_vector(const Dataset& data)
{
    return Eigen::Map<const Eigen::VectorXd>(data.responses.data(), static_cast<Eigen::Index>(data.responses.size()));
}

Eigen::VectorXd take(const Eigen::VectorXd& v, std::span<const Eigen::Index> rows)
{
    Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[rows[i]];
    return out;
}

// Substituted group problem of the candidate sensors for one (phi_t, phi_z).
struct GroupSetup
{
    std::vector<ReducedPenalty> penalties;
    GroupProblem problem;
};

GroupSetup build_groups(const AssembledDesign& design, std::span<const std::size_t> sensors,
                        const std::vector<double>& f, const std::vector<double>& g, const std::vector<double>& h,
                        double phi_t, double phi_z, const Eigen::VectorXd& y, OperatorStorage storage)
{
    GroupSetup s;
    s.penalties.reserve(sensors.size());
    for (std::size_t i = 0; i < sensors.size(); ++i) {
        const DesignBlock& block = design.blocks[sensors[i]];
        const Eigen::MatrixXd penalty = design.components.combine(f[i], phi_t * g[i], phi_z * h[i]);
        s.penalties.emplace_back(penalty, block.occupied_columns());
        s.problem.groups.push_back(reduced_operator(block, s.penalties.back(), storage));
    }
    s.problem.response = y;
    s.problem.prepare();
    return s;
}

// Candidate is preferred if its CV error is lower; exact ties go to larger
// lambda, then larger phi_t, then larger phi_z.
struct Choice
{
    double mse = std::numeric_limits<double>::infinity();
    std::array<double, 3> params{};  // (lambda or phi, phi_t, phi_z)
    std::size_t lambda_index = 0;
    std::size_t combo = 0;

    bool improves_on(const Choice& best) const
    {
        if (!std::isfinite(mse)) return false;
        if (mse != best.mse) return mse < best.mse;
        return params > best.params;
    }
};

PipelineConfig validated(const PipelineConfig& config)
{
    config.validate();
    return config;
}

} // namespace

double adaptive_weight(double norm2)
{
    const double norm = std::sqrt(std::max(norm2, 0.0));
    if (norm < 1e-12) return weight_cap;
    return std::min(1.0 / norm, weight_cap);
}

std::vector<double> grid_range(double lo, double hi, double step)
{
    if (!(step > 0.0) || hi < lo) throw UsageError("grid range: need step > 0 and hi >= lo");
    std::vector<double> out;
    const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long i = 0; i <= count; ++i) out.push_back(lo + step * static_cast<double>(i));
    return out;
}

CvGrid CvGrid::standard() { return with_lambda_step(0.25); }

CvGrid CvGrid::with_lambda_step(double step)
{
    CvGrid g;
    g.log_lambda = grid_range(-20.0, 0.0, step);
    g.log_phi_t = grid_range(-10.0, 0.0, 2.5);
    g.log_phi_z = grid_range(-10.0, 0.0, 2.5);
    g.log10_phi = {-1.0, -2.0, -3.0, -4.0, -5.0};
    g.folds = 5;
    return g;
}

PipelineConfig PipelineConfig::spline_defaults()
{
    PipelineConfig c;
    c.mode = BasisKind::spline;
    c.keep_fraction = 1.0;
    c.storage = OperatorStorage::dense;
    return c;
}

PipelineConfig PipelineConfig::multiscale_defaults() { return PipelineConfig{}; }

void PipelineConfig::validate() const
{
    if (mode == BasisKind::multiscale) {
        if (n < 0 || m < 0) throw UsageError("config: n and m must be non-negative");
        if (m > n) throw UsageError("config: truncation level m must not exceed n");
    }
    if (q < 4 || (mode == BasisKind::spline && t_q < 4)) throw UsageError("config: spline dimensions must be >= 4");
    if (!(keep_fraction > 0.0) || keep_fraction > 1.0) throw UsageError("config: keep_fraction must lie in (0, 1]");
    if (stages < 1) throw UsageError("config: stages must be >= 1");
    if (grid.folds < 2) throw UsageError("config: need at least 2 folds");
    if (grid.log_lambda.empty() || grid.log_phi_t.empty() || grid.log_phi_z.empty() || grid.log10_phi.empty()) {
        throw UsageError("config: grids must be non-empty");
    }
    if (!(tol > 0.0) || max_iter < 1) throw UsageError("config: solver tolerance and iteration cap must be positive");
    if (threads < 1) throw UsageError("config: threads must be >= 1");
}

std::pair<BasisSet, BasisSet> build_bases(const PipelineConfig& config)
{
    BasisSet t = config.mode == BasisKind::multiscale ? build_multiscale_basis(config.p, config.n)
                                                      : build_spline_basis(config.t_q);
    return {std::move(t), build_spline_basis(config.q)};
}

AssembledDesign assemble_design(const Dataset& data, const PipelineConfig& config)
{
    config.validate();
    data.validate();
    AssembledDesign d;
    std::tie(d.t_basis, d.z_basis) = build_bases(config);
    d.map = data.position_map();
    d.truncation_level = config.mode == BasisKind::multiscale && config.m < config.n ? config.m : -1;
    d.keep_fraction = config.keep_fraction;
    d.blocks.resize(data.sensors());
    detail::parallel_for(data.sensors(), config.threads, [&](std::size_t k) {
        d.blocks[k] = assemble_one(data, k, d.t_basis, d.z_basis, d.map, d.truncation_level, d.keep_fraction);
    });
    d.components = PenaltyComponents::build(d.t_basis, d.z_basis);
    return d;
}

std::vector<DesignBlock> assemble_blocks(const Dataset& data, const AssembledDesign& like,
                                         std::span<const std::size_t> sensors)
{
    std::vector<DesignBlock> out;
    for (std::size_t k : sensors) {
        out.push_back(assemble_one(data, k, like.t_basis, like.z_basis, like.map, like.truncation_level,
                                   like.keep_fraction));
    }
    return out;
}

std::vector<int> fold_assignment(std::size_t rows, int folds, std::uint64_t seed)
{
    if (folds < 1 || rows < static_cast<std::size_t>(folds)) {
        throw DataError("cross-validation: " + std::to_string(rows) + " rows cannot form " + std::to_string(folds)
                        + " folds");
    }
    std::mt19937_64 rng(seed);
    const std::size_t offset = static_cast<std::size_t>(rng() % rows);
    std::vector<int> out(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        const std::size_t rotated = (i + rows - offset) % rows;
        out[i] = static_cast<int>(rotated * static_cast<std::size_t>(folds) / rows);
    }
    return out;
}

std::vector<StageState> select_sensors(const Dataset& data, const AssembledDesign& design,
                                       const PipelineConfig& config)
{
    config.validate();
    if (design.blocks.size() != data.sensors()) throw UsageError("select: design does not match the dataset");
    const Eigen::VectorXd y = response_vector(data);
    const auto folds = fold_rows(data.rows(), config.grid.folds, config.seed);

    std::vector<double> lambdas;
    for (double l : config.grid.log_lambda) lambdas.push_back(std::exp(l));
    std::sort(lambdas.begin(), lambdas.end(), std::greater<>());
    lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());

    PathOptions path_options;
    path_options.solver.method = config.solver;
    path_options.solver.tol = config.tol;
    path_options.solver.max_iter = config.max_iter;
    path_options.early_exit = config.early_exit;

    std::vector<std::size_t> candidates(data.sensors());
    for (std::size_t k = 0; k < candidates.size(); ++k) candidates[k] = k;
    std::vector<double> f(candidates.size(), 1.0), g = f, h = f;

    const auto& pt = config.grid.log_phi_t;
    const auto& pz = config.grid.log_phi_z;
    std::vector<StageState> states;
    for (int stage = 1; stage <= config.stages; ++stage) {
        const std::size_t combos = pt.size() * pz.size();
        std::vector<std::vector<double>> cv(combos, std::vector<double>(lambdas.size(), 0.0));
        std::vector<std::vector<int>> counted(combos, std::vector<int>(lambdas.size(), 0));

        detail::parallel_for(combos, config.threads, [&](std::size_t c) {
            const double phi_t = std::exp(pt[c / pz.size()]);
            const double phi_z = std::exp(pz[c % pz.size()]);
            const GroupSetup setup = build_groups(design, candidates, f, g, h, phi_t, phi_z, y, config.storage);
            Eigen::VectorXd pred, tmp;
            for (const auto& fold : folds) {
                const GroupProblem train = setup.problem.restrict_rows(fold.train);
                const GroupProblem val = setup.problem.restrict_rows(fold.validation);
                const auto path = solve_path(train, lambdas, path_options);
                for (std::size_t i = 0; i < path.size(); ++i) {
                    pred = Eigen::VectorXd::Zero(val.rows());
                    for (std::size_t k = 0; k < val.groups.size(); ++k) {
                        if (path[i].coefficients[k].isZero(0.0)) continue;
                        val.groups[k]->apply(path[i].coefficients[k], tmp);
                        pred += tmp;
                    }
                    cv[c][i] += (val.response - pred).squaredNorm() / static_cast<double>(val.rows());
                    ++counted[c][i];
                }
            }
        });

        Choice best;
        std::size_t evaluated = 0;
        for (std::size_t c = 0; c < combos; ++c) {
            for (std::size_t i = 0; i < lambdas.size(); ++i) {
                if (counted[c][i] != config.grid.folds) continue;
                ++evaluated;
                Choice cand;
                cand.mse = cv[c][i] / config.grid.folds;
                cand.params = {lambdas[i], pt[c / pz.size()], pz[c % pz.size()]};
                cand.lambda_index = i;
                cand.combo = c;
                if (cand.improves_on(best)) best = cand;
            }
        }
        if (!std::isfinite(best.mse)) throw NumericalError("select: cross-validation produced no finite error");

        StageState state;
        state.stage = stage;
        state.candidates = candidates;
        state.lambda = best.params[0];
        state.phi_t = std::exp(best.params[1]);
        state.phi_z = std::exp(best.params[2]);
        state.cv_mse = best.mse;
        state.lambdas_evaluated = evaluated;

        const GroupSetup setup =
            build_groups(design, candidates, f, g, h, state.phi_t, state.phi_z, y, config.storage);
        PathOptions full_options = path_options;
        full_options.early_exit = false;
        const auto path = solve_path(setup.problem, std::span(lambdas).first(best.lambda_index + 1), full_options);
        const GroupSolution& sol = path.back();

        std::vector<double> nf, ng, nh;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            Eigen::VectorXd beta = setup.penalties[i].expand(sol.coefficients[i]);
            if (!(beta.norm() > active_threshold)) continue;
            const auto norms = design.components.norms2(beta);
            state.selected.push_back(candidates[i]);
            state.beta.push_back(std::move(beta));
            nf.push_back(adaptive_weight(norms[0]));
            ng.push_back(adaptive_weight(norms[1]));
            nh.push_back(adaptive_weight(norms[2]));
        }
        state.f = nf;
        state.g = ng;
        state.h = nh;

        bool stable = state.selected == candidates;
        if (stable) {
            auto close = [](const std::vector<double>& a, const std::vector<double>& b) {
                for (std::size_t i = 0; i < a.size(); ++i) {
                    if (std::abs(a[i] - b[i]) > weight_tolerance * std::abs(b[i])) return false;
                }
                return true;
            };
            stable = close(nf, f) && close(ng, g) && close(nh, h);
        }
        states.push_back(std::move(state));
        const auto& last = states.back();
        if (last.selected.empty() || stable) break;
        candidates = last.selected;
        f = std::move(nf);
        g = std::move(ng);
        h = std::move(nh);
    }
    return states;
}

double FitResult::kernel(std::size_t index, double tau, double z) const
{
    const Eigen::VectorXd& b = beta.at(index);
    const double zn = map(z);
    double total = 0.0;
    for (std::size_t l = 0; l < z_basis.size(); ++l) {
        const double s = z_basis.functions[l](zn);
        if (s == 0.0) continue;
        for (std::size_t j = 0; j < t_basis.size(); ++j) {
            total += b[static_cast<Eigen::Index>(l * t_basis.size() + j)] * t_basis.functions[j](tau) * s;
        }
    }
    return total;
}

std::array<double, 3> FitResult::kernel_norms2(std::size_t index) const
{
    return PenaltyComponents::build(t_basis, z_basis).norms2(beta.at(index));
}

FitResult estimate_kernels(const Dataset& data, const AssembledDesign& design, std::span<const std::size_t> active,
                           const PipelineConfig& config)
{
    config.validate();
    if (active.empty()) throw UsageError("estimate: no active sensors");
    const Eigen::VectorXd y = response_vector(data);
    const auto folds = fold_rows(data.rows(), config.grid.folds, config.seed);

    // Reduce each block to its occupied columns when some are empty; the
    // penalty then enters through its Schur complement.
    std::vector<std::vector<Eigen::Index>> kept;
    bool reducible = false;
    Eigen::Index total_kept = 0, total_full = 0;
    for (std::size_t k : active) {
        kept.push_back(design.blocks.at(k).occupied_columns());
        reducible = reducible || kept.back().size() < design.blocks[k].cols();
        total_kept += static_cast<Eigen::Index>(kept.back().size());
        total_full += static_cast<Eigen::Index>(design.blocks[k].cols());
    }

    auto stacked = [&](bool reduced) {
        Eigen::MatrixXd x(static_cast<Eigen::Index>(data.rows()), reduced ? total_kept : total_full);
        Eigen::Index off = 0;
        for (std::size_t i = 0; i < active.size(); ++i) {
            const Eigen::MatrixXd full = design.blocks[active[i]].matrix;
            if (reduced) {
                for (std::size_t c = 0; c < kept[i].size(); ++c) x.col(off++) = full.col(kept[i][c]);
            } else {
                x.middleCols(off, full.cols()) = full;
                off += full.cols();
            }
        }
        return x;
    };

    struct System
    {
        Eigen::MatrixXd x;
        std::vector<Eigen::MatrixXd> train_gram;  // per fold X_tr^T X_tr
        std::vector<Eigen::VectorXd> train_rhs;
    };
    auto prepare_system = [&](bool reduced) {
        System s;
        s.x = stacked(reduced);
        const Eigen::MatrixXd gram = s.x.transpose() * s.x;
        const Eigen::VectorXd rhs = s.x.transpose() * y;
        for (const auto& fold : folds) {
            Eigen::MatrixXd xv(static_cast<Eigen::Index>(fold.validation.size()), s.x.cols());
            for (std::size_t i = 0; i < fold.validation.size(); ++i) xv.row(static_cast<Eigen::Index>(i)) = s.x.row(fold.validation[i]);
            s.train_gram.push_back(gram - xv.transpose() * xv);
            s.train_rhs.push_back(rhs - xv.transpose() * take(y, fold.validation));
        }
        return s;
    };
    std::optional<System> reduced_system, full_system;

    // Block-diagonal penalty for one parameter triple: reduced Schur
    // complements when columns are dropped and phi > 0, full penalties otherwise.
    struct PenaltyBlocks
    {
        bool reduced = false;
        Eigen::MatrixXd matrix;  // block diagonal
        std::vector<ReducedPenalty> factors;
    };
    auto penalty_blocks = [&](double phi, double phi_t, double phi_z) {
        PenaltyBlocks pb;
        pb.reduced = reducible && phi > 0.0;
        pb.matrix = Eigen::MatrixXd::Zero(pb.reduced ? total_kept : total_full, pb.reduced ? total_kept : total_full);
        const Eigen::MatrixXd g = design.components.combine(phi, phi_t, phi_z);
        Eigen::Index off = 0;
        for (std::size_t i = 0; i < active.size(); ++i) {
            if (pb.reduced) {
                pb.factors.emplace_back(g, kept[i]);
                const auto d = pb.factors.back().reduced_dim();
                pb.matrix.block(off, off, d, d) = pb.factors.back().schur();
                off += d;
            } else {
                pb.matrix.block(off, off, g.rows(), g.cols()) = g;
                off += g.rows();
            }
        }
        return pb;
    };

    std::vector<double> phis;
    if (config.mode == BasisKind::spline) {
        phis = {0.0};
    } else {
        for (double l : config.grid.log10_phi) phis.push_back(std::pow(10.0, l));
    }
    const double fallback_phi = std::pow(10.0, *std::min_element(config.grid.log10_phi.begin(), config.grid.log10_phi.end()));
    const auto& pt = config.grid.log_phi_t;
    const auto& pz = config.grid.log_phi_z;

    FitResult fit;
    Choice best;
    bool best_fallback = false;
    for (std::size_t a = 0; a < phis.size(); ++a) {
        for (std::size_t b = 0; b < pt.size(); ++b) {
            for (std::size_t c = 0; c < pz.size(); ++c) {
                double phi = phis[a];
                const double phi_t = std::exp(pt[b]);
                const double phi_z = std::exp(pz[c]);
                bool fallback = false;
                std::vector<double> mses;
                for (int attempt = 0; attempt < 2 && mses.empty(); ++attempt) {
                    const PenaltyBlocks pb = penalty_blocks(phi, phi_t, phi_z);
                    auto& sys = pb.reduced ? reduced_system : full_system;
                    if (!sys) sys = prepare_system(pb.reduced);
                    bool ok = true;
                    std::vector<double> fold_mse;
                    for (std::size_t fi = 0; fi < folds.size() && ok; ++fi) {
                        const Eigen::LLT<Eigen::MatrixXd> llt(sys->train_gram[fi] + pb.matrix);
                        if (!well_posed(llt)) {
                            ok = false;
                            break;
                        }
                        const Eigen::VectorXd v = llt.solve(sys->train_rhs[fi]);
                        double sse = 0.0;
                        for (Eigen::Index r : folds[fi].validation) {
                            const double e = y[r] - sys->x.row(r).dot(v);
                            sse += e * e;
                        }
                        fold_mse.push_back(sse / static_cast<double>(folds[fi].validation.size()));
                    }
                    if (ok) {
                        mses = std::move(fold_mse);
                    } else if (phi == 0.0) {
                        phi = fallback_phi;
                        fallback = true;
                    } else {
                        break;
                    }
                }
                if (mses.empty()) continue;
                Choice cand;
                double sum = 0.0;
                for (double v : mses) sum += v;
                cand.mse = sum / static_cast<double>(mses.size());
                cand.params = {phi, pt[b], pz[c]};
                if (cand.improves_on(best)) {
                    best = cand;
                    best_fallback = fallback;
                }
            }
        }
    }
    if (!std::isfinite(best.mse)) throw NumericalError("estimate: ridge system singular for every grid point");

    fit.mode = config.mode;
    fit.t_basis = design.t_basis;
    fit.z_basis = design.z_basis;
    fit.map = design.map;
    fit.truncation_level = design.truncation_level;
    fit.keep_fraction = design.keep_fraction;
    fit.selected.assign(active.begin(), active.end());
    fit.phi = best.params[0];
    fit.phi_t = std::exp(best.params[1]);
    fit.phi_z = std::exp(best.params[2]);
    fit.cv_mse = best.mse;
    fit.ridge_fallback = best_fallback;

    const PenaltyBlocks pb = penalty_blocks(fit.phi, fit.phi_t, fit.phi_z);
    auto& sys = pb.reduced ? reduced_system : full_system;
    if (!sys) sys = prepare_system(pb.reduced);
    const Eigen::LLT<Eigen::MatrixXd> llt(sys->x.transpose() * sys->x + pb.matrix);
    if (!well_posed(llt)) throw NumericalError("estimate: final ridge system is not positive definite");
    const Eigen::VectorXd v = llt.solve(sys->x.transpose() * y);
    Eigen::Index off = 0;
    for (std::size_t i = 0; i < active.size(); ++i) {
        if (pb.reduced) {
            const auto d = pb.factors[i].reduced_dim();
            fit.beta.push_back(pb.factors[i].expand_kept(v.segment(off, d)));
            off += d;
        } else {
            const auto d = static_cast<Eigen::Index>(design.blocks[active[i]].cols());
            fit.beta.push_back(v.segment(off, d));
            off += d;
        }
    }
    return fit;
}

Eigen::VectorXd predict(const FitResult& fit, const Dataset& data)
{
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(data.rows()));
    if (fit.selected.empty()) return out;
    data.validate();
    AssembledDesign like;
    like.t_basis = fit.t_basis;
    like.z_basis = fit.z_basis;
    like.map = fit.map;
    like.truncation_level = fit.truncation_level;
    like.keep_fraction = fit.keep_fraction;
    for (std::size_t k : fit.selected) {
        if (k >= data.sensors()) throw DataError("predict: dataset lacks sensor " + std::to_string(k + 1));
    }
    const auto blocks = assemble_blocks(data, like, fit.selected);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (blocks[i].matrix.cols() != fit.beta[i].size()) throw UsageError("predict: basis mismatch");
        out += blocks[i].matrix * fit.beta[i];
    }
    return out;
}

RunResult run_on_design(const Dataset& data, const AssembledDesign& design, const PipelineConfig& config)
{
    const PipelineConfig cfg = validated(config);
    RunResult result;
    auto start = std::chrono::steady_clock::now();
    result.stages = select_sensors(data, design, cfg);
    result.timings.selection = seconds_since(start);

    start = std::chrono::steady_clock::now();
    const auto& selected = result.stages.back().selected;
    if (!selected.empty()) {
        result.fit = estimate_kernels(data, design, selected, cfg);
    } else {
        // nothing selected: report the CV error of the zero predictor
        result.fit.mode = cfg.mode;
        result.fit.t_basis = design.t_basis;
        result.fit.z_basis = design.z_basis;
        result.fit.map = design.map;
        result.fit.truncation_level = design.truncation_level;
        result.fit.keep_fraction = design.keep_fraction;
        const auto folds = fold_rows(data.rows(), cfg.grid.folds, cfg.seed);
        double total = 0.0;
        for (const auto& fold : folds) {
            double sse = 0.0;
            for (Eigen::Index r : fold.validation) {
                const double y = data.responses[static_cast<std::size_t>(r)];
                sse += y * y;
            }
            total += sse / static_cast<double>(fold.validation.size());
        }
        result.fit.cv_mse = total / static_cast<double>(folds.size());
    }
    result.timings.estimation = seconds_since(start);
    result.fit.timings = result.timings;
    return result;
}

RunResult run_full(const Dataset& data, const PipelineConfig& config)
{
    const PipelineConfig cfg = validated(config);
    const auto start = std::chrono::steady_clock::now();
    const AssembledDesign design = assemble_design(data, cfg);
    const double assembly = seconds_since(start);
    RunResult result = run_on_design(data, design, cfg);
    result.timings.assembly = assembly;
    result.fit.timings = result.timings;
    return result;
}

} // namespace msafe
