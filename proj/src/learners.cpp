#include "craft/learners.hpp"

#include "craft/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <tuple>

namespace craft {

std::string to_string(LearnerKind kind)
{
    return kind == LearnerKind::mfa ? "mfa" : "lda";
}

std::string to_string(Baseline baseline)
{
    switch (baseline) {
    case Baseline::craft: return "craft";
    case Baseline::zeropad: return "zeropad";
    case Baseline::daume: return "daume";
    case Baseline::orifeat: return "orifeat";
    }
    return "unknown";
}

std::string to_string(PenaltyPairing pairing)
{
    return pairing == PenaltyPairing::per_class ? "per_class" : "global";
}

std::optional<LearnerKind> parse_learner_kind(std::string_view name)
{
    if (name == "mfa") return LearnerKind::mfa;
    if (name == "lda") return LearnerKind::lda;
    return std::nullopt;
}

std::optional<Baseline> parse_baseline(std::string_view name)
{
    if (name == "craft") return Baseline::craft;
    if (name == "zeropad") return Baseline::zeropad;
    if (name == "daume") return Baseline::daume;
    if (name == "orifeat") return Baseline::orifeat;
    return std::nullopt;
}

std::optional<PenaltyPairing> parse_penalty_pairing(std::string_view name)
{
    if (name == "per_class") return PenaltyPairing::per_class;
    if (name == "global") return PenaltyPairing::global;
    return std::nullopt;
}

namespace {

Matrix squared_distances(const Matrix& x)
{
    const Vector sq = x.colwise().squaredNorm().transpose();
    Matrix d = -2.0 * (x.transpose() * x);
    d.colwise() += sq;
    d.rowwise() += sq.transpose();
    d = d.cwiseMax(0.0);
    d.diagonal().setZero();
    return d;
}

struct Candidate {
    double dist;
    Eigen::Index i;
    Eigen::Index j;
    bool operator<(const Candidate& o) const { return std::tie(dist, i, j) < std::tie(o.dist, o.i, o.j); }
};

void keep_smallest(std::vector<Candidate>& c, std::size_t k)
{
    k = std::min(k, c.size());
    std::partial_sort(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(k), c.end());
    c.resize(k);
}

}  // namespace

GraphPair build_mfa_graphs(const Matrix& features, std::span<const PersonId> labels, std::size_t k1,
                           std::size_t k2, PenaltyPairing pairing)
{
    const Eigen::Index n = features.cols();
    if (static_cast<std::size_t>(n) != labels.size()) {
        throw std::invalid_argument("build_mfa_graphs: label count does not match sample count");
    }
    if (n < 2) throw std::invalid_argument("build_mfa_graphs: need at least 2 samples");
    if (k1 == 0 || k2 == 0) throw std::invalid_argument("build_mfa_graphs: k1 and k2 must be >= 1");
    const std::set<PersonId> classes(labels.begin(), labels.end());
    if (classes.size() < 2) {
        throw std::invalid_argument("build_mfa_graphs: need at least two classes (penalty graph would be empty)");
    }

    const Matrix dist = squared_distances(features);
    GraphPair g;
    g.k1 = k1;
    g.k2 = k2;
    g.intrinsic = AdjacencyMatrix::Zero(n, n);
    g.penalty = AdjacencyMatrix::Zero(n, n);

    std::vector<Candidate> cand;
    for (Eigen::Index i = 0; i < n; ++i) {
        cand.clear();
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j != i && labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(i)]) {
                cand.push_back({dist(i, j), j, 0});
            }
        }
        keep_smallest(cand, k1);
        for (const auto& c : cand) g.intrinsic(i, c.i) = g.intrinsic(c.i, i) = 1;
    }

    if (pairing == PenaltyPairing::per_class) {
        for (PersonId cls : classes) {
            cand.clear();
            for (Eigen::Index i = 0; i < n; ++i) {
                if (labels[static_cast<std::size_t>(i)] != cls) continue;
                for (Eigen::Index j = 0; j < n; ++j) {
                    if (labels[static_cast<std::size_t>(j)] != cls) cand.push_back({dist(i, j), i, j});
                }
            }
            keep_smallest(cand, k2);
            for (const auto& c : cand) g.penalty(c.i, c.j) = g.penalty(c.j, c.i) = 1;
        }
    } else {
        cand.clear();
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = i + 1; j < n; ++j) {
                if (labels[static_cast<std::size_t>(i)] != labels[static_cast<std::size_t>(j)]) {
                    cand.push_back({dist(i, j), i, j});
                }
            }
        }
        keep_smallest(cand, k2);
        for (const auto& c : cand) g.penalty(c.i, c.j) = g.penalty(c.j, c.i) = 1;
    }
    return g;
}

Matrix graph_scatter(const Matrix& features, const AdjacencyMatrix& adjacency)
{
    if (adjacency.rows() != features.cols() || adjacency.cols() != features.cols()) {
        throw std::invalid_argument("graph_scatter: adjacency size does not match sample count");
    }
    // sum_{i != j} A_ij (x_i - x_j)(x_i - x_j)^T = 2 X (D - A) X^T for symmetric A.
    Matrix laplacian = -adjacency.cast<double>();
    laplacian.diagonal().setZero();
    laplacian.diagonal() = -laplacian.rowwise().sum();
    Matrix s = 2.0 * (features * laplacian * features.transpose());
    return 0.5 * (s + s.transpose());
}

SubspaceSolution solve_generalized(const Matrix& numerator_scatter, const Matrix& denominator_scatter,
                                   double lambda, std::size_t m)
{
    const Eigen::Index dim = numerator_scatter.rows();
    if (numerator_scatter.cols() != dim || denominator_scatter.rows() != dim || denominator_scatter.cols() != dim) {
        throw std::invalid_argument("solve_generalized: scatter matrices must be square and of equal size");
    }
    if (m == 0) throw std::invalid_argument("solve_generalized: m must be >= 1");
    if (!(lambda >= 0.0)) throw std::invalid_argument("solve_generalized: lambda must be >= 0");

    // Directions outside range(S_num + S_den) only add lambda ||h||^2 to the
    // objective and nothing to the constraint, so the optimum lies inside it.
    const Matrix basis = psd_range_basis(numerator_scatter + denominator_scatter);
    const Eigen::Index q = basis.cols();
    if (q == 0) throw std::invalid_argument("solve_generalized: scatter matrices are zero");

    Matrix a = basis.transpose() * numerator_scatter * basis;
    a = 0.5 * (a + a.transpose());
    a.diagonal().array() += lambda;
    Matrix b = basis.transpose() * denominator_scatter * basis;
    b = 0.5 * (b + b.transpose());

    SubspaceSolution out;
    out.penalty_rank = psd_rank(b);
    if (out.penalty_rank == 0) throw std::invalid_argument("solve_generalized: penalty scatter is zero");
    const std::size_t m_eff = std::min(m, out.penalty_rank);

    Matrix b_shifted = b;
    Eigen::LLT<Matrix> chol;
    if (out.penalty_rank < static_cast<std::size_t>(q) || chol.compute(b).info() != Eigen::Success) {
        out.penalty_shift = 1e-8 * denominator_scatter.trace() / static_cast<double>(dim);
        b_shifted.diagonal().array() += out.penalty_shift;
        chol.compute(b_shifted);
        if (chol.info() != Eigen::Success) {
            throw std::runtime_error("solve_generalized: Cholesky of the shifted penalty scatter failed");
        }
    }
    const Matrix l = chol.matrixL();
    // L^{-1} A L^{-T}
    Matrix reduced = chol.matrixL().solve(a);
    reduced = chol.matrixL().solve(reduced.transpose().eval());
    reduced = 0.5 * (reduced + reduced.transpose());
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(reduced);

    Matrix y = eig.eigenvectors().leftCols(static_cast<Eigen::Index>(m_eff));
    Matrix h = chol.matrixU().solve(y);
    for (Eigen::Index c = 0; c < h.cols(); ++c) {
        const double norm_sq = h.col(c).dot(b * h.col(c));
        h.col(c) /= std::sqrt(norm_sq);
    }
    out.projection = basis * h;
    canonicalize_column_signs(out.projection);

    out.eigenvalues.resize(static_cast<Eigen::Index>(m_eff));
    for (Eigen::Index c = 0; c < h.cols(); ++c) {
        const auto col = h.col(c);
        out.eigenvalues(c) = col.dot(a * col) / col.dot(b * col);
    }
    return out;
}

SubspaceSolution solve_mfa(const Matrix& features, const GraphPair& graphs, double lambda, std::size_t m)
{
    return solve_generalized(graph_scatter(features, graphs.intrinsic), graph_scatter(features, graphs.penalty),
                             lambda, m);
}

SubspaceSolution solve_lda(const Matrix& features, std::span<const PersonId> labels, double lambda, std::size_t m)
{
    const Eigen::Index n = features.cols();
    if (static_cast<std::size_t>(n) != labels.size()) {
        throw std::invalid_argument("solve_lda: label count does not match sample count");
    }
    std::map<PersonId, std::vector<Eigen::Index>> members;
    for (Eigen::Index i = 0; i < n; ++i) members[labels[static_cast<std::size_t>(i)]].push_back(i);
    if (members.size() < 2) throw std::invalid_argument("solve_lda: need at least two classes");

    const Vector mean = features.rowwise().mean();
    const Eigen::Index dim = features.rows();
    Matrix within = Matrix::Zero(dim, dim);
    Matrix between = Matrix::Zero(dim, dim);
    for (const auto& [cls, idx] : members) {
        Matrix block(dim, static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) block.col(static_cast<Eigen::Index>(k)) = features.col(idx[k]);
        const Vector class_mean = block.rowwise().mean();
        const Matrix centred = block.colwise() - class_mean;
        within.noalias() += centred * centred.transpose();
        const Vector shift = class_mean - mean;
        between.noalias() += static_cast<double>(idx.size()) * shift * shift.transpose();
    }
    return solve_generalized(within, between, lambda, std::min(m, members.size() - 1));
}

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : std::invalid_argument([&] {
          std::string msg = "invalid training configuration:";
          for (const auto& i : issues) msg += " " + i.field + ": " + i.message + ";";
          return msg;
      }()),
      issues_(std::move(issues))
{
}

std::vector<ConfigIssue> validate_config(const TrainConfig& c)
{
    std::vector<ConfigIssue> issues;
    if (c.r == 0) issues.push_back({"r", "must be >= 1"});
    if (!(c.eta_ridge > 0.0) || !std::isfinite(c.eta_ridge)) issues.push_back({"eta-ridge", "must be > 0"});
    if (!(c.lambda >= 0.0) || !std::isfinite(c.lambda)) issues.push_back({"lambda", "must be >= 0"});
    if (c.dim && *c.dim == 0) issues.push_back({"dim", "must be >= 1"});
    if (c.k1 == 0) issues.push_back({"k1", "must be >= 1"});
    if (c.k2 == 0) issues.push_back({"k2", "must be >= 1"});
    if (c.kernel == KernelKind::rbf && !(c.rbf_gamma > 0.0)) issues.push_back({"rbf-gamma", "must be > 0"});
    if (c.omega_override && c.baseline != Baseline::craft) {
        issues.push_back({"omega", "a correlation override only applies to the craft baseline"});
    }
    return issues;
}

Matrix learner_input(const CraftModel& model, const Matrix& samples, std::size_t view)
{
    switch (model.config.baseline) {
    case Baseline::craft:
    case Baseline::zeropad:
        return whiten_columns(augment_columns(samples, view, *model.plan), *model.cvd);
    case Baseline::daume:
        return daume_augment_columns(samples, view, model.view_count);
    case Baseline::orifeat:
        if (view >= model.view_count) throw std::invalid_argument("learner_input: view out of range");
        return samples;
    }
    throw std::logic_error("learner_input: unknown baseline");
}

CraftModel train_craft(std::span<const ViewSamples> views, const TrainConfig& config)
{
    if (auto issues = validate_config(config); !issues.empty()) throw ConfigError(std::move(issues));
    if (views.size() < 2) throw std::invalid_argument("train_craft: need at least 2 views");
    const Eigen::Index d = views.front().features.rows();
    std::map<PersonId, std::set<std::size_t>> seen_in;
    for (std::size_t v = 0; v < views.size(); ++v) {
        if (views[v].features.cols() == 0) {
            throw std::invalid_argument("train_craft: view " + std::to_string(v) + " is empty");
        }
        if (views[v].features.rows() != d) throw std::invalid_argument("train_craft: views differ in dimension");
        if (views[v].persons.size() != views[v].size()) {
            throw std::invalid_argument("train_craft: view " + std::to_string(v) + " has mismatched labels");
        }
        for (PersonId p : views[v].persons) seen_in[p].insert(v);
    }
    const auto shared = std::count_if(seen_in.begin(), seen_in.end(), [](const auto& e) { return e.second.size() >= 2; });
    if (shared < 2) throw std::invalid_argument("train_craft: fewer than 2 persons appear in more than one view");

    CraftModel model;
    model.config = config;
    model.config.omega_override.reset();
    model.view_count = views.size();
    model.input_dim = static_cast<std::size_t>(d);

    std::vector<ViewSamples> work;
    if (config.kernel) {
        model.kernel = make_kernel_spec(*config.kernel, views, config.rbf_gamma);
        work = kernelize_tables(views, *model.kernel);
    } else {
        work.assign(views.begin(), views.end());
    }
    model.block_dim = static_cast<std::size_t>(work.front().features.rows());
    const auto J = static_cast<Eigen::Index>(model.view_count);

    model.omega = Matrix::Identity(J, J);
    if (config.baseline == Baseline::craft) {
        if (config.omega_override) {
            if (config.omega_override->rows() != J || config.omega_override->cols() != J) {
                throw ConfigError({{"omega", "override must be " + std::to_string(J) + " x " + std::to_string(J)}});
            }
            model.omega = *config.omega_override;
            model.omega.diagonal().setOnes();
        } else {
            std::vector<Matrix> feats;
            for (const auto& w : work) feats.push_back(w.features);
            model.omega = pairwise_correlations(feats, config.r);
        }
    }
    if (config.baseline == Baseline::craft || config.baseline == Baseline::zeropad) {
        model.plan = model.view_count == 2 ? build_pairwise_plan(model.omega(0, 1), model.block_dim)
                                           : build_multiview_plan(model.omega, model.block_dim);
        model.cvd = build_cvd(config.eta_ridge, model.view_count, model.block_dim);
    }

    // Views concatenated in camera order; labels carried alongside.
    Eigen::Index total = 0;
    for (const auto& w : work) total += w.features.cols();
    Matrix input;
    std::vector<PersonId> labels;
    labels.reserve(static_cast<std::size_t>(total));
    Eigen::Index at = 0;
    for (std::size_t v = 0; v < work.size(); ++v) {
        Matrix block = learner_input(model, work[v].features, v);
        if (input.size() == 0) input.resize(block.rows(), total);
        input.middleCols(at, block.cols()) = block;
        at += block.cols();
        labels.insert(labels.end(), work[v].persons.begin(), work[v].persons.end());
    }

    const std::size_t ids = std::set<PersonId>(labels.begin(), labels.end()).size();
    const std::size_t m = config.dim.value_or(std::max<std::size_t>(1, std::min(model.block_dim, ids - 1)));

    SubspaceSolution sol;
    if (config.learner == LearnerKind::mfa) {
        const GraphPair graphs = build_mfa_graphs(input, labels, config.k1, config.k2, config.pairing);
        sol = solve_mfa(input, graphs, config.lambda, m);
    } else {
        sol = solve_lda(input, labels, config.lambda, m);
    }
    model.whitened_projection = std::move(sol.projection);
    model.projection = model.cvd ? recover_projection(model.whitened_projection, *model.cvd)
                                 : model.whitened_projection;
    model.eigenvalues = std::move(sol.eigenvalues);
    model.penalty_shift = sol.penalty_shift;
    return model;
}

}  // namespace craft
