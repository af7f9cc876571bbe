#include "craft/learners.hpp"

#include "craft/evaluation.hpp"
#include "craft/synthetic.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <tuple>

using namespace craft;

namespace {

double sqdist(const Matrix& x, Eigen::Index i, Eigen::Index j)
{
    return (x.col(i) - x.col(j)).squaredNorm();
}

// Brute-force graphs: for every sample rank all same-class samples; for
// every class rank all pairs touching it (or all between-class pairs).
GraphPair brute_graphs(const Matrix& x, const std::vector<PersonId>& y, std::size_t k1, std::size_t k2,
                       PenaltyPairing pairing)
{
    const Eigen::Index n = x.cols();
    GraphPair g;
    g.intrinsic = AdjacencyMatrix::Zero(n, n);
    g.penalty = AdjacencyMatrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        std::vector<std::pair<double, Eigen::Index>> same;
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i && y[static_cast<std::size_t>(i)] == y[static_cast<std::size_t>(j)]) same.push_back({sqdist(x, i, j), j});
        std::sort(same.begin(), same.end());
        for (std::size_t t = 0; t < std::min(k1, same.size()); ++t) {
            g.intrinsic(i, same[t].second) = g.intrinsic(same[t].second, i) = 1;
        }
    }
    auto mark = [&](std::vector<std::tuple<double, Eigen::Index, Eigen::Index>> pairs) {
        std::sort(pairs.begin(), pairs.end());
        for (std::size_t t = 0; t < std::min(k2, pairs.size()); ++t) {
            const auto [d, i, j] = pairs[t];
            g.penalty(i, j) = g.penalty(j, i) = 1;
        }
    };
    if (pairing == PenaltyPairing::global) {
        std::vector<std::tuple<double, Eigen::Index, Eigen::Index>> pairs;
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i + 1; j < n; ++j)
                if (y[static_cast<std::size_t>(i)] != y[static_cast<std::size_t>(j)]) pairs.push_back({sqdist(x, i, j), i, j});
        mark(pairs);
    } else {
        for (PersonId c : std::set<PersonId>(y.begin(), y.end())) {
            std::vector<std::tuple<double, Eigen::Index, Eigen::Index>> pairs;
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j)
                    if (y[static_cast<std::size_t>(i)] == c && y[static_cast<std::size_t>(j)] != c) pairs.push_back({sqdist(x, i, j), i, j});
            mark(pairs);
        }
    }
    return g;
}

Matrix pair_sum_scatter(const Matrix& x, const AdjacencyMatrix& a)
{
    Matrix s = Matrix::Zero(x.rows(), x.rows());
    for (Eigen::Index i = 0; i < x.cols(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            if (a(i, j)) s += (x.col(i) - x.col(j)) * (x.col(i) - x.col(j)).transpose();
    return s;
}

std::vector<ViewSamples> synthetic_views(const SyntheticSpec& spec)
{
    return split_views(generate_synthetic(spec));
}

}  // namespace

TEST_CASE("enum names round-trip")
{
    for (auto k : {LearnerKind::mfa, LearnerKind::lda}) CHECK(parse_learner_kind(to_string(k)) == k);
    for (auto b : {Baseline::craft, Baseline::zeropad, Baseline::daume, Baseline::orifeat}) CHECK(parse_baseline(to_string(b)) == b);
    for (auto p : {PenaltyPairing::per_class, PenaltyPairing::global}) CHECK(parse_penalty_pairing(to_string(p)) == p);
    CHECK(!parse_learner_kind("xqda"));
    CHECK(!parse_baseline("none"));
}

TEST_CASE("MFA graphs on a tiny exhaustive case")
{
    Matrix x(1, 4);
    x << 0.0, 1.0, 5.0, 7.0;
    const std::vector<PersonId> y = {0, 0, 1, 1};
    const auto g = build_mfa_graphs(x, y, 1, 1);
    AdjacencyMatrix intrinsic(4, 4), penalty = AdjacencyMatrix::Zero(4, 4);
    intrinsic << 0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0;
    penalty(1, 2) = penalty(2, 1) = 1;
    CHECK(g.intrinsic == intrinsic);
    CHECK(g.penalty == penalty);
}

TEST_CASE("a class with one sample has no intrinsic edges")
{
    Matrix x(2, 5);
    x << 0, 1, 2, 3, 9, 0, 1, 0, 1, 9;
    const std::vector<PersonId> y = {0, 0, 1, 1, 2};
    const auto g = build_mfa_graphs(x, y, 3, 4);
    CHECK(g.intrinsic.row(4).cast<int>().sum() == 0);
    CHECK(g.intrinsic.col(4).cast<int>().sum() == 0);
}

TEST_CASE("MFA graphs match a brute-force neighbour scan")
{
    std::mt19937_64 rng(41);
    for (auto pairing : {PenaltyPairing::per_class, PenaltyPairing::global}) {
        for (int trial = 0; trial < 5; ++trial) {
            const Matrix x = oracle::random_matrix(rng, 3, 20);
            std::vector<PersonId> y;
            for (int i = 0; i < 20; ++i) y.push_back((i * 7 + trial) % 4);
            const std::size_t k1 = 1 + static_cast<std::size_t>(trial % 3);
            const std::size_t k2 = 2 + static_cast<std::size_t>(trial * 3);
            const auto g = build_mfa_graphs(x, y, k1, k2, pairing);
            const auto want = brute_graphs(x, y, k1, k2, pairing);
            CHECK(g.intrinsic == want.intrinsic);
            CHECK(g.penalty == want.penalty);
            CHECK(g.intrinsic == g.intrinsic.transpose());
            CHECK(g.penalty == g.penalty.transpose());
            for (Eigen::Index i = 0; i < 20; ++i) {
                CHECK(g.intrinsic(i, i) == 0);
                CHECK(g.penalty(i, i) == 0);
                for (Eigen::Index j = 0; j < 20; ++j) {
                    const bool same = y[static_cast<std::size_t>(i)] == y[static_cast<std::size_t>(j)];
                    if (g.intrinsic(i, j)) CHECK(same);
                    if (g.penalty(i, j)) CHECK(!same);
                }
            }
        }
    }
}

TEST_CASE("MFA graph errors")
{
    const Matrix x = Matrix::Random(2, 4);
    CHECK_THROWS_AS(build_mfa_graphs(x, std::vector<PersonId>{1, 1, 1, 1}, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_mfa_graphs(x, std::vector<PersonId>{0, 1, 0}, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_mfa_graphs(x, std::vector<PersonId>{0, 1, 0, 1}, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_mfa_graphs(x, std::vector<PersonId>{0, 1, 0, 1}, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(build_mfa_graphs(Matrix::Ones(2, 1), std::vector<PersonId>{0}, 1, 1), std::invalid_argument);
}

TEST_CASE("graph scatter is the explicit pair sum")
{
    std::mt19937_64 rng(42);
    const Matrix x = oracle::random_matrix(rng, 4, 12);
    std::vector<PersonId> y;
    for (int i = 0; i < 12; ++i) y.push_back(i % 3);
    const auto g = build_mfa_graphs(x, y, 2, 5);
    CHECK((graph_scatter(x, g.intrinsic) - pair_sum_scatter(x, g.intrinsic)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((graph_scatter(x, g.penalty) - pair_sum_scatter(x, g.penalty)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK_THROWS_AS(graph_scatter(x, AdjacencyMatrix::Zero(3, 3)), std::invalid_argument);
}

TEST_CASE("generalized solve")
{
    std::mt19937_64 rng(43);
    const Matrix a = oracle::random_matrix(rng, 6, 10);
    const Matrix b = oracle::random_matrix(rng, 6, 10);
    const Matrix num = a * a.transpose();
    const Matrix den = b * b.transpose();

    SUBCASE("full-dimension solution satisfies the eigen identity")
    {
        const auto sol = solve_generalized(num, den, 0.0, 6);
        const Matrix& h = sol.projection;
        CHECK(sol.penalty_shift == 0.0);
        CHECK((num * h - den * h * sol.eigenvalues.asDiagonal()).cwiseAbs().maxCoeff() < 1e-6);
        CHECK((h.transpose() * den * h - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-8);
        for (Eigen::Index k = 1; k < 6; ++k) CHECK(sol.eigenvalues(k) >= sol.eigenvalues(k - 1));
    }
    SUBCASE("no random feasible basis beats the solution")
    {
        const double lambda = 0.1;
        const auto sol = solve_generalized(num, den, lambda, 2);
        const Matrix reg = num + lambda * Matrix::Identity(6, 6);
        const double best = (sol.projection.transpose() * reg * sol.projection).trace();
        for (int t = 0; t < 100; ++t) {
            Matrix h = oracle::random_orthonormal(rng, 6, 2);
            // Make it feasible: H^T S_den H = I.
            const Eigen::LLT<Matrix> llt(h.transpose() * den * h);
            h = h * Matrix(llt.matrixU()).inverse();
            CHECK(best <= (h.transpose() * reg * h).trace() + 1e-9);
        }
    }
    SUBCASE("singular denominator is shifted and recorded")
    {
        const Matrix low = b.leftCols(2) * b.leftCols(2).transpose();  // rank 2
        const auto sol = solve_generalized(num, low, 0.01, 4);
        CHECK(sol.penalty_rank == 2);
        CHECK(sol.projection.cols() == 2);
        CHECK(sol.penalty_shift == doctest::Approx(1e-8 * low.trace() / 6.0));
        CHECK(sol.projection.allFinite());
    }
    SUBCASE("deterministic signs")
    {
        const auto s1 = solve_generalized(num, den, 0.01, 3);
        const auto s2 = solve_generalized(num, den, 0.01, 3);
        CHECK(s1.projection == s2.projection);
        for (Eigen::Index c = 0; c < 3; ++c) {
            const auto col = s1.projection.col(c);
            Eigen::Index first = 0;
            while (std::abs(col(first)) <= 1e-12 * col.cwiseAbs().maxCoeff()) ++first;
            CHECK(col(first) > 0.0);
        }
    }
    SUBCASE("errors")
    {
        CHECK_THROWS_AS(solve_generalized(num, den, -1.0, 2), std::invalid_argument);
        CHECK_THROWS_AS(solve_generalized(num, den, 0.0, 0), std::invalid_argument);
        CHECK_THROWS_AS(solve_generalized(num, Matrix::Zero(6, 6), 0.0, 2), std::invalid_argument);
        CHECK_THROWS_AS(solve_generalized(num, Matrix::Identity(5, 5), 0.0, 2), std::invalid_argument);
    }
}

TEST_CASE("MFA separates two Gaussian classes and meets its constraint")
{
    std::mt19937_64 rng(44);
    Matrix x = 0.3 * oracle::random_matrix(rng, 2, 40);
    std::vector<PersonId> y;
    for (Eigen::Index i = 0; i < 40; ++i) {
        y.push_back(i < 20 ? 0 : 1);
        if (i >= 20) x(0, i) += 4.0;
    }
    const auto g = build_mfa_graphs(x, y, 3, 10);
    const auto sol = solve_mfa(x, g, 0.0, 1);
    const Vector p = x.transpose() * sol.projection.col(0);
    const double m0 = p.head(20).mean(), m1 = p.tail(20).mean();
    const double s0 = std::sqrt((p.head(20).array() - m0).square().mean());
    const double s1 = std::sqrt((p.tail(20).array() - m1).square().mean());
    CHECK(std::abs(m0 - m1) > 5.0 * std::max(s0, s1));

    double constraint = 0.0;
    for (Eigen::Index i = 0; i < 40; ++i)
        for (Eigen::Index j = 0; j < 40; ++j)
            if (g.penalty(i, j)) constraint += (sol.projection.transpose() * (x.col(i) - x.col(j))).squaredNorm();
    CHECK(constraint == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("LDA")
{
    std::mt19937_64 rng(45);
    SUBCASE("two spherical classes: direction along the mean difference")
    {
        Matrix x = oracle::random_matrix(rng, 3, 200);
        Vector shift(3);
        shift << 3.0, -2.0, 1.0;
        std::vector<PersonId> y;
        for (Eigen::Index i = 0; i < 200; ++i) {
            y.push_back(i % 2);
            if (i % 2) x.col(i) += shift;
        }
        const auto sol = solve_lda(x, y, 0.0, 5);
        REQUIRE(sol.projection.cols() == 1);
        CHECK(std::abs(sol.projection.col(0).normalized().dot(shift.normalized())) > 0.99);
    }
    SUBCASE("closed-form two-class direction")
    {
        const Matrix x = oracle::random_matrix(rng, 4, 30);
        std::vector<PersonId> y;
        for (int i = 0; i < 30; ++i) y.push_back(i < 12 ? 5 : 9);
        const Vector mu1 = x.leftCols(12).rowwise().mean();
        const Vector mu2 = x.rightCols(18).rowwise().mean();
        const Matrix c1 = x.leftCols(12).colwise() - mu1;
        const Matrix c2 = x.rightCols(18).colwise() - mu2;
        const Matrix sw = c1 * c1.transpose() + c2 * c2.transpose();
        const Vector want = sw.ldlt().solve(mu1 - mu2);
        const auto sol = solve_lda(x, y, 0.0, 1);
        CHECK(std::abs(sol.projection.col(0).normalized().dot(want.normalized())) > 1.0 - 1e-9);
    }
    SUBCASE("m is capped at classes - 1")
    {
        const Matrix x = oracle::random_matrix(rng, 6, 30);
        std::vector<PersonId> y;
        for (int i = 0; i < 30; ++i) y.push_back(i % 3);
        CHECK(solve_lda(x, y, 0.01, 5).projection.cols() == 2);
    }
    SUBCASE("errors")
    {
        CHECK_THROWS_AS(solve_lda(Matrix::Ones(2, 3), std::vector<PersonId>{1, 1, 1}, 0.0, 1), std::invalid_argument);
        CHECK_THROWS_AS(solve_lda(Matrix::Ones(2, 3), std::vector<PersonId>{1, 2}, 0.0, 1), std::invalid_argument);
    }
}

TEST_CASE("config validation names every bad field")
{
    TrainConfig c;
    c.r = 0;
    c.eta_ridge = 0.0;
    c.lambda = -1.0;
    c.dim = 0;
    c.k1 = 0;
    c.k2 = 0;
    const auto issues = validate_config(c);
    std::set<std::string> fields;
    for (const auto& i : issues) fields.insert(i.field);
    CHECK(fields == std::set<std::string>{"r", "eta-ridge", "lambda", "dim", "k1", "k2"});
    CHECK(validate_config(TrainConfig{}).empty());

    const auto views = synthetic_views({.persons = 10, .seed = 3});
    try {
        (void)train_craft(views, c);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.issues().size() == 6);
    }
}

TEST_CASE("train_craft pipeline")
{
    const SyntheticSpec spec{.persons = 30, .per_view = 2, .latent = 6, .dim = 10, .seed = 5};
    const auto views = synthetic_views(spec);
    TrainConfig cfg;
    cfg.r = 6;

    SUBCASE("model shapes and the W/H relation")
    {
        const auto model = train_craft(views, cfg);
        CHECK(model.view_count == 2);
        CHECK(model.block_dim == 10);
        CHECK(model.learner_dim() == 20);
        CHECK(model.subspace_dim() == 10);  // min(d, #ids - 1)
        CHECK(model.omega(0, 1) > 0.0);
        CHECK(model.omega(0, 1) < 1.0);
        CHECK((model.projection - recover_projection(model.whitened_projection, *model.cvd)).cwiseAbs().maxCoeff() < 1e-8);
    }
    SUBCASE("identical inputs give a bitwise identical model")
    {
        const auto a = train_craft(views, cfg);
        const auto b = train_craft(views, cfg);
        CHECK(a.projection == b.projection);
        CHECK(a.omega == b.omega);
    }
    SUBCASE("learned H meets the penalty-graph normalisation")
    {
        cfg.dim = 4;
        const auto model = train_craft(views, cfg);
        Matrix x(static_cast<Eigen::Index>(model.learner_dim()), 0);
        std::vector<PersonId> y;
        for (std::size_t v = 0; v < 2; ++v) {
            const Matrix block = learner_input(model, views[v].features, v);
            Matrix grown(x.rows(), x.cols() + block.cols());
            grown << x, block;
            x = grown;
            y.insert(y.end(), views[v].persons.begin(), views[v].persons.end());
        }
        const auto g = build_mfa_graphs(x, y, cfg.k1, cfg.k2);
        double total = 0.0;
        for (Eigen::Index i = 0; i < x.cols(); ++i)
            for (Eigen::Index j = 0; j < x.cols(); ++j)
                if (g.penalty(i, j)) total += (model.whitened_projection.transpose() * (x.col(i) - x.col(j))).squaredNorm();
        CHECK(total == doctest::Approx(4.0).epsilon(1e-6));
    }
    SUBCASE("zero correlation reproduces the zero-padding model")
    {
        TrainConfig forced = cfg;
        forced.omega_override = Matrix::Identity(2, 2);
        TrainConfig zp = cfg;
        zp.baseline = Baseline::zeropad;
        const auto a = train_craft(views, forced);
        const auto b = train_craft(views, zp);
        CHECK(a.projection == b.projection);
    }
    SUBCASE("orthogonal camera subspaces give omega near zero and the zero-padding model")
    {
        // Camera 0 varies only in coordinates 0..4, camera 1 only in 5..9.
        auto ortho = views;
        ortho[0].features.bottomRows(5).setZero();
        ortho[1].features.topRows(5).setZero();
        TrainConfig c5 = cfg;
        c5.r = 5;
        const auto a = train_craft(ortho, c5);
        CHECK(a.omega(0, 1) < 1e-12);
        c5.baseline = Baseline::zeropad;
        const auto b = train_craft(ortho, c5);
        CHECK((a.projection - b.projection).cwiseAbs().maxCoeff() < 1e-8);
    }
    SUBCASE("baselines")
    {
        for (auto base : {Baseline::zeropad, Baseline::daume, Baseline::orifeat}) {
            TrainConfig c = cfg;
            c.baseline = base;
            const auto model = train_craft(views, c);
            CHECK(model.omega == Matrix::Identity(2, 2));
            if (base == Baseline::daume) CHECK(model.learner_dim() == 30);
            if (base == Baseline::orifeat) {
                CHECK(model.learner_dim() == 10);
                CHECK(!model.cvd);
            }
            if (base == Baseline::zeropad) CHECK(model.cvd.has_value());
        }
    }
    SUBCASE("LDA and kernel variants train")
    {
        TrainConfig c = cfg;
        c.learner = LearnerKind::lda;
        CHECK(train_craft(views, c).subspace_dim() == 10);
        c.kernel = KernelKind::rbf;
        c.rbf_gamma = 0.05;
        const auto model = train_craft(views, c);
        CHECK(model.block_dim == 120);
        CHECK(model.kernel.has_value());
        CHECK(model.subspace_dim() == 29);
    }
    SUBCASE("omega override must match the view count")
    {
        TrainConfig c = cfg;
        c.omega_override = Matrix::Identity(3, 3);
        CHECK_THROWS_AS(train_craft(views, c), ConfigError);
        c.baseline = Baseline::zeropad;
        CHECK_THROWS_AS(train_craft(views, c), ConfigError);
    }
    SUBCASE("input errors")
    {
        CHECK_THROWS_AS(train_craft(std::span(views.data(), 1), cfg), std::invalid_argument);
        auto bad = views;
        bad[1].features = Matrix(10, 0);
        bad[1].persons.clear();
        CHECK_THROWS_AS(train_craft(bad, cfg), std::invalid_argument);
        bad = views;
        for (auto& p : bad[1].persons) p += 1000;
        CHECK_THROWS_AS(train_craft(bad, cfg), std::invalid_argument);
        bad = views;
        bad[1].features = Matrix::Ones(9, bad[1].features.cols());
        CHECK_THROWS_AS(train_craft(bad, cfg), std::invalid_argument);
    }
}

TEST_CASE("larger lambda shrinks the regularised norm")
{
    const auto views = synthetic_views({.persons = 20, .views = 3, .latent = 4, .dim = 6, .seed = 9});
    TrainConfig c;
    c.r = 4;
    c.dim = 1;
    double prev_norm = std::numeric_limits<double>::infinity();
    double penalty_at_zero = 0.0;
    double penalty_at_ten = 0.0;
    for (double lambda : {0.0, 1e-3, 1e-1, 10.0}) {
        c.lambda = lambda;
        const auto model = train_craft(views, c);
        const double norm = model.whitened_projection.squaredNorm();
        CHECK(norm <= prev_norm * (1.0 + 1e-9));
        prev_norm = norm;
        if (lambda == 0.0) penalty_at_zero = cvd_penalty(model.projection, 3);
        if (lambda == 10.0) {
            penalty_at_ten = cvd_penalty(model.projection, 3);
            const auto b = static_cast<Eigen::Index>(model.block_dim);
            CHECK((model.projection.topRows(b) - model.projection.middleRows(b, b)).norm() > 0.0);
        }
    }
    CHECK(penalty_at_ten < penalty_at_zero);
}
