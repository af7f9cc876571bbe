#pragma once

#include "craft/augmentation.hpp"
#include "craft/feature_table.hpp"
#include "craft/kernel.hpp"
#include "craft/linalg.hpp"
#include "craft/regularization.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace craft {

using AdjacencyMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

enum class LearnerKind { mfa, lda };
enum class Baseline { craft, zeropad, daume, orifeat };

// How the penalty graph picks its k2 between-class pairs: the k2 nearest
// pairs touching each class, or the k2 nearest between-class pairs overall.
enum class PenaltyPairing { per_class, global };

std::string to_string(LearnerKind kind);
std::string to_string(Baseline baseline);
std::string to_string(PenaltyPairing pairing);
std::optional<LearnerKind> parse_learner_kind(std::string_view name);
std::optional<Baseline> parse_baseline(std::string_view name);
std::optional<PenaltyPairing> parse_penalty_pairing(std::string_view name);

/// Marginal Fisher Analysis graphs. Both are symmetric 0/1 with a zero
/// diagonal; intrinsic edges join same-class samples, penalty edges join
/// samples of different classes.
struct GraphPair {
    AdjacencyMatrix intrinsic;
    AdjacencyMatrix penalty;
    std::size_t k1 = 0;
    std::size_t k2 = 0;
};

GraphPair build_mfa_graphs(const Matrix& features, std::span<const PersonId> labels, std::size_t k1,
                           std::size_t k2, PenaltyPairing pairing = PenaltyPairing::per_class);

// Pairwise scatter sum_{i != j} A_ij (x_i - x_j)(x_i - x_j)^T.
Matrix graph_scatter(const Matrix& features, const AdjacencyMatrix& adjacency);

/// Solution of (S_num + lambda I) h = mu S_den h for the m smallest mu,
/// columns scaled so that h^T S_den h = 1.
struct SubspaceSolution {
    Matrix projection;       // dim x m
    Vector eigenvalues;      // mu, ascending
    double penalty_shift = 0.0;  // epsilon added to S_den when it was singular
    std::size_t penalty_rank = 0;
};

SubspaceSolution solve_generalized(const Matrix& numerator_scatter, const Matrix& denominator_scatter,
                                   double lambda, std::size_t m);

SubspaceSolution solve_mfa(const Matrix& features, const GraphPair& graphs, double lambda, std::size_t m);

// Within-class scatter as numerator, between-class as denominator. m is
// capped at (#classes - 1).
SubspaceSolution solve_lda(const Matrix& features, std::span<const PersonId> labels, double lambda,
                           std::size_t m);

struct TrainConfig {
    LearnerKind learner = LearnerKind::mfa;
    std::optional<KernelKind> kernel;  // nullopt: linear features, no kernel
    double rbf_gamma = 1.0;
    Baseline baseline = Baseline::craft;
    std::size_t r = 100;
    double eta_ridge = 1.0;
    double lambda = 0.01;
    std::optional<std::size_t> dim;  // default min(block dim, #ids - 1)
    std::size_t k1 = 5;
    std::size_t k2 = 200;
    PenaltyPairing pairing = PenaltyPairing::per_class;
    // Use this J x J correlation matrix instead of estimating it.
    std::optional<Matrix> omega_override;
};

struct ConfigIssue {
    std::string field;
    std::string message;
};

class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(std::vector<ConfigIssue> issues);
    const std::vector<ConfigIssue>& issues() const { return issues_; }

private:
    std::vector<ConfigIssue> issues_;
};

std::vector<ConfigIssue> validate_config(const TrainConfig& config);

/// Trained model: how to lift a raw sample of view i into the learner's
/// space, and the learned projection there.
struct CraftModel {
    TrainConfig config;
    std::size_t view_count = 0;
    std::size_t input_dim = 0;  // raw feature dimension
    std::size_t block_dim = 0;  // per-view block: input_dim, or reference count with a kernel
    Matrix omega;               // J x J camera correlations (identity off-diagonal zeros when unused)
    std::optional<AugmentationPlan> plan;  // craft / zeropad
    std::optional<CvdOperator> cvd;        // craft / zeropad
    std::optional<KernelSpec> kernel;
    Matrix projection;             // W, learner_dim x m
    Matrix whitened_projection;    // H; equals W when there is no CVD operator
    Vector eigenvalues;
    double penalty_shift = 0.0;

    std::size_t subspace_dim() const { return static_cast<std::size_t>(projection.cols()); }
    std::size_t learner_dim() const { return static_cast<std::size_t>(projection.rows()); }
};

// Learner input for a block of samples from one view: augmented and
// whitened for craft/zeropad, augmented for daume, raw for orifeat.
// `samples` must already be kernelized when the model has a kernel.
Matrix learner_input(const CraftModel& model, const Matrix& samples, std::size_t view);

CraftModel train_craft(std::span<const ViewSamples> views, const TrainConfig& config);

}  // namespace craft
