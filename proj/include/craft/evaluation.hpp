#pragma once

#include "craft/feature_table.hpp"
#include "craft/learners.hpp"
#include "craft/linalg.hpp"

#include <optional>
#include <string>
#include <vector>

namespace craft {

// Projection of raw samples from one camera into the m-dim matching space.
// Computed blockwise as sum_j c_view[j] (W^j)^T x, which equals W^T applied
// to the augmented sample; blocks with a zero coefficient are skipped, so a
// zero-padding model scores exactly (W^view)^T x. Kernel models map x to
// its kernel vector first.
Matrix score_columns(const CraftModel& model, const Matrix& samples, std::size_t view);
Vector score(const CraftModel& model, const Vector& x, std::size_t view);

/// probes x gallery Euclidean distances with the identities (and cameras)
/// of both sides.
struct DistanceMatrix {
    Matrix values;
    std::vector<PersonId> probe_ids;
    std::vector<PersonId> gallery_ids;
    std::vector<int> probe_cameras;    // may be empty
    std::vector<int> gallery_cameras;  // may be empty

    Eigen::Index probes() const { return values.rows(); }
    Eigen::Index gallery() const { return values.cols(); }
};

// Columns are score vectors.
DistanceMatrix distance_matrix(const Matrix& probe_scores, std::vector<PersonId> probe_ids,
                               const Matrix& gallery_scores, std::vector<PersonId> gallery_ids);

struct CollapseAxes {
    bool probe = true;
    bool gallery = true;
};

// Person-level matrix: entry (p, g) is the mean distance over every image
// pair of person p (probe side) and person g (gallery side). Persons keep
// their order of first appearance. An axis that is not collapsed is left
// as is.
DistanceMatrix multishot_collapse(const DistanceMatrix& dist, CollapseAxes axes = {});

// Gallery indices of probe row p sorted by ascending distance, ties by index.
std::vector<Eigen::Index> ranked_gallery(const DistanceMatrix& dist, Eigen::Index probe);

struct CmcCurve {
    std::vector<double> rates;  // rates[k-1] = matching rate at rank k
    std::size_t evaluated_probes = 0;
    std::size_t excluded_probes = 0;  // no true match in the gallery

    // Rate at rank k (1-based), capped at the gallery size. 0 when empty.
    double rank(std::size_t k) const;
};

CmcCurve cmc(const DistanceMatrix& dist);

// Average precision per probe; nullopt for probes without a gallery match.
std::vector<std::optional<double>> average_precisions(const DistanceMatrix& dist);
// Mean over probes that have a match; 0 when there are none.
double mean_average_precision(const DistanceMatrix& dist);

enum class Protocol { single, multishot, multiquery };
std::string to_string(Protocol protocol);
std::optional<Protocol> parse_protocol(std::string_view name);

struct EvaluationResult {
    DistanceMatrix distances;  // after any collapsing
    CmcCurve curve;
    double mean_ap = 0.0;
};

// Scores both tables (camera id = view index), builds the distance matrix
// and applies the protocol: single keeps images, multishot collapses both
// axes by person, multiquery collapses only the probe axis.
EvaluationResult evaluate(const CraftModel& model, const FeatureTable& probe, const FeatureTable& gallery,
                          Protocol protocol);

// `k,cmc_rate`, one row per rank.
std::string encode_cmc_csv(const CmcCurve& curve);
// `rank1,rank5,rank10,rank20,mAP,probes,excluded_probes`, one data row.
std::string encode_summary_csv(const EvaluationResult& result);

}  // namespace craft
