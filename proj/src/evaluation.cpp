#include "craft/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <stdexcept>

namespace craft {

namespace {

struct BlockWeight {
    Eigen::Index block;
    double coefficient;
};

// Which row blocks of W a view-`view` sample touches, and with what weight.
std::vector<BlockWeight> block_weights(const CraftModel& model, std::size_t view)
{
    if (view >= model.view_count) {
        throw std::invalid_argument("score: view " + std::to_string(view) + " unknown to a model with " +
                                    std::to_string(model.view_count) + " views");
    }
    std::vector<BlockWeight> out;
    switch (model.config.baseline) {
    case Baseline::craft:
    case Baseline::zeropad:
        for (std::size_t j = 0; j < model.view_count; ++j) {
            const double c = model.plan->coefficient(view, j);
            if (c != 0.0) out.push_back({static_cast<Eigen::Index>(j), c});
        }
        break;
    case Baseline::daume:
        out.push_back({0, 1.0});
        out.push_back({static_cast<Eigen::Index>(view + 1), 1.0});
        break;
    case Baseline::orifeat: out.push_back({0, 1.0}); break;
    }
    return out;
}

}  // namespace

Matrix score_columns(const CraftModel& model, const Matrix& samples, std::size_t view)
{
    const auto weights = block_weights(model, view);
    if (static_cast<std::size_t>(samples.rows()) != model.input_dim) {
        throw std::invalid_argument("score: sample dimension " + std::to_string(samples.rows()) +
                                    " does not match model input dimension " + std::to_string(model.input_dim));
    }
    const Matrix lifted = model.kernel ? model.kernel->kernel_columns(samples) : samples;
    const auto b = static_cast<Eigen::Index>(model.block_dim);
    Matrix out;
    for (const auto& w : weights) {
        Matrix term = model.projection.middleRows(w.block * b, b).transpose() * lifted;
        if (w.coefficient != 1.0) term *= w.coefficient;
        if (out.size() == 0) {
            out = std::move(term);
        } else {
            out += term;
        }
    }
    if (out.size() == 0) out = Matrix::Zero(model.projection.cols(), samples.cols());
    return out;
}

Vector score(const CraftModel& model, const Vector& x, std::size_t view)
{
    return score_columns(model, x, view).col(0);
}

DistanceMatrix distance_matrix(const Matrix& probe_scores, std::vector<PersonId> probe_ids,
                               const Matrix& gallery_scores, std::vector<PersonId> gallery_ids)
{
    if (probe_scores.rows() != gallery_scores.rows()) {
        throw std::invalid_argument("distance_matrix: probe scores have dimension " +
                                    std::to_string(probe_scores.rows()) + ", gallery scores " +
                                    std::to_string(gallery_scores.rows()));
    }
    if (probe_ids.size() != static_cast<std::size_t>(probe_scores.cols()) ||
        gallery_ids.size() != static_cast<std::size_t>(gallery_scores.cols())) {
        throw std::invalid_argument("distance_matrix: identity labels do not match score counts");
    }
    DistanceMatrix d;
    d.values.resize(probe_scores.cols(), gallery_scores.cols());
    for (Eigen::Index g = 0; g < gallery_scores.cols(); ++g) {
        for (Eigen::Index p = 0; p < probe_scores.cols(); ++p) {
            d.values(p, g) = (probe_scores.col(p) - gallery_scores.col(g)).norm();
        }
    }
    d.probe_ids = std::move(probe_ids);
    d.gallery_ids = std::move(gallery_ids);
    return d;
}

namespace {

// Groups positions by identity in first-appearance order.
std::vector<std::vector<Eigen::Index>> group_by_person(const std::vector<PersonId>& ids,
                                                       std::vector<PersonId>& persons)
{
    std::map<PersonId, std::size_t> slot;
    std::vector<std::vector<Eigen::Index>> groups;
    persons.clear();
    for (std::size_t i = 0; i < ids.size(); ++i) {
        auto [it, inserted] = slot.try_emplace(ids[i], groups.size());
        if (inserted) {
            groups.emplace_back();
            persons.push_back(ids[i]);
        }
        groups[it->second].push_back(static_cast<Eigen::Index>(i));
    }
    return groups;
}

std::vector<std::vector<Eigen::Index>> singleton_groups(std::size_t n)
{
    std::vector<std::vector<Eigen::Index>> groups(n);
    for (std::size_t i = 0; i < n; ++i) groups[i] = {static_cast<Eigen::Index>(i)};
    return groups;
}

std::vector<int> first_cameras(const std::vector<int>& cameras, const std::vector<std::vector<Eigen::Index>>& groups)
{
    std::vector<int> out;
    if (cameras.empty()) return out;
    for (const auto& g : groups) out.push_back(cameras[static_cast<std::size_t>(g.front())]);
    return out;
}

}  // namespace

DistanceMatrix multishot_collapse(const DistanceMatrix& dist, CollapseAxes axes)
{
    DistanceMatrix out;
    const auto probe_groups = axes.probe ? group_by_person(dist.probe_ids, out.probe_ids)
                                         : singleton_groups(dist.probe_ids.size());
    if (!axes.probe) out.probe_ids = dist.probe_ids;
    const auto gallery_groups = axes.gallery ? group_by_person(dist.gallery_ids, out.gallery_ids)
                                             : singleton_groups(dist.gallery_ids.size());
    if (!axes.gallery) out.gallery_ids = dist.gallery_ids;
    out.probe_cameras = first_cameras(dist.probe_cameras, probe_groups);
    out.gallery_cameras = first_cameras(dist.gallery_cameras, gallery_groups);

    out.values.resize(static_cast<Eigen::Index>(probe_groups.size()), static_cast<Eigen::Index>(gallery_groups.size()));
    for (std::size_t g = 0; g < gallery_groups.size(); ++g) {
        for (std::size_t p = 0; p < probe_groups.size(); ++p) {
            double sum = 0.0;
            for (Eigen::Index pi : probe_groups[p]) {
                for (Eigen::Index gi : gallery_groups[g]) sum += dist.values(pi, gi);
            }
            out.values(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(g)) =
                sum / static_cast<double>(probe_groups[p].size() * gallery_groups[g].size());
        }
    }
    return out;
}

std::vector<Eigen::Index> ranked_gallery(const DistanceMatrix& dist, Eigen::Index probe)
{
    std::vector<Eigen::Index> order(static_cast<std::size_t>(dist.gallery()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return dist.values(probe, a) < dist.values(probe, b); });
    return order;
}

double CmcCurve::rank(std::size_t k) const
{
    if (rates.empty() || k == 0) return 0.0;
    return rates[std::min(k, rates.size()) - 1];
}

namespace {

void check_labels(const DistanceMatrix& dist)
{
    if (dist.probe_ids.size() != static_cast<std::size_t>(dist.probes()) ||
        dist.gallery_ids.size() != static_cast<std::size_t>(dist.gallery())) {
        throw std::invalid_argument("distance matrix labels do not match its shape");
    }
    if (!dist.values.allFinite() || (dist.values.array() < 0.0).any()) {
        throw std::invalid_argument("distance matrix entries must be finite and nonnegative");
    }
}

// 1-based ranks of the true matches of probe p.
std::vector<std::size_t> hit_ranks(const DistanceMatrix& dist, Eigen::Index p)
{
    const auto order = ranked_gallery(dist, p);
    std::vector<std::size_t> hits;
    for (std::size_t r = 0; r < order.size(); ++r) {
        if (dist.gallery_ids[static_cast<std::size_t>(order[r])] == dist.probe_ids[static_cast<std::size_t>(p)]) {
            hits.push_back(r + 1);
        }
    }
    return hits;
}

}  // namespace

CmcCurve cmc(const DistanceMatrix& dist)
{
    check_labels(dist);
    CmcCurve curve;
    const auto g = static_cast<std::size_t>(dist.gallery());
    std::vector<std::size_t> first_hit_count(g, 0);
    for (Eigen::Index p = 0; p < dist.probes(); ++p) {
        const auto hits = hit_ranks(dist, p);
        if (hits.empty()) {
            ++curve.excluded_probes;
            continue;
        }
        ++curve.evaluated_probes;
        ++first_hit_count[hits.front() - 1];
    }
    curve.rates.assign(g, 0.0);
    if (curve.evaluated_probes == 0) return curve;
    std::size_t cumulative = 0;
    for (std::size_t k = 0; k < g; ++k) {
        cumulative += first_hit_count[k];
        curve.rates[k] = static_cast<double>(cumulative) / static_cast<double>(curve.evaluated_probes);
    }
    return curve;
}

std::vector<std::optional<double>> average_precisions(const DistanceMatrix& dist)
{
    check_labels(dist);
    std::vector<std::optional<double>> out;
    out.reserve(static_cast<std::size_t>(dist.probes()));
    for (Eigen::Index p = 0; p < dist.probes(); ++p) {
        const auto hits = hit_ranks(dist, p);
        if (hits.empty()) {
            out.emplace_back();
            continue;
        }
        double sum = 0.0;
        for (std::size_t t = 0; t < hits.size(); ++t) {
            sum += static_cast<double>(t + 1) / static_cast<double>(hits[t]);
        }
        out.emplace_back(sum / static_cast<double>(hits.size()));
    }
    return out;
}

double mean_average_precision(const DistanceMatrix& dist)
{
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& ap : average_precisions(dist)) {
        if (ap) {
            sum += *ap;
            ++count;
        }
    }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

std::string to_string(Protocol protocol)
{
    switch (protocol) {
    case Protocol::single: return "single";
    case Protocol::multishot: return "multishot";
    case Protocol::multiquery: return "multiquery";
    }
    return "unknown";
}

std::optional<Protocol> parse_protocol(std::string_view name)
{
    if (name == "single") return Protocol::single;
    if (name == "multishot") return Protocol::multishot;
    if (name == "multiquery") return Protocol::multiquery;
    return std::nullopt;
}

namespace {

Matrix score_table(const CraftModel& model, const FeatureTable& table, const char* side)
{
    validate(table, CameraIds::any);
    if (table.dim() != model.input_dim) {
        throw std::invalid_argument(std::string(side) + " features have dimension " + std::to_string(table.dim()) +
                                    ", model expects " + std::to_string(model.input_dim));
    }
    const Matrix raw = table.data.cast<double>();
    Matrix out(static_cast<Eigen::Index>(model.subspace_dim()), raw.cols());
    // Score camera by camera so each sample gets its own view's weights.
    std::map<int, std::vector<Eigen::Index>> by_camera;
    for (const auto& rec : table.records) by_camera[rec.camera].push_back(static_cast<Eigen::Index>(rec.index));
    for (const auto& [camera, cols] : by_camera) {
        if (camera < 0 || static_cast<std::size_t>(camera) >= model.view_count) {
            throw std::invalid_argument(std::string(side) + " camera " + std::to_string(camera) +
                                        " unknown to a model with " + std::to_string(model.view_count) + " views");
        }
        Matrix block(raw.rows(), static_cast<Eigen::Index>(cols.size()));
        for (std::size_t k = 0; k < cols.size(); ++k) block.col(static_cast<Eigen::Index>(k)) = raw.col(cols[k]);
        const Matrix s = score_columns(model, block, static_cast<std::size_t>(camera));
        for (std::size_t k = 0; k < cols.size(); ++k) out.col(cols[k]) = s.col(static_cast<Eigen::Index>(k));
    }
    return out;
}

}  // namespace

EvaluationResult evaluate(const CraftModel& model, const FeatureTable& probe, const FeatureTable& gallery,
                          Protocol protocol)
{
    if (probe.size() == 0 || gallery.size() == 0) throw std::invalid_argument("evaluate: empty probe or gallery set");
    const Matrix ps = score_table(model, probe, "probe");
    const Matrix gs = score_table(model, gallery, "gallery");
    std::vector<PersonId> pid, gid;
    std::vector<int> pcam, gcam;
    for (const auto& r : probe.records) {
        pid.push_back(r.person);
        pcam.push_back(r.camera);
    }
    for (const auto& r : gallery.records) {
        gid.push_back(r.person);
        gcam.push_back(r.camera);
    }
    EvaluationResult result;
    result.distances = distance_matrix(ps, std::move(pid), gs, std::move(gid));
    result.distances.probe_cameras = std::move(pcam);
    result.distances.gallery_cameras = std::move(gcam);
    if (protocol == Protocol::multishot) {
        result.distances = multishot_collapse(result.distances, {true, true});
    } else if (protocol == Protocol::multiquery) {
        result.distances = multishot_collapse(result.distances, {true, false});
    }
    result.curve = cmc(result.distances);
    result.mean_ap = mean_average_precision(result.distances);
    return result;
}

namespace {

std::string format_number(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace

std::string encode_cmc_csv(const CmcCurve& curve)
{
    std::string out = "k,cmc_rate\n";
    for (std::size_t k = 0; k < curve.rates.size(); ++k) {
        out += std::to_string(k + 1) + "," + format_number(curve.rates[k]) + "\n";
    }
    return out;
}

std::string encode_summary_csv(const EvaluationResult& result)
{
    const auto& c = result.curve;
    return "rank1,rank5,rank10,rank20,mAP,probes,excluded_probes\n" + format_number(c.rank(1)) + "," +
           format_number(c.rank(5)) + "," + format_number(c.rank(10)) + "," + format_number(c.rank(20)) + "," +
           format_number(result.mean_ap) + "," + std::to_string(c.evaluated_probes) + "," +
           std::to_string(c.excluded_probes) + "\n";
}

}  // namespace craft
