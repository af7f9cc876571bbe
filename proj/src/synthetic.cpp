#include "craft/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

namespace craft {

double NormalSource::uniform()
{
    // 53 random bits mapped to (0, 1].
    return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
}

double NormalSource::next()
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double radius = std::sqrt(-2.0 * std::log(uniform()));
    const double angle = 2.0 * std::numbers::pi * uniform();
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

std::vector<SpecIssue> validate_spec(const SyntheticSpec& s)
{
    std::vector<SpecIssue> issues;
    if (s.persons < 2) issues.push_back({"persons", "must be >= 2"});
    if (s.per_view < 1) issues.push_back({"per-view", "must be >= 1"});
    if (s.views < 2) issues.push_back({"views", "must be >= 2"});
    if (s.latent < 1) issues.push_back({"latent", "must be >= 1"});
    if (s.dim < 1) issues.push_back({"dim", "must be >= 1"});
    if (!(s.distortion >= 0.0) || !std::isfinite(s.distortion)) issues.push_back({"distortion", "must be >= 0"});
    if (!(s.noise >= 0.0) || !std::isfinite(s.noise)) issues.push_back({"noise", "must be >= 0"});
    if (!(s.train_fraction > 0.0 && s.train_fraction < 1.0)) {
        issues.push_back({"train-fraction", "must be in (0, 1)"});
    }
    return issues;
}

namespace {

Matrix gaussian(NormalSource& rng, Eigen::Index rows, Eigen::Index cols, double scale)
{
    Matrix m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = scale * rng.next();
    }
    return m;
}

}  // namespace

FeatureTable generate_synthetic(const SyntheticSpec& spec)
{
    if (auto issues = validate_spec(spec); !issues.empty()) {
        throw std::invalid_argument("synthetic spec: " + issues.front().field + " " + issues.front().message);
    }
    const auto d = static_cast<Eigen::Index>(spec.dim);
    const auto l = static_cast<Eigen::Index>(spec.latent);
    NormalSource rng(spec.seed);

    const Matrix mixing = gaussian(rng, d, l, 1.0 / std::sqrt(static_cast<double>(l)));
    const Matrix latent = gaussian(rng, l, static_cast<Eigen::Index>(spec.persons), 1.0);
    const Matrix identity = mixing * latent;  // d x persons

    std::vector<Matrix> transforms;
    std::vector<Vector> offsets;
    for (std::size_t v = 0; v < spec.views; ++v) {
        transforms.push_back(Matrix::Identity(d, d) +
                             spec.distortion * gaussian(rng, d, d, 1.0 / std::sqrt(static_cast<double>(d))));
        offsets.push_back(spec.distortion * gaussian(rng, d, 1, 1.0));
    }

    FeatureTable table;
    const auto n = static_cast<Eigen::Index>(spec.views * spec.persons * spec.per_view);
    table.data.resize(d, n);
    table.records.reserve(static_cast<std::size_t>(n));
    Eigen::Index col = 0;
    for (std::size_t v = 0; v < spec.views; ++v) {
        const Matrix clean = (transforms[v] * identity).colwise() + offsets[v];
        for (std::size_t p = 0; p < spec.persons; ++p) {
            for (std::size_t k = 0; k < spec.per_view; ++k) {
                const Vector x = clean.col(static_cast<Eigen::Index>(p)) + gaussian(rng, d, 1, spec.noise);
                table.data.col(col) = x.cast<float>();
                table.records.push_back({static_cast<std::size_t>(col), static_cast<PersonId>(p),
                                         static_cast<int>(v), ""});
                ++col;
            }
        }
    }
    return table;
}

SyntheticSplit split_synthetic(const FeatureTable& table, const SyntheticSpec& spec)
{
    if (auto issues = validate_spec(spec); !issues.empty()) {
        throw std::invalid_argument("synthetic spec: " + issues.front().field + " " + issues.front().message);
    }
    std::set<PersonId> ids;
    for (const auto& r : table.records) ids.insert(r.person);
    std::vector<PersonId> order(ids.begin(), ids.end());
    // Fisher-Yates with a stream separate from the generator's.
    std::mt19937_64 engine(spec.seed ^ 0x9e3779b97f4a7c15ULL);
    for (std::size_t i = order.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(engine() % i);
        std::swap(order[i - 1], order[j]);
    }
    auto train_count = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(order.size())));
    train_count = std::clamp<std::size_t>(train_count, 1, order.size() - 1);
    const std::set<PersonId> train_ids(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_count));

    SyntheticSplit split;
    split.train = select_samples(table, [&](const SampleRecord& r) { return train_ids.count(r.person) > 0; });
    split.probe = select_samples(table, [&](const SampleRecord& r) { return !train_ids.count(r.person) && r.camera == 0; });
    split.gallery = select_samples(table, [&](const SampleRecord& r) { return !train_ids.count(r.person) && r.camera != 0; });
    return split;
}

}  // namespace craft
