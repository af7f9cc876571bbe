#pragma once

#include "craft/feature_table.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace craft {

/// Multi-camera identity data: person p has a latent code z_p ~ N(0, I);
/// camera v observes (I + distortion G_v) A z_p + distortion b_v + noise e,
/// where A (d x latent), G_v (d x d) and b_v are fixed Gaussian draws and e
/// is fresh per image.
struct SyntheticSpec {
    std::size_t persons = 100;
    std::size_t per_view = 2;
    std::size_t views = 2;
    std::size_t latent = 10;
    std::size_t dim = 20;
    double distortion = 0.5;
    double noise = 0.1;
    std::uint64_t seed = 7;
    double train_fraction = 0.5;
};

struct SpecIssue {
    std::string field;
    std::string message;
};

std::vector<SpecIssue> validate_spec(const SyntheticSpec& spec);

// Samples ordered camera-major, then person, then image. Person ids are
// 0..persons-1. Bit-identical for a given spec on a given platform.
FeatureTable generate_synthetic(const SyntheticSpec& spec);

/// Identity-disjoint split: training persons keep every camera; held-out
/// persons form a probe set (camera 0) and a gallery (cameras 1..J-1).
struct SyntheticSplit {
    FeatureTable train;
    FeatureTable probe;
    FeatureTable gallery;
};

SyntheticSplit split_synthetic(const FeatureTable& table, const SyntheticSpec& spec);

// Standard normal draws via Box-Muller on top of mt19937_64. The standard
// library's normal_distribution is implementation-defined, which would make
// generated data differ across toolchains.
class NormalSource {
public:
    explicit NormalSource(std::uint64_t seed) : engine_(seed) {}
    double next();
    std::mt19937_64& engine() { return engine_; }

private:
    double uniform();

    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace craft
