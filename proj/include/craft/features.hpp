#pragma once

#include "craft/linalg.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace craft {

/// Activations of one convolutional layer, h x w x m, stored in (row,
/// column, map) order with the row index slowest.
struct FeatureMapStack {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t maps = 0;
    std::vector<float> values;

    FeatureMapStack() = default;
    FeatureMapStack(std::size_t h, std::size_t w, std::size_t m);

    float& at(std::size_t row, std::size_t col, std::size_t map) { return values[(row * width + col) * maps + map]; }
    float at(std::size_t row, std::size_t col, std::size_t map) const
    {
        return values[(row * width + col) * maps + map];
    }
};

struct DescriptorOptions {
    std::size_t strip_height = 5;
    std::size_t bins = 16;
    std::size_t kappa = 20;
    // Fold the h mod strip_height leftover rows into the last strip instead
    // of dropping them.
    bool stretch_last = false;
    // Weight every pixel by 1 instead of the Epanechnikov profile.
    bool uniform_weights = false;
};

// (1 - u_i^2)(1 - u_j^2) with u running linearly from -1 to 1 along each
// axis; a length-1 axis sits at u = 0.
Matrix epanechnikov_weights(std::size_t h, std::size_t w);

// Row ranges [begin, end) of the horizontal strips.
std::vector<std::pair<std::size_t, std::size_t>> strip_rows(std::size_t height, const DescriptorOptions& options);

// Intensity histograms: activations rectified at 0 and divided by their
// map's maximum, binned uniformly on [0, 1] with weighted counts. Layout
// (map, strip, bin), bin fastest. Length bins * strips * m.
Vector hip_descriptor(const FeatureMapStack& stack, const DescriptorOptions& options = {});

// Top-kappa map indices per location, by descending activation with ties
// broken by ascending index. Layout (row, col, slot), slot fastest.
std::vector<std::uint32_t> ordinal_stack(const FeatureMapStack& stack, std::size_t kappa);

// Ordinal histograms: for every slot and strip an m-bin weighted histogram
// of the index ranked at that slot. Layout (slot, strip, map), map fastest.
// Length m * strips * kappa.
Vector hop_descriptor(const FeatureMapStack& stack, const DescriptorOptions& options = {});

// [HIP(conv1), HIP(conv2), HOP(conv1), HOP(conv2)].
Vector hiphop(const FeatureMapStack& conv1, const FeatureMapStack& conv2, const DescriptorOptions& options = {});

std::size_t hip_length(std::size_t h, std::size_t m, const DescriptorOptions& options = {});
std::size_t hop_length(std::size_t h, std::size_t m, const DescriptorOptions& options = {});

// FMP1: "FMP1", u32 h, u32 w, u32 m, h*w*m float32, all little-endian.
std::string encode_fmp1(const FeatureMapStack& stack);
FeatureMapStack decode_fmp1(std::string_view bytes, const std::string& source_name);
FeatureMapStack load_fmp1(const std::filesystem::path& path);
void save_fmp1(const FeatureMapStack& stack, const std::filesystem::path& path);

}  // namespace craft
