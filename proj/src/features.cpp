#include "craft/features.hpp"

#include "binary_io.hpp"
#include "craft/feature_table.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace craft {

FeatureMapStack::FeatureMapStack(std::size_t h, std::size_t w, std::size_t m)
    : height(h), width(w), maps(m), values(h * w * m, 0.0f)
{
}

Matrix epanechnikov_weights(std::size_t h, std::size_t w)
{
    if (h == 0 || w == 0) throw std::invalid_argument("epanechnikov_weights: grid must be at least 1x1");
    auto profile = [](std::size_t len) {
        Vector p(static_cast<Eigen::Index>(len));
        for (std::size_t i = 0; i < len; ++i) {
            const double u = len == 1 ? 0.0 : 2.0 * static_cast<double>(i) / static_cast<double>(len - 1) - 1.0;
            p(static_cast<Eigen::Index>(i)) = std::max(0.0, 1.0 - u * u);
        }
        return p;
    };
    return profile(h) * profile(w).transpose();
}

std::vector<std::pair<std::size_t, std::size_t>> strip_rows(std::size_t height, const DescriptorOptions& options)
{
    if (options.strip_height == 0) throw std::invalid_argument("strip height must be >= 1");
    if (options.strip_height > height) {
        throw std::invalid_argument("strip height " + std::to_string(options.strip_height) +
                                    " exceeds map height " + std::to_string(height));
    }
    const std::size_t count = height / options.strip_height;
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t s = 0; s < count; ++s) out.emplace_back(s * options.strip_height, (s + 1) * options.strip_height);
    if (options.stretch_last) out.back().second = height;
    return out;
}

std::size_t hip_length(std::size_t h, std::size_t m, const DescriptorOptions& options)
{
    return options.bins * strip_rows(h, options).size() * m;
}

std::size_t hop_length(std::size_t h, std::size_t m, const DescriptorOptions& options)
{
    return m * strip_rows(h, options).size() * options.kappa;
}

namespace {

void check_stack(const FeatureMapStack& stack)
{
    if (stack.height == 0 || stack.width == 0 || stack.maps == 0) {
        throw std::invalid_argument("feature map stack has an empty dimension");
    }
    if (stack.values.size() != stack.height * stack.width * stack.maps) {
        throw std::invalid_argument("feature map stack: payload holds " + std::to_string(stack.values.size()) +
                                    " values, dims declare " +
                                    std::to_string(stack.height * stack.width * stack.maps));
    }
    for (float v : stack.values) {
        if (!std::isfinite(v)) throw std::invalid_argument("feature map stack contains a non-finite activation");
    }
}

Matrix pixel_weights(const FeatureMapStack& stack, const DescriptorOptions& options)
{
    if (options.uniform_weights) return Matrix::Ones(static_cast<Eigen::Index>(stack.height), static_cast<Eigen::Index>(stack.width));
    return epanechnikov_weights(stack.height, stack.width);
}

}  // namespace

Vector hip_descriptor(const FeatureMapStack& stack, const DescriptorOptions& options)
{
    check_stack(stack);
    if (options.bins == 0) throw std::invalid_argument("hip_descriptor: bins must be >= 1");
    const auto strips = strip_rows(stack.height, options);
    const Matrix weights = pixel_weights(stack, options);
    const std::size_t bins = options.bins;

    std::vector<double> scale(stack.maps, 0.0);
    for (std::size_t r = 0; r < stack.height; ++r) {
        for (std::size_t c = 0; c < stack.width; ++c) {
            for (std::size_t k = 0; k < stack.maps; ++k) {
                scale[k] = std::max(scale[k], static_cast<double>(stack.at(r, c, k)));
            }
        }
    }

    Vector out = Vector::Zero(static_cast<Eigen::Index>(bins * strips.size() * stack.maps));
    for (std::size_t s = 0; s < strips.size(); ++s) {
        for (std::size_t r = strips[s].first; r < strips[s].second; ++r) {
            for (std::size_t c = 0; c < stack.width; ++c) {
                const double w = weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
                for (std::size_t k = 0; k < stack.maps; ++k) {
                    const double rectified = std::max(0.0, static_cast<double>(stack.at(r, c, k)));
                    const double v = scale[k] > 0.0 ? rectified / scale[k] : 0.0;
                    const auto bin = std::min(static_cast<std::size_t>(v * static_cast<double>(bins)), bins - 1);
                    out(static_cast<Eigen::Index>((k * strips.size() + s) * bins + bin)) += w;
                }
            }
        }
    }
    return out;
}

std::vector<std::uint32_t> ordinal_stack(const FeatureMapStack& stack, std::size_t kappa)
{
    check_stack(stack);
    if (kappa == 0 || kappa > stack.maps) {
        throw std::invalid_argument("kappa must be in [1, " + std::to_string(stack.maps) + "], got " +
                                    std::to_string(kappa));
    }
    std::vector<std::uint32_t> out;
    out.reserve(stack.height * stack.width * kappa);
    std::vector<std::uint32_t> order(stack.maps);
    for (std::size_t r = 0; r < stack.height; ++r) {
        for (std::size_t c = 0; c < stack.width; ++c) {
            std::iota(order.begin(), order.end(), 0u);
            std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kappa), order.end(),
                              [&](std::uint32_t a, std::uint32_t b) {
                                  const float va = stack.at(r, c, a);
                                  const float vb = stack.at(r, c, b);
                                  return va > vb || (va == vb && a < b);
                              });
            out.insert(out.end(), order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kappa));
        }
    }
    return out;
}

Vector hop_descriptor(const FeatureMapStack& stack, const DescriptorOptions& options)
{
    const auto ordinal = ordinal_stack(stack, options.kappa);
    const auto strips = strip_rows(stack.height, options);
    const Matrix weights = pixel_weights(stack, options);
    const std::size_t m = stack.maps;
    const std::size_t kappa = options.kappa;

    Vector out = Vector::Zero(static_cast<Eigen::Index>(m * strips.size() * kappa));
    for (std::size_t s = 0; s < strips.size(); ++s) {
        for (std::size_t r = strips[s].first; r < strips[s].second; ++r) {
            for (std::size_t c = 0; c < stack.width; ++c) {
                const double w = weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
                const std::size_t base = (r * stack.width + c) * kappa;
                for (std::size_t slot = 0; slot < kappa; ++slot) {
                    out(static_cast<Eigen::Index>((slot * strips.size() + s) * m + ordinal[base + slot])) += w;
                }
            }
        }
    }
    return out;
}

Vector hiphop(const FeatureMapStack& conv1, const FeatureMapStack& conv2, const DescriptorOptions& options)
{
    const Vector parts[] = {hip_descriptor(conv1, options), hip_descriptor(conv2, options),
                            hop_descriptor(conv1, options), hop_descriptor(conv2, options)};
    Eigen::Index total = 0;
    for (const auto& p : parts) total += p.size();
    Vector out(total);
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        out.segment(at, p.size()) = p;
        at += p.size();
    }
    return out;
}

namespace {
constexpr std::string_view kFmpMagic = "FMP1";
}

std::string encode_fmp1(const FeatureMapStack& stack)
{
    if (stack.values.size() != stack.height * stack.width * stack.maps) {
        throw std::invalid_argument("encode_fmp1: payload does not match declared dims");
    }
    std::string out;
    out.reserve(16 + 4 * stack.values.size());
    out.append(kFmpMagic);
    detail::put_u32(out, static_cast<std::uint32_t>(stack.height));
    detail::put_u32(out, static_cast<std::uint32_t>(stack.width));
    detail::put_u32(out, static_cast<std::uint32_t>(stack.maps));
    for (float v : stack.values) detail::put_u32(out, std::bit_cast<std::uint32_t>(v));
    return out;
}

FeatureMapStack decode_fmp1(std::string_view bytes, const std::string& source_name)
{
    if (bytes.size() < 16) {
        throw ParseError(source_name + ": truncated header (" + std::to_string(bytes.size()) + " bytes)");
    }
    if (bytes.substr(0, 4) != kFmpMagic) throw ParseError(source_name + ": bad magic, expected FMP1");
    const std::uint64_t h = detail::get_u32(bytes, 4);
    const std::uint64_t w = detail::get_u32(bytes, 8);
    const std::uint64_t m = detail::get_u32(bytes, 12);
    const std::uint64_t expected = 16 + 4 * h * w * m;
    if (bytes.size() != expected) {
        throw ParseError(source_name + ": length mismatch, expected " + std::to_string(expected) +
                         " bytes, found " + std::to_string(bytes.size()));
    }
    FeatureMapStack stack(h, w, m);
    for (std::size_t i = 0; i < stack.values.size(); ++i) {
        stack.values[i] = std::bit_cast<float>(detail::get_u32(bytes, 16 + 4 * i));
    }
    return stack;
}

FeatureMapStack load_fmp1(const std::filesystem::path& path)
{
    return decode_fmp1(read_file(path), path.string());
}

void save_fmp1(const FeatureMapStack& stack, const std::filesystem::path& path)
{
    write_file_atomic(path, encode_fmp1(stack));
}

}  // namespace craft
