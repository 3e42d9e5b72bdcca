#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "photorig/core.hpp"

namespace photorig {

enum class Semantic : std::uint8_t { mask = 0, depth = 1, normal = 2, skinning = 3, label = 4, color = 5 };

std::string_view to_string(Semantic s);

/// Row-major, channel-interleaved image of doubles (float32 on disk). One container serves every map
/// kind in the pipeline; masks and labels are quantized on I/O.
class RasterMap {
public:
    RasterMap() = default;
    RasterMap(int width, int height, int channels, Semantic semantic, double fill = 0.0);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    Semantic semantic() const noexcept { return semantic_; }
    bool empty() const noexcept { return data_.empty(); }
    std::size_t pixel_count() const noexcept { return std::size_t(width_) * std::size_t(height_); }

    bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }
    std::size_t index(int x, int y) const noexcept { return std::size_t(y) * std::size_t(width_) + std::size_t(x); }

    double& at(int x, int y, int c = 0) { return data_[index(x, y) * channels_ + c]; }
    double at(int x, int y, int c = 0) const { return data_[index(x, y) * channels_ + c]; }
    std::span<double> pixel(int x, int y) { return {data_.data() + index(x, y) * channels_, std::size_t(channels_)}; }
    std::span<const double> pixel(int x, int y) const {
        return {data_.data() + index(x, y) * channels_, std::size_t(channels_)};
    }

    /// Mask/label convenience: value at (x,y) treated as set, 0 outside the grid.
    bool is_set(int x, int y) const noexcept { return contains(x, y) && at(x, y) >= 0.5; }
    int label_at(int x, int y) const noexcept;

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    /// Number of pixels whose first channel is set (masks).
    std::size_t count_set() const;

    RasterMap mirrored() const;
    RasterMap with_semantic(Semantic s) const;

    /// Rounds mask/label data half-up to integers; no-op for other semantics.
    void quantize();

    /// Throws InputError when a map invariant is broken. `domain`, when given,
    /// restricts the per-pixel checks (normal length, skinning sum) to its set pixels.
    void validate(const RasterMap* domain = nullptr) const;

    bool operator==(const RasterMap& other) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    Semantic semantic_ = Semantic::mask;
    std::vector<double> data_;
};

// ".fmap": "FMAP", u32 width, u32 height, u32 channels, u8 semantic, then LE float32 data.
void write_fmap(const RasterMap& map, const std::filesystem::path& path);
RasterMap read_fmap(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_fmap(const RasterMap& map);
RasterMap decode_fmap(std::span<const std::uint8_t> bytes);

/// 8-bit PNG: grayscale input becomes a mask (>= 128 set), RGB(A) a color map.
RasterMap read_png(const std::filesystem::path& path, Semantic as);
void write_png(const RasterMap& map, const std::filesystem::path& path);

/// Dispatches on extension (.png or .fmap).
RasterMap read_raster(const std::filesystem::path& path, Semantic expected);

} // namespace photorig
