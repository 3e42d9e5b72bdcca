#include "photorig/raster.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <png.h>
#include <spdlog/spdlog.h>

namespace photorig {

void Diagnostics::warn(std::string message) {
    spdlog::warn("{}", message);
    warnings.push_back(std::move(message));
}

void warn(Diagnostics* diag, std::string message) {
    if (diag)
        diag->warn(std::move(message));
    else
        spdlog::warn("{}", message);
}

std::string_view to_string(Semantic s) {
    switch (s) {
    case Semantic::mask: return "mask";
    case Semantic::depth: return "depth";
    case Semantic::normal: return "normal";
    case Semantic::skinning: return "skinning";
    case Semantic::label: return "label";
    case Semantic::color: return "color";
    }
    return "unknown";
}

RasterMap::RasterMap(int width, int height, int channels, Semantic semantic, double fill)
    : width_(width), height_(height), channels_(channels), semantic_(semantic) {
    if (width <= 0 || height <= 0 || channels <= 0)
        throw InputError("raster dimensions must be positive");
    data_.assign(std::size_t(width) * std::size_t(height) * std::size_t(channels), fill);
}

int RasterMap::label_at(int x, int y) const noexcept {
    if (!contains(x, y))
        return -1;
    return int(std::floor(at(x, y) + 0.5f));
}

std::size_t RasterMap::count_set() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < pixel_count(); ++i)
        n += data_[i * channels_] >= 0.5f;
    return n;
}

RasterMap RasterMap::mirrored() const {
    RasterMap out = *this;
    for (int y = 0; y < height_; ++y)
        for (int x = 0; x < width_; ++x)
            for (int c = 0; c < channels_; ++c)
                out.at(width_ - 1 - x, y, c) = at(x, y, c);
    return out;
}

RasterMap RasterMap::with_semantic(Semantic s) const {
    RasterMap out = *this;
    out.semantic_ = s;
    return out;
}

void RasterMap::quantize() {
    if (semantic_ != Semantic::mask && semantic_ != Semantic::label)
        return;
    for (double& v : data_)
        v = std::floor(v + 0.5f);
    if (semantic_ == Semantic::mask)
        for (double& v : data_)
            v = v >= 1.0f ? 1.0f : 0.0f;
}

void RasterMap::validate(const RasterMap* domain) const {
    if (width_ <= 0 || height_ <= 0 || channels_ <= 0)
        throw InputError("raster has non-positive dimensions");
    if (data_.size() != pixel_count() * std::size_t(channels_))
        throw InputError("raster data length does not match dimensions");
    auto in_domain = [&](int x, int y) { return domain == nullptr || domain->is_set(x, y); };
    for (int y = 0; y < height_; ++y) {
        for (int x = 0; x < width_; ++x) {
            auto px = pixel(x, y);
            switch (semantic_) {
            case Semantic::mask:
                if (px[0] != 0.0f && px[0] != 1.0f)
                    throw InputError("mask value outside {0,1}");
                break;
            case Semantic::label:
                if (px[0] != std::floor(px[0]))
                    throw InputError("label value is not integral");
                break;
            case Semantic::normal:
                if (in_domain(x, y) && std::abs(std::sqrt(px[0] * px[0] + px[1] * px[1] + px[2] * px[2]) - 1.0f) > 1e-4f)
                    throw InputError("normal is not unit length");
                break;
            case Semantic::skinning:
                if (in_domain(x, y) && domain != nullptr) {
                    double sum = 0.0;
                    for (double w : px)
                        sum += w;
                    if (std::abs(sum - 1.0) > 1e-5)
                        throw InputError("skinning weights do not sum to one");
                }
                break;
            default: break;
            }
        }
    }
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        out.push_back(std::uint8_t(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= std::uint32_t(in[at + i]) << (8 * i);
    return v;
}

constexpr std::size_t kHeaderSize = 4 + 4 * 3 + 1;

} // namespace

std::vector<std::uint8_t> encode_fmap(const RasterMap& map) {
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderSize + map.data().size() * 4);
    out.insert(out.end(), {'F', 'M', 'A', 'P'});
    put_u32(out, std::uint32_t(map.width()));
    put_u32(out, std::uint32_t(map.height()));
    put_u32(out, std::uint32_t(map.channels()));
    out.push_back(std::uint8_t(map.semantic()));
    for (double d : map.data()) {
        const float f = float(d);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32(out, bits);
    }
    return out;
}

RasterMap decode_fmap(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kHeaderSize || std::memcmp(bytes.data(), "FMAP", 4) != 0)
        throw InputError("not an FMAP container");
    const auto w = get_u32(bytes, 4), h = get_u32(bytes, 8), c = get_u32(bytes, 12);
    const auto tag = bytes[16];
    if (tag > std::uint8_t(Semantic::color))
        throw InputError("FMAP semantic tag out of range");
    if (w == 0 || h == 0 || c == 0 || w > 65536 || h > 65536 || c > 4096)
        throw InputError("FMAP dimensions out of range");
    const std::size_t n = std::size_t(w) * h * c;
    if (bytes.size() != kHeaderSize + n * 4)
        throw InputError("FMAP payload length mismatch");
    RasterMap map{int(w), int(h), int(c), Semantic(tag)};
    auto data = map.data();
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t bits = get_u32(bytes, kHeaderSize + 4 * i);
        float f;
        std::memcpy(&f, &bits, 4);
        data[i] = f;
    }
    map.quantize();
    return map;
}

void write_fmap(const RasterMap& map, const std::filesystem::path& path) {
    RasterMap q = map;
    q.quantize();
    const auto bytes = encode_fmap(q);
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw InputError("cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

RasterMap read_fmap(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw InputError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_fmap(bytes);
}

RasterMap read_png(const std::filesystem::path& path, Semantic as) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str()))
        throw InputError("cannot read PNG " + path.string() + ": " + image.message);
    image.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr))
        throw InputError("cannot decode PNG " + path.string() + ": " + image.message);
    const int w = int(image.width), h = int(image.height);
    if (as == Semantic::mask) {
        RasterMap mask(w, h, 1, Semantic::mask);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const auto* p = &buffer[(std::size_t(y) * w + x) * 3];
                mask.at(x, y) = (int(p[0]) + p[1] + p[2]) >= 3 * 128 ? 1.0f : 0.0f;
            }
        return mask;
    }
    if (as != Semantic::color)
        throw InputError("PNG input is only accepted for masks and color images");
    RasterMap color(w, h, 3, Semantic::color);
    for (std::size_t i = 0; i < buffer.size(); ++i)
        color.data()[i] = double(buffer[i]) / 255.0;
    return color;
}

void write_png(const RasterMap& map, const std::filesystem::path& path) {
    if (map.semantic() != Semantic::mask && map.semantic() != Semantic::color)
        throw InputError("only masks and color images are written as PNG");
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = png_uint_32(map.width());
    image.height = png_uint_32(map.height());
    image.format = map.channels() >= 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    const int out_channels = map.channels() >= 3 ? 3 : 1;
    std::vector<std::uint8_t> buffer(map.pixel_count() * out_channels);
    for (int y = 0; y < map.height(); ++y)
        for (int x = 0; x < map.width(); ++x)
            for (int c = 0; c < out_channels; ++c) {
                const double v = std::clamp(map.at(x, y, c), 0.0, 1.0);
                buffer[(map.index(x, y)) * out_channels + c] = std::uint8_t(std::lround(v * 255.0f));
            }
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, buffer.data(), 0, nullptr))
        throw InputError("cannot write PNG " + path.string() + ": " + image.message);
}

RasterMap read_raster(const std::filesystem::path& path, Semantic expected) {
    RasterMap map = path.extension() == ".png" ? read_png(path, expected) : read_fmap(path);
    if (map.semantic() != expected)
        throw InputError(path.string() + ": expected a " + std::string(to_string(expected)) + " map, got " +
                         std::string(to_string(map.semantic())));
    return map;
}

} // namespace photorig
