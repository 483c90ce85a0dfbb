#include "corvid/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "corvid/error.hpp"

namespace corvid {

RgbImage::RgbImage(int width, int height) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("RgbImage: size must be positive");
    data_.assign(static_cast<std::size_t>(width) * height * 3, 0);
}

std::array<std::uint8_t, 3> RgbImage::at(int x, int y) const {
    auto i = (static_cast<std::size_t>(y) * width_ + x) * 3;
    return {data_[i], data_[i + 1], data_[i + 2]};
}

void RgbImage::set(int x, int y, std::array<std::uint8_t, 3> rgb) {
    auto i = (static_cast<std::size_t>(y) * width_ + x) * 3;
    data_[i] = rgb[0];
    data_[i + 1] = rgb[1];
    data_[i + 2] = rgb[2];
}

std::string encode_ppm(const RgbImage& image) {
    std::string out = "P6\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
    out.append(reinterpret_cast<const char*>(image.bytes().data()), image.bytes().size());
    return out;
}

RgbImage decode_ppm(std::string_view bytes) {
    std::size_t pos = 0;
    auto skip_space = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&]() -> long {
        skip_space();
        long v = 0;
        std::size_t start = pos;
        while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos])))
            v = v * 10 + (bytes[pos++] - '0');
        if (pos == start || v > 1'000'000) throw Error(ErrorKind::SchemaError, "ppm: malformed header");
        return v;
    };
    if (bytes.substr(0, 2) != "P6") throw Error(ErrorKind::SchemaError, "ppm: expected P6 magic");
    pos = 2;
    long w = read_int();
    long h = read_int();
    long maxval = read_int();
    if (w <= 0 || h <= 0 || maxval != 255) throw Error(ErrorKind::SchemaError, "ppm: unsupported dimensions or maxval");
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
        throw Error(ErrorKind::SchemaError, "ppm: malformed header");
    ++pos;
    auto need = static_cast<std::size_t>(w) * h * 3;
    if (bytes.size() - pos < need) throw Error(ErrorKind::SchemaError, "ppm: truncated pixel data");
    RgbImage img(static_cast<int>(w), static_cast<int>(h));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            auto i = pos + (static_cast<std::size_t>(y) * w + x) * 3;
            img.set(x, y,
                    {static_cast<std::uint8_t>(bytes[i]), static_cast<std::uint8_t>(bytes[i + 1]),
                     static_cast<std::uint8_t>(bytes[i + 2])});
        }
    return img;
}

Pixel3 rgb_to_hsv(double r, double g, double b) {
    r /= 255.0;
    g /= 255.0;
    b /= 255.0;
    double mx = std::max({r, g, b});
    double mn = std::min({r, g, b});
    double delta = mx - mn;
    double h = 0;
    if (delta > 0) {
        if (mx == r)
            h = 60.0 * std::fmod((g - b) / delta, 6.0);
        else if (mx == g)
            h = 60.0 * ((b - r) / delta + 2.0);
        else
            h = 60.0 * ((r - g) / delta + 4.0);
        if (h < 0) h += 360.0;
        if (h >= 360.0) h -= 360.0;
    }
    double s = mx > 0 ? delta / mx : 0.0;
    return {h, s, mx};
}

Raster3 to_raster(const RgbImage& image) {
    Raster3 out{image.width(), image.height(), {}};
    out.pixels.reserve(static_cast<std::size_t>(image.width()) * image.height());
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x) {
            auto p = image.at(x, y);
            out.pixels.push_back({double(p[0]), double(p[1]), double(p[2])});
        }
    return out;
}

Raster3 rgb_to_hsv(const Raster3& rgb) {
    Raster3 out{rgb.width, rgb.height, {}};
    out.pixels.reserve(rgb.pixels.size());
    for (const auto& p : rgb.pixels) out.pixels.push_back(rgb_to_hsv(p.c0, p.c1, p.c2));
    return out;
}

Raster3 rgb_to_hsv(const RgbImage& rgb) { return rgb_to_hsv(to_raster(rgb)); }

Raster3 resize_bilinear(const Raster3& src, int width, int height) {
    if (src.width <= 0 || src.height <= 0) throw std::invalid_argument("resize_bilinear: empty source");
    Raster3 out{width, height, {}};
    out.pixels.resize(static_cast<std::size_t>(width) * height);
    double sx = double(src.width) / width;
    double sy = double(src.height) / height;
    for (int y = 0; y < height; ++y) {
        double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, double(src.height - 1));
        int y0 = static_cast<int>(std::floor(fy));
        int y1 = std::min(y0 + 1, src.height - 1);
        double wy = fy - y0;
        for (int x = 0; x < width; ++x) {
            double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, double(src.width - 1));
            int x0 = static_cast<int>(std::floor(fx));
            int x1 = std::min(x0 + 1, src.width - 1);
            double wx = fx - x0;
            const auto& a = src.at(x0, y0);
            const auto& b = src.at(x1, y0);
            const auto& c = src.at(x0, y1);
            const auto& d = src.at(x1, y1);
            auto lerp2 = [&](double pa, double pb, double pc, double pd) {
                double top = pa + (pb - pa) * wx;
                double bot = pc + (pd - pc) * wx;
                return top + (bot - top) * wy;
            };
            out.pixels[static_cast<std::size_t>(y) * width + x] = {lerp2(a.c0, b.c0, c.c0, d.c0),
                                                                   lerp2(a.c1, b.c1, c.c1, d.c1),
                                                                   lerp2(a.c2, b.c2, c.c2, d.c2)};
        }
    }
    return out;
}

Raster3 resize_20x20(const RgbImage& crop) { return resize_bilinear(to_raster(crop), kCropSide, kCropSide); }

}  // namespace corvid
