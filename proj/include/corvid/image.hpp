#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace corvid {

struct Point {
    double x = 0;
    double y = 0;
    bool operator==(const Point&) const = default;
};

// Interleaved 8-bit RGB raster, row-major.
class RgbImage {
public:
    RgbImage() = default;
    RgbImage(int width, int height);  // zero-filled; throws on non-positive size

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return data_.empty(); }

    std::array<std::uint8_t, 3> at(int x, int y) const;
    void set(int x, int y, std::array<std::uint8_t, 3> rgb);

    const std::vector<std::uint8_t>& bytes() const noexcept { return data_; }
    bool operator==(const RgbImage&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

// Floating-point raster of 3-channel pixels, used for resampled RGB (0..255)
// and for HSV (H in degrees, S and V in [0,1]).
struct Pixel3 {
    double c0 = 0, c1 = 0, c2 = 0;
};

struct Raster3 {
    int width = 0;
    int height = 0;
    std::vector<Pixel3> pixels;

    const Pixel3& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

// Binary PPM (P6, maxval 255).
std::string encode_ppm(const RgbImage& image);
RgbImage decode_ppm(std::string_view bytes);

// H in [0,360), S and V in [0,1]. Achromatic pixels get H = 0.
Pixel3 rgb_to_hsv(double r, double g, double b);
Raster3 rgb_to_hsv(const Raster3& rgb);
Raster3 rgb_to_hsv(const RgbImage& rgb);

Raster3 to_raster(const RgbImage& image);

// Bilinear resampling with half-pixel centers and edge clamping.
Raster3 resize_bilinear(const Raster3& src, int width, int height);

inline constexpr int kCropSide = 20;
Raster3 resize_20x20(const RgbImage& crop);

}  // namespace corvid
