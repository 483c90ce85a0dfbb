#include <algorithm>
#include <cmath>

#include "corvid/classifier.hpp"
#include "corvid/image.hpp"
#include "support.hpp"

using namespace corvid;

namespace {

// Textbook HSV → RGB, used as the inverse.
std::array<double, 3> hsv_to_rgb(double h, double s, double v) {
    double c = v * s;
    double hp = h / 60.0;
    double x = c * (1 - std::abs(std::fmod(hp, 2.0) - 1));
    double r = 0, g = 0, b = 0;
    if (hp < 1) r = c, g = x;
    else if (hp < 2) r = x, g = c;
    else if (hp < 3) g = c, b = x;
    else if (hp < 4) g = x, b = c;
    else if (hp < 5) r = x, b = c;
    else r = c, b = x;
    double m = v - c;
    return {(r + m) * 255, (g + m) * 255, (b + m) * 255};
}

// Per-output-pixel bilinear sample with half-pixel centers and edge clamping,
// written as an explicit weighted sum of four neighbours.
double bilinear_sample(const std::vector<double>& src, int w, int h, int out_w, int out_h, int ox, int oy) {
    double sx = std::min(std::max((ox + 0.5) * w / out_w - 0.5, 0.0), w - 1.0);
    double sy = std::min(std::max((oy + 0.5) * h / out_h - 0.5, 0.0), h - 1.0);
    int x0 = int(sx), y0 = int(sy);
    int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
    double ax = sx - x0, ay = sy - y0;
    return src[y0 * w + x0] * (1 - ax) * (1 - ay) + src[y0 * w + x1] * ax * (1 - ay) +
           src[y1 * w + x0] * (1 - ax) * ay + src[y1 * w + x1] * ax * ay;
}

}  // namespace

TEST_CASE("hsv reference points") {
    auto red = rgb_to_hsv(255, 0, 0);
    CHECK(red.c0 == 0.0);
    CHECK(red.c1 == 1.0);
    CHECK(red.c2 == 1.0);
    auto grey = rgb_to_hsv(128, 128, 128);
    CHECK(grey.c1 == 0.0);
    CHECK(grey.c2 == doctest::Approx(128.0 / 255.0).epsilon(1e-12));
    CHECK(rgb_to_hsv(0, 0, 255).c0 == doctest::Approx(240.0));
}

TEST_CASE("hsv inverts within one unit per channel") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 5000; ++i) {
        int r = testing::uniform_int(rng, 0, 255), g = testing::uniform_int(rng, 0, 255),
            b = testing::uniform_int(rng, 0, 255);
        auto hsv = rgb_to_hsv(r, g, b);
        REQUIRE(hsv.c0 >= 0.0);
        REQUIRE(hsv.c0 < 360.0);
        auto back = hsv_to_rgb(hsv.c0, hsv.c1, hsv.c2);
        CHECK(std::abs(back[0] - r) <= 1.0);
        CHECK(std::abs(back[1] - g) <= 1.0);
        CHECK(std::abs(back[2] - b) <= 1.0);
    }
}

TEST_CASE("resize identity and constant images") {
    std::mt19937_64 rng(3);
    RgbImage img(20, 20);
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 20; ++x)
            img.set(x, y, {std::uint8_t(rng()), std::uint8_t(rng()), std::uint8_t(rng())});
    auto out = resize_20x20(img);
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 20; ++x) {
            auto p = img.at(x, y);
            CHECK(out.at(x, y).c0 == p[0]);
            CHECK(out.at(x, y).c2 == p[2]);
        }

    RgbImage blue(40, 40);
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 40; ++x) blue.set(x, y, {30, 60, 190});
    auto small = resize_20x20(blue);
    CHECK(small.width == 20);
    for (const auto& p : small.pixels) {
        CHECK(p.c0 == doctest::Approx(30));
        CHECK(p.c1 == doctest::Approx(60));
        CHECK(p.c2 == doctest::Approx(190));
    }
}

TEST_CASE("checkerboard upscale matches scalar bilinear reference, then histogram") {
    RgbImage board(2, 2);
    board.set(0, 0, {250, 0, 0});
    board.set(1, 1, {250, 0, 0});
    board.set(1, 0, {0, 0, 250});
    board.set(0, 1, {0, 0, 250});
    std::vector<double> rch = {250, 0, 0, 250}, bch = {0, 250, 250, 0};
    auto up = resize_20x20(board);

    std::vector<Pixel3> expect;
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 20; ++x) {
            double r = bilinear_sample(rch, 2, 2, 20, 20, x, y);
            double b = bilinear_sample(bch, 2, 2, 20, 20, x, y);
            CHECK(up.at(x, y).c0 == doctest::Approx(r).epsilon(1e-12));
            CHECK(up.at(x, y).c2 == doctest::Approx(b).epsilon(1e-12));
            expect.push_back(rgb_to_hsv(r, 0, b));
        }
    auto hist = extract_histogram(rgb_to_hsv(up));
    auto ref = extract_histogram(Raster3{20, 20, expect});
    REQUIRE(hist.bins().size() == ref.bins().size());
    for (std::size_t i = 0; i < ref.bins().size(); ++i) CHECK(hist.bins()[i] == ref.bins()[i]);
}

TEST_CASE("ppm round trip") {
    RgbImage img(3, 2);
    img.set(2, 1, {1, 2, 3});
    auto bytes = encode_ppm(img);
    CHECK(bytes.rfind("P6", 0) == 0);
    CHECK(decode_ppm(bytes) == img);
    CHECK(testing::throws_kind([] { decode_ppm("P3\n1 1\n255\n"); }, ErrorKind::SchemaError));
    CHECK(testing::throws_kind([&] { decode_ppm(bytes.substr(0, bytes.size() - 1)); }, ErrorKind::SchemaError));
}
