#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "cpsw/datasets.hpp"

using namespace cpsw;
using data::DomainDataset;
using data::GenSpec;

namespace {

std::string temp_path(const std::string& name) {
    return std::string("/tmp/cpsw_test_") + name;
}

// 2x2 contingency chi-square for color vs label.
double chi_square(const DomainDataset& d) {
    double n[2][2] = {{0, 0}, {0, 0}};
    for (std::size_t i = 0; i < d.count(); ++i)
        n[d.labels[i]][d.colors[i]] += 1.0;
    const double total = d.count();
    double chi = 0.0;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            const double row = n[a][0] + n[a][1];
            const double col = n[0][b] + n[1][b];
            const double expect = row * col / total;
            chi += (n[a][b] - expect) * (n[a][b] - expect) / expect;
        }
    return chi;
}

double color_rate_for_label(const DomainDataset& d, int label, int color) {
    std::size_t match = 0, total = 0;
    for (std::size_t i = 0; i < d.count(); ++i) {
        if (d.labels[i] != label) continue;
        ++total;
        match += d.colors[i] == color;
    }
    return total == 0 ? 0.0 : double(match) / double(total);
}

} // namespace

TEST_CASE("unbiased domain has color independent of label") {
    GenSpec spec;
    spec.biases = {0.5};
    spec.noise = 0.25;
    spec.per_domain = 10000;
    spec.seed = 41;
    const auto domains = data::generate(spec);
    // 99th percentile of chi-square with one degree of freedom.
    CHECK(chi_square(domains[0]) < 6.635);
}

TEST_CASE("bias 0.9 puts ninety percent of class 0 on red") {
    GenSpec spec;
    spec.biases = {0.9};
    spec.noise = 0.0;
    spec.per_domain = 5000;
    spec.seed = 7;
    const auto domains = data::generate(spec);
    CHECK(color_rate_for_label(domains[0], 0, 0) ==
          doctest::Approx(0.9).epsilon(0.025));
    CHECK(color_rate_for_label(domains[0], 1, 1) ==
          doctest::Approx(0.9).epsilon(0.025));
}

TEST_CASE("noise 0.25 caps color-blind accuracy at 0.75") {
    GenSpec spec;
    spec.biases = {0.5};
    spec.noise = 0.25;
    spec.per_domain = 10000;
    spec.seed = 3;
    const auto domains = data::generate(spec);
    std::size_t agree = 0;
    for (std::size_t i = 0; i < domains[0].count(); ++i)
        agree += domains[0].labels[i] == domains[0].clean_labels[i];
    CHECK(double(agree) / domains[0].count() ==
          doctest::Approx(0.75).epsilon(0.02));
}

TEST_CASE("generation is deterministic per seed") {
    GenSpec spec;
    spec.per_domain = 64;
    spec.seed = 11;
    const auto a = data::generate(spec);
    const auto b = data::generate(spec);
    REQUIRE(a.size() == b.size());
    for (std::size_t d = 0; d < a.size(); ++d) {
        CHECK(a[d].images == b[d].images);
        CHECK(a[d].labels == b[d].labels);
        CHECK(a[d].colors == b[d].colors);
    }
}

TEST_CASE("domains with different biases have different color tables") {
    GenSpec spec;
    spec.biases = {0.1, 0.9};
    spec.noise = 0.0;
    spec.per_domain = 4000;
    spec.seed = 5;
    const auto domains = data::generate(spec);
    const double r0 = color_rate_for_label(domains[0], 0, 0);
    const double r1 = color_rate_for_label(domains[1], 0, 0);
    CHECK(std::abs(r0 - r1) >= 0.8 - 0.05);
}

TEST_CASE("invalid specs are rejected with the offending field") {
    GenSpec spec;
    spec.biases = {1.5};
    try {
        data::generate(spec);
        FAIL("expected invalid_spec");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::invalid_spec);
        CHECK(std::string(e.what()).find("bias") != std::string::npos);
    }
    spec.biases = {0.5};
    spec.noise = 0.7;
    try {
        data::generate(spec);
        FAIL("expected invalid_spec");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("noise") != std::string::npos);
    }
}

TEST_CASE("two color styles and channel variants") {
    GenSpec spec;
    spec.biases = {0.5};
    spec.per_domain = 8;
    spec.channels = 2;
    spec.color_style = data::ColorStyle::tinted_strokes;
    const auto strokes = data::generate(spec);
    CHECK(strokes[0].input_dim() == 2 * 28 * 28);
    // Stroke tinting leaves the opposite color channel black.
    const auto& d = strokes[0];
    for (std::size_t i = 0; i < d.count(); ++i) {
        const float* other = d.image(i) + (1 - d.colors[i]) * 28 * 28;
        for (int p = 0; p < 28 * 28; ++p) CHECK(other[p] == 0.0f);
    }

    spec.color_style = data::ColorStyle::tinted_background;
    const auto washed = data::generate(spec);
    // Background wash: the color channel mean clearly exceeds the other.
    const auto& w = washed[0];
    for (std::size_t i = 0; i < w.count(); ++i) {
        double mean[2] = {0, 0};
        for (int c = 0; c < 2; ++c)
            for (int p = 0; p < 28 * 28; ++p)
                mean[c] += w.image(i)[c * 28 * 28 + p];
        CHECK(mean[w.colors[i]] > mean[1 - w.colors[i]] + 10.0);
    }
}

TEST_CASE("idx loader round-trips a handcrafted fixture") {
    const std::string img_path = temp_path("idx_images");
    const std::string lab_path = temp_path("idx_labels");
    {
        std::ofstream img(img_path, std::ios::binary);
        const unsigned char header[16] = {0, 0, 8, 3, 0, 0, 0, 3,
                                          0, 0, 0, 28, 0, 0, 0, 28};
        img.write(reinterpret_cast<const char*>(header), 16);
        std::vector<unsigned char> pixels(3 * 28 * 28, 0);
        pixels[0] = 255;       // image 0, pixel (0,0)
        pixels[784 + 1] = 128; // image 1, pixel (0,1)
        img.write(reinterpret_cast<const char*>(pixels.data()),
                  static_cast<std::streamsize>(pixels.size()));

        std::ofstream lab(lab_path, std::ios::binary);
        const unsigned char lheader[8] = {0, 0, 8, 1, 0, 0, 0, 3};
        lab.write(reinterpret_cast<const char*>(lheader), 8);
        const unsigned char labels[3] = {7, 0, 9};
        lab.write(reinterpret_cast<const char*>(labels), 3);
    }
    const data::RawDigits raw = data::load_idx(img_path, lab_path);
    REQUIRE(raw.count() == 3);
    CHECK(raw.images[0] == doctest::Approx(1.0f));
    CHECK(raw.images[784 + 1] == doctest::Approx(128.0f / 255.0f));
    CHECK(raw.images[2] == 0.0f);
    CHECK(raw.digits[0] == 7);
    CHECK(raw.digits[2] == 9);

    // Wrong magic.
    {
        std::ofstream img(img_path, std::ios::binary);
        const unsigned char header[16] = {0, 0, 9, 9, 0, 0, 0, 1,
                                          0, 0, 0, 28, 0, 0, 0, 28};
        img.write(reinterpret_cast<const char*>(header), 16);
    }
    try {
        data::load_idx(img_path, lab_path);
        FAIL("expected bad_magic");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::bad_magic);
    }
    std::remove(img_path.c_str());
    std::remove(lab_path.c_str());
}

TEST_CASE("idx loader detects truncation and count mismatch") {
    const std::string img_path = temp_path("idx_trunc");
    const std::string lab_path = temp_path("idx_trunc_lab");
    {
        std::ofstream img(img_path, std::ios::binary);
        const unsigned char header[16] = {0, 0, 8, 3, 0, 0, 0, 2,
                                          0, 0, 0, 28, 0, 0, 0, 28};
        img.write(reinterpret_cast<const char*>(header), 16);
        std::vector<unsigned char> pixels(784, 0); // one image short
        img.write(reinterpret_cast<const char*>(pixels.data()), 784);
        std::ofstream lab(lab_path, std::ios::binary);
        const unsigned char lheader[8] = {0, 0, 8, 1, 0, 0, 0, 2};
        lab.write(reinterpret_cast<const char*>(lheader), 8);
        const unsigned char labels[2] = {1, 2};
        lab.write(reinterpret_cast<const char*>(labels), 2);
    }
    try {
        data::load_idx(img_path, lab_path);
        FAIL("expected truncated_file");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::truncated_file);
    }
    {
        std::ofstream img(img_path, std::ios::binary);
        const unsigned char header[16] = {0, 0, 8, 3, 0, 0, 0, 1,
                                          0, 0, 0, 28, 0, 0, 0, 28};
        img.write(reinterpret_cast<const char*>(header), 16);
        std::vector<unsigned char> pixels(784, 0);
        img.write(reinterpret_cast<const char*>(pixels.data()), 784);
    }
    try {
        data::load_idx(img_path, lab_path); // labels still claim 2
        FAIL("expected count_mismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::count_mismatch);
    }
    std::remove(img_path.c_str());
    std::remove(lab_path.c_str());
}

TEST_CASE("split_domains") {
    const data::Split s = data::split_domains(3, 2);
    CHECK(s.train == std::vector<std::size_t>{0, 1});
    CHECK(s.test == std::vector<std::size_t>{2});
    for (std::size_t hold = 0; hold < 3; ++hold) {
        const data::Split each = data::split_domains(3, hold);
        CHECK(each.train.size() == 2);
        CHECK(each.test.size() == 1);
        CHECK(each.test[0] == hold);
    }
    CHECK_THROWS_AS(data::split_domains(1, 0), Error);
    CHECK_THROWS_AS(data::split_domains(3, 3), Error);
}

TEST_CASE("dataset file format round-trips and carries the aux block") {
    GenSpec spec;
    spec.biases = {0.3};
    spec.per_domain = 32;
    spec.seed = 19;
    const auto domains = data::generate(spec);
    const std::string path = temp_path("roundtrip.cpsw");
    data::save_dataset(domains[0], path);
    const DomainDataset loaded = data::load_dataset(path);
    CHECK(loaded.images == domains[0].images);
    CHECK(loaded.labels == domains[0].labels);
    CHECK(loaded.clean_labels == domains[0].clean_labels);
    CHECK(loaded.colors == domains[0].colors);
    CHECK(loaded.channels == domains[0].channels);

    // Checksums are stable across identical writes.
    const std::uint64_t sum1 = data::file_checksum(path);
    data::save_dataset(domains[0], path);
    CHECK(data::file_checksum(path) == sum1);

    {
        std::ofstream bad(path, std::ios::binary);
        bad << "NOTCPSW";
    }
    try {
        data::load_dataset(path);
        FAIL("expected bad_magic");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::bad_magic);
    }
    std::remove(path.c_str());
}

TEST_CASE("glyphs are consistent per digit and distinct across digits") {
    rng::Rng rng(99);
    std::vector<float> a(784), b(784);
    data::render_glyph(3, rng, a.data());
    data::render_glyph(8, rng, b.data());
    double diff = 0.0;
    for (int i = 0; i < 784; ++i) diff += std::abs(a[i] - b[i]);
    CHECK(diff > 10.0); // segment E+F difference at full intensity
}
