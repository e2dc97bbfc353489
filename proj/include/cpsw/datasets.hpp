#pragma once
// Biased two-color digit domains with controllable bias degree and label
// noise, IDX digit-file ingestion, the repository tensor format, and
// domain splits. When IDX files are absent, seven-segment synthetic glyphs
// with per-sample jitter stand in for real digits, so the whole suite runs
// without downloads.

#include <cstdint>
#include <string>
#include <vector>

#include "cpsw/errors.hpp"
#include "cpsw/spectral.hpp"

namespace cpsw::data {

struct DomainDataset {
    std::string name;
    int height = 28, width = 28, channels = 3;
    double bias = 0.5;   // P(color matches the label-color rule)
    double noise = 0.0;  // label flip rate
    std::vector<float> images;             // N x channels*height*width
    std::vector<std::uint8_t> labels;      // training labels (possibly noisy)
    std::vector<std::uint8_t> clean_labels;
    std::vector<std::uint8_t> colors;      // 0 red, 1 green

    std::size_t count() const { return labels.size(); }
    int input_dim() const { return channels * height * width; }
    const float* image(std::size_t i) const {
        return images.data() + i * static_cast<std::size_t>(input_dim());
    }
    spectral::ImageTensor image_tensor(std::size_t i) const;
};

enum class SampleSource { synthetic_glyphs, idx_files };

// Stroke tinting (the red/green lives on the digit strokes, black
// elsewhere) versus background tinting (white strokes over a colored
// background wash). Background tinting keeps the color almost entirely in
// the low-frequency band.
enum class ColorStyle { tinted_strokes, tinted_background };

struct GenSpec {
    SampleSource source = SampleSource::synthetic_glyphs;
    std::string idx_images_path; // idx_files mode
    std::string idx_labels_path;
    std::vector<double> biases = {0.1, 0.3, 0.9};
    std::vector<std::string> names; // optional; defaults derived from biases
    double noise = 0.25;
    std::uint64_t seed = 0;
    std::size_t per_domain = 5000;
    int channels = 3; // 2-channel variant by request
    ColorStyle color_style = ColorStyle::tinted_background;
    bool noise_after_color = false; // color from clean label, then flip
};

struct RawDigits {
    std::vector<float> images; // N x 28*28, grayscale in [0,1]
    std::vector<std::uint8_t> digits;
    std::size_t count() const { return digits.size(); }
};

std::vector<DomainDataset> generate(const GenSpec& spec);

// IDX format: big-endian magic 0x00000803 (images) / 0x00000801 (labels).
RawDigits load_idx(const std::string& images_path,
                   const std::string& labels_path);

// 28x28 seven-segment glyph for a digit, jittered.
void render_glyph(int digit, rng::Rng& rng, float* out28x28);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// Hold out one domain (by index); everything else trains.
Split split_domains(std::size_t domain_count, std::size_t holdout);

// --- tensor file format ----------------------------------------------------
// magic "CPSW1", u32le N, C, H, W, f32le data, u8 labels; generated files
// append an "AUX1" block with clean labels and colors.
void save_dataset(const DomainDataset& d, const std::string& path);
DomainDataset load_dataset(const std::string& path);

// FNV-1a over the file bytes, for reproduction manifests.
std::uint64_t file_checksum(const std::string& path);

} // namespace cpsw::data
