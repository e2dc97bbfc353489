#include "cpsw/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "cpsw/rng.hpp"

namespace cpsw::data {

spectral::ImageTensor DomainDataset::image_tensor(std::size_t i) const {
    spectral::ImageTensor t =
        spectral::ImageTensor::zeros(height, width, channels);
    const float* src = image(i);
    for (std::size_t j = 0; j < t.data.size(); ++j) t.data[j] = src[j];
    return t;
}

namespace {

struct Rect {
    int y0, y1, x0, x1; // half-open
};

void draw(float* out, const Rect& r, int dx, int dy, float intensity) {
    for (int y = r.y0; y < r.y1; ++y) {
        for (int x = r.x0; x < r.x1; ++x) {
            const int yy = y + dy, xx = x + dx;
            if (yy < 0 || yy >= 28 || xx < 0 || xx >= 28) continue;
            out[yy * 28 + xx] = intensity;
        }
    }
}

void draw_diag(float* out, int y0, int x0, int len, int step_x, int dx,
               int dy, float intensity) {
    for (int t = 0; t < len; ++t) {
        const int y = y0 + t, x = x0 + t * step_x;
        draw(out, {y, y + 1, x, x + 2}, dx, dy, intensity);
    }
}

std::string default_domain_name(double bias) {
    if (std::abs(bias - 0.1) < 1e-9) return "plus90";
    if (std::abs(bias - 0.3) < 1e-9) return "plus80";
    if (std::abs(bias - 0.9) < 1e-9) return "minus90";
    std::ostringstream os;
    os << "bias" << bias;
    return os.str();
}

} // namespace

// Two stroke families so the binary shape classes are geometrically
// coherent (box-outline digits 0-4, diagonal-cross digits 5-9), with a
// per-digit detail stroke and per-sample jitter. The class signal has to
// be recoverable by feature clustering at this scale; the digit identity
// stays a 10-way nuisance factor.
void render_glyph(int digit, rng::Rng& rng, float* out) {
    std::fill_n(out, 28 * 28, 0.0f);
    const int dx = static_cast<int>(rng.below(3)) - 1;
    const int dy = static_cast<int>(rng.below(3)) - 1;
    const float intensity = static_cast<float>(rng.uniform(0.9, 1.0));
    if (digit <= 4) {
        // Hollow box family; a notch indexed by the digit.
        draw(out, {5, 9, 7, 21}, dx, dy, intensity);   // top
        draw(out, {19, 23, 7, 21}, dx, dy, intensity); // bottom
        draw(out, {5, 23, 7, 11}, dx, dy, intensity);  // left
        draw(out, {5, 23, 17, 21}, dx, dy, intensity); // right
        const int row = 9 + 2 * digit;
        draw(out, {row, row + 2, 12, 16}, dx, dy, intensity);
    } else {
        // Center-heavy cross family; a stub indexed by the digit.
        draw(out, {5, 23, 12, 16}, dx, dy, intensity);  // vertical bar
        draw(out, {12, 16, 5, 23}, dx, dy, intensity);  // horizontal bar
        const int row = 6 + 3 * (digit - 5);
        draw(out, {row, row + 2, 23, 26}, dx, dy, intensity);
    }
    for (int i = 0; i < 28 * 28; ++i) {
        const float jitter = static_cast<float>(rng.uniform(-0.03, 0.03));
        out[i] = std::clamp(out[i] + jitter, 0.0f, 1.0f);
    }
}

std::vector<DomainDataset> generate(const GenSpec& spec) {
    for (double e : spec.biases)
        if (!(e >= 0.0 && e <= 1.0))
            fail(ErrorCode::invalid_spec,
                 "bias must lie in [0, 1], got " + std::to_string(e));
    if (!(spec.noise >= 0.0 && spec.noise < 0.5))
        fail(ErrorCode::invalid_spec,
             "noise must lie in [0, 0.5), got " + std::to_string(spec.noise));
    if (spec.per_domain == 0)
        fail(ErrorCode::invalid_spec, "per_domain must be positive");
    if (spec.channels != 2 && spec.channels != 3)
        fail(ErrorCode::invalid_spec, "channels must be 2 or 3");
    if (!spec.names.empty() && spec.names.size() != spec.biases.size())
        fail(ErrorCode::invalid_spec, "names must match biases");

    RawDigits raw;
    if (spec.source == SampleSource::idx_files) {
        raw = load_idx(spec.idx_images_path, spec.idx_labels_path);
    }

    const int hw = 28 * 28;
    std::vector<DomainDataset> out;
    for (std::size_t di = 0; di < spec.biases.size(); ++di) {
        DomainDataset d;
        d.bias = spec.biases[di];
        d.noise = spec.noise;
        d.channels = spec.channels;
        d.name = spec.names.empty() ? default_domain_name(d.bias)
                                    : spec.names[di];
        const std::size_t dim = static_cast<std::size_t>(d.input_dim());
        d.images.assign(spec.per_domain * dim, 0.0f);
        d.labels.resize(spec.per_domain);
        d.clean_labels.resize(spec.per_domain);
        d.colors.resize(spec.per_domain);

        std::vector<float> gray(hw);
        for (std::size_t i = 0; i < spec.per_domain; ++i) {
            const std::uint64_t global = di * spec.per_domain + i;
            rng::Rng rng = rng::derive(spec.seed, "dataset", global);

            int digit;
            if (spec.source == SampleSource::idx_files) {
                const std::size_t at = global % raw.count();
                digit = raw.digits[at];
                std::copy_n(raw.images.data() +
                                at * static_cast<std::size_t>(hw),
                            hw, gray.data());
            } else {
                digit = static_cast<int>(rng.below(10));
                render_glyph(digit, rng, gray.data());
            }

            const std::uint8_t clean = digit <= 4 ? 0 : 1;
            std::uint8_t label = clean;
            if (!spec.noise_after_color && rng.bernoulli(spec.noise))
                label = 1 - label;
            // Label-color rule: class 0 <-> red, class 1 <-> green; the
            // color matches the rule with probability `bias`.
            const std::uint8_t conditioning =
                spec.noise_after_color ? clean : label;
            std::uint8_t color = conditioning; // rule color index
            if (!rng.bernoulli(d.bias)) color = 1 - color;
            if (spec.noise_after_color && rng.bernoulli(spec.noise))
                label = 1 - label;

            float* img = d.images.data() + i * dim;
            if (spec.color_style == ColorStyle::tinted_strokes) {
                // Glyph drawn only in its color channel, black elsewhere.
                std::copy_n(gray.data(), hw,
                            img + static_cast<std::size_t>(color) * hw);
            } else {
                // Channel-symmetric glyph plus a smooth color bump in the
                // tinted channel, so the color signal lives almost
                // entirely below the low-pass cutoff.
                for (int c = 0; c < spec.channels; ++c) {
                    float* plane = img + static_cast<std::size_t>(c) * hw;
                    for (int px = 0; px < hw; ++px)
                        plane[px] = 0.6f * gray[px];
                    if (c != color) continue;
                    for (int y = 0; y < 28; ++y) {
                        const float by = std::cos(
                            3.14159265f * (y - 13.5f) / 28.0f);
                        for (int x = 0; x < 28; ++x) {
                            const float bx = std::cos(
                                3.14159265f * (x - 13.5f) / 28.0f);
                            plane[y * 28 + x] += 0.4f * by * bx;
                        }
                    }
                }
            }
            d.labels[i] = label;
            d.clean_labels[i] = clean;
            d.colors[i] = color;
        }
        out.push_back(std::move(d));
    }
    return out;
}

// --- IDX -------------------------------------------------------------------

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) fail(ErrorCode::truncated_file, "truncated IDX file: " + path);
    return (static_cast<std::uint32_t>(b[0]) << 24) |
           (static_cast<std::uint32_t>(b[1]) << 16) |
           (static_cast<std::uint32_t>(b[2]) << 8) |
           static_cast<std::uint32_t>(b[3]);
}

} // namespace

RawDigits load_idx(const std::string& images_path,
                   const std::string& labels_path) {
    std::ifstream imgs(images_path, std::ios::binary);
    if (!imgs) fail(ErrorCode::file_not_found, "cannot open " + images_path);
    std::ifstream labs(labels_path, std::ios::binary);
    if (!labs) fail(ErrorCode::file_not_found, "cannot open " + labels_path);

    if (read_be32(imgs, images_path) != 0x00000803u)
        fail(ErrorCode::bad_magic, "bad IDX image magic in " + images_path);
    const std::uint32_t n = read_be32(imgs, images_path);
    const std::uint32_t rows = read_be32(imgs, images_path);
    const std::uint32_t cols = read_be32(imgs, images_path);
    if (rows != 28 || cols != 28)
        fail(ErrorCode::invalid_spec, "expected 28x28 digits in " +
                                          images_path);

    if (read_be32(labs, labels_path) != 0x00000801u)
        fail(ErrorCode::bad_magic, "bad IDX label magic in " + labels_path);
    const std::uint32_t n_labels = read_be32(labs, labels_path);
    if (n != n_labels)
        fail(ErrorCode::count_mismatch,
             "image/label counts differ: " + std::to_string(n) + " vs " +
                 std::to_string(n_labels));

    RawDigits raw;
    const std::size_t pixels = static_cast<std::size_t>(n) * rows * cols;
    std::vector<unsigned char> buf(pixels);
    imgs.read(reinterpret_cast<char*>(buf.data()),
              static_cast<std::streamsize>(pixels));
    if (!imgs) fail(ErrorCode::truncated_file, "truncated " + images_path);
    raw.images.resize(pixels);
    for (std::size_t i = 0; i < pixels; ++i)
        raw.images[i] = static_cast<float>(buf[i]) / 255.0f;

    raw.digits.resize(n);
    labs.read(reinterpret_cast<char*>(raw.digits.data()), n);
    if (!labs) fail(ErrorCode::truncated_file, "truncated " + labels_path);
    for (std::uint8_t dgt : raw.digits)
        if (dgt > 9)
            fail(ErrorCode::invalid_spec, "label outside 0-9 in " +
                                              labels_path);
    return raw;
}

Split split_domains(std::size_t domain_count, std::size_t holdout) {
    if (domain_count < 2)
        fail(ErrorCode::invalid_split, "need at least two domains to split");
    if (holdout >= domain_count)
        fail(ErrorCode::invalid_split, "holdout index out of range");
    Split s;
    for (std::size_t i = 0; i < domain_count; ++i)
        (i == holdout ? s.test : s.train).push_back(i);
    return s;
}

// --- tensor file format ------------------------------------------------------

namespace {

constexpr char kMagic[5] = {'C', 'P', 'S', 'W', '1'};
constexpr char kAuxMagic[4] = {'A', 'U', 'X', '1'};

void write_u32le(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32le(std::istream& in, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) fail(ErrorCode::truncated_file, "truncated " + path);
    return static_cast<std::uint32_t>(b[0]) |
           (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
}

} // namespace

void save_dataset(const DomainDataset& d, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::file_not_found, "cannot write " + path);
    out.write(kMagic, sizeof(kMagic));
    write_u32le(out, static_cast<std::uint32_t>(d.count()));
    write_u32le(out, static_cast<std::uint32_t>(d.channels));
    write_u32le(out, static_cast<std::uint32_t>(d.height));
    write_u32le(out, static_cast<std::uint32_t>(d.width));
    out.write(reinterpret_cast<const char*>(d.images.data()),
              static_cast<std::streamsize>(d.images.size() * sizeof(float)));
    out.write(reinterpret_cast<const char*>(d.labels.data()),
              static_cast<std::streamsize>(d.labels.size()));
    if (!d.clean_labels.empty()) {
        out.write(kAuxMagic, sizeof(kAuxMagic));
        out.write(reinterpret_cast<const char*>(d.clean_labels.data()),
                  static_cast<std::streamsize>(d.clean_labels.size()));
        out.write(reinterpret_cast<const char*>(d.colors.data()),
                  static_cast<std::streamsize>(d.colors.size()));
    }
}

DomainDataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::file_not_found, "cannot open " + path);
    char magic[5];
    in.read(magic, 5);
    if (!in || std::memcmp(magic, kMagic, 5) != 0)
        fail(ErrorCode::bad_magic, "not a dataset file: " + path);
    DomainDataset d;
    const std::uint32_t n = read_u32le(in, path);
    d.channels = static_cast<int>(read_u32le(in, path));
    d.height = static_cast<int>(read_u32le(in, path));
    d.width = static_cast<int>(read_u32le(in, path));
    const std::size_t dim = static_cast<std::size_t>(d.input_dim());
    d.images.resize(n * dim);
    in.read(reinterpret_cast<char*>(d.images.data()),
            static_cast<std::streamsize>(d.images.size() * sizeof(float)));
    if (!in) fail(ErrorCode::truncated_file, "truncated " + path);
    d.labels.resize(n);
    in.read(reinterpret_cast<char*>(d.labels.data()), n);
    if (!in) fail(ErrorCode::truncated_file, "truncated " + path);
    char aux[4];
    if (in.read(aux, 4)) {
        if (std::memcmp(aux, kAuxMagic, 4) != 0)
            fail(ErrorCode::bad_magic, "bad auxiliary block in " + path);
        d.clean_labels.resize(n);
        in.read(reinterpret_cast<char*>(d.clean_labels.data()), n);
        d.colors.resize(n);
        in.read(reinterpret_cast<char*>(d.colors.data()), n);
        if (!in) fail(ErrorCode::truncated_file, "truncated " + path);
    }
    std::size_t dot = path.find_last_of("/\\");
    std::string base = dot == std::string::npos ? path : path.substr(dot + 1);
    dot = base.find_last_of('.');
    d.name = dot == std::string::npos ? base : base.substr(0, dot);
    return d;
}

std::uint64_t file_checksum(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::file_not_found, "cannot open " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    return h;
}

} // namespace cpsw::data
