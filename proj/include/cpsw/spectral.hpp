#pragma once
// Centered 2D DFT, the binary low/high frequency masks, and the pairing
// augmentation that swaps a lambda-fraction of one image's low band into
// another. Convention: unnormalized forward transform, 1/(HW) inverse,
// zero frequency at (floor(H/2), floor(W/2)). Channels transform
// independently.

#include <cstdint>
#include <vector>

#include "cpsw/errors.hpp"
#include "cpsw/rng.hpp"

namespace cpsw::spectral {

struct ImageTensor {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<double> data; // planar [channel][row][col]

    static ImageTensor zeros(int h, int w, int c);
    double at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    double& at(int c, int y, int x) {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    std::size_t plane() const {
        return static_cast<std::size_t>(height) * width;
    }
};

struct SpectrumGrid {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<double> re; // planar, centered
    std::vector<double> im;

    static SpectrumGrid zeros(int h, int w, int c);
    std::size_t plane() const {
        return static_cast<std::size_t>(height) * width;
    }
};

enum class MaskKind : std::uint8_t { low_pass, high_pass };

// band: the min(|i-H/2|, |j-W/2|) threshold formulas verbatim (a cross
// shaped low band and a ring-shaped high cut; NOT set complements).
// square: conventional centered square low band, high = its complement.
enum class MaskShape : std::uint8_t { band, square };

struct FilterMask {
    int height = 0;
    int width = 0;
    MaskKind kind = MaskKind::low_pass;
    int size = 0;
    std::vector<std::uint8_t> bits; // row-major
};

FilterMask make_low_mask(int h, int w, int size,
                         MaskShape shape = MaskShape::band);
FilterMask make_high_mask(int h, int w, int size,
                          MaskShape shape = MaskShape::band);
FilterMask complement(const FilterMask& m);

SpectrumGrid dft2(const ImageTensor& img);

struct InverseResult {
    ImageTensor image;       // real part, not clamped
    double max_imag = 0.0;   // largest |imaginary| residue, diagnostic
};

InverseResult idft2(const SpectrumGrid& spec);

SpectrumGrid apply_mask(const SpectrumGrid& spec, const FilterMask& mask);

// Simulated sample: high band of xi kept, low bands mixed
// (1-lambda) * low(xi) + lambda * low(xj), then inverse transformed.
// The label of the result is the label of xi.
ImageTensor mix_spectra(const ImageTensor& xi, const ImageTensor& xj,
                        double lambda, int filter_size,
                        MaskShape shape = MaskShape::band);

// Cheaper path for the training loop: same mixing, but from precomputed
// spectra.
ImageTensor mix_spectra_cached(const SpectrumGrid& fi, const SpectrumGrid& fj,
                               double lambda, int filter_size,
                               MaskShape shape = MaskShape::band);

// lambda ~ U(0, delta). Throws invalid_delta unless 0 <= delta <= 1.
double sample_lambda(double delta, rng::Rng& rng);

// Training-loop fast paths: inverse transforms straight from float32
// spectrum planes into caller buffers, masking or mixing fused into the
// unshift step. Internal scratch is reused between calls.
void masked_inverse_f32(const float* re, const float* im, int h, int w,
                        int channels, const FilterMask& mask, double* out);
void mixed_inverse_f32(const float* fi_re, const float* fi_im,
                       const float* fj_re, const float* fj_im, double lambda,
                       const FilterMask& low, const FilterMask& high, int h,
                       int w, int channels, double* out);

} // namespace cpsw::spectral
