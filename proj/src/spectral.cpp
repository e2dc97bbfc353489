#include "cpsw/spectral.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "cpsw/kernels.hpp"

namespace cpsw::spectral {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Twiddle rows cos_k[n] = cos(2*pi*k*n/N), sin_k[n] = sin(2*pi*k*n/N),
// contiguous per k so the DFT sums run through the dot kernel.
struct Twiddles {
    int n;
    std::vector<double> cos_rows; // [k*n + i]
    std::vector<double> sin_rows;
};

const Twiddles& twiddles_for(int n) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<Twiddles>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[n];
    if (!slot) {
        auto t = std::make_unique<Twiddles>();
        t->n = n;
        t->cos_rows.resize(static_cast<std::size_t>(n) * n);
        t->sin_rows.resize(static_cast<std::size_t>(n) * n);
        for (int k = 0; k < n; ++k) {
            for (int i = 0; i < n; ++i) {
                const double theta = kTwoPi * ((k * i) % n) / n;
                t->cos_rows[static_cast<std::size_t>(k) * n + i] =
                    std::cos(theta);
                t->sin_rows[static_cast<std::size_t>(k) * n + i] =
                    std::sin(theta);
            }
        }
        slot = std::move(t);
    }
    return *slot;
}

// out[k] = sum_i x[i] * exp(-+ 2*pi*i*k*i / n); sign -1 forward, +1 inverse.
void dft1d(const double* xr, const double* xi, int n, int sign, double* outr,
           double* outi) {
    const Twiddles& t = twiddles_for(n);
    for (int k = 0; k < n; ++k) {
        const double* c = t.cos_rows.data() + static_cast<std::size_t>(k) * n;
        const double* s = t.sin_rows.data() + static_cast<std::size_t>(k) * n;
        const double rc = kernels::dot(xr, c, n);
        const double rs = kernels::dot(xr, s, n);
        double ic = 0.0, is = 0.0;
        if (xi) {
            ic = kernels::dot(xi, c, n);
            is = kernels::dot(xi, s, n);
        }
        if (sign < 0) { // e^{-i theta}
            outr[k] = rc + is;
            outi[k] = ic - rs;
        } else { // e^{+i theta}
            outr[k] = rc - is;
            outi[k] = ic + rs;
        }
    }
}

int center(int n) { return n / 2; } // floor; DC lands here after the shift

struct PlaneScratch {
    std::vector<double> rowr, rowi, colr, coli, resr, resi;
    void reserve(int h, int w) {
        const std::size_t plane = static_cast<std::size_t>(h) * w;
        rowr.resize(plane);
        rowi.resize(plane);
        colr.resize(h);
        coli.resize(h);
        resr.resize(h);
        resi.resize(h);
    }
};

PlaneScratch& plane_scratch() {
    thread_local PlaneScratch scratch;
    return scratch;
}

void transform_plane(const double* inr, const double* ini, int h, int w,
                     int sign, double* outr, double* outi) {
    PlaneScratch& s = plane_scratch();
    s.reserve(h, w);
    // Row pass.
    for (int y = 0; y < h; ++y) {
        dft1d(inr + static_cast<std::size_t>(y) * w,
              ini ? ini + static_cast<std::size_t>(y) * w : nullptr, w, sign,
              s.rowr.data() + static_cast<std::size_t>(y) * w,
              s.rowi.data() + static_cast<std::size_t>(y) * w);
    }
    // Column pass, via gathered scratch columns.
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) {
            s.colr[y] = s.rowr[static_cast<std::size_t>(y) * w + x];
            s.coli[y] = s.rowi[static_cast<std::size_t>(y) * w + x];
        }
        dft1d(s.colr.data(), s.coli.data(), h, sign, s.resr.data(),
              s.resi.data());
        for (int y = 0; y < h; ++y) {
            outr[static_cast<std::size_t>(y) * w + x] = s.resr[y];
            outi[static_cast<std::size_t>(y) * w + x] = s.resi[y];
        }
    }
}

// Inverse transform of one already-unshifted complex plane into `out`
// (real part, scaled); drops the imaginary part.
void inverse_plane_to(const double* ur, const double* ui, int h, int w,
                      double* out) {
    thread_local std::vector<double> tr, ti;
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    tr.resize(plane);
    ti.resize(plane);
    transform_plane(ur, ui, h, w, +1, tr.data(), ti.data());
    const double scale = 1.0 / (static_cast<double>(h) * w);
    for (std::size_t i = 0; i < plane; ++i) out[i] = tr[i] * scale;
}

} // namespace

ImageTensor ImageTensor::zeros(int h, int w, int c) {
    ImageTensor t;
    t.height = h;
    t.width = w;
    t.channels = c;
    t.data.assign(static_cast<std::size_t>(h) * w * c, 0.0);
    return t;
}

SpectrumGrid SpectrumGrid::zeros(int h, int w, int c) {
    SpectrumGrid s;
    s.height = h;
    s.width = w;
    s.channels = c;
    s.re.assign(static_cast<std::size_t>(h) * w * c, 0.0);
    s.im.assign(static_cast<std::size_t>(h) * w * c, 0.0);
    return s;
}

SpectrumGrid dft2(const ImageTensor& img) {
    if (img.height < 2 || img.width < 2)
        fail(ErrorCode::dimension_mismatch, "image smaller than 2x2");
    SpectrumGrid out = SpectrumGrid::zeros(img.height, img.width,
                                           img.channels);
    const int h = img.height, w = img.width;
    const std::size_t plane = img.plane();
    std::vector<double> tr(plane), ti(plane);
    for (int c = 0; c < img.channels; ++c) {
        transform_plane(img.data.data() + c * plane, nullptr, h, w, -1,
                        tr.data(), ti.data());
        // Shift: frequency (ky,kx) -> grid ((ky+h/2)%h, (kx+w/2)%w).
        for (int ky = 0; ky < h; ++ky) {
            const int gy = (ky + center(h)) % h;
            for (int kx = 0; kx < w; ++kx) {
                const int gx = (kx + center(w)) % w;
                const std::size_t src = static_cast<std::size_t>(ky) * w + kx;
                const std::size_t dst =
                    c * plane + static_cast<std::size_t>(gy) * w + gx;
                out.re[dst] = tr[src];
                out.im[dst] = ti[src];
            }
        }
    }
    return out;
}

InverseResult idft2(const SpectrumGrid& spec) {
    const int h = spec.height, w = spec.width;
    const std::size_t plane = spec.plane();
    InverseResult result;
    result.image = ImageTensor::zeros(h, w, spec.channels);
    std::vector<double> ur(plane), ui(plane), tr(plane), ti(plane);
    const double scale = 1.0 / (static_cast<double>(h) * w);
    for (int c = 0; c < spec.channels; ++c) {
        // Unshift back to frequency order.
        for (int ky = 0; ky < h; ++ky) {
            const int gy = (ky + center(h)) % h;
            for (int kx = 0; kx < w; ++kx) {
                const int gx = (kx + center(w)) % w;
                const std::size_t dst = static_cast<std::size_t>(ky) * w + kx;
                const std::size_t src =
                    c * plane + static_cast<std::size_t>(gy) * w + gx;
                ur[dst] = spec.re[src];
                ui[dst] = spec.im[src];
            }
        }
        transform_plane(ur.data(), ui.data(), h, w, +1, tr.data(), ti.data());
        for (std::size_t i = 0; i < plane; ++i) {
            result.image.data[c * plane + i] = tr[i] * scale;
            result.max_imag =
                std::max(result.max_imag, std::abs(ti[i] * scale));
        }
    }
    return result;
}

namespace {

FilterMask build_mask(int h, int w, int size, MaskKind kind, MaskShape shape) {
    FilterMask m;
    m.height = h;
    m.width = w;
    m.kind = kind;
    m.size = size;
    m.bits.assign(static_cast<std::size_t>(h) * w, 0);
    const double hc = h / 2.0, wc = w / 2.0;
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            const double di = std::abs(i - hc);
            const double dj = std::abs(j - wc);
            bool bit;
            if (shape == MaskShape::band) {
                const double d = std::min(di, dj);
                if (kind == MaskKind::low_pass)
                    bit = d <= size / 2.0;
                else
                    bit = !(d <= (std::min(h, w) - size) / 2.0);
            } else {
                const double d = std::max(di, dj);
                const bool in_square = d <= size / 2.0;
                bit = kind == MaskKind::low_pass ? in_square : !in_square;
            }
            m.bits[static_cast<std::size_t>(i) * w + j] = bit ? 1 : 0;
        }
    }
    return m;
}

} // namespace

FilterMask make_low_mask(int h, int w, int size, MaskShape shape) {
    return build_mask(h, w, size, MaskKind::low_pass, shape);
}

FilterMask make_high_mask(int h, int w, int size, MaskShape shape) {
    return build_mask(h, w, size, MaskKind::high_pass, shape);
}

FilterMask complement(const FilterMask& m) {
    FilterMask out = m;
    out.kind = m.kind == MaskKind::low_pass ? MaskKind::high_pass
                                            : MaskKind::low_pass;
    for (auto& b : out.bits) b = b ? 0 : 1;
    return out;
}

SpectrumGrid apply_mask(const SpectrumGrid& spec, const FilterMask& mask) {
    if (spec.height != mask.height || spec.width != mask.width)
        fail(ErrorCode::dimension_mismatch, "mask/spectrum size mismatch");
    SpectrumGrid out = spec;
    const std::size_t plane = spec.plane();
    for (int c = 0; c < spec.channels; ++c) {
        for (std::size_t i = 0; i < plane; ++i) {
            if (!mask.bits[i]) {
                out.re[c * plane + i] = 0.0;
                out.im[c * plane + i] = 0.0;
            }
        }
    }
    return out;
}

ImageTensor mix_spectra_cached(const SpectrumGrid& fi, const SpectrumGrid& fj,
                               double lambda, int filter_size,
                               MaskShape shape) {
    if (fi.height != fj.height || fi.width != fj.width ||
        fi.channels != fj.channels)
        fail(ErrorCode::dimension_mismatch, "spectrum size mismatch");
    if (lambda < 0.0 || lambda > 1.0)
        fail(ErrorCode::invalid_delta, "lambda outside [0, 1]");
    const FilterMask low =
        make_low_mask(fi.height, fi.width, filter_size, shape);
    const FilterMask high =
        make_high_mask(fi.height, fi.width, filter_size, shape);
    SpectrumGrid mixed = SpectrumGrid::zeros(fi.height, fi.width, fi.channels);
    const std::size_t plane = fi.plane();
    for (int c = 0; c < fi.channels; ++c) {
        for (std::size_t i = 0; i < plane; ++i) {
            const std::size_t at = c * plane + i;
            const double hb = high.bits[i] ? 1.0 : 0.0;
            const double lb = low.bits[i] ? 1.0 : 0.0;
            mixed.re[at] = hb * fi.re[at] + lb * ((1.0 - lambda) * fi.re[at] +
                                                  lambda * fj.re[at]);
            mixed.im[at] = hb * fi.im[at] + lb * ((1.0 - lambda) * fi.im[at] +
                                                  lambda * fj.im[at]);
        }
    }
    return idft2(mixed).image;
}

ImageTensor mix_spectra(const ImageTensor& xi, const ImageTensor& xj,
                        double lambda, int filter_size, MaskShape shape) {
    if (xi.height != xj.height || xi.width != xj.width ||
        xi.channels != xj.channels)
        fail(ErrorCode::dimension_mismatch, "image size mismatch");
    return mix_spectra_cached(dft2(xi), dft2(xj), lambda, filter_size, shape);
}

double sample_lambda(double delta, rng::Rng& rng) {
    if (!(delta >= 0.0 && delta <= 1.0))
        fail(ErrorCode::invalid_delta,
             "delta must lie in [0, 1], got " + std::to_string(delta));
    return delta * rng.uniform01();
}

void masked_inverse_f32(const float* re, const float* im, int h, int w,
                        int channels, const FilterMask& mask, double* out) {
    thread_local std::vector<double> ur, ui;
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    ur.resize(plane);
    ui.resize(plane);
    for (int c = 0; c < channels; ++c) {
        const float* cre = re + c * plane;
        const float* cim = im + c * plane;
        for (int ky = 0; ky < h; ++ky) {
            const int gy = (ky + center(h)) % h;
            for (int kx = 0; kx < w; ++kx) {
                const int gx = (kx + center(w)) % w;
                const std::size_t src = static_cast<std::size_t>(gy) * w + gx;
                const std::size_t dst = static_cast<std::size_t>(ky) * w + kx;
                const double bit = mask.bits[src] ? 1.0 : 0.0;
                ur[dst] = bit * cre[src];
                ui[dst] = bit * cim[src];
            }
        }
        inverse_plane_to(ur.data(), ui.data(), h, w, out + c * plane);
    }
}

void mixed_inverse_f32(const float* fi_re, const float* fi_im,
                       const float* fj_re, const float* fj_im, double lambda,
                       const FilterMask& low, const FilterMask& high, int h,
                       int w, int channels, double* out) {
    thread_local std::vector<double> ur, ui;
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    ur.resize(plane);
    ui.resize(plane);
    for (int c = 0; c < channels; ++c) {
        const float* ire = fi_re + c * plane;
        const float* iim = fi_im + c * plane;
        const float* jre = fj_re + c * plane;
        const float* jim = fj_im + c * plane;
        for (int ky = 0; ky < h; ++ky) {
            const int gy = (ky + center(h)) % h;
            for (int kx = 0; kx < w; ++kx) {
                const int gx = (kx + center(w)) % w;
                const std::size_t src = static_cast<std::size_t>(gy) * w + gx;
                const std::size_t dst = static_cast<std::size_t>(ky) * w + kx;
                const double hb = high.bits[src] ? 1.0 : 0.0;
                const double lb = low.bits[src] ? 1.0 : 0.0;
                ur[dst] = hb * ire[src] +
                          lb * ((1.0 - lambda) * ire[src] + lambda * jre[src]);
                ui[dst] = hb * iim[src] +
                          lb * ((1.0 - lambda) * iim[src] + lambda * jim[src]);
            }
        }
        inverse_plane_to(ur.data(), ui.data(), h, w, out + c * plane);
    }
}

} // namespace cpsw::spectral
