#include "cpsw/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace cpsw::kernels {

namespace detail {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double lane[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        for (int k = 0; k < 8; ++k) lane[k] += a[i + k] * b[i + k];
    }
    for (std::size_t r = 0; i + r < n; ++r) lane[r] += a[i + r] * b[i + r];
    double s = lane[0];
    for (int k = 1; k < 8; ++k) s += lane[k];
    return s;
}

double sqdist_scalar(const double* a, const double* b, std::size_t n) {
    double lane[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        for (int k = 0; k < 8; ++k) {
            const double d = a[i + k] - b[i + k];
            lane[k] += d * d;
        }
    }
    for (std::size_t r = 0; i + r < n; ++r) {
        const double d = a[i + r] - b[i + r];
        lane[r] += d * d;
    }
    double s = lane[0];
    for (int k = 1; k < 8; ++k) s += lane[k];
    return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

} // namespace detail

namespace {

struct Vtable {
    double (*dot)(const double*, const double*, std::size_t);
    double (*sqdist)(const double*, const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    Backend backend;
};

Vtable make_vtable(Backend b) {
    switch (b) {
#if defined(__x86_64__) || defined(_M_X64)
        case Backend::avx2:
            return {detail::dot_avx2, detail::sqdist_avx2, detail::axpy_avx2,
                    Backend::avx2};
#endif
#if defined(__aarch64__)
        case Backend::neon:
            return {detail::dot_neon, detail::sqdist_neon, detail::axpy_neon,
                    Backend::neon};
#endif
        default:
            return {detail::dot_scalar, detail::sqdist_scalar,
                    detail::axpy_scalar, Backend::scalar};
    }
}

Backend pick_backend() {
    if (const char* env = std::getenv("CPSW_KERNELS")) {
        const std::string name(env);
        if (name == "scalar") return Backend::scalar;
        if (name == "avx2" && backend_supported(Backend::avx2))
            return Backend::avx2;
        if (name == "neon" && backend_supported(Backend::neon))
            return Backend::neon;
        // Unknown or unsupported request: fall through to auto-detect.
    }
    if (backend_supported(Backend::avx2)) return Backend::avx2;
    if (backend_supported(Backend::neon)) return Backend::neon;
    return Backend::scalar;
}

Vtable& vtable() {
    static Vtable v = make_vtable(pick_backend());
    return v;
}

} // namespace

bool backend_supported(Backend b) {
    switch (b) {
        case Backend::scalar:
            return true;
        case Backend::avx2:
#if defined(__x86_64__) || defined(_M_X64)
            return detail::avx2_available();
#else
            return false;
#endif
        case Backend::neon:
#if defined(__aarch64__)
            return true;
#else
            return false;
#endif
    }
    return false;
}

Backend active_backend() { return vtable().backend; }

const char* backend_name(Backend b) {
    switch (b) {
        case Backend::scalar: return "scalar";
        case Backend::avx2: return "avx2";
        case Backend::neon: return "neon";
    }
    return "?";
}

void force_backend(Backend b) {
    if (!backend_supported(b))
        throw std::runtime_error(std::string("kernel backend unavailable: ") +
                                 backend_name(b));
    vtable() = make_vtable(b);
}

double dot(const double* a, const double* b, std::size_t n) {
    return vtable().dot(a, b, n);
}

double sqdist(const double* a, const double* b, std::size_t n) {
    return vtable().sqdist(a, b, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    vtable().axpy(alpha, x, y, n);
}

} // namespace cpsw::kernels
