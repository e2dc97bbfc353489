#include "doctest.h"

#include <vector>

#include "cpsw/kernels.hpp"
#include "cpsw/rng.hpp"

using namespace cpsw;

namespace {

std::vector<double> random_vec(std::size_t n, rng::Rng& rng) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-2.0, 2.0);
    return v;
}

} // namespace

TEST_CASE("scalar dot matches plain summation semantics") {
    const std::vector<double> a = {1, 2, 3};
    const std::vector<double> b = {4, 5, 6};
    CHECK(kernels::detail::dot_scalar(a.data(), b.data(), 3) ==
          doctest::Approx(32.0));
    CHECK(kernels::detail::dot_scalar(a.data(), b.data(), 0) == 0.0);
}

TEST_CASE("active SIMD backend is bit-identical to the scalar reference") {
    const kernels::Backend active = kernels::active_backend();
    INFO("active backend: ", kernels::backend_name(active));
    rng::Rng rng(7);
    for (const std::size_t n :
         {std::size_t{1}, std::size_t{5}, std::size_t{8}, std::size_t{9},
          std::size_t{64}, std::size_t{233}, std::size_t{2352}}) {
        const auto a = random_vec(n, rng);
        const auto b = random_vec(n, rng);
        const double want_dot = kernels::detail::dot_scalar(a.data(), b.data(), n);
        const double want_sq =
            kernels::detail::sqdist_scalar(a.data(), b.data(), n);
        std::vector<double> y_want = b, y_got = b;
        kernels::detail::axpy_scalar(0.37, a.data(), y_want.data(), n);

        kernels::force_backend(active);
        CHECK(kernels::dot(a.data(), b.data(), n) == want_dot);
        CHECK(kernels::sqdist(a.data(), b.data(), n) == want_sq);
        kernels::axpy(0.37, a.data(), y_got.data(), n);
        CHECK(y_got == y_want);
    }
}

TEST_CASE("every supported backend agrees exactly on the same input") {
    rng::Rng rng(11);
    const auto a = random_vec(301, rng);
    const auto b = random_vec(301, rng);
    const double reference =
        kernels::detail::dot_scalar(a.data(), b.data(), a.size());
    for (const auto backend : {kernels::Backend::scalar, kernels::Backend::avx2,
                               kernels::Backend::neon}) {
        if (!kernels::backend_supported(backend)) continue;
        kernels::force_backend(backend);
        CHECK(kernels::dot(a.data(), b.data(), a.size()) == reference);
    }
    kernels::force_backend(kernels::active_backend());
}

TEST_CASE("forcing an unsupported backend throws") {
    const bool any_simd = kernels::backend_supported(kernels::Backend::avx2) ||
                          kernels::backend_supported(kernels::Backend::neon);
    if (kernels::backend_supported(kernels::Backend::avx2) &&
        kernels::backend_supported(kernels::Backend::neon)) {
        return; // impossible combination; nothing to probe
    }
    if (any_simd) {
        const auto missing = kernels::backend_supported(kernels::Backend::avx2)
                                 ? kernels::Backend::neon
                                 : kernels::Backend::avx2;
        CHECK_THROWS(kernels::force_backend(missing));
    }
}

TEST_CASE("sqdist is nonnegative and zero on identical inputs") {
    rng::Rng rng(3);
    const auto a = random_vec(40, rng);
    CHECK(kernels::sqdist(a.data(), a.data(), a.size()) == 0.0);
    const auto b = random_vec(40, rng);
    CHECK(kernels::sqdist(a.data(), b.data(), a.size()) > 0.0);
}
