#include "kernels_impl.hpp"

#include "fne/error.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace fne::kernels {
namespace {

Backend detect_best() noexcept {
    return backend_supported(Backend::avx2) ? Backend::avx2 : Backend::scalar;
}

Backend initial_backend() noexcept {
    const char* env = std::getenv("FNE_SIMD");
    if (env != nullptr) {
        const std::string choice(env);
        if (choice == "scalar") {
            return Backend::scalar;
        }
        if (choice == "avx2" && backend_supported(Backend::avx2)) {
            return Backend::avx2;
        }
    }
    return detect_best();
}

std::atomic<Backend>& current() {
    static std::atomic<Backend> backend{initial_backend()};
    return backend;
}

} // namespace

std::string_view backend_name(Backend backend) noexcept {
    switch (backend) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
    }
    return "unknown";
}

bool backend_supported(Backend backend) noexcept {
    switch (backend) {
    case Backend::scalar:
        return true;
    case Backend::avx2:
#if defined(FNE_HAVE_AVX2)
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
        return false;
#endif
    }
    return false;
}

Backend active_backend() noexcept { return current().load(std::memory_order_relaxed); }

void set_backend(Backend backend) {
    if (!backend_supported(backend)) {
        throw Error(Errc::invalid_argument,
                    "SIMD backend '" + std::string(backend_name(backend)) + "' is not available");
    }
    current().store(backend, std::memory_order_relaxed);
}

const KernelTable& table(Backend backend) {
    if (!backend_supported(backend)) {
        throw Error(Errc::invalid_argument,
                    "SIMD backend '" + std::string(backend_name(backend)) + "' is not available");
    }
#if defined(FNE_HAVE_AVX2)
    if (backend == Backend::avx2) {
        return avx2::table();
    }
#endif
    return scalar::table();
}

const KernelTable& active() {
#if defined(FNE_HAVE_AVX2)
    if (active_backend() == Backend::avx2) {
        return avx2::table();
    }
#endif
    return scalar::table();
}

} // namespace fne::kernels
