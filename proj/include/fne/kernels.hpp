#pragma once

// Data-parallel inner loops behind a runtime-selected backend.
//
// All backends use the same fixed reduction order (four interleaved lanes,
// combined as (l0 + l2) + (l1 + l3), then the tail) and no fused multiply-add,
// so results are bit-identical across backends.

#include <cstddef>
#include <span>
#include <string_view>

namespace fne::kernels {

enum class Backend { scalar, avx2 };

struct KernelTable {
    // sum_i a[i] * b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);
    // out[r] = dot(query, rows + r * dim) for r in [0, n_rows)
    void (*dot_rows)(const double* query, const double* rows, std::size_t n_rows, std::size_t dim,
                     double* out);
    // y += a * x
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    // y += t * (x - y)
    void (*lerp)(double t, const double* x, double* y, std::size_t n);
};

std::string_view backend_name(Backend backend) noexcept;
bool backend_supported(Backend backend) noexcept;

// Chosen once at first use: FNE_SIMD=scalar|avx2|auto, defaulting to the best
// supported backend.
Backend active_backend() noexcept;
// Throws fne::Error if the backend is not supported on this CPU/build.
void set_backend(Backend backend);

const KernelTable& table(Backend backend);
const KernelTable& active();

inline double dot(std::span<const double> a, std::span<const double> b) {
    return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
    active().axpy(a, x.data(), y.data(), y.size());
}

inline void lerp(double t, std::span<const double> x, std::span<double> y) {
    active().lerp(t, x.data(), y.data(), y.size());
}

} // namespace fne::kernels
