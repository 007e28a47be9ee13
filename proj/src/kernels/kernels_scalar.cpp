#include "kernels_impl.hpp"

namespace fne::kernels::scalar {
namespace {

// Four interleaved partial sums, combined pairwise at the end. Keeps the
// reduction order fixed and close to the vector variants.
double dot(const double* a, const double* b, std::size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    double sum = (acc[0] + acc[2]) + (acc[1] + acc[3]);
    for (; i < n; ++i) {
        sum += a[i] * b[i];
    }
    return sum;
}

void dot_rows(const double* query, const double* rows, std::size_t n_rows, std::size_t dim,
              double* out) {
    for (std::size_t r = 0; r < n_rows; ++r) {
        out[r] = dot(query, rows + r * dim, dim);
    }
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        y[i] += a * x[i];
    }
}

void lerp(double t, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        y[i] += t * (x[i] - y[i]);
    }
}

} // namespace

const KernelTable& table() {
    static const KernelTable t{&dot, &dot_rows, &axpy, &lerp};
    return t;
}

} // namespace fne::kernels::scalar
