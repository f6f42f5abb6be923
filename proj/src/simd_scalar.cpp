#include "dh2/simd.hpp"

#include <cstdlib>
#include <string>

namespace dh2::simd {

namespace scalar {

void gemv_n(std::size_t rows, std::size_t cols, const cplx *a, std::size_t ld, const cplx *x, cplx *y) {
    for (std::size_t j = 0; j < cols; ++j) {
        const cplx xj = x[j];
        const cplx *col = a + j * ld;
        for (std::size_t i = 0; i < rows; ++i)
            y[i] += col[i] * xj;
    }
}

void gemv_c(std::size_t rows, std::size_t cols, const cplx *a, std::size_t ld, const cplx *x, cplx *y) {
    for (std::size_t j = 0; j < cols; ++j)
        y[j] += dotc(rows, a + j * ld, x);
}

cplx dotc(std::size_t n, const cplx *x, const cplx *y) {
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        re += x[i].real() * y[i].real() + x[i].imag() * y[i].imag();
        im += x[i].real() * y[i].imag() - x[i].imag() * y[i].real();
    }
    return {re, im};
}

void axpy(std::size_t n, cplx alpha, const cplx *x, cplx *y) {
    for (std::size_t i = 0; i < n; ++i)
        y[i] += alpha * x[i];
}

} // namespace scalar

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable &table_for(Isa isa) {
    static const KernelTable scalar_table{Isa::scalar, scalar::gemv_n, scalar::gemv_c, scalar::dotc, scalar::axpy};
#if defined(__x86_64__) || defined(__i386__)
    static const KernelTable avx2_table{Isa::avx2, avx2::gemv_n, avx2::gemv_c, avx2::dotc, avx2::axpy};
    if (isa == Isa::avx2 && cpu_has_avx2())
        return avx2_table;
#endif
    return scalar_table;
}

const KernelTable &active() {
    static const KernelTable &chosen = [] () -> const KernelTable & {
        const char *env = std::getenv("DH2_SIMD");
        if (env != nullptr && std::string(env) == "scalar")
            return table_for(Isa::scalar);
        return table_for(Isa::avx2);
    }();
    return chosen;
}

std::string_view isa_name(Isa isa) {
    switch (isa) {
    case Isa::scalar:
        return "scalar";
    case Isa::avx2:
        return "avx2";
    }
    return "unknown";
}

} // namespace dh2::simd
