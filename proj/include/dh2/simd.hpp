#pragma once
//
// Complex BLAS-1/2 style inner loops with a scalar reference
// implementation and an AVX2+FMA variant. The variant is selected once at
// runtime; DH2_SIMD=scalar in the environment forces the reference path.
//
// All matrices are column-major with leading dimension `ld`.
//

#include <complex>
#include <cstddef>
#include <string_view>

namespace dh2::simd {

using cplx = std::complex<double>;

enum class Isa { scalar, avx2 };

struct KernelTable {
    Isa isa;
    // y[0:rows] += A x[0:cols]
    void (*gemv_n)(std::size_t rows, std::size_t cols, const cplx *a, std::size_t ld, const cplx *x, cplx *y);
    // y[0:cols] += A^H x[0:rows]
    void (*gemv_c)(std::size_t rows, std::size_t cols, const cplx *a, std::size_t ld, const cplx *x, cplx *y);
    // x^H y
    cplx (*dotc)(std::size_t n, const cplx *x, const cplx *y);
    // y += alpha x
    void (*axpy)(std::size_t n, cplx alpha, const cplx *x, cplx *y);
};

namespace scalar {
void gemv_n(std::size_t rows, std::size_t cols, const cplx *a, std::size_t ld, const cplx *x, cplx *y);
void gemv_c(std::size_t rows, std::size_t cols, const cplx *a, std::size_t ld, const cplx *x, cplx *y);
cplx dotc(std::size_t n, const cplx *x, const cplx *y);
void axpy(std::size_t n, cplx alpha, const cplx *x, cplx *y);
} // namespace scalar

namespace avx2 {
void gemv_n(std::size_t rows, std::size_t cols, const cplx *a, std::size_t ld, const cplx *x, cplx *y);
void gemv_c(std::size_t rows, std::size_t cols, const cplx *a, std::size_t ld, const cplx *x, cplx *y);
cplx dotc(std::size_t n, const cplx *x, const cplx *y);
void axpy(std::size_t n, cplx alpha, const cplx *x, cplx *y);
} // namespace avx2

bool cpu_has_avx2();

const KernelTable &table_for(Isa isa);

// The table chosen for this process.
const KernelTable &active();

std::string_view isa_name(Isa isa);

} // namespace dh2::simd
