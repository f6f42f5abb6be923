#pragma once
//
// Dense complex linear algebra used throughout the library.
//
// CMatrix is a column-major value type. Factorizations (SVD, QR) are
// delegated to LAPACK; products go through the dispatched kernels in
// simd.hpp.
//

#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dh2 {

using cplx = std::complex<double>;
using CVector = std::vector<cplx>;
using IndexList = std::vector<std::size_t>;

// Raised when a numerical routine cannot deliver its contract
// (SVD non-convergence, zero start vectors, ...).
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class CMatrix {
  public:
    CMatrix() = default;
    CMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
    CMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> data);

    static CMatrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    cplx &operator()(std::size_t i, std::size_t j) { return data_[i + j * rows_]; }
    const cplx &operator()(std::size_t i, std::size_t j) const { return data_[i + j * rows_]; }

    cplx *data() { return data_.data(); }
    const cplx *data() const { return data_.data(); }

    std::span<cplx> column(std::size_t j) { return {data_.data() + j * rows_, rows_}; }
    std::span<const cplx> column(std::size_t j) const { return {data_.data() + j * rows_, rows_}; }

    const std::vector<cplx> &values() const { return data_; }

    bool all_finite() const;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<cplx> data_;
};

struct SVDResult {
    CMatrix left;                 // rows x r, orthonormal columns
    std::vector<double> singular; // r = min(rows, cols), non-increasing
    CMatrix right;                // cols x r, orthonormal columns
};

// Thin SVD. Left singular vectors are normalized so that the entry of
// largest modulus in each column is real and positive (the right vectors
// are rotated accordingly), which makes results reproducible.
SVDResult svd(const CMatrix &a);

// Left singular vectors and singular values only. Cheaper for wide
// matrices: a QR of the adjoint reduces the problem to a square one.
struct LeftSVD {
    CMatrix left;
    std::vector<double> singular;
};
LeftSVD left_svd(const CMatrix &a);

// Smallest k with sigma_{k+1} <= tolerance, capped at max_rank.
// Returns 0 for an all-zero spectrum.
std::size_t truncation_rank(std::span<const double> singular, double tolerance, std::size_t max_rank);

// Thin QR with orthonormal Q (rows x min(rows, cols)).
struct QRResult {
    CMatrix q;
    CMatrix r;
};
QRResult qr(const CMatrix &a);

using LinearOperator = std::function<CVector(const CVector &)>;

// Spectral norm estimate by power iteration on A^H A. Deterministic for a
// fixed seed.
double power_iteration_norm(const LinearOperator &apply, const LinearOperator &apply_adjoint, std::size_t dim,
                            std::size_t iterations, std::uint64_t seed);

// Deterministic pseudo-random complex vector with entries in the unit square.
CVector random_vector(std::size_t n, std::uint64_t seed);

// --- products ------------------------------------------------------------

CMatrix multiply(const CMatrix &a, const CMatrix &b);
CMatrix adjoint_multiply(const CMatrix &a, const CMatrix &b); // a^H b
CMatrix multiply_adjoint(const CMatrix &a, const CMatrix &b); // a b^H
CMatrix adjoint(const CMatrix &a);
CMatrix transpose(const CMatrix &a);

// y += a x  /  y += a^H x
void gemv(const CMatrix &a, std::span<const cplx> x, std::span<cplx> y);
void gemv_adjoint(const CMatrix &a, std::span<const cplx> x, std::span<cplx> y);

CVector apply(const CMatrix &a, std::span<const cplx> x);
CVector apply_adjoint(const CMatrix &a, std::span<const cplx> x);

CMatrix submatrix(const CMatrix &a, std::span<const std::size_t> rows, std::span<const std::size_t> cols);
CMatrix leading_columns(const CMatrix &a, std::size_t k);
CMatrix row_range(const CMatrix &a, std::size_t first, std::size_t count);
CMatrix vertical_concat(std::span<const CMatrix> blocks);

CMatrix operator-(const CMatrix &a, const CMatrix &b);
CMatrix operator+(const CMatrix &a, const CMatrix &b);
CMatrix operator*(cplx alpha, const CMatrix &a);

double frobenius_norm(const CMatrix &a);
double norm2(std::span<const cplx> x);
cplx dotc(std::span<const cplx> x, std::span<const cplx> y); // x^H y

// Spectral norm of an explicit matrix via its singular values.
double spectral_norm(const CMatrix &a);

// --- CMX1 binary format --------------------------------------------------

void write_cmx(std::ostream &out, const CMatrix &a);
CMatrix read_cmx(std::istream &in);
void write_cmx_file(const std::string &path, const CMatrix &a);
CMatrix read_cmx_file(const std::string &path);

} // namespace dh2
