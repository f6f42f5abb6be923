#include "dh2/linalg.hpp"
#include "dh2/simd.hpp"

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>

namespace dh2 {

CMatrix::CMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
        throw std::invalid_argument("CMatrix: entry count does not match rows x cols");
}

CMatrix CMatrix::identity(std::size_t n) {
    CMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        m(i, i) = 1.0;
    return m;
}

bool CMatrix::all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](const cplx &z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

namespace {

// Make the largest-modulus entry of every column real and positive.
// Returns the applied phases so callers can rotate paired vectors.
std::vector<cplx> normalize_phases(CMatrix &u) {
    std::vector<cplx> phases(u.cols(), 1.0);
    for (std::size_t j = 0; j < u.cols(); ++j) {
        auto col = u.column(j);
        std::size_t best = 0;
        double best_abs = -1.0;
        for (std::size_t i = 0; i < col.size(); ++i) {
            const double m = std::abs(col[i]);
            if (m > best_abs * (1.0 + 1e-12)) {
                best_abs = m;
                best = i;
            }
        }
        if (best_abs <= 0.0)
            continue;
        const cplx phase = std::conj(col[best]) / best_abs;
        for (auto &z : col)
            z *= phase;
        col[best] = cplx(col[best].real(), 0.0);
        phases[j] = phase;
    }
    return phases;
}

void check_input(const CMatrix &a, const char *what) {
    if (a.empty())
        throw std::invalid_argument(std::string(what) + ": empty matrix");
    if (!a.all_finite())
        throw std::invalid_argument(std::string(what) + ": non-finite entries");
}

// Plain zgesvd driver. jobu/jobvt in {'S','N'}.
void run_gesvd(CMatrix work, char jobu, char jobvt, CMatrix *u, std::vector<double> &s, CMatrix *vh) {
    const auto m = static_cast<lapack_int>(work.rows());
    const auto n = static_cast<lapack_int>(work.cols());
    const auto r = std::min(m, n);
    s.assign(static_cast<std::size_t>(r), 0.0);
    CMatrix uu(jobu == 'S' ? work.rows() : 1, jobu == 'S' ? static_cast<std::size_t>(r) : 1);
    CMatrix vv(jobvt == 'S' ? static_cast<std::size_t>(r) : 1, jobvt == 'S' ? work.cols() : 1);
    std::vector<double> superb(static_cast<std::size_t>(std::max<lapack_int>(r, 1)));
    const lapack_int info = LAPACKE_zgesvd(LAPACK_COL_MAJOR, jobu, jobvt, m, n, work.data(), m, s.data(), uu.data(),
                                           static_cast<lapack_int>(uu.rows()), vv.data(),
                                           static_cast<lapack_int>(vv.rows()), superb.data());
    if (info > 0)
        throw NumericalError("svd: bidiagonal QR iteration did not converge");
    if (info < 0)
        throw std::invalid_argument("svd: illegal argument passed to LAPACK");
    if (u != nullptr)
        *u = std::move(uu);
    if (vh != nullptr)
        *vh = std::move(vv);
}

} // namespace

SVDResult svd(const CMatrix &a) {
    check_input(a, "svd");
    SVDResult result;
    CMatrix vh;
    run_gesvd(a, 'S', 'S', &result.left, result.singular, &vh);
    result.right = adjoint(vh);
    const auto phases = normalize_phases(result.left);
    for (std::size_t j = 0; j < phases.size(); ++j)
        for (auto &z : result.right.column(j))
            z *= phases[j];
    return result;
}

LeftSVD left_svd(const CMatrix &a) {
    check_input(a, "svd");
    LeftSVD result;
    if (a.cols() > a.rows()) {
        // A^H = Q R  =>  A = R^H Q^H, and A shares left vectors with R^H.
        CMatrix ah = adjoint(a);
        const auto m = static_cast<lapack_int>(ah.rows());
        const auto n = static_cast<lapack_int>(ah.cols());
        std::vector<cplx> tau(static_cast<std::size_t>(n));
        const lapack_int info = LAPACKE_zgeqrf(LAPACK_COL_MAJOR, m, n, ah.data(), m, tau.data());
        if (info != 0)
            throw NumericalError("svd: QR preconditioning failed");
        CMatrix rh(a.rows(), a.rows());
        for (std::size_t j = 0; j < a.rows(); ++j)
            for (std::size_t i = 0; i <= j; ++i)
                rh(j, i) = std::conj(ah(i, j));
        run_gesvd(std::move(rh), 'S', 'N', &result.left, result.singular, nullptr);
    } else {
        run_gesvd(a, 'S', 'N', &result.left, result.singular, nullptr);
    }
    normalize_phases(result.left);
    return result;
}

std::size_t truncation_rank(std::span<const double> singular, double tolerance, std::size_t max_rank) {
    std::size_t k = 0;
    while (k < singular.size() && singular[k] > tolerance)
        ++k;
    if (k == 0 && !singular.empty() && singular[0] > 0.0)
        k = 1;
    return std::min(k, max_rank);
}

QRResult qr(const CMatrix &a) {
    check_input(a, "qr");
    const auto m = static_cast<lapack_int>(a.rows());
    const auto n = static_cast<lapack_int>(a.cols());
    const auto r = std::min(m, n);
    CMatrix work = a;
    std::vector<cplx> tau(static_cast<std::size_t>(r));
    if (LAPACKE_zgeqrf(LAPACK_COL_MAJOR, m, n, work.data(), m, tau.data()) != 0)
        throw NumericalError("qr: zgeqrf failed");
    QRResult out;
    out.r = CMatrix(static_cast<std::size_t>(r), a.cols());
    for (std::size_t j = 0; j < a.cols(); ++j)
        for (std::size_t i = 0; i <= std::min<std::size_t>(j, static_cast<std::size_t>(r) - 1); ++i)
            out.r(i, j) = work(i, j);
    CMatrix q(a.rows(), static_cast<std::size_t>(r));
    std::copy_n(work.data(), q.size(), q.data());
    if (LAPACKE_zungqr(LAPACK_COL_MAJOR, m, r, r, q.data(), m, tau.data()) != 0)
        throw NumericalError("qr: zungqr failed");
    out.q = std::move(q);
    return out;
}

CVector random_vector(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    CVector x(n);
    for (auto &z : x) {
        const double re = dist(rng);
        z = cplx(re, dist(rng));
    }
    return x;
}

double power_iteration_norm(const LinearOperator &apply_op, const LinearOperator &apply_adjoint_op, std::size_t dim,
                            std::size_t iterations, std::uint64_t seed) {
    if (dim == 0 || iterations == 0)
        throw std::invalid_argument("power_iteration_norm: dim and iterations must be positive");

    constexpr int max_retries = 3;
    bool annihilated = false;
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
        CVector x = random_vector(dim, seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(attempt));
        double nx = norm2(x);
        if (nx == 0.0)
            continue;
        for (auto &z : x)
            z /= nx;

        bool zero = false;
        for (std::size_t it = 0; it < iterations; ++it) {
            const CVector y = apply_op(x);
            CVector z = apply_adjoint_op(y);
            const double nz = norm2(z);
            if (nz == 0.0) {
                zero = true;
                break;
            }
            for (auto &v : z)
                v /= nz;
            x = std::move(z);
        }
        if (zero) {
            annihilated = true;
            continue;
        }
        return norm2(apply_op(x));
    }
    if (annihilated)
        return 0.0;
    throw NumericalError("power_iteration_norm: could not draw a nonzero start vector");
}

// --- products ------------------------------------------------------------

void gemv(const CMatrix &a, std::span<const cplx> x, std::span<cplx> y) {
    if (x.size() != a.cols() || y.size() != a.rows())
        throw std::invalid_argument("gemv: dimension mismatch");
    if (a.empty())
        return;
    simd::active().gemv_n(a.rows(), a.cols(), a.data(), a.rows(), x.data(), y.data());
}

void gemv_adjoint(const CMatrix &a, std::span<const cplx> x, std::span<cplx> y) {
    if (x.size() != a.rows() || y.size() != a.cols())
        throw std::invalid_argument("gemv_adjoint: dimension mismatch");
    if (a.empty())
        return;
    simd::active().gemv_c(a.rows(), a.cols(), a.data(), a.rows(), x.data(), y.data());
}

CVector apply(const CMatrix &a, std::span<const cplx> x) {
    CVector y(a.rows());
    gemv(a, x, y);
    return y;
}

CVector apply_adjoint(const CMatrix &a, std::span<const cplx> x) {
    CVector y(a.cols());
    gemv_adjoint(a, x, y);
    return y;
}

CMatrix multiply(const CMatrix &a, const CMatrix &b) {
    if (a.cols() != b.rows())
        throw std::invalid_argument("multiply: inner dimensions differ");
    CMatrix c(a.rows(), b.cols());
    if (a.empty())
        return c;
    const auto &k = simd::active();
    for (std::size_t j = 0; j < b.cols(); ++j)
        k.gemv_n(a.rows(), a.cols(), a.data(), a.rows(), b.column(j).data(), c.column(j).data());
    return c;
}

CMatrix adjoint_multiply(const CMatrix &a, const CMatrix &b) {
    if (a.rows() != b.rows())
        throw std::invalid_argument("adjoint_multiply: row counts differ");
    CMatrix c(a.cols(), b.cols());
    if (a.rows() == 0)
        return c;
    const auto &k = simd::active();
    for (std::size_t j = 0; j < b.cols(); ++j)
        k.gemv_c(a.rows(), a.cols(), a.data(), a.rows(), b.column(j).data(), c.column(j).data());
    return c;
}

CMatrix multiply_adjoint(const CMatrix &a, const CMatrix &b) { return multiply(a, adjoint(b)); }

CMatrix adjoint(const CMatrix &a) {
    CMatrix t(a.cols(), a.rows());
    for (std::size_t j = 0; j < a.cols(); ++j)
        for (std::size_t i = 0; i < a.rows(); ++i)
            t(j, i) = std::conj(a(i, j));
    return t;
}

CMatrix transpose(const CMatrix &a) {
    CMatrix t(a.cols(), a.rows());
    for (std::size_t j = 0; j < a.cols(); ++j)
        for (std::size_t i = 0; i < a.rows(); ++i)
            t(j, i) = a(i, j);
    return t;
}

CMatrix submatrix(const CMatrix &a, std::span<const std::size_t> rows, std::span<const std::size_t> cols) {
    CMatrix s(rows.size(), cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) {
        if (cols[j] >= a.cols())
            throw std::out_of_range("submatrix: column index out of range");
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i] >= a.rows())
                throw std::out_of_range("submatrix: row index out of range");
            s(i, j) = a(rows[i], cols[j]);
        }
    }
    return s;
}

CMatrix leading_columns(const CMatrix &a, std::size_t k) {
    if (k > a.cols())
        throw std::invalid_argument("leading_columns: k exceeds column count");
    CMatrix s(a.rows(), k);
    std::copy_n(a.data(), a.rows() * k, s.data());
    return s;
}

CMatrix row_range(const CMatrix &a, std::size_t first, std::size_t count) {
    if (first + count > a.rows())
        throw std::invalid_argument("row_range: range exceeds row count");
    CMatrix s(count, a.cols());
    for (std::size_t j = 0; j < a.cols(); ++j)
        std::copy_n(a.column(j).data() + first, count, s.column(j).data());
    return s;
}

CMatrix vertical_concat(std::span<const CMatrix> blocks) {
    if (blocks.empty())
        return {};
    const std::size_t cols = blocks.front().cols();
    std::size_t rows = 0;
    for (const auto &b : blocks) {
        if (b.cols() != cols)
            throw std::invalid_argument("vertical_concat: column counts differ");
        rows += b.rows();
    }
    CMatrix out(rows, cols);
    std::size_t offset = 0;
    for (const auto &b : blocks) {
        for (std::size_t j = 0; j < cols; ++j)
            std::copy_n(b.column(j).data(), b.rows(), out.column(j).data() + offset);
        offset += b.rows();
    }
    return out;
}

CMatrix operator-(const CMatrix &a, const CMatrix &b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("operator-: shape mismatch");
    CMatrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i)
        c.data()[i] -= b.data()[i];
    return c;
}

CMatrix operator+(const CMatrix &a, const CMatrix &b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("operator+: shape mismatch");
    CMatrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i)
        c.data()[i] += b.data()[i];
    return c;
}

CMatrix operator*(cplx alpha, const CMatrix &a) {
    CMatrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i)
        c.data()[i] *= alpha;
    return c;
}

double frobenius_norm(const CMatrix &a) { return norm2(a.values()); }

double norm2(std::span<const cplx> x) {
    double scale = 0.0, ssq = 1.0;
    for (const auto &z : x) {
        for (double v : {z.real(), z.imag()}) {
            if (v == 0.0)
                continue;
            const double av = std::abs(v);
            if (scale < av) {
                ssq = 1.0 + ssq * (scale / av) * (scale / av);
                scale = av;
            } else {
                ssq += (av / scale) * (av / scale);
            }
        }
    }
    return scale * std::sqrt(ssq);
}

cplx dotc(std::span<const cplx> x, std::span<const cplx> y) {
    if (x.size() != y.size())
        throw std::invalid_argument("dotc: length mismatch");
    return simd::active().dotc(x.size(), x.data(), y.data());
}

double spectral_norm(const CMatrix &a) {
    if (a.empty())
        return 0.0;
    return left_svd(a).singular.front();
}

// --- CMX1 ----------------------------------------------------------------

namespace {

static_assert(std::endian::native == std::endian::little, "CMX1 I/O assumes a little-endian host");

void put_u64(std::ostream &out, std::uint64_t v) { out.write(reinterpret_cast<const char *>(&v), sizeof v); }

std::uint64_t get_u64(std::istream &in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char *>(&v), sizeof v);
    if (!in)
        throw std::runtime_error("CMX1: truncated header");
    return v;
}

} // namespace

void write_cmx(std::ostream &out, const CMatrix &a) {
    out.write("CMX1", 4);
    put_u64(out, a.rows());
    put_u64(out, a.cols());
    out.write(reinterpret_cast<const char *>(a.data()), static_cast<std::streamsize>(a.size() * sizeof(cplx)));
    if (!out)
        throw std::runtime_error("CMX1: write failed");
}

CMatrix read_cmx(std::istream &in) {
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "CMX1", 4) != 0)
        throw std::runtime_error("CMX1: bad magic");
    const auto rows = get_u64(in);
    const auto cols = get_u64(in);
    if (cols != 0 && rows > (std::uint64_t{1} << 40) / cols)
        throw std::runtime_error("CMX1: implausible dimensions");
    CMatrix a(rows, cols);
    in.read(reinterpret_cast<char *>(a.data()), static_cast<std::streamsize>(a.size() * sizeof(cplx)));
    if (!in)
        throw std::runtime_error("CMX1: truncated payload");
    return a;
}

void write_cmx_file(const std::string &path, const CMatrix &a) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open " + path + " for writing");
    write_cmx(out, a);
}

CMatrix read_cmx_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    return read_cmx(in);
}

} // namespace dh2
