#pragma once
//
// Unit-sphere surface mesh, Helmholtz kernels and the dense Galerkin
// surrogate matrix (piecewise constant basis, one-point midpoint rule).
//

#include "dh2/linalg.hpp"

#include <array>
#include <cmath>
#include <iosfwd>
#include <stdexcept>
#include <vector>

namespace dh2 {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    double operator[](std::size_t d) const { return d == 0 ? x : (d == 1 ? y : z); }
    double &operator[](std::size_t d) { return d == 0 ? x : (d == 1 ? y : z); }

    friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
    friend bool operator==(const Vec3 &, const Vec3 &) = default;
};

inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
inline Vec3 cross(Vec3 a, Vec3 b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

struct SurfaceMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<std::size_t, 3>> triangles;
    std::vector<Vec3> midpoints;
    std::vector<double> areas;
    std::vector<Vec3> normals;

    std::size_t size() const { return triangles.size(); }
    double circumradius(std::size_t t) const;
    double max_edge_length() const;
};

constexpr int max_mesh_level = 8;

// Octahedron |x1|+|x2|+|x3| = 1, refined `level` times by 4-way midpoint
// subdivision, vertices projected to the unit sphere.
SurfaceMesh build_sphere_mesh(int level);

void write_off(std::ostream &out, const SurfaceMesh &mesh);

enum class KernelKind { slp, dlp };

struct KernelSpec {
    KernelKind kind = KernelKind::slp;
    double wave_number = 0.0;
};

// Raised for kernel evaluations at the singular point x == y.
class SingularPointError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

// SLP: exp(i k r) / (4 pi r).
// DLP: (1 - i k r) exp(i k r) / (4 pi r^3) <x - y, n(y)>.
cplx kernel_value(const KernelSpec &spec, Vec3 x, Vec3 y, Vec3 normal_y = {});

// g(x, y) exp(-i k <x - y, c>) with the phase combined before exponentiation.
cplx directional_kernel_value(const KernelSpec &spec, Vec3 c, Vec3 x, Vec3 y, Vec3 normal_y = {});

// Entry (i, j) of the surrogate Galerkin matrix.
//   off-diagonal: kernel(m_i, m_j, n_j) a_i a_j
//   SLP diagonal: a_i^{3/2} / (2 sqrt(pi))      (equal-area disk self term)
//   DLP diagonal: a_i / 2                       (flat panel term is zero; plus M/2)
cplx galerkin_entry(const SurfaceMesh &mesh, const KernelSpec &spec, std::size_t i, std::size_t j);

CMatrix assemble_dense_matrix(const SurfaceMesh &mesh, const KernelSpec &spec);

} // namespace dh2
