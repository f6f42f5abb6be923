#include "dh2/geometry.hpp"

#include <algorithm>
#include <map>
#include <numbers>
#include <ostream>

namespace dh2 {

namespace {

constexpr double inv_four_pi = 0.25 / std::numbers::pi;

class Refiner {
  public:
    explicit Refiner(std::vector<Vec3> &vertices) : vertices_(vertices) {}

    void refine(std::array<std::size_t, 3> tri, int depth, std::vector<std::array<std::size_t, 3>> &out) {
        if (depth == 0) {
            out.push_back(tri);
            return;
        }
        const std::size_t m01 = midpoint(tri[0], tri[1]);
        const std::size_t m12 = midpoint(tri[1], tri[2]);
        const std::size_t m20 = midpoint(tri[2], tri[0]);
        refine({tri[0], m01, m20}, depth - 1, out);
        refine({m01, tri[1], m12}, depth - 1, out);
        refine({m20, m12, tri[2]}, depth - 1, out);
        refine({m01, m12, m20}, depth - 1, out);
    }

  private:
    std::size_t midpoint(std::size_t a, std::size_t b) {
        const auto key = std::minmax(a, b);
        auto it = edges_.find(key);
        if (it != edges_.end())
            return it->second;
        vertices_.push_back(0.5 * (vertices_[a] + vertices_[b]));
        const std::size_t idx = vertices_.size() - 1;
        edges_.emplace(key, idx);
        return idx;
    }

    std::vector<Vec3> &vertices_;
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> edges_;
};

} // namespace

double SurfaceMesh::circumradius(std::size_t t) const {
    const auto &tri = triangles[t];
    const double a = norm(vertices[tri[1]] - vertices[tri[2]]);
    const double b = norm(vertices[tri[2]] - vertices[tri[0]]);
    const double c = norm(vertices[tri[0]] - vertices[tri[1]]);
    return a * b * c / (4.0 * areas[t]);
}

double SurfaceMesh::max_edge_length() const {
    double h = 0.0;
    for (const auto &tri : triangles)
        for (int e = 0; e < 3; ++e)
            h = std::max(h, norm(vertices[tri[e]] - vertices[tri[(e + 1) % 3]]));
    return h;
}

SurfaceMesh build_sphere_mesh(int level) {
    if (level < 0 || level > max_mesh_level)
        throw std::invalid_argument("build_sphere_mesh: level must lie in [0, 8]");

    SurfaceMesh mesh;
    mesh.vertices = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};

    Refiner refiner(mesh.vertices);
    for (int sz : {1, -1})
        for (int sy : {1, -1})
            for (int sx : {1, -1}) {
                const std::size_t vx = sx > 0 ? 0 : 1;
                const std::size_t vy = sy > 0 ? 2 : 3;
                const std::size_t vz = sz > 0 ? 4 : 5;
                // Counter-clockwise seen from outside when the sign product is positive.
                std::array<std::size_t, 3> face = sx * sy * sz > 0 ? std::array{vx, vy, vz} : std::array{vx, vz, vy};
                refiner.refine(face, level, mesh.triangles);
            }

    for (auto &v : mesh.vertices)
        v = (1.0 / norm(v)) * v;

    const std::size_t n = mesh.triangles.size();
    mesh.midpoints.resize(n);
    mesh.areas.resize(n);
    mesh.normals.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        const auto &tri = mesh.triangles[t];
        const Vec3 a = mesh.vertices[tri[0]], b = mesh.vertices[tri[1]], c = mesh.vertices[tri[2]];
        mesh.midpoints[t] = (1.0 / 3.0) * (a + b + c);
        Vec3 nrm = cross(b - a, c - a);
        const double len = norm(nrm);
        mesh.areas[t] = 0.5 * len;
        nrm = (1.0 / len) * nrm;
        if (dot(nrm, mesh.midpoints[t]) < 0.0)
            nrm = -1.0 * nrm;
        mesh.normals[t] = nrm;
    }
    return mesh;
}

void write_off(std::ostream &out, const SurfaceMesh &mesh) {
    out.precision(17);
    out << "OFF\n" << mesh.vertices.size() << ' ' << mesh.triangles.size() << " 0\n";
    for (const auto &v : mesh.vertices)
        out << v.x << ' ' << v.y << ' ' << v.z << '\n';
    for (const auto &t : mesh.triangles)
        out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

cplx kernel_value(const KernelSpec &spec, Vec3 x, Vec3 y, Vec3 normal_y) {
    const Vec3 d = x - y;
    const double r = norm(d);
    if (r == 0.0)
        throw SingularPointError("kernel_value: x == y");
    const double k = spec.wave_number;
    const cplx phase = std::polar(1.0, k * r);
    if (spec.kind == KernelKind::slp)
        return phase * (inv_four_pi / r);
    return cplx(1.0, -k * r) * phase * (inv_four_pi / (r * r * r) * dot(d, normal_y));
}

cplx directional_kernel_value(const KernelSpec &spec, Vec3 c, Vec3 x, Vec3 y, Vec3 normal_y) {
    const Vec3 d = x - y;
    const double r = norm(d);
    if (r == 0.0)
        throw SingularPointError("directional_kernel_value: x == y");
    const double k = spec.wave_number;
    const cplx phase = std::polar(1.0, k * (r - dot(d, c)));
    if (spec.kind == KernelKind::slp)
        return phase * (inv_four_pi / r);
    return cplx(1.0, -k * r) * phase * (inv_four_pi / (r * r * r) * dot(d, normal_y));
}

cplx galerkin_entry(const SurfaceMesh &mesh, const KernelSpec &spec, std::size_t i, std::size_t j) {
    const double ai = mesh.areas[i];
    if (i == j) {
        if (spec.kind == KernelKind::slp)
            return ai * std::sqrt(ai) / (2.0 * std::sqrt(std::numbers::pi));
        return 0.5 * ai;
    }
    return kernel_value(spec, mesh.midpoints[i], mesh.midpoints[j], mesh.normals[j]) * (ai * mesh.areas[j]);
}

CMatrix assemble_dense_matrix(const SurfaceMesh &mesh, const KernelSpec &spec) {
    const std::size_t n = mesh.size();
    CMatrix g(n, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i)
            g(i, j) = galerkin_entry(mesh, spec, i, j);
    return g;
}

} // namespace dh2
