#include "dh2/assembly.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dh2 {

std::vector<double> chebyshev_nodes(int order) {
    if (order < 1)
        throw std::invalid_argument("chebyshev_nodes: order must be at least 1");
    std::vector<double> x(static_cast<std::size_t>(order));
    for (int i = 0; i < order; ++i)
        x[static_cast<std::size_t>(i)] = std::cos(std::numbers::pi * (2.0 * i + 1.0) / (2.0 * order));
    return x;
}

namespace {

struct AxisMap {
    double center;
    double half;
};

std::array<AxisMap, 3> axis_maps(const Box &box) {
    std::array<AxisMap, 3> a;
    for (std::size_t d = 0; d < 3; ++d) {
        const double half = 0.5 * (box.hi[d] - box.lo[d]);
        // a flat box still needs distinct nodes
        a[d] = {0.5 * (box.hi[d] + box.lo[d]), half > 0.0 ? half : 1.0};
    }
    return a;
}

// 1D Lagrange polynomials on the reference nodes, evaluated at t.
void lagrange_1d(const std::vector<double> &nodes, double t, std::vector<double> &out) {
    const std::size_t m = nodes.size();
    out.assign(m, 1.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            if (j != i)
                out[i] *= (t - nodes[j]) / (nodes[i] - nodes[j]);
}

cplx plane_wave(double kappa, Vec3 x, Vec3 c) {
    const double phase = kappa * dot(x, c);
    return {std::cos(phase), std::sin(phase)};
}

} // namespace

std::vector<Vec3> tensor_chebyshev_points(const Box &box, int order) {
    const auto nodes = chebyshev_nodes(order);
    const auto ax = axis_maps(box);
    const auto m = static_cast<std::size_t>(order);
    std::vector<Vec3> pts;
    pts.reserve(m * m * m);
    for (std::size_t k = 0; k < m; ++k)
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t i = 0; i < m; ++i)
                pts.push_back({ax[0].center + ax[0].half * nodes[i], ax[1].center + ax[1].half * nodes[j],
                               ax[2].center + ax[2].half * nodes[k]});
    return pts;
}

CMatrix lagrange_matrix(const Box &box, int order, std::span<const Vec3> points) {
    const auto nodes = chebyshev_nodes(order);
    const auto ax = axis_maps(box);
    const auto m = static_cast<std::size_t>(order);
    CMatrix l(points.size(), m * m * m);
    std::array<std::vector<double>, 3> w;
    for (std::size_t p = 0; p < points.size(); ++p) {
        for (std::size_t d = 0; d < 3; ++d)
            lagrange_1d(nodes, (points[p][d] - ax[d].center) / ax[d].half, w[d]);
        std::size_t nu = 0;
        for (std::size_t k = 0; k < m; ++k)
            for (std::size_t j = 0; j < m; ++j)
                for (std::size_t i = 0; i < m; ++i)
                    l(p, nu++) = w[0][i] * w[1][j] * w[2][k];
    }
    return l;
}

CMatrix assemble_block(const SurfaceMesh &mesh, const KernelSpec &spec, std::span<const std::size_t> rows,
                       std::span<const std::size_t> cols) {
    CMatrix b(rows.size(), cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j)
        for (std::size_t i = 0; i < rows.size(); ++i)
            b(i, j) = galerkin_entry(mesh, spec, rows[i], cols[j]);
    return b;
}

namespace {

DirectionalClusterBasis interpolation_basis(const SurfaceMesh &mesh, double kappa, const ClusterTree &tree,
                                            const DirectionHierarchy &dirs,
                                            const std::vector<std::vector<std::size_t>> &used, int order) {
    const std::size_t k = static_cast<std::size_t>(order * order * order);
    DirectionalClusterBasis basis(tree.size());
    for (const auto &c : tree.clusters()) {
        if (used[c.id].empty())
            continue;
        if (c.is_leaf()) {
            std::vector<Vec3> mids;
            for (std::size_t i : c.indices)
                mids.push_back(mesh.midpoints[i]);
            const CMatrix l = lagrange_matrix(c.box, order, mids);
            for (std::size_t d : used[c.id]) {
                const Vec3 dir = dirs.direction(c.level, d);
                BasisEntry e{d, k, CMatrix(c.size(), k), {}, {}};
                for (std::size_t i = 0; i < c.size(); ++i) {
                    const cplx f = plane_wave(kappa, mids[i], dir) * mesh.areas[c.indices[i]];
                    for (std::size_t nu = 0; nu < k; ++nu)
                        e.leaf(i, nu) = f * l(i, nu);
                }
                basis.entries(c.id).push_back(std::move(e));
            }
            continue;
        }
        std::vector<std::vector<Vec3>> son_points;
        std::vector<CMatrix> son_lagrange;
        for (std::size_t s : c.sons) {
            son_points.push_back(tensor_chebyshev_points(tree[s].box, order));
            son_lagrange.push_back(lagrange_matrix(c.box, order, son_points.back()));
        }
        for (std::size_t d : used[c.id]) {
            const Vec3 dir = dirs.direction(c.level, d);
            const Vec3 son_dir = dirs.direction(c.level + 1, dirs.son(c.level, d));
            BasisEntry e{d, k, {}, {}, {}};
            for (std::size_t si = 0; si < c.sons.size(); ++si) {
                CMatrix t(k, k);
                for (std::size_t p = 0; p < k; ++p) {
                    const cplx f = plane_wave(kappa, son_points[si][p], dir - son_dir);
                    for (std::size_t nu = 0; nu < k; ++nu)
                        t(p, nu) = f * son_lagrange[si](p, nu);
                }
                e.transfer.push_back(std::move(t));
            }
            basis.entries(c.id).push_back(std::move(e));
        }
    }
    basis.link(tree, dirs);
    return basis;
}

} // namespace

DH2Matrix assemble_dh2_by_interpolation(const SurfaceMesh &mesh, const KernelSpec &spec,
                                        std::shared_ptr<const ClusterTree> tree,
                                        std::shared_ptr<const DirectionHierarchy> dirs,
                                        std::shared_ptr<const BlockTree> blocks, int order) {
    if (spec.kind != KernelKind::slp)
        throw std::invalid_argument("assemble_dh2_by_interpolation: only the single layer kernel is supported");
    if (order < 1)
        throw std::invalid_argument("assemble_dh2_by_interpolation: order must be at least 1");
    if (tree->index_count() != mesh.size())
        throw std::invalid_argument("assemble_dh2_by_interpolation: cluster tree does not match the mesh");

    DH2Matrix a(tree, dirs, blocks);
    const BasisDirections used = basis_directions(*tree, *dirs, *blocks);
    a.row_basis = interpolation_basis(mesh, spec.wave_number, *tree, *dirs, used.rows, order);
    a.col_basis = interpolation_basis(mesh, spec.wave_number, *tree, *dirs, used.cols, order);

    const auto &adm = blocks->admissible_leaves();
    for (std::size_t b = 0; b < adm.size(); ++b) {
        const Block &blk = (*blocks)[adm[b]];
        const Cluster &t = (*tree)[blk.row];
        const Cluster &s = (*tree)[blk.col];
        const Vec3 dir = dirs->direction(t.level, *blk.direction);
        const auto xt = tensor_chebyshev_points(t.box, order);
        const auto xs = tensor_chebyshev_points(s.box, order);
        CMatrix m(xt.size(), xs.size());
        for (std::size_t mu = 0; mu < xs.size(); ++mu)
            for (std::size_t nu = 0; nu < xt.size(); ++nu)
                m(nu, mu) = directional_kernel_value(spec, dir, xt[nu], xs[mu]);
        a.coupling[b] = std::move(m);
    }
    const auto &inadm = blocks->inadmissible_leaves();
    for (std::size_t b = 0; b < inadm.size(); ++b) {
        const Block &blk = (*blocks)[inadm[b]];
        a.nearfield[b] = assemble_block(mesh, spec, (*tree)[blk.row].indices, (*tree)[blk.col].indices);
    }
    a.validate();
    return a;
}

} // namespace dh2
