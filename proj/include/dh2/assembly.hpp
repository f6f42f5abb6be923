#pragma once
//
// Direct construction of a DH2 matrix by directional tensor Chebyshev
// interpolation of the kernel. Row and column bases share one recipe:
//   leaf      v_{tc,i nu}       = exp(i k <m_i, c>) l_{t,nu}(m_i) a_i
//   transfer  e_{t'c,nu' nu}    = exp(i k <xi_{t',nu'}, c - c'>) l_{t,nu}(xi_{t',nu'})
//   coupling  s_{b,nu mu}       = g_c(xi_{t,nu}, xi_{s,mu})
// so that G|b ~ V_tc S_b W_sc^H.
//

#include "dh2/dh2matrix.hpp"
#include "dh2/geometry.hpp"

#include <memory>
#include <span>
#include <vector>

namespace dh2 {

// cos(pi (2i+1) / (2m)), i = 0..m-1, on [-1, 1].
std::vector<double> chebyshev_nodes(int order);

// order^3 points inside `box`, index nu = i + m (j + m k) (x fastest).
std::vector<Vec3> tensor_chebyshev_points(const Box &box, int order);

// Matrix L with L(p, nu) = l_{box,nu}(points[p]).
CMatrix lagrange_matrix(const Box &box, int order, std::span<const Vec3> points);

// Dense sub-block of the Galerkin matrix.
CMatrix assemble_block(const SurfaceMesh &mesh, const KernelSpec &spec, std::span<const std::size_t> rows,
                       std::span<const std::size_t> cols);

// Single layer kernel only; the double layer operator carries a normal
// derivative that this scheme does not interpolate.
DH2Matrix assemble_dh2_by_interpolation(const SurfaceMesh &mesh, const KernelSpec &spec,
                                        std::shared_ptr<const ClusterTree> tree,
                                        std::shared_ptr<const DirectionHierarchy> dirs,
                                        std::shared_ptr<const BlockTree> blocks, int order);

} // namespace dh2
