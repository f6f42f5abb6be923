#pragma once
// Oracles and fixtures shared by the unit tests.

#include "dh2/compression.hpp"
#include "dh2/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace testing {

using namespace dh2;

inline CMatrix random_matrix(std::size_t m, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    CMatrix a(m, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < m; ++i)
            a(i, j) = {g(rng), g(rng)};
    return a;
}

// Naive triple loop, independent of the dispatched kernels.
inline CMatrix naive_multiply(const CMatrix &a, const CMatrix &b) {
    CMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            cplx s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k)
                s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    return c;
}

inline CMatrix naive_adjoint(const CMatrix &a) {
    CMatrix c(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            c(j, i) = std::conj(a(i, j));
    return c;
}

inline CVector naive_apply(const CMatrix &a, const CVector &x) {
    CVector y(a.rows());
    for (std::size_t j = 0; j < a.cols(); ++j)
        for (std::size_t i = 0; i < a.rows(); ++i)
            y[i] += a(i, j) * x[j];
    return y;
}

inline double max_abs(const CMatrix &a) {
    double m = 0.0;
    for (const auto &v : a.values())
        m = std::max(m, std::abs(v));
    return m;
}

inline double vec_diff(const CVector &a, const CVector &b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += std::norm(a[i] - b[i]);
    return std::sqrt(s);
}

inline double vec_norm(const CVector &a) {
    double s = 0.0;
    for (const auto &v : a)
        s += std::norm(v);
    return std::sqrt(s);
}

// Eigenvalues of a real symmetric matrix (row-major n x n) by cyclic Jacobi.
inline std::vector<double> jacobi_eigenvalues(std::vector<double> a, std::size_t n) {
    auto at = [&](std::size_t i, std::size_t j) -> double & { return a[i * n + j]; };
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                off += at(i, j) * at(i, j);
        if (off < 1e-30)
            break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(at(p, q)) < 1e-300)
                    continue;
                const double theta = (at(q, q) - at(p, p)) / (2.0 * at(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = at(k, p), akq = at(k, q);
                    at(k, p) = c * akp - s * akq;
                    at(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = at(p, k), aqk = at(q, k);
                    at(p, k) = c * apk - s * aqk;
                    at(q, k) = s * apk + c * aqk;
                }
            }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i)
        ev[i] = at(i, i);
    std::sort(ev.rbegin(), ev.rend());
    return ev;
}

// Singular values of A from the eigenvalues of A^H A, via the real
// symmetric embedding [[Re, -Im], [Im, Re]] (every eigenvalue doubled).
inline std::vector<double> oracle_singular_values(const CMatrix &a) {
    const CMatrix h = naive_multiply(naive_adjoint(a), a);
    const std::size_t n = h.rows();
    std::vector<double> e(4 * n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double re = h(i, j).real(), im = h(i, j).imag();
            e[i * 2 * n + j] = re;
            e[i * 2 * n + j + n] = -im;
            e[(i + n) * 2 * n + j] = im;
            e[(i + n) * 2 * n + j + n] = re;
        }
    const auto ev = jacobi_eigenvalues(e, 2 * n);
    std::vector<double> s;
    for (std::size_t i = 0; i < 2 * n; i += 2)
        s.push_back(std::sqrt(std::max(ev[i], 0.0)));
    return s;
}

inline double orthogonality_defect(const CMatrix &q) {
    const CMatrix g = naive_multiply(naive_adjoint(q), q);
    double m = 0.0;
    for (std::size_t j = 0; j < g.cols(); ++j)
        for (std::size_t i = 0; i < g.rows(); ++i)
            m = std::max(m, std::abs(g(i, j) - (i == j ? 1.0 : 0.0)));
    return m;
}

// Geometry, trees and block tree for one sphere problem.
inline Problem make_problem(int level, double kappa, bool standard = false, double eta2 = 5.0,
                            std::size_t leaf_size = 16) {
    ExperimentParams p;
    p.level = level;
    p.kappa = kappa;
    p.eta2 = eta2;
    p.leaf_size = leaf_size;
    p.standard_admissibility = standard;
    return build_problem(p);
}

// DH2 matrix on the problem's trees with random bases, couplings and
// nearfield blocks (ranks 1..3).
inline DH2Matrix random_dh2(const Problem &pb, std::uint64_t seed) {
    DH2Matrix a(pb.tree, pb.dirs, pb.blocks);
    const BasisDirections bd = basis_directions(*pb.tree, *pb.dirs, *pb.blocks);
    std::mt19937_64 rng(seed);
    auto fill = [&](DirectionalClusterBasis &basis, const std::vector<std::vector<std::size_t>> &used) {
        for (const auto &c : pb.tree->clusters())
            for (auto d : used[c.id]) {
                BasisEntry e;
                e.direction = d;
                e.rank = 1 + rng() % 3;
                basis.entries(c.id).push_back(std::move(e));
            }
        basis.link(*pb.tree, *pb.dirs);
        for (const auto &c : pb.tree->clusters())
            for (auto &e : basis.entries(c.id)) {
                if (c.is_leaf()) {
                    e.leaf = random_matrix(c.size(), e.rank, rng());
                    continue;
                }
                for (std::size_t i = 0; i < c.sons.size(); ++i)
                    e.transfer.push_back(
                        random_matrix(basis.entries(c.sons[i])[e.son_slots[i]].rank, e.rank, rng()));
            }
    };
    fill(a.row_basis, bd.rows);
    fill(a.col_basis, bd.cols);
    const auto &adm = pb.blocks->admissible_leaves();
    for (std::size_t k = 0; k < adm.size(); ++k) {
        const Block &b = (*pb.blocks)[adm[k]];
        a.coupling[k] = random_matrix(a.row_basis.rank(b.row, *b.direction), a.col_basis.rank(b.col, *b.direction), rng());
    }
    const auto &inadm = pb.blocks->inadmissible_leaves();
    for (std::size_t k = 0; k < inadm.size(); ++k) {
        const Block &b = (*pb.blocks)[inadm[k]];
        a.nearfield[k] = random_matrix((*pb.tree)[b.row].size(), (*pb.tree)[b.col].size(), rng());
    }
    a.validate();
    return a;
}

// Basis of (t, dir) written out by the test's own recursion over the
// transfer matrices, rows in t's index order.
inline CMatrix oracle_basis(const DirectionalClusterBasis &basis, const ClusterTree &tree, std::size_t t,
                            std::size_t dir) {
    const Cluster &c = tree[t];
    const BasisEntry &e = basis.entries(t)[basis.slot(t, dir)];
    if (c.is_leaf())
        return e.leaf;
    CMatrix out(c.size(), e.rank);
    for (std::size_t i = 0; i < c.sons.size(); ++i) {
        const Cluster &s = tree[c.sons[i]];
        const BasisEntry &se = basis.entries(s.id)[e.son_slots[i]];
        const CMatrix vs = naive_multiply(oracle_basis(basis, tree, s.id, se.direction), e.transfer[i]);
        for (std::size_t r = 0; r < s.size(); ++r) {
            const std::size_t row =
                std::lower_bound(c.indices.begin(), c.indices.end(), s.indices[r]) - c.indices.begin();
            for (std::size_t j = 0; j < e.rank; ++j)
                out(row, j) = vs(r, j);
        }
    }
    return out;
}

// Dense matrix of a DH2 matrix assembled block by block: V S W^H and nearfield.
inline CMatrix oracle_dense(const DH2Matrix &a) {
    const ClusterTree &tree = a.tree();
    const BlockTree &bt = a.blocks();
    CMatrix out(a.dim(), a.dim());
    auto put = [&](const Block &b, const CMatrix &m) {
        const Cluster &t = tree[b.row], &s = tree[b.col];
        for (std::size_t j = 0; j < s.size(); ++j)
            for (std::size_t i = 0; i < t.size(); ++i)
                out(t.indices[i], s.indices[j]) = m(i, j);
    };
    const auto &adm = bt.admissible_leaves();
    for (std::size_t k = 0; k < adm.size(); ++k) {
        const Block &b = bt[adm[k]];
        const CMatrix v = oracle_basis(a.row_basis, tree, b.row, *b.direction);
        const CMatrix w = oracle_basis(a.col_basis, tree, b.col, *b.direction);
        put(b, naive_multiply(naive_multiply(v, a.coupling[k]), naive_adjoint(w)));
    }
    const auto &inadm = bt.inadmissible_leaves();
    for (std::size_t k = 0; k < inadm.size(); ++k)
        put(bt[inadm[k]], a.nearfield[k]);
    return out;
}

// Basis error bound audit: for every built (t, c) of a row or column basis, the weighted
// far-field matrix G_tc in t's frame against the realized truncation errors
// of all descendants, each carried into t's frame by zeta^(level r - level t).
struct BoundAudit {
    std::size_t checked = 0;
    std::size_t violations = 0;
    double worst_ratio = 0.0; // max lhs / rhs
};

inline double descendant_error_sq(const BasisConstruction &bc, const ClusterTree &tree, const DirectionHierarchy &dirs,
                                  std::size_t r, std::size_t dir, double scale, double ratio) {
    const std::size_t slot = bc.basis.slot(r, dir);
    const double e = scale * bc.truncation_error[r][slot];
    double sum = e * e;
    for (std::size_t s : tree[r].sons)
        sum += descendant_error_sq(bc, tree, dirs, s, dirs.son(tree[r].level, dir), scale * ratio, ratio);
    return sum;
}

inline BoundAudit basis_bound_audit(const MatrixSource &matrix, const Problem &pb, const CompressionConfig &cfg,
                                  BasisSide side = BasisSide::row) {
    const ClusterTree &tree = *pb.tree;
    const std::vector<double> norms =
        cfg.weighting == Weighting::block_relative ? block_norms(matrix, tree, *pb.blocks) : std::vector<double>{};
    const AdjointSource adj(matrix);
    const MatrixSource &source = side == BasisSide::row ? matrix : static_cast<const MatrixSource &>(adj);
    const BasisConstruction bc = build_basis(source, tree, *pb.dirs, *pb.blocks, side, cfg, norms, false);
    const FarfieldWeights weights(tree, cfg, norms);
    BoundAudit audit;
    for (const auto &c : tree.clusters())
        for (const auto &set : bc.farfield.sets[c.id]) {
            const CMatrix g = weighted_farfield_matrix(source, tree, set, c.level, c.id, weights);
            const CMatrix q = expand_basis(bc.basis, tree, c.id, set.direction);
            const double lhs = spectral_norm(g - naive_multiply(q, adjoint_multiply(q, g)));
            const double rhs =
                std::sqrt(descendant_error_sq(bc, tree, *pb.dirs, c.id, set.direction, 1.0, weights.son_ratio()));
            ++audit.checked;
            // roundoff allowance relative to the matrix scale
            if (lhs > rhs + 1e-12 * spectral_norm(g))
                ++audit.violations;
            if (rhs > 0.0)
                audit.worst_ratio = std::max(audit.worst_ratio, lhs / rhs);
        }
    return audit;
}

// Frobenius split of the parent error into son errors plus the error of
// the stacked son coefficients, on every non-leaf (t, c).
struct SplitAudit {
    std::size_t checked = 0;
    std::size_t two_son = 0;
    double worst = 0.0; // max relative deviation
};

inline double frobenius_sq(const CMatrix &a) {
    const double f = frobenius_norm(a);
    return f * f;
}

inline SplitAudit pythagoras_audit(const MatrixSource &matrix, const Problem &pb, const CompressionConfig &cfg,
                                   BasisSide side = BasisSide::row) {
    const ClusterTree &tree = *pb.tree;
    const std::vector<double> norms =
        cfg.weighting == Weighting::block_relative ? block_norms(matrix, tree, *pb.blocks) : std::vector<double>{};
    const AdjointSource adj(matrix);
    const MatrixSource &source = side == BasisSide::row ? matrix : static_cast<const MatrixSource &>(adj);
    const BasisConstruction bc = build_basis(source, tree, *pb.dirs, *pb.blocks, side, cfg, norms, true);
    const FarfieldWeights weights(tree, cfg, norms);
    SplitAudit audit;
    for (const auto &c : tree.clusters()) {
        if (c.is_leaf())
            continue;
        for (std::size_t slot = 0; slot < bc.farfield.sets[c.id].size(); ++slot) {
            const FarfieldSet &set = bc.farfield.sets[c.id][slot];
            const BasisEntry &e = bc.basis.entries(c.id)[slot];
            const CMatrix g = weighted_farfield_matrix(source, tree, set, c.level, c.id, weights);
            const CMatrix q = expand_basis(bc.basis, tree, c.id, set.direction);
            const double lhs = frobenius_sq(g - naive_multiply(q, adjoint_multiply(q, g)));

            double rhs = 0.0;
            std::vector<CMatrix> coeffs;
            for (std::size_t i = 0; i < c.sons.size(); ++i) {
                const Cluster &s = tree[c.sons[i]];
                IndexList rows;
                for (auto idx : s.indices)
                    rows.push_back(std::lower_bound(c.indices.begin(), c.indices.end(), idx) - c.indices.begin());
                IndexList all(g.cols());
                for (std::size_t j = 0; j < all.size(); ++j)
                    all[j] = j;
                const CMatrix gi = submatrix(g, rows, all);
                const CMatrix qi = expand_basis(bc.basis, tree, s.id, bc.basis.entries(s.id)[e.son_slots[i]].direction);
                rhs += frobenius_sq(gi - naive_multiply(qi, adjoint_multiply(qi, gi)));
                coeffs.push_back(adjoint_multiply(qi, gi));
            }
            const CMatrix ghat = vertical_concat(coeffs);
            const CMatrix qhat = vertical_concat(e.transfer);
            rhs += frobenius_sq(ghat - naive_multiply(qhat, adjoint_multiply(qhat, ghat)));

            ++audit.checked;
            if (c.sons.size() == 2)
                ++audit.two_son;
            const double scale = std::max(lhs, frobenius_sq(g) * 1e-20);
            audit.worst = std::max(audit.worst, std::abs(lhs - rhs) / scale);
        }
    }
    return audit;
}

} // namespace testing
