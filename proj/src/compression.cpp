#include "dh2/compression.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <stdexcept>

namespace dh2 {

CMatrix DenseSource::block(std::span<const std::size_t> rows, std::span<const std::size_t> cols) const {
    return submatrix(m_, rows, cols);
}

CMatrix KernelSource::block(std::span<const std::size_t> rows, std::span<const std::size_t> cols) const {
    return assemble_block(mesh_, spec_, rows, cols);
}

CMatrix AdjointSource::block(std::span<const std::size_t> rows, std::span<const std::size_t> cols) const {
    return adjoint(inner_.block(cols, rows));
}

void CompressionConfig::validate(std::size_t sons) const {
    if (!(eps > 0.0))
        throw std::invalid_argument("CompressionConfig: eps must be positive");
    if (max_rank < 1)
        throw std::invalid_argument("CompressionConfig: max_rank must be at least 1");
    if (!(zeta > 0.0) || !(zeta * zeta * static_cast<double>(std::max<std::size_t>(sons, 1)) < 1.0))
        throw std::invalid_argument("CompressionConfig: zeta=" + std::to_string(zeta) +
                                    " violates 0 < zeta^2 * max_sons < 1 with max_sons=" + std::to_string(sons));
}

std::size_t max_sons(const ClusterTree &tree) {
    std::size_t m = 0;
    for (const auto &c : tree.clusters())
        m = std::max(m, c.sons.size());
    return m;
}

// --- far-field sets ------------------------------------------------------

const FarfieldSet *FarfieldSets::find(std::size_t t, std::size_t direction) const {
    for (const auto &s : sets.at(t))
        if (s.direction == direction)
            return &s;
    return nullptr;
}

FarfieldSets farfield_sets(const ClusterTree &tree, const DirectionHierarchy &dirs, const BlockTree &blocks,
                           BasisSide side) {
    const BasisDirections bd = basis_directions(tree, dirs, blocks);
    const auto &used = side == BasisSide::row ? bd.rows : bd.cols;

    std::vector<std::vector<std::size_t>> own(tree.size());
    const auto &adm = blocks.admissible_leaves();
    for (std::size_t k = 0; k < adm.size(); ++k) {
        const Block &b = blocks[adm[k]];
        own[side == BasisSide::row ? b.row : b.col].push_back(k);
    }

    FarfieldSets out;
    out.sets.resize(tree.size());
    for (const auto &c : tree.clusters()) {
        for (std::size_t d : used[c.id]) {
            FarfieldSet set;
            set.direction = d;
            if (c.id != tree.root_id()) {
                const Cluster &p = tree[c.parent];
                for (const auto &ps : out.sets[p.id])
                    if (dirs.son(p.level, ps.direction) == d)
                        set.entries.insert(set.entries.end(), ps.entries.begin(), ps.entries.end());
            }
            for (std::size_t k : own[c.id]) {
                const Block &b = blocks[adm[k]];
                if (*b.direction == d)
                    set.entries.push_back({k, side == BasisSide::row ? b.col : b.row, c.id});
            }
            for (const auto &e : set.entries) {
                set.offsets.push_back(set.columns.size());
                const auto &idx = tree[e.other].indices;
                set.columns.insert(set.columns.end(), idx.begin(), idx.end());
            }
            out.sets[c.id].push_back(std::move(set));
        }
    }
    return out;
}

// --- weights -------------------------------------------------------------

std::vector<double> block_norms(const MatrixSource &source, const ClusterTree &tree, const BlockTree &blocks) {
    const auto &adm = blocks.admissible_leaves();
    std::vector<double> norms(adm.size());
    for (std::size_t k = 0; k < adm.size(); ++k) {
        const Block &b = blocks[adm[k]];
        const CMatrix g = source.block(tree[b.row].indices, tree[b.col].indices);
        norms[k] = power_iteration_norm([&](const CVector &x) { return dh2::apply(g, x); },
                                        [&](const CVector &x) { return dh2::apply_adjoint(g, x); }, g.cols(), 10, k);
    }
    return norms;
}

FarfieldWeights::FarfieldWeights(const ClusterTree &tree, const CompressionConfig &cfg, std::vector<double> norms)
    : tree_(&tree), mode_(cfg.weighting), zeta_(cfg.zeta), norms_(std::move(norms)), phi_(tree.size(), 1.0) {
    for (std::size_t t = tree.size(); t-- > 0;)
        for (std::size_t s : tree[t].sons)
            phi_[t] += zeta_ * zeta_ * phi_[s];
}

double FarfieldWeights::operator()(int level, const FarfieldEntry &e) const {
    if (mode_ == Weighting::none)
        return 1.0;
    const double w = norms_.at(e.block);
    if (!(w > 0.0))
        return 0.0;
    return std::sqrt(phi_[e.root]) / w * std::pow(zeta_, -(level - (*tree_)[e.root].level));
}

double FarfieldWeights::son_ratio() const { return mode_ == Weighting::none ? 1.0 : zeta_; }

CMatrix weighted_farfield_matrix(const MatrixSource &source, const ClusterTree &tree, const FarfieldSet &set,
                                 int level, std::size_t t, const FarfieldWeights &weights) {
    CMatrix g = source.block(tree[t].indices, set.columns);
    for (std::size_t e = 0; e < set.entries.size(); ++e) {
        const double w = weights(level, set.entries[e]);
        const std::size_t end = e + 1 < set.entries.size() ? set.offsets[e + 1] : set.columns.size();
        for (std::size_t j = set.offsets[e]; j < end; ++j)
            for (auto &v : g.column(j))
                v *= w;
    }
    return g;
}

// --- basis construction --------------------------------------------------

namespace {

// Columns of `set` inside the son's reduced matrix; the inherited entries
// form one contiguous run there.
std::size_t son_column_offset(const FarfieldSet &set, const FarfieldSet &son) {
    const std::size_t first = set.entries.front().block;
    const auto it = std::find_if(son.entries.begin(), son.entries.end(),
                                 [&](const FarfieldEntry &e) { return e.block == first; });
    if (it == son.entries.end())
        throw std::logic_error("build_basis: far-field set not inherited by son");
    const auto pos = static_cast<std::size_t>(it - son.entries.begin());
    for (std::size_t j = 0; j < set.entries.size(); ++j)
        if (pos + j >= son.entries.size() || son.entries[pos + j].block != set.entries[j].block)
            throw std::logic_error("build_basis: inherited far-field entries are not contiguous");
    return son.offsets[pos];
}

CMatrix column_range(const CMatrix &a, std::size_t first, std::size_t count, double scale) {
    CMatrix out(a.rows(), count);
    for (std::size_t j = 0; j < count; ++j) {
        const auto src = a.column(first + j);
        auto dst = out.column(j);
        for (std::size_t i = 0; i < a.rows(); ++i)
            dst[i] = scale * src[i];
    }
    return out;
}

struct Truncation {
    CMatrix q;
    double error = 0.0;
    bool capped = false;
};

Truncation truncate(const CMatrix &g, double tolerance, std::size_t max_rank) {
    Truncation t;
    if (g.rows() == 0 || g.cols() == 0) {
        t.q = CMatrix(g.rows(), 0);
        return t;
    }
    const LeftSVD s = left_svd(g);
    const std::size_t k = truncation_rank(s.singular, tolerance, max_rank);
    t.q = leading_columns(s.left, k);
    t.error = k < s.singular.size() ? s.singular[k] : 0.0;
    t.capped = k == max_rank && t.error > tolerance;
    return t;
}

} // namespace

BasisConstruction build_basis(const MatrixSource &source, const ClusterTree &tree, const DirectionHierarchy &dirs,
                              const BlockTree &blocks, BasisSide side, const CompressionConfig &cfg,
                              const std::vector<double> &norms, bool keep_reduced) {
    cfg.validate(max_sons(tree));
    if (source.rows() != tree.index_count() || source.cols() != tree.index_count())
        throw std::invalid_argument("build_basis: matrix does not match the cluster tree");

    BasisConstruction out;
    out.farfield = farfield_sets(tree, dirs, blocks, side);
    out.basis = DirectionalClusterBasis(tree.size());
    out.truncation_error.resize(tree.size());
    out.reduced.resize(tree.size());
    const FarfieldWeights weights(tree, cfg, norms);
    const double tolerance = cfg.eps / std::sqrt(2.0);

    for (std::size_t t = tree.size(); t-- > 0;) {
        const Cluster &c = tree[t];
        const auto &sets = out.farfield.sets[t];
        for (const auto &set : sets) {
            CMatrix g;
            std::vector<std::size_t> son_slots;
            if (c.is_leaf()) {
                g = weighted_farfield_matrix(source, tree, set, c.level, t, weights);
            } else {
                std::vector<CMatrix> parts;
                const std::size_t son_dir = dirs.son(c.level, set.direction);
                for (std::size_t s : c.sons) {
                    const std::size_t slot = out.basis.slot(s, son_dir);
                    son_slots.push_back(slot);
                    const FarfieldSet &ss = out.farfield.sets[s][slot];
                    parts.push_back(column_range(out.reduced[s][slot], son_column_offset(set, ss),
                                                 set.columns.size(), weights.son_ratio()));
                }
                g = vertical_concat(parts);
            }

            Truncation tr = truncate(g, tolerance, cfg.max_rank);
            if (tr.capped)
                ++out.capped;
            BasisEntry e;
            e.direction = set.direction;
            e.rank = tr.q.cols();
            if (c.is_leaf()) {
                e.leaf = tr.q;
            } else {
                std::size_t row = 0;
                for (std::size_t i = 0; i < c.sons.size(); ++i) {
                    const std::size_t k = out.basis.entries(c.sons[i])[son_slots[i]].rank;
                    e.transfer.push_back(row_range(tr.q, row, k));
                    row += k;
                }
            }
            out.reduced[t].push_back(adjoint_multiply(tr.q, g));
            out.truncation_error[t].push_back(tr.error);
            out.basis.entries(t).push_back(std::move(e));
        }
        if (!keep_reduced)
            for (std::size_t s : c.sons)
                out.reduced[s].clear();
    }
    if (!keep_reduced)
        out.reduced[tree.root_id()].clear();
    out.basis.link(tree, dirs);
    return out;
}

BasisConstruction build_row_basis(const MatrixSource &source, const ClusterTree &tree, const DirectionHierarchy &dirs,
                                  const BlockTree &blocks, const CompressionConfig &cfg, bool keep_reduced) {
    std::vector<double> norms;
    if (cfg.weighting == Weighting::block_relative)
        norms = block_norms(source, tree, blocks);
    return build_basis(source, tree, dirs, blocks, BasisSide::row, cfg, norms, keep_reduced);
}

namespace {

// Memoized explicit basis matrices.
class ExpandedBasis {
  public:
    ExpandedBasis(const DirectionalClusterBasis &basis, const ClusterTree &tree)
        : basis_(basis), tree_(tree), cache_(tree.size()) {}

    const CMatrix &get(std::size_t t, std::size_t slot) {
        const Cluster &c = tree_[t];
        const BasisEntry &e = basis_.entries(t)[slot];
        if (c.is_leaf())
            return e.leaf;
        auto &row = cache_[t];
        if (row.empty())
            row.resize(basis_.entries(t).size());
        if (row[slot])
            return *row[slot];
        CMatrix out(c.size(), e.rank);
        for (std::size_t i = 0; i < c.sons.size(); ++i) {
            const Cluster &son = tree_[c.sons[i]];
            const CMatrix part = multiply(get(son.id, e.son_slots[i]), e.transfer[i]);
            for (std::size_t r = 0; r < son.size(); ++r) {
                const auto pos = static_cast<std::size_t>(
                    std::lower_bound(c.indices.begin(), c.indices.end(), son.indices[r]) - c.indices.begin());
                for (std::size_t j = 0; j < e.rank; ++j)
                    out(pos, j) = part(r, j);
            }
        }
        row[slot] = std::move(out);
        return *row[slot];
    }

  private:
    const DirectionalClusterBasis &basis_;
    const ClusterTree &tree_;
    std::vector<std::vector<std::optional<CMatrix>>> cache_;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

} // namespace

CompressionResult compress(const MatrixSource &source, std::shared_ptr<const ClusterTree> tree,
                           std::shared_ptr<const DirectionHierarchy> dirs, std::shared_ptr<const BlockTree> blocks,
                           const CompressionConfig &cfg) {
    cfg.validate(max_sons(*tree));
    if (source.rows() != tree->index_count() || source.cols() != tree->index_count())
        throw std::invalid_argument("compress: matrix is " + std::to_string(source.rows()) + "x" +
                                    std::to_string(source.cols()) + " but the cluster tree has " +
                                    std::to_string(tree->index_count()) + " indices");
    using clock = std::chrono::steady_clock;
    CompressionResult res{DH2Matrix(tree, dirs, blocks), {}, {}};
    DH2Matrix &a = res.matrix;

    auto start = clock::now();
    std::vector<double> norms;
    if (cfg.weighting == Weighting::block_relative)
        norms = block_norms(source, *tree, *blocks);
    BasisConstruction rows = build_basis(source, *tree, *dirs, *blocks, BasisSide::row, cfg, norms);
    res.timings.row_basis = seconds_since(start);

    start = clock::now();
    const AdjointSource adj(source);
    BasisConstruction cols = build_basis(adj, *tree, *dirs, *blocks, BasisSide::column, cfg, norms);
    res.timings.col_basis = seconds_since(start);

    for (const auto *bc : {&rows, &cols})
        if (bc->capped > 0)
            res.warnings.push_back("rank cap " + std::to_string(cfg.max_rank) + " bound in " +
                                   std::to_string(bc->capped) + (bc == &rows ? " row" : " column") +
                                   " truncations; accuracy not guaranteed");
    a.row_basis = std::move(rows.basis);
    a.col_basis = std::move(cols.basis);

    start = clock::now();
    ExpandedBasis vq(a.row_basis, *tree), wq(a.col_basis, *tree);
    const auto &adm = blocks->admissible_leaves();
    for (std::size_t k = 0; k < adm.size(); ++k) {
        const Block &b = (*blocks)[adm[k]];
        const CMatrix &q = vq.get(b.row, a.row_basis.slot(b.row, *b.direction));
        const CMatrix &p = wq.get(b.col, a.col_basis.slot(b.col, *b.direction));
        const CMatrix g = source.block((*tree)[b.row].indices, (*tree)[b.col].indices);
        a.coupling[k] = multiply(adjoint_multiply(q, g), p);
    }
    const auto &inadm = blocks->inadmissible_leaves();
    for (std::size_t k = 0; k < inadm.size(); ++k) {
        const Block &b = (*blocks)[inadm[k]];
        a.nearfield[k] = source.block((*tree)[b.row].indices, (*tree)[b.col].indices);
    }
    res.timings.projection = seconds_since(start);
    a.validate();
    return res;
}

// --- ACA -----------------------------------------------------------------

LowRankFactors aca_approximate(const CMatrix &block, double tolerance, std::size_t max_rank) {
    const std::size_t m = block.rows(), n = block.cols();
    CMatrix r = block;
    std::vector<CVector> us, vs;
    double first = 0.0;
    while (us.size() < max_rank) {
        std::size_t pi = 0, pj = 0;
        double best = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < m; ++i)
                if (std::abs(r(i, j)) > best) {
                    best = std::abs(r(i, j));
                    pi = i;
                    pj = j;
                }
        if (us.empty())
            first = best;
        if (best == 0.0 || (!us.empty() && best <= tolerance * first))
            break;
        const cplx pivot = r(pi, pj);
        CVector u(m), v(n);
        for (std::size_t i = 0; i < m; ++i)
            u[i] = r(i, pj);
        for (std::size_t j = 0; j < n; ++j)
            v[j] = std::conj(r(pi, j) / pivot);
        for (std::size_t j = 0; j < n; ++j) {
            const cplx cv = std::conj(v[j]);
            for (std::size_t i = 0; i < m; ++i)
                r(i, j) -= u[i] * cv;
        }
        us.push_back(std::move(u));
        vs.push_back(std::move(v));
    }
    LowRankFactors f{CMatrix(m, us.size()), CMatrix(n, vs.size())};
    for (std::size_t k = 0; k < us.size(); ++k) {
        std::copy(us[k].begin(), us[k].end(), f.a.column(k).begin());
        std::copy(vs[k].begin(), vs[k].end(), f.b.column(k).begin());
    }
    return f;
}

HMatrix::HMatrix(std::shared_ptr<const ClusterTree> tree, std::shared_ptr<const BlockTree> blocks)
    : farfield(blocks->admissible_leaves().size()), nearfield(blocks->inadmissible_leaves().size()),
      tree_(std::move(tree)), blocks_(std::move(blocks)) {}

std::size_t HMatrix::max_rank() const {
    std::size_t k = 0;
    for (const auto &f : farfield)
        k = std::max(k, f.rank());
    return k;
}

HMatrix aca_compress(const MatrixSource &source, std::shared_ptr<const ClusterTree> tree,
                     std::shared_ptr<const BlockTree> blocks, double tolerance, std::size_t max_rank) {
    HMatrix h(tree, blocks);
    const auto &adm = blocks->admissible_leaves();
    for (std::size_t k = 0; k < adm.size(); ++k) {
        const Block &b = (*blocks)[adm[k]];
        h.farfield[k] =
            aca_approximate(source.block((*tree)[b.row].indices, (*tree)[b.col].indices), tolerance, max_rank);
    }
    const auto &inadm = blocks->inadmissible_leaves();
    for (std::size_t k = 0; k < inadm.size(); ++k) {
        const Block &b = (*blocks)[inadm[k]];
        h.nearfield[k] = source.block((*tree)[b.row].indices, (*tree)[b.col].indices);
    }
    return h;
}

namespace {

CVector hmatrix_product(const HMatrix &a, std::span<const cplx> x, bool adjoint_op) {
    if (x.size() != a.dim())
        throw std::invalid_argument("matvec: vector length does not match dimension");
    const ClusterTree &tree = a.tree();
    const BlockTree &bt = a.blocks();
    CVector y(a.dim());
    auto run = [&](std::size_t row, std::size_t col, auto &&op) {
        const auto &src = tree[adjoint_op ? row : col].indices;
        const auto &dst = tree[adjoint_op ? col : row].indices;
        CVector local(src.size());
        for (std::size_t i = 0; i < src.size(); ++i)
            local[i] = x[src[i]];
        CVector out(dst.size());
        op(local, out);
        for (std::size_t i = 0; i < dst.size(); ++i)
            y[dst[i]] += out[i];
    };
    const auto &adm = bt.admissible_leaves();
    for (std::size_t k = 0; k < adm.size(); ++k) {
        const Block &b = bt[adm[k]];
        const LowRankFactors &f = a.farfield[k];
        run(b.row, b.col, [&](const CVector &in, CVector &out) {
            CVector tmp(f.rank());
            if (adjoint_op) {
                gemv_adjoint(f.a, in, tmp);
                gemv(f.b, tmp, out);
            } else {
                gemv_adjoint(f.b, in, tmp);
                gemv(f.a, tmp, out);
            }
        });
    }
    const auto &inadm = bt.inadmissible_leaves();
    for (std::size_t k = 0; k < inadm.size(); ++k) {
        const Block &b = bt[inadm[k]];
        run(b.row, b.col, [&](const CVector &in, CVector &out) {
            if (adjoint_op)
                gemv_adjoint(a.nearfield[k], in, out);
            else
                gemv(a.nearfield[k], in, out);
        });
    }
    return y;
}

} // namespace

CVector matvec(const HMatrix &a, std::span<const cplx> x) { return hmatrix_product(a, x, false); }
CVector matvec_adjoint(const HMatrix &a, std::span<const cplx> x) { return hmatrix_product(a, x, true); }

HStorageReport storage_report(const HMatrix &a) {
    HStorageReport r;
    for (const auto &f : a.farfield)
        r.lowrank_entries += f.a.size() + f.b.size();
    for (const auto &m : a.nearfield)
        r.nearfield_entries += m.size();
    r.total_entries = r.lowrank_entries + r.nearfield_entries;
    r.kib_per_dof = static_cast<double>(r.total_entries) * 16.0 / 1024.0 / static_cast<double>(a.dim());
    return r;
}

} // namespace dh2
