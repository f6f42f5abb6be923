#include "dh2/dh2matrix.hpp"

#include "json.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace dh2 {

using json = nlohmann::json;

// --- DirectionalClusterBasis ---------------------------------------------

std::size_t DirectionalClusterBasis::slot(std::size_t t, std::size_t dir) const {
    const auto &e = entries_[t];
    const auto it = std::lower_bound(e.begin(), e.end(), dir,
                                     [](const BasisEntry &be, std::size_t d) { return be.direction < d; });
    if (it == e.end() || it->direction != dir)
        return npos;
    return static_cast<std::size_t>(it - e.begin());
}

std::size_t DirectionalClusterBasis::rank(std::size_t t, std::size_t dir) const {
    const std::size_t s = slot(t, dir);
    if (s == npos)
        throw std::out_of_range("DirectionalClusterBasis: direction not present in cluster");
    return entries_[t][s].rank;
}

std::size_t DirectionalClusterBasis::max_rank() const {
    std::size_t k = 0;
    for (const auto &cl : entries_)
        for (const auto &e : cl)
            k = std::max(k, e.rank);
    return k;
}

void DirectionalClusterBasis::link(const ClusterTree &tree, const DirectionHierarchy &dirs) {
    for (const auto &c : tree.clusters()) {
        for (auto &e : entries_[c.id]) {
            e.son_slots.clear();
            for (std::size_t son : c.sons) {
                const std::size_t s = slot(son, dirs.son(c.level, e.direction));
                if (s == npos)
                    throw std::logic_error("DirectionalClusterBasis: son direction missing");
                e.son_slots.push_back(s);
            }
        }
    }
}

// --- DH2Matrix -----------------------------------------------------------

DH2Matrix::DH2Matrix(std::shared_ptr<const ClusterTree> tree, std::shared_ptr<const DirectionHierarchy> dirs,
                     std::shared_ptr<const BlockTree> blocks)
    : row_basis(tree->size()), col_basis(tree->size()), coupling(blocks->admissible_leaves().size()),
      nearfield(blocks->inadmissible_leaves().size()), tree_(std::move(tree)), dirs_(std::move(dirs)),
      blocks_(std::move(blocks)) {}

void DH2Matrix::validate() const {
    auto check_basis = [&](const DirectionalClusterBasis &basis, const char *name) {
        for (const auto &c : tree_->clusters()) {
            for (const auto &e : basis.entries(c.id)) {
                if (c.is_leaf()) {
                    if (e.leaf.rows() != c.size() || e.leaf.cols() != e.rank)
                        throw std::logic_error(std::string(name) + ": leaf matrix shape mismatch");
                    continue;
                }
                if (e.transfer.size() != c.sons.size() || e.son_slots.size() != c.sons.size())
                    throw std::logic_error(std::string(name) + ": transfer matrix count mismatch");
                for (std::size_t i = 0; i < c.sons.size(); ++i) {
                    const auto &son = basis.entries(c.sons[i])[e.son_slots[i]];
                    if (e.transfer[i].rows() != son.rank || e.transfer[i].cols() != e.rank)
                        throw std::logic_error(std::string(name) + ": transfer matrix shape mismatch");
                }
            }
        }
    };
    check_basis(row_basis, "row basis");
    check_basis(col_basis, "column basis");

    const auto &adm = blocks_->admissible_leaves();
    if (coupling.size() != adm.size())
        throw std::logic_error("DH2Matrix: coupling count mismatch");
    for (std::size_t k = 0; k < adm.size(); ++k) {
        const Block &b = (*blocks_)[adm[k]];
        const std::size_t rt = row_basis.slot(b.row, *b.direction);
        const std::size_t cs = col_basis.slot(b.col, *b.direction);
        if (rt == DirectionalClusterBasis::npos || cs == DirectionalClusterBasis::npos)
            throw std::logic_error("DH2Matrix: block direction missing from a cluster basis");
        if (coupling[k].rows() != row_basis.entries(b.row)[rt].rank ||
            coupling[k].cols() != col_basis.entries(b.col)[cs].rank)
            throw std::logic_error("DH2Matrix: coupling matrix shape mismatch");
    }
    const auto &inadm = blocks_->inadmissible_leaves();
    if (nearfield.size() != inadm.size())
        throw std::logic_error("DH2Matrix: nearfield count mismatch");
    for (std::size_t k = 0; k < inadm.size(); ++k) {
        const Block &b = (*blocks_)[inadm[k]];
        if (nearfield[k].rows() != (*tree_)[b.row].size() || nearfield[k].cols() != (*tree_)[b.col].size())
            throw std::logic_error("DH2Matrix: nearfield block shape mismatch");
    }
}

// --- matvec --------------------------------------------------------------

namespace {

using Coefficients = std::vector<std::vector<CVector>>;

Coefficients zero_coefficients(const DirectionalClusterBasis &basis) {
    Coefficients c(basis.cluster_count());
    for (std::size_t t = 0; t < c.size(); ++t)
        for (const auto &e : basis.entries(t))
            c[t].emplace_back(e.rank);
    return c;
}

CVector gather(std::span<const cplx> x, const IndexList &idx) {
    CVector out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
        out[i] = x[idx[i]];
    return out;
}

void scatter_add(std::span<cplx> y, const IndexList &idx, const CVector &v) {
    for (std::size_t i = 0; i < idx.size(); ++i)
        y[idx[i]] += v[i];
}

// x_hat_{tc} = Q_tc^H x|t, sons before parents.
Coefficients forward(const ClusterTree &tree, const DirectionalClusterBasis &basis, std::span<const cplx> x,
                     MatvecCounters *counters) {
    Coefficients xhat = zero_coefficients(basis);
    for (std::size_t t = tree.size(); t-- > 0;) {
        const Cluster &c = tree[t];
        const auto &entries = basis.entries(t);
        if (entries.empty())
            continue;
        if (c.is_leaf()) {
            const CVector local = gather(x, c.indices);
            for (std::size_t k = 0; k < entries.size(); ++k) {
                gemv_adjoint(entries[k].leaf, local, xhat[t][k]);
                if (counters)
                    ++counters->leaf;
            }
            continue;
        }
        for (std::size_t k = 0; k < entries.size(); ++k)
            for (std::size_t i = 0; i < c.sons.size(); ++i) {
                gemv_adjoint(entries[k].transfer[i], xhat[c.sons[i]][entries[k].son_slots[i]], xhat[t][k]);
                if (counters)
                    ++counters->transfer;
            }
    }
    return xhat;
}

// y += sum Q_tc y_hat_{tc}, parents before sons.
void backward(const ClusterTree &tree, const DirectionalClusterBasis &basis, Coefficients &yhat, std::span<cplx> y,
              MatvecCounters *counters) {
    for (std::size_t t = 0; t < tree.size(); ++t) {
        const Cluster &c = tree[t];
        const auto &entries = basis.entries(t);
        if (entries.empty())
            continue;
        if (c.is_leaf()) {
            CVector local(c.size());
            for (std::size_t k = 0; k < entries.size(); ++k) {
                gemv(entries[k].leaf, yhat[t][k], local);
                if (counters)
                    ++counters->leaf;
            }
            scatter_add(y, c.indices, local);
            continue;
        }
        for (std::size_t k = 0; k < entries.size(); ++k)
            for (std::size_t i = 0; i < c.sons.size(); ++i) {
                gemv(entries[k].transfer[i], yhat[t][k], yhat[c.sons[i]][entries[k].son_slots[i]]);
                if (counters)
                    ++counters->transfer;
            }
    }
}

void check_dim(const DH2Matrix &a, std::span<const cplx> x) {
    if (x.size() != a.dim())
        throw std::invalid_argument("matvec: vector length " + std::to_string(x.size()) + " does not match dimension " +
                                    std::to_string(a.dim()));
}

} // namespace

CVector matvec(const DH2Matrix &a, std::span<const cplx> x, MatvecCounters *counters) {
    check_dim(a, x);
    const ClusterTree &tree = a.tree();
    const BlockTree &bt = a.blocks();
    CVector y(a.dim());

    Coefficients xhat = forward(tree, a.col_basis, x, counters);
    Coefficients yhat = zero_coefficients(a.row_basis);
    const auto &adm = bt.admissible_leaves();
    for (std::size_t k = 0; k < adm.size(); ++k) {
        const Block &b = bt[adm[k]];
        const std::size_t rt = a.row_basis.slot(b.row, *b.direction);
        const std::size_t cs = a.col_basis.slot(b.col, *b.direction);
        gemv(a.coupling[k], xhat[b.col][cs], yhat[b.row][rt]);
        if (counters)
            ++counters->coupling;
    }
    backward(tree, a.row_basis, yhat, y, counters);

    const auto &inadm = bt.inadmissible_leaves();
    for (std::size_t k = 0; k < inadm.size(); ++k) {
        const Block &b = bt[inadm[k]];
        const CVector local = gather(x, tree[b.col].indices);
        CVector out(tree[b.row].size());
        gemv(a.nearfield[k], local, out);
        scatter_add(y, tree[b.row].indices, out);
        if (counters)
            ++counters->nearfield;
    }
    return y;
}

CVector matvec_adjoint(const DH2Matrix &a, std::span<const cplx> x, MatvecCounters *counters) {
    check_dim(a, x);
    const ClusterTree &tree = a.tree();
    const BlockTree &bt = a.blocks();
    CVector y(a.dim());

    Coefficients xhat = forward(tree, a.row_basis, x, counters);
    Coefficients yhat = zero_coefficients(a.col_basis);
    const auto &adm = bt.admissible_leaves();
    for (std::size_t k = 0; k < adm.size(); ++k) {
        const Block &b = bt[adm[k]];
        const std::size_t rt = a.row_basis.slot(b.row, *b.direction);
        const std::size_t cs = a.col_basis.slot(b.col, *b.direction);
        gemv_adjoint(a.coupling[k], xhat[b.row][rt], yhat[b.col][cs]);
        if (counters)
            ++counters->coupling;
    }
    backward(tree, a.col_basis, yhat, y, counters);

    const auto &inadm = bt.inadmissible_leaves();
    for (std::size_t k = 0; k < inadm.size(); ++k) {
        const Block &b = bt[inadm[k]];
        const CVector local = gather(x, tree[b.row].indices);
        CVector out(tree[b.col].size());
        gemv_adjoint(a.nearfield[k], local, out);
        scatter_add(y, tree[b.col].indices, out);
        if (counters)
            ++counters->nearfield;
    }
    return y;
}

// --- expansion -----------------------------------------------------------

CMatrix expand_basis(const DirectionalClusterBasis &basis, const ClusterTree &tree, std::size_t t, std::size_t dir) {
    const std::size_t s = basis.slot(t, dir);
    if (s == DirectionalClusterBasis::npos)
        throw std::out_of_range("expand_basis: direction not present in cluster");
    const Cluster &c = tree[t];
    const BasisEntry &e = basis.entries(t)[s];
    if (c.is_leaf())
        return e.leaf;

    CMatrix out(c.size(), e.rank);
    for (std::size_t i = 0; i < c.sons.size(); ++i) {
        const Cluster &son = tree[c.sons[i]];
        const std::size_t son_dir = basis.entries(son.id)[e.son_slots[i]].direction;
        const CMatrix part = multiply(expand_basis(basis, tree, son.id, son_dir), e.transfer[i]);
        for (std::size_t r = 0; r < son.size(); ++r) {
            const auto pos = static_cast<std::size_t>(
                std::lower_bound(c.indices.begin(), c.indices.end(), son.indices[r]) - c.indices.begin());
            for (std::size_t j = 0; j < e.rank; ++j)
                out(pos, j) = part(r, j);
        }
    }
    return out;
}

CMatrix expand_dense(const DH2Matrix &a, std::size_t cap) {
    const std::size_t n = a.dim();
    if (n > cap)
        throw std::length_error("expand_dense: dimension " + std::to_string(n) + " exceeds cap " + std::to_string(cap));
    const ClusterTree &tree = a.tree();
    const BlockTree &bt = a.blocks();
    CMatrix g(n, n);
    auto place = [&](const Block &b, const CMatrix &m) {
        const auto &rows = tree[b.row].indices;
        const auto &cols = tree[b.col].indices;
        for (std::size_t j = 0; j < cols.size(); ++j)
            for (std::size_t i = 0; i < rows.size(); ++i)
                g(rows[i], cols[j]) = m(i, j);
    };
    const auto &adm = bt.admissible_leaves();
    for (std::size_t k = 0; k < adm.size(); ++k) {
        const Block &b = bt[adm[k]];
        const CMatrix v = expand_basis(a.row_basis, tree, b.row, *b.direction);
        const CMatrix w = expand_basis(a.col_basis, tree, b.col, *b.direction);
        place(b, multiply_adjoint(multiply(v, a.coupling[k]), w));
    }
    const auto &inadm = bt.inadmissible_leaves();
    for (std::size_t k = 0; k < inadm.size(); ++k)
        place(bt[inadm[k]], a.nearfield[k]);
    return g;
}

StorageReport storage_report(const DH2Matrix &a) {
    StorageReport r;
    for (const auto *basis : {&a.row_basis, &a.col_basis})
        for (std::size_t t = 0; t < basis->cluster_count(); ++t)
            for (const auto &e : basis->entries(t)) {
                r.leaf_entries += e.leaf.size();
                for (const auto &m : e.transfer)
                    r.transfer_entries += m.size();
            }
    for (const auto &m : a.coupling)
        r.coupling_entries += m.size();
    for (const auto &m : a.nearfield)
        r.nearfield_entries += m.size();
    r.total_entries = r.leaf_entries + r.transfer_entries + r.coupling_entries + r.nearfield_entries;
    r.kib_per_dof = static_cast<double>(r.total_entries) * 16.0 / 1024.0 / static_cast<double>(a.dim());
    return r;
}

// --- DH2v1 serialization -------------------------------------------------

namespace {

json basis_to_json(const DirectionalClusterBasis &basis, const ClusterTree &tree, std::vector<const CMatrix *> &records) {
    json out = json::array();
    for (const auto &c : tree.clusters())
        for (const auto &e : basis.entries(c.id)) {
            json j;
            j["cluster"] = c.id;
            j["direction"] = e.direction;
            j["rank"] = e.rank;
            if (c.is_leaf()) {
                j["leaf"] = records.size();
                records.push_back(&e.leaf);
            } else {
                json tr = json::array();
                for (const auto &m : e.transfer) {
                    tr.push_back(records.size());
                    records.push_back(&m);
                }
                j["transfer"] = tr;
            }
            out.push_back(j);
        }
    return out;
}

void basis_from_json(const json &j, DirectionalClusterBasis &basis, std::vector<CMatrix> &records) {
    for (const auto &item : j) {
        BasisEntry e;
        e.direction = item.at("direction").get<std::size_t>();
        e.rank = item.at("rank").get<std::size_t>();
        if (item.contains("leaf"))
            e.leaf = std::move(records.at(item.at("leaf").get<std::size_t>()));
        if (item.contains("transfer"))
            for (const auto &r : item.at("transfer"))
                e.transfer.push_back(std::move(records.at(r.get<std::size_t>())));
        basis.entries(item.at("cluster").get<std::size_t>()).push_back(std::move(e));
    }
}

json vec_json(Vec3 v) { return json::array({v.x, v.y, v.z}); }
Vec3 json_vec(const json &j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

} // namespace

void save_dh2(const DH2Matrix &a, const std::string &directory) {
    namespace fs = std::filesystem;
    fs::create_directories(directory);
    const ClusterTree &tree = a.tree();
    const BlockTree &bt = a.blocks();
    const DirectionHierarchy &dirs = a.directions();

    json m;
    m["format"] = "DH2v1";
    m["n"] = a.dim();

    json clusters = json::array();
    for (const auto &c : tree.clusters())
        clusters.push_back({{"id", c.id},
                            {"parent", c.parent},
                            {"level", c.level},
                            {"lo", vec_json(c.box.lo)},
                            {"hi", vec_json(c.box.hi)},
                            {"sons", c.sons},
                            {"indices", c.indices}});
    m["clusters"] = clusters;

    json levels = json::array();
    for (std::size_t l = 0; l < dirs.level_count(); ++l) {
        json v = json::array();
        for (const auto &d : dirs.directions(static_cast<int>(l)))
            v.push_back(vec_json(d));
        levels.push_back({{"grid", dirs.level(static_cast<int>(l)).grid}, {"vectors", v}});
    }
    m["directions"] = levels;

    json blocks = json::array();
    for (const auto &b : bt.blocks()) {
        json jb{{"row", b.row}, {"col", b.col}, {"status", status_name(b.status)}, {"sons", b.sons}};
        jb["direction"] = b.direction ? json(*b.direction) : json(nullptr);
        blocks.push_back(jb);
    }
    m["blocks"] = blocks;

    std::vector<const CMatrix *> records;
    m["row_basis"] = basis_to_json(a.row_basis, tree, records);
    m["col_basis"] = basis_to_json(a.col_basis, tree, records);
    json coupling = json::array();
    for (const auto &s : a.coupling) {
        coupling.push_back(records.size());
        records.push_back(&s);
    }
    m["coupling"] = coupling;
    json near = json::array();
    for (const auto &nf : a.nearfield) {
        near.push_back(records.size());
        records.push_back(&nf);
    }
    m["nearfield"] = near;
    m["record_count"] = records.size();

    {
        std::ofstream out(fs::path(directory) / "manifest.json");
        if (!out)
            throw std::runtime_error("save_dh2: cannot write manifest in " + directory);
        out << m.dump(1) << '\n';
    }
    std::ofstream payload(fs::path(directory) / "matrices.cmx", std::ios::binary);
    if (!payload)
        throw std::runtime_error("save_dh2: cannot write payload in " + directory);
    for (const CMatrix *r : records)
        write_cmx(payload, *r);
}

DH2Matrix load_dh2(const std::string &directory) {
    namespace fs = std::filesystem;
    std::ifstream in(fs::path(directory) / "manifest.json");
    if (!in)
        throw std::runtime_error("load_dh2: no manifest in " + directory);
    const json m = json::parse(in);
    if (m.at("format") != "DH2v1")
        throw std::runtime_error("load_dh2: unsupported format");

    std::vector<Cluster> clusters;
    for (const auto &jc : m.at("clusters")) {
        Cluster c;
        c.id = jc.at("id").get<std::size_t>();
        c.parent = jc.at("parent").get<std::size_t>();
        c.level = jc.at("level").get<int>();
        c.box = Box{json_vec(jc.at("lo")), json_vec(jc.at("hi"))};
        c.sons = jc.at("sons").get<std::vector<std::size_t>>();
        c.indices = jc.at("indices").get<IndexList>();
        clusters.push_back(std::move(c));
    }
    auto tree = std::make_shared<const ClusterTree>(std::move(clusters));

    std::vector<DirectionLevel> levels;
    for (const auto &jl : m.at("directions")) {
        DirectionLevel l;
        l.grid = jl.at("grid").get<int>();
        for (const auto &v : jl.at("vectors"))
            l.directions.push_back(json_vec(v));
        levels.push_back(std::move(l));
    }
    auto dirs = std::make_shared<const DirectionHierarchy>(std::move(levels));

    std::vector<Block> blocks;
    for (const auto &jb : m.at("blocks")) {
        Block b;
        b.id = blocks.size();
        b.row = jb.at("row").get<std::size_t>();
        b.col = jb.at("col").get<std::size_t>();
        const auto st = jb.at("status").get<std::string>();
        b.status = st == "admissible" ? BlockStatus::admissible
                   : st == "inadmissible" ? BlockStatus::inadmissible
                                          : BlockStatus::subdivided;
        if (!jb.at("direction").is_null())
            b.direction = jb.at("direction").get<std::size_t>();
        b.sons = jb.at("sons").get<std::vector<std::size_t>>();
        blocks.push_back(std::move(b));
    }
    auto bt = std::make_shared<const BlockTree>(std::move(blocks));

    std::ifstream payload(fs::path(directory) / "matrices.cmx", std::ios::binary);
    if (!payload)
        throw std::runtime_error("load_dh2: no payload in " + directory);
    std::vector<CMatrix> records;
    const auto count = m.at("record_count").get<std::size_t>();
    records.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        records.push_back(read_cmx(payload));

    DH2Matrix a(tree, dirs, bt);
    basis_from_json(m.at("row_basis"), a.row_basis, records);
    basis_from_json(m.at("col_basis"), a.col_basis, records);
    a.row_basis.link(*tree, *dirs);
    a.col_basis.link(*tree, *dirs);
    const auto &jc = m.at("coupling");
    for (std::size_t k = 0; k < jc.size(); ++k)
        a.coupling.at(k) = std::move(records.at(jc[k].get<std::size_t>()));
    const auto &jn = m.at("nearfield");
    for (std::size_t k = 0; k < jn.size(); ++k)
        a.nearfield.at(k) = std::move(records.at(jn[k].get<std::size_t>()));
    a.validate();
    return a;
}

} // namespace dh2
