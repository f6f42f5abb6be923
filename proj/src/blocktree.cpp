#include "dh2/blocktree.hpp"

#include <algorithm>
#include <ostream>
#include <set>
#include <stdexcept>

namespace dh2 {

bool is_admissible(const Box &t, const Box &s, double wave_number, double eta2, bool parabolic) {
    const double dist = box_distance(t, s);
    if (!(dist > 0.0))
        return false;
    const double diam = std::max(t.diameter(), s.diameter());
    if (parabolic && wave_number * diam * diam > eta2 * dist)
        return false;
    return diam <= eta2 * dist;
}

BlockTree::BlockTree(std::vector<Block> blocks) : blocks_(std::move(blocks)) {
    for (const auto &b : blocks_) {
        if (b.status == BlockStatus::admissible)
            admissible_.push_back(b.id);
        else if (b.status == BlockStatus::inadmissible)
            inadmissible_.push_back(b.id);
    }
}

BlockTree build_block_tree(const ClusterTree &tree, const DirectionHierarchy &dirs, const AdmissibilityParams &params) {
    if (dirs.level_count() < static_cast<std::size_t>(tree.depth()) + 1)
        throw std::invalid_argument("build_block_tree: direction hierarchy has fewer levels than the cluster tree");

    std::vector<Block> blocks;
    std::vector<std::size_t> stack;
    blocks.push_back(Block{0, tree.root_id(), tree.root_id(), BlockStatus::subdivided, std::nullopt, {}});
    stack.push_back(0);
    while (!stack.empty()) {
        const std::size_t id = stack.back();
        stack.pop_back();
        const Cluster &t = tree[blocks[id].row];
        const Cluster &s = tree[blocks[id].col];
        if (is_admissible(t.box, s.box, params.wave_number, params.eta2, params.parabolic)) {
            blocks[id].status = BlockStatus::admissible;
            blocks[id].direction = nearest_direction(dirs.directions(t.level), t.box.center() - s.box.center());
            continue;
        }
        if (t.is_leaf() || s.is_leaf()) {
            blocks[id].status = BlockStatus::inadmissible;
            continue;
        }
        std::vector<std::size_t> created;
        for (std::size_t ts : t.sons)
            for (std::size_t ss : s.sons) {
                Block son{blocks.size(), ts, ss, BlockStatus::subdivided, std::nullopt, {}};
                blocks.push_back(son);
                created.push_back(son.id);
            }
        blocks[id].sons = created;
        for (auto it = created.rbegin(); it != created.rend(); ++it)
            stack.push_back(*it);
    }
    return BlockTree(std::move(blocks));
}

BasisDirections basis_directions(const ClusterTree &tree, const DirectionHierarchy &dirs, const BlockTree &blocks) {
    std::vector<std::set<std::size_t>> rows(tree.size()), cols(tree.size());
    for (std::size_t id : blocks.admissible_leaves()) {
        const Block &b = blocks[id];
        rows[b.row].insert(*b.direction);
        cols[b.col].insert(*b.direction);
    }
    // Clusters are numbered so that parents precede sons.
    for (const auto &c : tree.clusters())
        for (std::size_t son : c.sons)
            for (std::size_t d : rows[c.id])
                rows[son].insert(dirs.son(c.level, d));
    for (const auto &c : tree.clusters())
        for (std::size_t son : c.sons)
            for (std::size_t d : cols[c.id])
                cols[son].insert(dirs.son(c.level, d));

    BasisDirections out;
    for (std::size_t t = 0; t < tree.size(); ++t) {
        out.rows.emplace_back(rows[t].begin(), rows[t].end());
        out.cols.emplace_back(cols[t].begin(), cols[t].end());
    }
    return out;
}

std::size_t SparsityStats::max_row() const {
    return row_count.empty() ? 0 : *std::max_element(row_count.begin(), row_count.end());
}

std::size_t SparsityStats::max_row_low_frequency() const {
    std::size_t m = 0;
    for (const auto &l : levels)
        if (l.low_frequency)
            m = std::max(m, l.max_row);
    return m;
}

std::size_t SparsityStats::max_row_single_direction() const {
    std::size_t m = 0;
    for (const auto &l : levels)
        if (l.single_direction)
            m = std::max(m, l.max_row);
    return m;
}

SparsityStats sparsity_stats(const ClusterTree &tree, const DirectionHierarchy &dirs, const BlockTree &blocks,
                             double wave_number) {
    SparsityStats st;
    st.row_count.assign(tree.size(), 0);
    st.col_count.assign(tree.size(), 0);
    std::vector<std::set<std::size_t>> used(tree.size());
    for (const auto &b : blocks.blocks()) {
        ++st.row_count[b.row];
        ++st.col_count[b.col];
        if (b.direction) {
            used[b.row].insert(*b.direction);
            used[b.col].insert(*b.direction);
        }
    }
    st.direction_count.resize(tree.size());
    for (std::size_t t = 0; t < tree.size(); ++t)
        st.direction_count[t] = used[t].size();

    for (int l = 0; l <= tree.depth(); ++l) {
        LevelSparsity ls;
        ls.level = l;
        const auto ids = tree.level(l);
        ls.clusters = ids.size();
        ls.low_frequency = wave_number * level_diameter(tree, l) <= 1.0;
        ls.single_direction = dirs.level(l).grid == 0;
        double sum = 0.0;
        for (std::size_t t : ids) {
            ls.max_row = std::max(ls.max_row, st.row_count[t]);
            ls.max_col = std::max(ls.max_col, st.col_count[t]);
            ls.max_directions = std::max(ls.max_directions, st.direction_count[t]);
            sum += static_cast<double>(st.row_count[t]);
        }
        ls.mean_row = ids.empty() ? 0.0 : sum / static_cast<double>(ids.size());
        st.levels.push_back(ls);
    }
    return st;
}

std::string_view status_name(BlockStatus s) {
    switch (s) {
    case BlockStatus::admissible:
        return "admissible";
    case BlockStatus::inadmissible:
        return "inadmissible";
    case BlockStatus::subdivided:
        return "subdivided";
    }
    return "unknown";
}

void write_block_csv(std::ostream &out, const ClusterTree &tree, const BlockTree &blocks) {
    out << "tLevel,tId,sId,status,directionIndex\n";
    for (const auto &b : blocks.blocks()) {
        if (b.status == BlockStatus::subdivided)
            continue;
        out << tree[b.row].level << ',' << b.row << ',' << b.col << ',' << status_name(b.status) << ','
            << (b.direction ? static_cast<long long>(*b.direction) : -1LL) << '\n';
    }
}

} // namespace dh2
