#include "dh2/clustering.hpp"

#include "json.hpp"

#include <algorithm>
#include <array>
#include <ostream>
#include <stdexcept>

namespace dh2 {

bool Box::contains(Vec3 p, double slack) const {
    for (std::size_t d = 0; d < 3; ++d)
        if (p[d] < lo[d] - slack || p[d] > hi[d] + slack)
            return false;
    return true;
}

double box_distance(const Box &a, const Box &b) {
    double sum = 0.0;
    for (std::size_t d = 0; d < 3; ++d) {
        const double gap = std::max({0.0, b.lo[d] - a.hi[d], a.lo[d] - b.hi[d]});
        sum += gap * gap;
    }
    return std::sqrt(sum);
}

ClusterTree::ClusterTree(std::vector<Cluster> clusters) : clusters_(std::move(clusters)) {
    if (clusters_.empty())
        throw std::invalid_argument("ClusterTree: no clusters");
    for (std::size_t i = 0; i < clusters_.size(); ++i) {
        const auto &c = clusters_[i];
        if (c.id != i)
            throw std::invalid_argument("ClusterTree: cluster ids must be consecutive");
        for (std::size_t son : c.sons)
            if (son <= i || son >= clusters_.size())
                throw std::invalid_argument("ClusterTree: sons must follow their parent");
        depth_ = std::max(depth_, c.level);
    }
    const auto levels = static_cast<std::size_t>(depth_) + 1;
    by_level_.assign(levels, {});
    level_extent_.assign(levels, Vec3{});
    for (const auto &c : clusters_) {
        const auto l = static_cast<std::size_t>(c.level);
        by_level_[l].push_back(c.id);
        const Vec3 e = c.box.extent();
        for (std::size_t d = 0; d < 3; ++d)
            level_extent_[l][d] = std::max(level_extent_[l][d], e[d]);
    }
}

std::vector<std::size_t> ClusterTree::postorder() const {
    std::vector<std::size_t> order;
    order.reserve(clusters_.size());
    std::vector<std::pair<std::size_t, bool>> stack{{0, false}};
    while (!stack.empty()) {
        auto [id, expanded] = stack.back();
        stack.pop_back();
        if (expanded) {
            order.push_back(id);
            continue;
        }
        stack.emplace_back(id, true);
        const auto &sons = clusters_[id].sons;
        for (auto it = sons.rbegin(); it != sons.rend(); ++it)
            stack.emplace_back(*it, false);
    }
    return order;
}

namespace {

// Octant index of p in box; points on a splitting plane go to the lower half.
int octant(const Box &box, Vec3 p) {
    const Vec3 mid = box.center();
    int o = 0;
    for (std::size_t d = 0; d < 3; ++d)
        if (p[d] > mid[d])
            o |= 1 << d;
    return o;
}

Box octant_box(const Box &box, int o) {
    const Vec3 mid = box.center();
    Box child;
    for (std::size_t d = 0; d < 3; ++d) {
        const bool upper = (o >> d) & 1;
        child.lo[d] = upper ? mid[d] : box.lo[d];
        child.hi[d] = upper ? box.hi[d] : mid[d];
    }
    return child;
}

struct Builder {
    std::span<const Vec3> points;
    std::size_t leaf_size;
    double min_extent;
    std::vector<Cluster> clusters;
    std::vector<Box> geometric; // unpadded octant boxes

    std::size_t add(IndexList indices, const Box &box, int level, std::size_t parent) {
        Cluster c;
        c.id = clusters.size();
        c.parent = parent == npos ? c.id : parent;
        c.level = level;
        c.indices = std::move(indices);
        clusters.push_back(std::move(c));
        geometric.push_back(box);
        return clusters.size() - 1;
    }

    void split(std::size_t id) {
        if (clusters[id].size() <= leaf_size)
            return;
        Box box = geometric[id];
        const IndexList &idx = clusters[id].indices;
        std::array<IndexList, 8> parts;
        while (true) {
            if (box.extent().x <= min_extent)
                return; // cannot separate coincident points
            for (auto &p : parts)
                p.clear();
            for (std::size_t i : idx)
                parts[static_cast<std::size_t>(octant(box, points[i]))].push_back(i);
            const auto nonempty = std::count_if(parts.begin(), parts.end(), [](const auto &p) { return !p.empty(); });
            if (nonempty >= 2)
                break;
            const auto single = std::find_if(parts.begin(), parts.end(), [](const auto &p) { return !p.empty(); });
            box = octant_box(box, static_cast<int>(single - parts.begin()));
        }
        const int level = clusters[id].level + 1;
        for (int o = 0; o < 8; ++o) {
            if (parts[static_cast<std::size_t>(o)].empty())
                continue;
            const std::size_t son = add(std::move(parts[static_cast<std::size_t>(o)]), octant_box(box, o), level, id);
            clusters[id].sons.push_back(son);
        }
        // Recurse after all sons exist so ids are assigned breadth-first per parent.
        const auto sons = clusters[id].sons;
        for (std::size_t son : sons)
            split(son);
    }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

} // namespace

ClusterTree build_cluster_tree(std::span<const Vec3> points, std::size_t leaf_size,
                               std::span<const double> support_radius) {
    if (points.empty())
        throw std::invalid_argument("build_cluster_tree: no points");
    if (leaf_size == 0)
        throw std::invalid_argument("build_cluster_tree: leaf size must be positive");
    if (!support_radius.empty() && support_radius.size() != points.size())
        throw std::invalid_argument("build_cluster_tree: one support radius per point required");

    Vec3 lo = points.front(), hi = points.front();
    for (const auto &p : points)
        for (std::size_t d = 0; d < 3; ++d) {
            lo[d] = std::min(lo[d], p[d]);
            hi[d] = std::max(hi[d], p[d]);
        }
    const Vec3 ext = hi - lo;
    const double side = std::max({ext.x, ext.y, ext.z});
    const Vec3 mid = 0.5 * (lo + hi);
    const Box root_box{mid - Vec3{side / 2, side / 2, side / 2}, mid + Vec3{side / 2, side / 2, side / 2}};

    Builder b{points, leaf_size, std::max(side, 1.0) * 1e-13, {}, {}};
    IndexList all(points.size());
    for (std::size_t i = 0; i < all.size(); ++i)
        all[i] = i;
    b.add(std::move(all), root_box, 0, Builder::npos);
    b.split(0);

    auto clusters = std::move(b.clusters);
    int depth = 0;
    for (const auto &c : clusters)
        depth = std::max(depth, c.level);

    const auto levels = static_cast<std::size_t>(depth) + 1;
    std::vector<Vec3> extent(levels, Vec3{});
    std::vector<double> radius(levels, 0.0);
    for (const auto &c : clusters) {
        const auto l = static_cast<std::size_t>(c.level);
        const Vec3 e = b.geometric[c.id].extent();
        for (std::size_t d = 0; d < 3; ++d)
            extent[l][d] = std::max(extent[l][d], e[d]);
        if (!support_radius.empty())
            for (std::size_t i : c.indices)
                radius[l] = std::max(radius[l], support_radius[i]);
    }
    for (std::size_t l = 0; l < levels; ++l)
        extent[l] = extent[l] + Vec3{2 * radius[l], 2 * radius[l], 2 * radius[l]};

    for (auto &c : clusters) {
        const Vec3 center = b.geometric[c.id].center();
        const Vec3 half = 0.5 * extent[static_cast<std::size_t>(c.level)];
        c.box = Box{center - half, center + half};
    }
    return ClusterTree(std::move(clusters));
}

double level_diameter(const ClusterTree &tree, int level) {
    if (level < 0 || level > tree.depth())
        throw std::out_of_range("level_diameter: level out of range");
    return norm(tree.level_extent(level));
}

void write_cluster_jsonl(std::ostream &out, const ClusterTree &tree) {
    for (const auto &c : tree.clusters()) {
        nlohmann::json j;
        j["id"] = c.id;
        j["level"] = c.level;
        j["parent"] = c.id == c.parent ? nlohmann::json(nullptr) : nlohmann::json(c.parent);
        j["lo"] = {c.box.lo.x, c.box.lo.y, c.box.lo.z};
        j["hi"] = {c.box.hi.x, c.box.hi.y, c.box.hi.z};
        j["size"] = c.size();
        j["sons"] = c.sons;
        out << j.dump() << '\n';
    }
}

} // namespace dh2
