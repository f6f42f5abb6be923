#pragma once
//
// Geometrically regular cluster tree. Every cluster carries an
// axis-parallel box; after construction all boxes on one level are padded
// to a common extent, so they are translates of a single reference box.
//

#include "dh2/geometry.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace dh2 {

struct Box {
    Vec3 lo;
    Vec3 hi;

    Vec3 center() const { return 0.5 * (lo + hi); }
    Vec3 extent() const { return hi - lo; }
    double diameter() const { return norm(hi - lo); }
    bool contains(Vec3 p, double slack = 0.0) const;
};

// Euclidean distance between two axis-parallel boxes (0 if they touch).
double box_distance(const Box &a, const Box &b);

struct Cluster {
    std::size_t id = 0;
    std::size_t parent = 0; // == id for the root
    int level = 0;
    IndexList indices;      // sorted
    Box box;                // padded
    std::vector<std::size_t> sons;

    bool is_leaf() const { return sons.empty(); }
    std::size_t size() const { return indices.size(); }
};

class ClusterTree {
  public:
    ClusterTree() = default;
    // Adopts finished clusters (parents before sons, padded boxes set) and
    // derives the level tables from them.
    explicit ClusterTree(std::vector<Cluster> clusters);

    const Cluster &operator[](std::size_t id) const { return clusters_[id]; }
    const Cluster &root() const { return clusters_.front(); }
    std::size_t root_id() const { return 0; }
    std::size_t size() const { return clusters_.size(); }
    int depth() const { return depth_; }
    std::size_t index_count() const { return clusters_.front().size(); }

    const std::vector<Cluster> &clusters() const { return clusters_; }
    std::span<const std::size_t> level(int l) const { return by_level_.at(static_cast<std::size_t>(l)); }
    Vec3 level_extent(int l) const { return level_extent_.at(static_cast<std::size_t>(l)); }

    // Clusters in post-order (sons before parents).
    std::vector<std::size_t> postorder() const;

  private:
    std::vector<Cluster> clusters_;
    std::vector<std::vector<std::size_t>> by_level_;
    std::vector<Vec3> level_extent_;
    int depth_ = 0;
};

// Octree subdivision of the bounding cube. A cluster with at most
// `leaf_size` indices is a leaf; a split with a single nonempty octant is
// repeated on that octant so no cluster has exactly one son.
// `support_radius` (optional, one entry per point) enlarges each level's
// padding by the largest radius found on that level.
ClusterTree build_cluster_tree(std::span<const Vec3> points, std::size_t leaf_size,
                               std::span<const double> support_radius = {});

// Diameter of the common level box.
double level_diameter(const ClusterTree &tree, int level);

// One JSON object per line: id, level, parent, lo, hi, size.
void write_cluster_jsonl(std::ostream &out, const ClusterTree &tree);

} // namespace dh2
