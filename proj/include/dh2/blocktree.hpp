#pragma once
//
// Block tree over pairs of equal-level clusters, built with the directional
// (parabolic + standard) admissibility conditions.
//

#include "dh2/clustering.hpp"
#include "dh2/directions.hpp"

#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

namespace dh2 {

enum class BlockStatus { admissible, inadmissible, subdivided };

struct Block {
    std::size_t id = 0;
    std::size_t row = 0; // cluster t
    std::size_t col = 0; // cluster s
    BlockStatus status = BlockStatus::subdivided;
    std::optional<std::size_t> direction; // index into D_level, admissible leaves only
    std::vector<std::size_t> sons;
};

struct AdmissibilityParams {
    double wave_number = 0.0;
    double eta1 = 20.0;
    double eta2 = 5.0;
    bool parabolic = true; // false: standard condition only
};

// kappa max{diam^2} <= eta2 dist  (if parabolic)  and  max{diam} <= eta2 dist.
// Touching boxes are never admissible.
bool is_admissible(const Box &t, const Box &s, double wave_number, double eta2, bool parabolic = true);

class BlockTree {
  public:
    BlockTree() = default;
    explicit BlockTree(std::vector<Block> blocks);

    const Block &operator[](std::size_t id) const { return blocks_[id]; }
    const Block &root() const { return blocks_.front(); }
    std::size_t size() const { return blocks_.size(); }
    const std::vector<Block> &blocks() const { return blocks_; }

    // Leaf block ids in ascending order.
    const std::vector<std::size_t> &admissible_leaves() const { return admissible_; }
    const std::vector<std::size_t> &inadmissible_leaves() const { return inadmissible_; }

  private:
    std::vector<Block> blocks_;
    std::vector<std::size_t> admissible_;
    std::vector<std::size_t> inadmissible_;
};

BlockTree build_block_tree(const ClusterTree &tree, const DirectionHierarchy &dirs, const AdmissibilityParams &params);

// Directions a directional cluster basis has to provide in every cluster:
// the block directions of admissible leaves plus everything inherited from
// ancestors through the son maps. Sorted direction indices per cluster.
struct BasisDirections {
    std::vector<std::vector<std::size_t>> rows;
    std::vector<std::vector<std::size_t>> cols;
};

BasisDirections basis_directions(const ClusterTree &tree, const DirectionHierarchy &dirs, const BlockTree &blocks);

struct LevelSparsity {
    int level = 0;
    std::size_t clusters = 0;
    std::size_t max_row = 0;
    std::size_t max_col = 0;
    double mean_row = 0.0;
    std::size_t max_directions = 0; // distinct block directions used by one cluster
    bool low_frequency = false;     // kappa * delta_level <= 1
    bool single_direction = false;  // D_level == {0}
};

struct SparsityStats {
    std::vector<std::size_t> row_count;       // #row(t)
    std::vector<std::size_t> col_count;       // #col(t)
    std::vector<std::size_t> direction_count; // distinct c_b over admissible blocks touching t
    std::vector<LevelSparsity> levels;

    std::size_t max_row() const;
    // Maximum #row(t) over low-frequency levels; 0 if there are none.
    std::size_t max_row_low_frequency() const;
    // Maximum #row(t) over levels with D_level = {0}; 0 if there are none.
    std::size_t max_row_single_direction() const;
};

SparsityStats sparsity_stats(const ClusterTree &tree, const DirectionHierarchy &dirs, const BlockTree &blocks,
                             double wave_number);

// CSV: tLevel,tId,sId,status,directionIndex  (leaves only, block id order).
void write_block_csv(std::ostream &out, const ClusterTree &tree, const BlockTree &blocks);

std::string_view status_name(BlockStatus s);

} // namespace dh2
