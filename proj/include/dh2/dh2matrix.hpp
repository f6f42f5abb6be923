#pragma once
//
// DH2 matrix: directional cluster bases for rows and columns, coupling
// matrices for admissible leaves and dense nearfield blocks, together with
// the fast three-phase matrix-vector product.
//

#include "dh2/blocktree.hpp"
#include "dh2/clustering.hpp"
#include "dh2/directions.hpp"
#include "dh2/linalg.hpp"

#include <memory>
#include <string>
#include <vector>

namespace dh2 {

// Basis data for one (cluster, direction) pair.
struct BasisEntry {
    std::size_t direction = 0;
    std::size_t rank = 0;
    CMatrix leaf;                        // #t x rank, leaf clusters only
    std::vector<CMatrix> transfer;       // per son (cluster son order): rank(son, sd(c)) x rank
    std::vector<std::size_t> son_slots;  // slot of sd(c) in each son's entry list
};

class DirectionalClusterBasis {
  public:
    DirectionalClusterBasis() = default;
    explicit DirectionalClusterBasis(std::size_t clusters) : entries_(clusters) {}

    std::size_t cluster_count() const { return entries_.size(); }
    std::vector<BasisEntry> &entries(std::size_t t) { return entries_[t]; }
    const std::vector<BasisEntry> &entries(std::size_t t) const { return entries_[t]; }

    // Slot of direction `dir` in cluster t, or npos.
    std::size_t slot(std::size_t t, std::size_t dir) const;
    std::size_t rank(std::size_t t, std::size_t dir) const;
    std::size_t max_rank() const;

    // Fills son_slots from the son maps; call after all entries exist.
    void link(const ClusterTree &tree, const DirectionHierarchy &dirs);

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  private:
    std::vector<std::vector<BasisEntry>> entries_;
};

struct StorageReport {
    std::size_t leaf_entries = 0;
    std::size_t transfer_entries = 0;
    std::size_t coupling_entries = 0;
    std::size_t nearfield_entries = 0;
    std::size_t total_entries = 0;
    double kib_per_dof = 0.0; // 16 bytes per complex entry
};

// Per-call multiplication counters, one per stored matrix kind.
struct MatvecCounters {
    std::size_t leaf = 0;
    std::size_t transfer = 0;
    std::size_t coupling = 0;
    std::size_t nearfield = 0;
};

class DH2Matrix {
  public:
    DH2Matrix(std::shared_ptr<const ClusterTree> tree, std::shared_ptr<const DirectionHierarchy> dirs,
              std::shared_ptr<const BlockTree> blocks);

    std::size_t dim() const { return tree_->index_count(); }

    const ClusterTree &tree() const { return *tree_; }
    const DirectionHierarchy &directions() const { return *dirs_; }
    const BlockTree &blocks() const { return *blocks_; }
    std::shared_ptr<const ClusterTree> tree_ptr() const { return tree_; }
    std::shared_ptr<const DirectionHierarchy> directions_ptr() const { return dirs_; }
    std::shared_ptr<const BlockTree> blocks_ptr() const { return blocks_; }

    DirectionalClusterBasis row_basis;
    DirectionalClusterBasis col_basis;
    // Indexed like blocks().admissible_leaves() / inadmissible_leaves().
    std::vector<CMatrix> coupling;
    std::vector<CMatrix> nearfield;

    // Checks shapes of all stored matrices against the trees; throws on mismatch.
    void validate() const;

  private:
    std::shared_ptr<const ClusterTree> tree_;
    std::shared_ptr<const DirectionHierarchy> dirs_;
    std::shared_ptr<const BlockTree> blocks_;
};

CVector matvec(const DH2Matrix &a, std::span<const cplx> x, MatvecCounters *counters = nullptr);
CVector matvec_adjoint(const DH2Matrix &a, std::span<const cplx> x, MatvecCounters *counters = nullptr);

constexpr std::size_t default_expand_cap = 4096;

// Explicit basis matrix of (t, direction), expanding transfer matrices.
CMatrix expand_basis(const DirectionalClusterBasis &basis, const ClusterTree &tree, std::size_t t, std::size_t dir);

CMatrix expand_dense(const DH2Matrix &a, std::size_t cap = default_expand_cap);

StorageReport storage_report(const DH2Matrix &a);

// DH2v1 container: <dir>/manifest.json plus <dir>/matrices.cmx holding one
// CMX1 record per stored matrix in manifest order.
void save_dh2(const DH2Matrix &a, const std::string &directory);
DH2Matrix load_dh2(const std::string &directory);

} // namespace dh2
