#pragma once
//
// Algebraic compression of an arbitrary matrix into a DH2 matrix with
// orthogonal directional cluster bases, plus the ACA baseline.
//
// The row basis is built bottom-up: a leaf (t,c) takes the leading left
// singular vectors of its weighted far-field matrix G|_{t x F_tc}; a parent
// stacks the reduced matrices R_{t'c'} = Q_{t'c'}^H G|_{t' x F_tc} of its sons
// and repeats the truncation on that small matrix. The column basis is the
// row basis of G^H.
//

#include "dh2/assembly.hpp"
#include "dh2/dh2matrix.hpp"

#include <memory>
#include <string>
#include <vector>

namespace dh2 {

// Sub-block reader for the matrix to be compressed.
class MatrixSource {
  public:
    virtual ~MatrixSource() = default;
    virtual std::size_t rows() const = 0;
    virtual std::size_t cols() const = 0;
    virtual CMatrix block(std::span<const std::size_t> rows, std::span<const std::size_t> cols) const = 0;
};

class DenseSource : public MatrixSource {
  public:
    explicit DenseSource(const CMatrix &m) : m_(m) {}
    std::size_t rows() const override { return m_.rows(); }
    std::size_t cols() const override { return m_.cols(); }
    CMatrix block(std::span<const std::size_t> rows, std::span<const std::size_t> cols) const override;

  private:
    const CMatrix &m_;
};

// Evaluates Galerkin entries on demand; nothing of size n^2 is stored.
class KernelSource : public MatrixSource {
  public:
    KernelSource(const SurfaceMesh &mesh, KernelSpec spec) : mesh_(mesh), spec_(spec) {}
    std::size_t rows() const override { return mesh_.size(); }
    std::size_t cols() const override { return mesh_.size(); }
    CMatrix block(std::span<const std::size_t> rows, std::span<const std::size_t> cols) const override;

  private:
    const SurfaceMesh &mesh_;
    KernelSpec spec_;
};

class AdjointSource : public MatrixSource {
  public:
    explicit AdjointSource(const MatrixSource &inner) : inner_(inner) {}
    std::size_t rows() const override { return inner_.cols(); }
    std::size_t cols() const override { return inner_.rows(); }
    CMatrix block(std::span<const std::size_t> rows, std::span<const std::size_t> cols) const override;

  private:
    const MatrixSource &inner_;
};

enum class Weighting { none, block_relative };

struct CompressionConfig {
    double eps = 1e-4;
    double zeta = 0.3;
    std::size_t max_rank = 1000;
    Weighting weighting = Weighting::block_relative;

    // Throws invalid_argument unless eps > 0, max_rank >= 1 and
    // 0 < zeta with zeta^2 * max_sons < 1.
    void validate(std::size_t max_sons) const;
};

std::size_t max_sons(const ClusterTree &tree);

// --- far-field sets ------------------------------------------------------

enum class BasisSide { row, column };

struct FarfieldEntry {
    std::size_t block = 0; // ordinal in admissible_leaves()
    std::size_t other = 0; // cluster on the opposite side of the block
    std::size_t root = 0;  // ancestor on this side owning the block
};

struct FarfieldSet {
    std::size_t direction = 0;
    std::vector<FarfieldEntry> entries;
    IndexList columns;                // concatenated index sets of `other`
    std::vector<std::size_t> offsets; // first column of each entry
};

// sets[t] is aligned with the directions of basis_directions() on the same side.
struct FarfieldSets {
    std::vector<std::vector<FarfieldSet>> sets;

    const FarfieldSet *find(std::size_t t, std::size_t direction) const;
};

FarfieldSets farfield_sets(const ClusterTree &tree, const DirectionHierarchy &dirs, const BlockTree &blocks,
                           BasisSide side);

// --- weights -------------------------------------------------------------

// ||G|b||_2 for every admissible leaf, by 10 power iteration steps.
std::vector<double> block_norms(const MatrixSource &source, const ClusterTree &tree, const BlockTree &blocks);

// Column weights w_{r,b}. Block-relative mode:
//   w_{r,b} = sqrt(Phi(root)) / ||G|b|| * zeta^{-(level r - level root)}
//   Phi(t)  = 1 + zeta^2 sum_{sons} Phi(t')
// so that truncating every cluster at tolerance tau bounds each block's
// error by tau ||G|b||.
class FarfieldWeights {
  public:
    FarfieldWeights(const ClusterTree &tree, const CompressionConfig &cfg, std::vector<double> norms);

    double operator()(int level, const FarfieldEntry &e) const;
    // w_{t,b} / w_{t',b} for a son t' of t.
    double son_ratio() const;

  private:
    const ClusterTree *tree_;
    Weighting mode_;
    double zeta_;
    std::vector<double> norms_;
    std::vector<double> phi_;
};

// Weighted far-field matrix G^w|_{t x F_tc} in the frame of cluster t.
CMatrix weighted_farfield_matrix(const MatrixSource &source, const ClusterTree &tree, const FarfieldSet &set,
                                 int level, std::size_t t, const FarfieldWeights &weights);

// --- basis construction --------------------------------------------------

struct BasisConstruction {
    DirectionalClusterBasis basis;
    FarfieldSets farfield;
    // Indexed [cluster][slot] like basis.entries().
    std::vector<std::vector<double>> truncation_error; // first discarded singular value
    std::vector<std::vector<CMatrix>> reduced;         // R_tc, kept only on request
    std::size_t capped = 0;                            // truncations where max_rank bound
};

// Builds the basis for `side`; `source` must present that side as rows
// (pass an AdjointSource for the column basis).
BasisConstruction build_basis(const MatrixSource &source, const ClusterTree &tree, const DirectionHierarchy &dirs,
                              const BlockTree &blocks, BasisSide side, const CompressionConfig &cfg,
                              const std::vector<double> &norms, bool keep_reduced = false);

BasisConstruction build_row_basis(const MatrixSource &source, const ClusterTree &tree, const DirectionHierarchy &dirs,
                                  const BlockTree &blocks, const CompressionConfig &cfg, bool keep_reduced = false);

struct CompressionTimings {
    double row_basis = 0.0;
    double col_basis = 0.0;
    double projection = 0.0;
};

struct CompressionResult {
    DH2Matrix matrix;
    CompressionTimings timings;
    std::vector<std::string> warnings;
};

CompressionResult compress(const MatrixSource &source, std::shared_ptr<const ClusterTree> tree,
                           std::shared_ptr<const DirectionHierarchy> dirs, std::shared_ptr<const BlockTree> blocks,
                           const CompressionConfig &cfg);

// --- ACA baseline --------------------------------------------------------

struct LowRankFactors {
    CMatrix a; // m x k
    CMatrix b; // n x k, block ~ a b^H
    std::size_t rank() const { return a.cols(); }
};

// Cross approximation with full pivoting on an explicit block.
LowRankFactors aca_approximate(const CMatrix &block, double tolerance, std::size_t max_rank);

class HMatrix {
  public:
    HMatrix(std::shared_ptr<const ClusterTree> tree, std::shared_ptr<const BlockTree> blocks);

    std::size_t dim() const { return tree_->index_count(); }
    const ClusterTree &tree() const { return *tree_; }
    const BlockTree &blocks() const { return *blocks_; }

    std::vector<LowRankFactors> farfield; // indexed like admissible_leaves()
    std::vector<CMatrix> nearfield;       // indexed like inadmissible_leaves()

    std::size_t max_rank() const;

  private:
    std::shared_ptr<const ClusterTree> tree_;
    std::shared_ptr<const BlockTree> blocks_;
};

HMatrix aca_compress(const MatrixSource &source, std::shared_ptr<const ClusterTree> tree,
                     std::shared_ptr<const BlockTree> blocks, double tolerance, std::size_t max_rank);

CVector matvec(const HMatrix &a, std::span<const cplx> x);
CVector matvec_adjoint(const HMatrix &a, std::span<const cplx> x);

struct HStorageReport {
    std::size_t lowrank_entries = 0;
    std::size_t nearfield_entries = 0;
    std::size_t total_entries = 0;
    double kib_per_dof = 0.0;
};

HStorageReport storage_report(const HMatrix &a);

} // namespace dh2
