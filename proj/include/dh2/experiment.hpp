#pragma once
//
// End-to-end pipeline: mesh -> cluster tree -> directions -> block tree ->
// compression (or interpolation) -> matvec -> error and storage report.
//

#include "dh2/compression.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dh2 {

struct ExperimentParams {
    int level = 4;
    double kappa = 8.0;
    double eps = 1e-4;
    double eta1 = 20.0;
    double eta2 = 5.0;
    double zeta = 0.3;
    int order = 4;
    std::size_t leaf_size = 16;
    KernelKind kernel = KernelKind::slp;
    bool standard_admissibility = false;
    std::uint64_t seed = 1;
    bool dense_oracle = true;
    Weighting weighting = Weighting::block_relative;
    std::size_t max_rank = 1000;
};

// Largest dimension for which a dense oracle is assembled.
constexpr std::size_t max_dense_dim = 8192;

struct Problem {
    SurfaceMesh mesh;
    KernelSpec spec;
    std::shared_ptr<const ClusterTree> tree;
    std::shared_ptr<const DirectionHierarchy> dirs;
    std::shared_ptr<const BlockTree> blocks;
};

Problem build_problem(const ExperimentParams &p);

struct ExperimentReport {
    std::string method; // dh2, interpolation, aca
    ExperimentParams params;
    std::size_t n = 0;
    double t_row = 0.0;
    double t_col = 0.0;
    double t_prj = 0.0;
    double t_mvm = 0.0;
    std::size_t k_max = 0;
    double mem_per_n_kib = 0.0;
    std::optional<double> rel_error;
    std::vector<std::size_t> directions_per_level;
    std::size_t max_row = 0;
    std::size_t max_row_low_frequency = 0;
    std::size_t max_row_single_direction = 0;
    std::vector<std::string> warnings;
    std::shared_ptr<const DH2Matrix> matrix; // not set for aca
};

// ||A - B||_2 / ||A||_2 by power iteration (50 steps, fixed seed).
double relative_spectral_error(const LinearOperator &a, const LinearOperator &a_adj, const LinearOperator &b,
                               const LinearOperator &b_adj, std::size_t dim, std::uint64_t seed);

// `input` replaces the generated Galerkin matrix (it must match the mesh
// dimension) and then also serves as the error oracle.
ExperimentReport run_compression_experiment(const ExperimentParams &p, const CMatrix *input = nullptr);
ExperimentReport run_interpolation_experiment(const ExperimentParams &p);

// Same matrix, standard admissibility, compressed by DH2 and by ACA.
std::pair<ExperimentReport, ExperimentReport> run_aca_comparison(ExperimentParams p);

// Deterministic CSV (no wall-clock fields).
void write_report_header(std::ostream &out);
void write_report_row(std::ostream &out, const ExperimentReport &r);
// Wall-clock timings, one row per report.
void write_timing_header(std::ostream &out);
void write_timing_row(std::ostream &out, const ExperimentReport &r);

std::string kernel_name(KernelKind k);
KernelKind parse_kernel(const std::string &s);

} // namespace dh2
