#include "dh2/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>

namespace dh2 {

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point start) {
    return std::chrono::duration<double>(clock_type::now() - start).count();
}

std::string fmt_general(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string fmt_sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.5e", v);
    return buf;
}

void fill_structure(ExperimentReport &r, const Problem &pb) {
    r.n = pb.mesh.size();
    for (std::size_t l = 0; l < pb.dirs->level_count(); ++l)
        r.directions_per_level.push_back(pb.dirs->count(static_cast<int>(l)));
    const SparsityStats st = sparsity_stats(*pb.tree, *pb.dirs, *pb.blocks, pb.spec.wave_number);
    r.max_row = st.max_row();
    r.max_row_low_frequency = st.max_row_low_frequency();
    r.max_row_single_direction = st.max_row_single_direction();
}

void check_oracle(const ExperimentParams &p, std::size_t n) {
    if (p.dense_oracle && n > max_dense_dim)
        throw std::invalid_argument("dense oracle requested for n=" + std::to_string(n) + " above cap " +
                                    std::to_string(max_dense_dim));
}

LinearOperator dense_op(const CMatrix &g) {
    return [&g](const CVector &x) { return dh2::apply(g, x); };
}
LinearOperator dense_adj(const CMatrix &g) {
    return [&g](const CVector &x) { return dh2::apply_adjoint(g, x); };
}

template <class M> double time_matvec(const M &a, std::uint64_t seed) {
    const CVector x = random_vector(a.dim(), seed);
    const auto start = clock_type::now();
    const CVector y = matvec(a, x);
    (void)y;
    return seconds_since(start);
}

ExperimentReport compress_with(const ExperimentParams &p, const Problem &pb, const CMatrix *dense) {
    ExperimentReport r;
    r.method = "dh2";
    r.params = p;
    fill_structure(r, pb);

    const KernelSource lazy(pb.mesh, pb.spec);
    std::optional<DenseSource> ds;
    if (dense)
        ds.emplace(*dense);
    const MatrixSource &src = dense ? static_cast<const MatrixSource &>(*ds) : lazy;

    CompressionConfig cfg;
    cfg.eps = p.eps;
    cfg.zeta = p.zeta;
    cfg.max_rank = p.max_rank;
    cfg.weighting = p.weighting;
    CompressionResult res = compress(src, pb.tree, pb.dirs, pb.blocks, cfg);
    r.t_row = res.timings.row_basis;
    r.t_col = res.timings.col_basis;
    r.t_prj = res.timings.projection;
    r.warnings = res.warnings;
    r.k_max = std::max(res.matrix.row_basis.max_rank(), res.matrix.col_basis.max_rank());
    r.mem_per_n_kib = storage_report(res.matrix).kib_per_dof;
    r.t_mvm = time_matvec(res.matrix, p.seed);
    r.matrix = std::make_shared<const DH2Matrix>(std::move(res.matrix));
    if (dense) {
        const DH2Matrix &a = *r.matrix;
        r.rel_error = relative_spectral_error(
            dense_op(*dense), dense_adj(*dense), [&a](const CVector &x) { return matvec(a, x); },
            [&a](const CVector &x) { return matvec_adjoint(a, x); }, a.dim(), p.seed);
    }
    return r;
}

} // namespace

std::string kernel_name(KernelKind k) { return k == KernelKind::slp ? "slp" : "dlp"; }

KernelKind parse_kernel(const std::string &s) {
    if (s == "slp")
        return KernelKind::slp;
    if (s == "dlp")
        return KernelKind::dlp;
    throw std::invalid_argument("unknown kernel '" + s + "' (expected slp or dlp)");
}

Problem build_problem(const ExperimentParams &p) {
    if (p.level < 0 || p.level > max_mesh_level)
        throw std::invalid_argument("mesh level " + std::to_string(p.level) + " outside [0, " +
                                    std::to_string(max_mesh_level) + "]");
    if (p.leaf_size < 1)
        throw std::invalid_argument("leaf size must be at least 1");
    if (!(p.kappa >= 0.0) || !(p.eta1 > 0.0) || !(p.eta2 > 0.0))
        throw std::invalid_argument("kappa must be >= 0 and eta1, eta2 positive");
    Problem pb;
    pb.mesh = build_sphere_mesh(p.level);
    pb.spec = KernelSpec{p.kernel, p.kappa};
    std::vector<double> radius(pb.mesh.size());
    for (std::size_t t = 0; t < radius.size(); ++t)
        radius[t] = pb.mesh.circumradius(t);
    auto tree = std::make_shared<const ClusterTree>(build_cluster_tree(pb.mesh.midpoints, p.leaf_size, radius));
    std::vector<double> diam;
    for (int l = 0; l <= tree->depth(); ++l)
        diam.push_back(level_diameter(*tree, l));
    auto dirs = std::make_shared<const DirectionHierarchy>(build_directions(diam, p.kappa, p.eta1));
    AdmissibilityParams ap{p.kappa, p.eta1, p.eta2, !p.standard_admissibility};
    pb.blocks = std::make_shared<const BlockTree>(build_block_tree(*tree, *dirs, ap));
    pb.tree = std::move(tree);
    pb.dirs = std::move(dirs);
    return pb;
}

double relative_spectral_error(const LinearOperator &a, const LinearOperator &a_adj, const LinearOperator &b,
                               const LinearOperator &b_adj, std::size_t dim, std::uint64_t seed) {
    auto diff = [&](const LinearOperator &f, const LinearOperator &g) {
        return [pf = &f, pg = &g](const CVector &x) {
            CVector y = (*pf)(x);
            const CVector z = (*pg)(x);
            for (std::size_t i = 0; i < y.size(); ++i)
                y[i] -= z[i];
            return y;
        };
    };
    const double na = power_iteration_norm(a, a_adj, dim, 50, seed);
    const double nd = power_iteration_norm(diff(a, b), diff(a_adj, b_adj), dim, 50, seed);
    if (na == 0.0)
        return nd == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return nd / na;
}

ExperimentReport run_compression_experiment(const ExperimentParams &p, const CMatrix *input) {
    const Problem pb = build_problem(p);
    if (input) {
        if (input->rows() != pb.mesh.size() || input->cols() != pb.mesh.size())
            throw std::invalid_argument("input matrix is " + std::to_string(input->rows()) + "x" +
                                        std::to_string(input->cols()) + " but the mesh has " +
                                        std::to_string(pb.mesh.size()) + " triangles");
        return compress_with(p, pb, input);
    }
    check_oracle(p, pb.mesh.size());
    if (!p.dense_oracle)
        return compress_with(p, pb, nullptr);
    const CMatrix g = assemble_dense_matrix(pb.mesh, pb.spec);
    return compress_with(p, pb, &g);
}

ExperimentReport run_interpolation_experiment(const ExperimentParams &p) {
    const Problem pb = build_problem(p);
    check_oracle(p, pb.mesh.size());
    ExperimentReport r;
    r.method = "interpolation";
    r.params = p;
    fill_structure(r, pb);
    const auto start = clock_type::now();
    r.matrix = std::make_shared<const DH2Matrix>(
        assemble_dh2_by_interpolation(pb.mesh, pb.spec, pb.tree, pb.dirs, pb.blocks, p.order));
    const DH2Matrix &a = *r.matrix;
    r.t_row = seconds_since(start);
    r.k_max = std::max(a.row_basis.max_rank(), a.col_basis.max_rank());
    r.mem_per_n_kib = storage_report(a).kib_per_dof;
    r.t_mvm = time_matvec(a, p.seed);
    if (p.dense_oracle) {
        const CMatrix g = assemble_dense_matrix(pb.mesh, pb.spec);
        r.rel_error = relative_spectral_error(
            dense_op(g), dense_adj(g), [&a](const CVector &x) { return matvec(a, x); },
            [&a](const CVector &x) { return matvec_adjoint(a, x); }, a.dim(), p.seed);
    }
    return r;
}

std::pair<ExperimentReport, ExperimentReport> run_aca_comparison(ExperimentParams p) {
    p.standard_admissibility = true;
    const Problem pb = build_problem(p);
    check_oracle(p, pb.mesh.size());
    std::optional<CMatrix> g;
    if (p.dense_oracle)
        g = assemble_dense_matrix(pb.mesh, pb.spec);
    ExperimentReport dh = compress_with(p, pb, g ? &*g : nullptr);

    ExperimentReport ar;
    ar.method = "aca";
    ar.params = p;
    fill_structure(ar, pb);
    const KernelSource lazy(pb.mesh, pb.spec);
    std::optional<DenseSource> ds;
    if (g)
        ds.emplace(*g);
    const MatrixSource &src = g ? static_cast<const MatrixSource &>(*ds) : lazy;
    const auto start = clock_type::now();
    const HMatrix h = aca_compress(src, pb.tree, pb.blocks, p.eps, p.max_rank);
    ar.t_row = seconds_since(start);
    ar.k_max = h.max_rank();
    ar.mem_per_n_kib = storage_report(h).kib_per_dof;
    ar.t_mvm = time_matvec(h, p.seed);
    if (g) {
        const CMatrix &gm = *g;
        ar.rel_error = relative_spectral_error(
            dense_op(gm), dense_adj(gm), [&h](const CVector &x) { return matvec(h, x); },
            [&h](const CVector &x) { return matvec_adjoint(h, x); }, h.dim(), p.seed);
    }
    return {std::move(dh), std::move(ar)};
}

void write_report_header(std::ostream &out) {
    out << "method,kernel,n,level,kappa,eps,eta1,eta2,zeta,order,leaf_size,standard_admissibility,weighting,"
           "seed,k_max,mem_per_n_kib,rel_error,directions_per_level,max_row,max_row_low_frequency,max_row_single_direction\n";
}

void write_report_row(std::ostream &out, const ExperimentReport &r) {
    const auto &p = r.params;
    std::string dirs;
    for (std::size_t i = 0; i < r.directions_per_level.size(); ++i)
        dirs += (i ? ";" : "") + std::to_string(r.directions_per_level[i]);
    out << r.method << ',' << kernel_name(p.kernel) << ',' << r.n << ',' << p.level << ',' << fmt_general(p.kappa)
        << ',' << fmt_sci(p.eps) << ',' << fmt_general(p.eta1) << ',' << fmt_general(p.eta2) << ','
        << fmt_general(p.zeta) << ',' << p.order << ',' << p.leaf_size << ',' << (p.standard_admissibility ? 1 : 0)
        << ',' << (p.weighting == Weighting::none ? "none" : "block_relative") << ',' << p.seed << ',' << r.k_max
        << ',' << fmt_general(r.mem_per_n_kib) << ',' << (r.rel_error ? fmt_sci(*r.rel_error) : std::string())
        << ',' << dirs << ',' << r.max_row << ',' << r.max_row_low_frequency << ','
        << r.max_row_single_direction << '\n';
}

void write_timing_header(std::ostream &out) { out << "method,n,kappa,t_row,t_col,t_prj,t_mvm\n"; }

void write_timing_row(std::ostream &out, const ExperimentReport &r) {
    out << r.method << ',' << r.n << ',' << fmt_general(r.params.kappa) << ',' << fmt_general(r.t_row) << ','
        << fmt_general(r.t_col) << ',' << fmt_general(r.t_prj) << ',' << fmt_general(r.t_mvm) << '\n';
}

} // namespace dh2
