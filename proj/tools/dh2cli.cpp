// dh2cli: mesh -> dense -> trees -> compress/assemble -> matvec -> report.

#include "dh2/experiment.hpp"
#include "dh2/simd.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace dh2;

namespace {

struct Options {
    ExperimentParams p;
    std::string kernel = "slp";
    std::string weighting = "block_relative";
    std::string out;
    std::string input;
    std::string save;
    std::string timings;
    std::string tree_out;
    std::string blocks_out;
    bool no_oracle = false;
};

void add_problem_flags(CLI::App *cmd, Options &o) {
    cmd->add_option("--level", o.p.level, "mesh refinement level (n = 8*4^level)")->capture_default_str();
    cmd->add_option("--kappa", o.p.kappa, "wave number")->capture_default_str();
    cmd->add_option("--eta1", o.p.eta1, "directional admissibility parameter")->capture_default_str();
    cmd->add_option("--eta2", o.p.eta2, "parabolic/standard admissibility parameter")->capture_default_str();
    cmd->add_option("--leaf-size", o.p.leaf_size, "maximal leaf cluster size")->capture_default_str();
    cmd->add_option("--kernel", o.kernel, "slp or dlp")->check(CLI::IsMember({"slp", "dlp"}))->capture_default_str();
    cmd->add_flag("--standard-admissibility", o.p.standard_admissibility, "drop the parabolic condition");
    cmd->add_option("--seed", o.p.seed, "seed for random vectors")->capture_default_str();
}

void add_compression_flags(CLI::App *cmd, Options &o) {
    cmd->add_option("--eps", o.p.eps, "block-relative tolerance")->capture_default_str();
    cmd->add_option("--zeta", o.p.zeta, "level decay factor")->capture_default_str();
    cmd->add_option("--max-rank", o.p.max_rank, "rank cap")->capture_default_str();
    cmd->add_option("--weighting", o.weighting, "block_relative or none")
        ->check(CLI::IsMember({"block_relative", "none"}))
        ->capture_default_str();
}

void add_report_flags(CLI::App *cmd, Options &o) {
    cmd->add_option("--out", o.out, "CSV report file (default stdout)");
    cmd->add_option("--timings", o.timings, "wall-clock timings CSV file");
    cmd->add_flag("--no-oracle", o.no_oracle, "skip the dense error oracle");
}

void finish(Options &o) {
    o.p.kernel = parse_kernel(o.kernel);
    o.p.weighting = o.weighting == "none" ? Weighting::none : Weighting::block_relative;
    o.p.dense_oracle = !o.no_oracle;
}

std::ofstream open_out(const std::string &path, std::ios::openmode mode = std::ios::out) {
    std::ofstream f(path, mode);
    if (!f)
        throw std::runtime_error("cannot open '" + path + "' for writing");
    return f;
}

void emit_reports(const Options &o, const std::vector<const ExperimentReport *> &reports) {
    std::ofstream file;
    if (!o.out.empty())
        file = open_out(o.out);
    std::ostream &out = o.out.empty() ? std::cout : file;
    write_report_header(out);
    for (const auto *r : reports)
        write_report_row(out, *r);
    if (!o.timings.empty()) {
        auto t = open_out(o.timings);
        write_timing_header(t);
        for (const auto *r : reports)
            write_timing_row(t, *r);
    }
    for (const auto *r : reports)
        for (const auto &w : r->warnings)
            std::cerr << "warning: " << w << '\n';
}

CMatrix read_input(const std::string &path) {
    if (std::filesystem::is_directory(path))
        return expand_dense(load_dh2(path), max_dense_dim);
    return read_cmx_file(path);
}

int run_mesh(const Options &o) {
    const SurfaceMesh mesh = build_sphere_mesh(o.p.level);
    if (o.out.empty()) {
        write_off(std::cout, mesh);
    } else {
        auto f = open_out(o.out);
        write_off(f, mesh);
    }
    return 0;
}

int run_dense(const Options &o) {
    if (o.out.empty())
        throw std::invalid_argument("dense requires --out <file.cmx>");
    const SurfaceMesh mesh = build_sphere_mesh(o.p.level);
    if (mesh.size() > max_dense_dim)
        throw std::invalid_argument("dense matrix for n=" + std::to_string(mesh.size()) + " exceeds cap " +
                                    std::to_string(max_dense_dim));
    write_cmx_file(o.out, assemble_dense_matrix(mesh, KernelSpec{o.p.kernel, o.p.kappa}));
    return 0;
}

int run_assemble(const Options &o) {
    const ExperimentReport r = run_interpolation_experiment(o.p);
    if (!o.save.empty())
        save_dh2(*r.matrix, o.save);
    emit_reports(o, {&r});
    return 0;
}

int run_compress(const Options &o) {
    std::optional<CMatrix> input;
    if (!o.input.empty())
        input = read_input(o.input);
    const ExperimentReport r = run_compression_experiment(o.p, input ? &*input : nullptr);
    if (!o.save.empty())
        save_dh2(*r.matrix, o.save);
    emit_reports(o, {&r});
    return 0;
}

int run_compare(const Options &o) {
    const auto [dh, aca] = run_aca_comparison(o.p);
    emit_reports(o, {&dh, &aca});
    return 0;
}

int run_matvec(const Options &o, int repeats) {
    if (o.input.empty())
        throw std::invalid_argument("matvec requires --input <DH2v1 directory>");
    const DH2Matrix a = load_dh2(o.input);
    const CVector x = random_vector(a.dim(), o.p.seed);
    CVector y;
    MatvecCounters counters;
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < repeats; ++i)
        y = matvec(a, x, i == 0 ? &counters : nullptr);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / std::max(repeats, 1);
    nlohmann::json j{{"n", a.dim()},
                     {"seconds_per_matvec", secs},
                     {"simd", std::string(simd::isa_name(simd::active().isa))},
                     {"norm_x", norm2(x)},
                     {"norm_y", norm2(y)},
                     {"products", {{"leaf", counters.leaf},
                                   {"transfer", counters.transfer},
                                   {"coupling", counters.coupling},
                                   {"nearfield", counters.nearfield}}}};
    std::cout << j.dump() << '\n';
    if (!o.out.empty())
        write_cmx_file(o.out, CMatrix(y.size(), 1, y));
    return 0;
}

int run_stats(const Options &o) {
    const Problem pb = build_problem(o.p);
    const SparsityStats st = sparsity_stats(*pb.tree, *pb.dirs, *pb.blocks, pb.spec.wave_number);
    nlohmann::json levels = nlohmann::json::array();
    for (const auto &l : st.levels)
        levels.push_back({{"level", l.level},
                          {"clusters", l.clusters},
                          {"directions", pb.dirs->count(l.level)},
                          {"diameter", level_diameter(*pb.tree, l.level)},
                          {"max_row", l.max_row},
                          {"max_col", l.max_col},
                          {"mean_row", l.mean_row},
                          {"max_directions", l.max_directions},
                          {"low_frequency", l.low_frequency},
                          {"single_direction", l.single_direction}});
    nlohmann::json j{{"n", pb.mesh.size()},
                     {"clusters", pb.tree->size()},
                     {"depth", pb.tree->depth()},
                     {"blocks", pb.blocks->size()},
                     {"admissible", pb.blocks->admissible_leaves().size()},
                     {"inadmissible", pb.blocks->inadmissible_leaves().size()},
                     {"max_row", st.max_row()},
                     {"max_row_low_frequency", st.max_row_low_frequency()},
                     {"max_row_single_direction", st.max_row_single_direction()},
                     {"levels", levels}};
    if (o.out.empty()) {
        std::cout << j.dump(1) << '\n';
    } else {
        auto f = open_out(o.out);
        f << j.dump(1) << '\n';
    }
    if (!o.tree_out.empty()) {
        auto f = open_out(o.tree_out);
        write_cluster_jsonl(f, *pb.tree);
    }
    if (!o.blocks_out.empty()) {
        auto f = open_out(o.blocks_out);
        write_block_csv(f, *pb.tree, *pb.blocks);
    }
    return 0;
}

int fail(const std::string &kind, const std::string &message) {
    std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << '\n';
    return 1;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Directional H2-matrix compression experiments"};
    app.require_subcommand(1);
    Options o;
    int repeats = 10;

    auto *mesh = app.add_subcommand("mesh", "write the sphere mesh (OFF)");
    mesh->add_option("--level", o.p.level)->capture_default_str();
    mesh->add_option("--out", o.out, "OFF file (default stdout)");

    auto *dense = app.add_subcommand("dense", "assemble the dense Galerkin matrix (CMX1)");
    dense->add_option("--level", o.p.level)->capture_default_str();
    dense->add_option("--kappa", o.p.kappa)->capture_default_str();
    dense->add_option("--kernel", o.kernel)->check(CLI::IsMember({"slp", "dlp"}))->capture_default_str();
    dense->add_option("--out", o.out, "CMX1 file")->required();

    auto *assemble = app.add_subcommand("assemble", "build a DH2 matrix by directional interpolation");
    add_problem_flags(assemble, o);
    add_report_flags(assemble, o);
    assemble->add_option("--order", o.p.order, "Chebyshev points per axis")->capture_default_str();
    assemble->add_option("--save", o.save, "write the DH2v1 container here");

    auto *compress = app.add_subcommand("compress", "compress the Galerkin matrix into a DH2 matrix");
    add_problem_flags(compress, o);
    add_compression_flags(compress, o);
    add_report_flags(compress, o);
    compress->add_option("--input", o.input, "CMX1 file or DH2v1 directory to compress instead");
    compress->add_option("--save", o.save, "write the DH2v1 container here");

    auto *mv = app.add_subcommand("matvec", "benchmark the fast matvec of a DH2v1 container");
    mv->add_option("--input", o.input, "DH2v1 directory")->required();
    mv->add_option("--seed", o.p.seed)->capture_default_str();
    mv->add_option("--repeats", repeats)->capture_default_str();
    mv->add_option("--out", o.out, "write y = A x as CMX1");

    auto *aca = app.add_subcommand("compare-aca", "DH2 compression vs ACA under standard admissibility");
    add_problem_flags(aca, o);
    add_compression_flags(aca, o);
    add_report_flags(aca, o);

    auto *stats = app.add_subcommand("stats", "cluster/direction/block statistics");
    add_problem_flags(stats, o);
    stats->add_option("--out", o.out, "JSON file (default stdout)");
    stats->add_option("--tree-out", o.tree_out, "cluster tree as JSON lines");
    stats->add_option("--blocks-out", o.blocks_out, "block leaves as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        return fail("usage", e.what());
    }

    try {
        finish(o);
        if (*mesh)
            return run_mesh(o);
        if (*dense)
            return run_dense(o);
        if (*assemble)
            return run_assemble(o);
        if (*compress)
            return run_compress(o);
        if (*mv)
            return run_matvec(o, repeats);
        if (*aca)
            return run_compare(o);
        if (*stats)
            return run_stats(o);
    } catch (const std::invalid_argument &e) {
        return fail("invalid_argument", e.what());
    } catch (const NumericalError &e) {
        return fail("numerical", e.what());
    } catch (const std::exception &e) {
        return fail("runtime", e.what());
    }
    return 0;
}
