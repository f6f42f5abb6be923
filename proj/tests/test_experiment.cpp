#include "doctest.h"
#include "support.hpp"

#include "dh2/experiment.hpp"

#include <sstream>

using namespace dh2;
using namespace testing;

namespace {

LinearOperator op_of(const CMatrix &a) {
    return [&a](const CVector &x) { return naive_apply(a, x); };
}

std::vector<std::string> split(const std::string &s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        out.push_back(item);
    if (!s.empty() && s.back() == sep)
        out.emplace_back();
    return out;
}

} // namespace

TEST_CASE("relative spectral error of known diagonal operators") {
    CMatrix a(3, 3), b(3, 3);
    a(0, 0) = 4.0;
    a(1, 1) = 2.0;
    a(2, 2) = 1.0;
    b = a;
    b(1, 1) = 1.0; // difference diag(0, 1, 0)
    const CMatrix ah = naive_adjoint(a), bh = naive_adjoint(b);
    const double e = relative_spectral_error(op_of(a), op_of(ah), op_of(b), op_of(bh), 3, 1);
    CHECK(e == doctest::Approx(0.25).epsilon(1e-8));
    CHECK(relative_spectral_error(op_of(a), op_of(ah), op_of(a), op_of(ah), 3, 1) == 0.0);
}

TEST_CASE("relative spectral error against svd of the difference") {
    const CMatrix a = random_matrix(10, 10, 3);
    CMatrix b = a;
    const CMatrix d = random_matrix(10, 10, 4);
    for (std::size_t j = 0; j < 10; ++j)
        for (std::size_t i = 0; i < 10; ++i)
            b(i, j) += 1e-3 * d(i, j);
    const auto sa = oracle_singular_values(a);
    const auto sd = oracle_singular_values(d);
    const CMatrix ah = naive_adjoint(a), bh = naive_adjoint(b);
    const double e = relative_spectral_error(op_of(a), op_of(ah), op_of(b), op_of(bh), 10, 7);
    // both norms are power-iteration estimates, so the ratio may land on either side
    const double exact = 1e-3 * sd[0] / sa[0];
    CHECK(std::abs(e - exact) < 0.05 * exact);
}

TEST_CASE("relative spectral error of a zero operator") {
    const CMatrix z(4, 4), a = random_matrix(4, 4, 1);
    const CMatrix ah = naive_adjoint(a);
    CHECK(relative_spectral_error(op_of(z), op_of(z), op_of(z), op_of(z), 4, 1) == 0.0);
    CHECK(std::isinf(relative_spectral_error(op_of(z), op_of(z), op_of(a), op_of(ah), 4, 1)));
}

TEST_CASE("kernel names round trip and unknown names throw") {
    CHECK(parse_kernel("slp") == KernelKind::slp);
    CHECK(parse_kernel("dlp") == KernelKind::dlp);
    CHECK(kernel_name(parse_kernel("dlp")) == "dlp");
    CHECK_THROWS_AS(parse_kernel("SLP"), std::invalid_argument);
    CHECK_THROWS_AS(parse_kernel(""), std::invalid_argument);
}

TEST_CASE("build_problem rejects bad parameters") {
    ExperimentParams p;
    p.level = -1;
    CHECK_THROWS_AS(build_problem(p), std::invalid_argument);
    p.level = max_mesh_level + 1;
    CHECK_THROWS_AS(build_problem(p), std::invalid_argument);
    p.level = 1;
    p.leaf_size = 0;
    CHECK_THROWS_AS(build_problem(p), std::invalid_argument);
    p.leaf_size = 16;
    p.kappa = -1.0;
    CHECK_THROWS_AS(build_problem(p), std::invalid_argument);
    p.kappa = 1.0;
    p.eta1 = 0.0;
    CHECK_THROWS_AS(build_problem(p), std::invalid_argument);
}

TEST_CASE("compression experiment on a small sphere") {
    ExperimentParams p;
    p.level = 3;
    p.kappa = 4.0;
    p.leaf_size = 8;
    const ExperimentReport r = run_compression_experiment(p);
    CHECK(r.method == "dh2");
    CHECK(r.n == 512);
    REQUIRE(r.rel_error.has_value());
    CHECK(*r.rel_error <= 1e-4);
    REQUIRE(r.matrix);
    CHECK(r.matrix->dim() == 512);
    CHECK(r.mem_per_n_kib > 0.0);
    CHECK(r.directions_per_level.size() == static_cast<std::size_t>(r.matrix->tree().depth() + 1));
    CHECK(r.max_row >= r.max_row_low_frequency);
}

TEST_CASE("kappa zero uses a single direction on every level") {
    ExperimentParams p;
    p.level = 2;
    p.kappa = 0.0;
    const ExperimentReport r = run_compression_experiment(p);
    REQUIRE(!r.directions_per_level.empty());
    for (std::size_t d : r.directions_per_level)
        CHECK(d == 1);
}

TEST_CASE("experiment with an explicit input matrix") {
    ExperimentParams p;
    p.level = 1;
    p.kappa = 2.0;
    const CMatrix g = random_matrix(32, 32, 5);
    const ExperimentReport r = run_compression_experiment(p, &g);
    REQUIRE(r.rel_error.has_value());
    CHECK(*r.rel_error < 1e-12); // everything is nearfield at n = 32
    const CMatrix wrong = random_matrix(31, 32, 5);
    CHECK_THROWS_AS(run_compression_experiment(p, &wrong), std::invalid_argument);
}

TEST_CASE("experiment without the dense oracle reports no error") {
    ExperimentParams p;
    p.level = 2;
    p.dense_oracle = false;
    const ExperimentReport r = run_compression_experiment(p);
    CHECK(!r.rel_error.has_value());
    CHECK(r.matrix);
}

TEST_CASE("dense oracle above the cap is refused") {
    ExperimentParams p;
    p.level = 6; // n = 32768
    CHECK_THROWS_AS(run_compression_experiment(p), std::invalid_argument);
}

TEST_CASE("report CSV has a fixed header and deterministic rows") {
    ExperimentParams p;
    p.level = 2;
    p.kappa = 3.0;
    std::ostringstream h;
    write_report_header(h);
    const std::string header = h.str();
    CHECK(header.rfind("method,kernel,n,level,kappa,eps,", 0) == 0);
    const auto cols = split(header.substr(0, header.size() - 1), ',');
    CHECK(header.find("t_") == std::string::npos);

    std::ostringstream a, b;
    write_report_row(a, run_compression_experiment(p));
    write_report_row(b, run_compression_experiment(p));
    CHECK(a.str() == b.str());
    const std::string row = a.str();
    REQUIRE(!row.empty());
    CHECK(row.back() == '\n');
    CHECK(split(row.substr(0, row.size() - 1), ',').size() == cols.size());
    CHECK(row.rfind("dh2,slp,128,2,3,", 0) == 0);
}

TEST_CASE("timing CSV is separate from the report") {
    std::ostringstream h, r;
    write_timing_header(h);
    CHECK(h.str() == "method,n,kappa,t_row,t_col,t_prj,t_mvm\n");
    ExperimentReport rep;
    rep.method = "dh2";
    rep.n = 8;
    rep.params.kappa = 2.0;
    rep.t_row = 0.5;
    write_timing_row(r, rep);
    CHECK(r.str().rfind("dh2,8,2,0.5,", 0) == 0);
}

TEST_CASE("rank cap warnings reach the report") {
    ExperimentParams p;
    p.level = 3;
    p.kappa = 4.0;
    p.leaf_size = 4;
    p.max_rank = 1;
    p.eps = 1e-10;
    const ExperimentReport r = run_compression_experiment(p);
    CHECK(!r.warnings.empty());
    CHECK(r.k_max <= 1);
}

TEST_CASE("interpolation experiment reports an error that decreases with the order") {
    ExperimentParams p;
    p.level = 3;
    p.kappa = 2.0;
    p.leaf_size = 8;
    p.standard_admissibility = true;
    p.eta2 = 2.0;
    p.order = 2;
    const ExperimentReport lo = run_interpolation_experiment(p);
    p.order = 3;
    const ExperimentReport hi = run_interpolation_experiment(p);
    REQUIRE(lo.rel_error.has_value());
    REQUIRE(hi.rel_error.has_value());
    CHECK(hi.method == "interpolation");
    CHECK(*hi.rel_error < *lo.rel_error);
    CHECK(hi.k_max <= 27);
    CHECK(lo.k_max <= 8);
}

TEST_CASE("ACA comparison uses standard admissibility for both methods") {
    ExperimentParams p;
    p.level = 3;
    p.kappa = 2.0;
    p.eta2 = 2.0;
    p.leaf_size = 8;
    const auto [dh, aca] = run_aca_comparison(p);
    CHECK(dh.params.standard_admissibility);
    CHECK(aca.params.standard_admissibility);
    CHECK(aca.method == "aca");
    CHECK(!aca.matrix);
    REQUIRE(dh.rel_error.has_value());
    REQUIRE(aca.rel_error.has_value());
    CHECK(*dh.rel_error <= 1e-4);
    CHECK(*aca.rel_error <= 1e-3);
}
