#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "daniel/federation.hpp"
#include "daniel/harness.hpp"

using namespace daniel;

namespace {

ExperimentConfig tiny_config() {
    ExperimentConfig cfg;
    cfg.p_list = {10};
    cfg.n_list = {200};
    cfg.x_list = {0.0, 0.3};
    cfg.methods = {Method::Daniel, Method::SvTopd};
    cfg.reps = 2;
    cfg.burn_in = 20;
    return cfg;
}

} // namespace

TEST_SUITE("harness") {

TEST_CASE("method names round trip") {
    for (Method m : kAllMethods)
        CHECK(parse_method(method_name(m)) == m);
    CHECK(parse_method("sv-topd") == Method::SvTopd);
    CHECK(parse_method("daniel") == Method::Daniel);
    CHECK_THROWS_AS(parse_method("lasso"), ContractError);
}

TEST_CASE("config text round trip") {
    ExperimentConfig cfg = tiny_config();
    cfg.eta_grid = {0.1, 0.2, 0.3};
    cfg.d = 3;
    cfg.optimizer.eta = 0.15;
    cfg.output_path = "out/r.csv";
    const ExperimentConfig back = ExperimentConfig::parse(cfg.serialize());
    CHECK(back == cfg);

    const ExperimentConfig parsed = ExperimentConfig::parse("# grid\np_list = [20, 30]\nx_list=[0,0.5]\nreps = 3\n");
    CHECK(parsed.p_list == std::vector<Index>{20, 30});
    CHECK(parsed.x_list == std::vector<double>{0.0, 0.5});
    CHECK(parsed.reps == 3);
    CHECK(parsed.d_for(30) == 3);
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS(ExperimentConfig::parse("bogus = 1\n"), ContractError);
    CHECK_THROWS_AS(ExperimentConfig::parse("reps = 1\nreps = 2\n"), ContractError);
    CHECK_THROWS_AS(ExperimentConfig::parse("reps = many\n"), ContractError);
    ExperimentConfig cfg = tiny_config();
    cfg.methods.clear();
    CHECK_THROWS_AS(cfg.validate(), ContractError);
    cfg = tiny_config();
    cfg.x_list = {1.5};
    CHECK_THROWS_AS(cfg.validate(), ContractError);
    cfg = tiny_config();
    cfg.reps = 0;
    CHECK_THROWS_AS(cfg.validate(), ContractError);
    cfg = tiny_config();
    cfg.d = 20;
    CHECK_THROWS_AS(cfg.validate(), ContractError);
}

TEST_CASE("cell seeds are distinct across the grid") {
    std::set<std::uint64_t> seen;
    std::size_t count = 0;
    for (Index p : {20, 50})
        for (Index n : {1000, 5000})
            for (double x : {0.0, 0.1, 0.2, 0.3, 0.4, 0.5})
                for (Method m : kAllMethods)
                    for (int rep = 0; rep < 20; ++rep) {
                        seen.insert(cell_seed(7, p, n, x, m, rep));
                        ++count;
                    }
    CHECK(seen.size() == count);
    CHECK(cell_seed(7, 20, 1000, 0.1, Method::Daniel, 0) == cell_seed(7, 20, 1000, 0.1, Method::Daniel, 0));
    CHECK(cell_seed(7, 20, 1000, 0.1, Method::Daniel, 0) != cell_seed(8, 20, 1000, 0.1, Method::Daniel, 0));
}

TEST_CASE("run_cell is deterministic apart from wall time") {
    const ExperimentConfig cfg = tiny_config();
    for (Method m : kAllMethods) {
        const ResultRow a = run_cell(cfg, 10, 1, 200, 0.3, m, 0);
        const ResultRow b = run_cell(cfg, 10, 1, 200, 0.3, m, 0);
        CHECK(a.frob_err == b.frob_err);
        CHECK(a.subspace_err == b.subspace_err);
        CHECK(a.iterations == b.iterations);
        CHECK(a.seed == b.seed);
        CHECK(a.m == site_count(200, 0.3));
        CHECK(std::isfinite(a.frob_err));
        CHECK(a.wall_time_ms >= 0);
    }
}

TEST_CASE("x = 0 runs on a single site") {
    const ResultRow r = run_cell(tiny_config(), 10, 1, 200, 0.0, Method::Daniel, 1);
    CHECK(r.m == 1);
    CHECK(r.x == 0.0);
    CHECK(r.rep == 1);
}

TEST_CASE("run_grid covers the grid in order") {
    const ExperimentConfig cfg = tiny_config();
    const std::vector<ResultRow> serial = run_grid(cfg);
    CHECK(serial.size() == 2 * 2 * 2);
    for (std::size_t k = 1; k < serial.size(); ++k) {
        const auto& a = serial[k - 1];
        const auto& b = serial[k];
        CHECK(std::make_tuple(method_id(a.method), a.x, a.rep) < std::make_tuple(method_id(b.method), b.x, b.rep));
    }
    GridOptions opts;
    opts.jobs = 3;
    std::size_t last = 0;
    opts.progress = [&](std::size_t done, std::size_t) { last = std::max(last, done); };
    const std::vector<ResultRow> par = run_grid(cfg, opts);
    CHECK(last == serial.size());
    REQUIRE(par.size() == serial.size());
    for (std::size_t k = 0; k < par.size(); ++k)
        CHECK(par[k].frob_err == serial[k].frob_err);
}

TEST_CASE("csv header and lossless round trip") {
    ResultRow r;
    r.method = Method::PsdCvx;
    r.p = 50;
    r.d = 5;
    r.n = 1000;
    r.x = 0.1;
    r.m = 1;
    r.rep = 4;
    r.frob_err = 1.0 / 3.0;
    r.subspace_err = std::nextafter(0.2, 1.0);
    r.iterations = 17;
    r.wall_time_ms = 12.5;
    r.seed = 0xFFFFFFFFFFFFFFFFULL;
    ResultRow bad = r;
    bad.diverged = true;
    bad.frob_err = bad.subspace_err = std::nan("");

    std::stringstream ss;
    write_csv(ss, {r, bad});
    std::string header;
    std::getline(std::istringstream(ss.str()), header);
    CHECK(header == kCsvHeader);

    const std::vector<ResultRow> back = read_csv(ss);
    REQUIRE(back.size() == 2);
    CHECK(back[0].method == r.method);
    CHECK(back[0].x == r.x);
    CHECK(back[0].frob_err == r.frob_err);
    CHECK(back[0].subspace_err == r.subspace_err);
    CHECK(back[0].seed == r.seed);
    CHECK(back[0].iterations == r.iterations);
    CHECK(std::isnan(back[1].frob_err));
    CHECK(back[1].diverged);
}

TEST_CASE("csv file output leaves no partial file behind") {
    const auto dir = std::filesystem::temp_directory_path() / "daniel_harness_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    write_csv(dir / "r.csv", {ResultRow{}});
    CHECK(std::filesystem::exists(dir / "r.csv"));
    CHECK(!std::filesystem::exists(dir / "r.csv.partial"));
    CHECK_THROWS(write_csv(dir / "missing" / "r.csv", {ResultRow{}}));
    std::filesystem::remove_all(dir);
}

} // TEST_SUITE
