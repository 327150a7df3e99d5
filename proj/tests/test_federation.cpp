#include <doctest.h>

#include <chrono>
#include <cstring>
#include <filesystem>
#include <set>
#include <thread>
#include <unistd.h>

#include "daniel/federation.hpp"
#include "daniel/optimize.hpp"
#include "daniel/sampling.hpp"
#include "support.hpp"

using namespace daniel;
using namespace std::chrono_literals;

namespace {

double maxabs(const MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

std::filesystem::path scratch_dir(const std::string& tag) {
    const auto dir = std::filesystem::temp_directory_path() /
                     ("daniel_fed_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

bool bit_equal(const MatrixXd& a, const MatrixXd& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

struct Fixture {
    BinaryDataset data;
    ParameterMatrix theta0;

    explicit Fixture(Index n = 1000, Index p = 12) {
        const GroundTruth gt = make_ground_truth(p, 2, 5);
        data = gibbs_sample(gt.theta_star, n, 5, GibbsOptions{20, 1});
        theta0 = convex_init(data.slice(0, n / 7), OptimizerConfig{});
    }
};

} // namespace

TEST_SUITE("federation") {

TEST_CASE("site counts") {
    CHECK(site_count(1000, 0.0) == 1);
    CHECK(site_count(1000, 0.3) == 7);
    CHECK(site_count(1000, 0.5) == 31);
    CHECK(site_count(1000, 1.0 / 3.0) == 10);
    CHECK(site_count(1000, 1.0) == 1000);
    CHECK(site_count(10, 0.5) == 3);
    CHECK_THROWS_AS(site_count(10, -0.1), ContractError);
    CHECK_THROWS_AS(site_count(10, 1.1), ContractError);
    CHECK_THROWS_AS(site_count(0, 0.5), ContractError);
}

TEST_CASE("partition fixtures and invariants") {
    const Partition p10 = make_partition(10, 0.5);
    CHECK(p10.sizes() == std::vector<Index>{4, 3, 3});
    CHECK(p10.first(1) == 0);
    CHECK(p10.first(2) == 4);
    CHECK(p10.first(3) == 7);
    CHECK(make_partition(1000, 0.0).sizes() == std::vector<Index>{1000});

    for (Index n : {1, 7, 100, 1000, 1234})
        for (double x : {0.0, 0.1, 0.3, 0.5, 0.9, 1.0}) {
            const Partition part = make_partition(n, x);
            std::set<Index> seen;
            Index lo = n, hi = 0;
            for (std::uint32_t s = 1; s <= part.m(); ++s) {
                for (Index i : part.indices(s))
                    CHECK(seen.insert(i).second);
                lo = std::min(lo, part.size(s));
                hi = std::max(hi, part.size(s));
                if (s > 1)
                    CHECK(part.size(s) <= part.size(s - 1));
            }
            CHECK(static_cast<Index>(seen.size()) == n);
            CHECK(hi - lo <= 1);
        }
    CHECK_THROWS_AS(Partition(5, 6), ContractError);
    CHECK_THROWS_AS(p10.size(4), ContractError);
}

TEST_CASE("site_gradient fixtures") {
    const BinaryDataset one(SpinMatrix{{1, -1}});
    const GradientMessage g = site_gradient(one, ParameterMatrix::zero(2), 4, 2);
    CHECK(g.gradient == (MatrixXd(2, 2) << -1, 2, 2, 1).finished());
    CHECK(g.n_i == 1);
    CHECK(g.site_id == 4);
    CHECK(g.round_id == 2);
    CHECK(g.checksum_valid());

    const Fixture f(200, 6);
    const GradientMessage a = site_gradient(f.data, f.theta0);
    const GradientMessage b = site_gradient(f.data, f.theta0);
    CHECK(encode_message(a) == encode_message(b));
    CHECK(a.gradient == pseudo_nll_grad(f.theta0, f.data));
    CHECK_THROWS_AS(site_gradient(f.data, ParameterMatrix::zero(5)), ContractError);
}

TEST_CASE("aggregate fixtures") {
    const MatrixXd g1 = fixtures::random_matrix(3, 3, 1);
    const MatrixXd g2 = fixtures::random_matrix(3, 3, 2);
    GradientMessage m1{1, 1, 10, g1, 0};
    GradientMessage m2{2, 1, 10, g2, 0};
    m1.seal();
    m2.seal();
    std::vector<GradientMessage> two{m2, m1};
    CHECK(maxabs(aggregate(two) - (g1 + g2) / 2) < 1e-15);
    std::vector<GradientMessage> single{m1};
    CHECK(aggregate(single) == g1);

    GradientMessage late = m2;
    late.round_id = 2;
    late.seal();
    std::vector<GradientMessage> bad{m1, late};
    CHECK_THROWS_AS(aggregate(bad), ProtocolError);

    GradientMessage corrupt = m2;
    corrupt.gradient(0, 0) += 1;
    bad = {m1, corrupt};
    CHECK_THROWS_AS(aggregate(bad), ProtocolError);

    bad = {m2};
    CHECK_THROWS_AS(aggregate(bad), ProtocolError);
    bad = {m1, m2, m2};
    CHECK_THROWS_AS(aggregate(bad), ProtocolError);
    CHECK_THROWS_AS(aggregate(std::span<const GradientMessage>{}), ProtocolError);
}

TEST_CASE("weighted aggregate over a 7-way split equals the pooled gradient") {
    const Fixture f;
    const Partition part = make_partition(f.data.n(), 0.3);
    REQUIRE(part.m() == 7);
    std::vector<GradientMessage> msgs;
    for (std::uint32_t s = 1; s <= 7; ++s)
        msgs.push_back(site_gradient(part.site_data(f.data, s), f.theta0, s));
    const MatrixXd pooled = pseudo_nll_grad(f.theta0, f.data);
    CHECK(maxabs(aggregate(msgs) - pooled) < 1e-12);
    const MatrixXd hub = msgs.front().gradient;
    CHECK(maxabs(make_correction(aggregate(msgs), hub) - (pooled - hub)) < 1e-12);
}

TEST_CASE("make_correction fixtures") {
    const MatrixXd g = fixtures::random_matrix(4, 4, 3);
    CHECK(make_correction(g, g) == MatrixXd::Zero(4, 4));
    CHECK(make_correction(g, MatrixXd::Zero(4, 4)) == g);
    CHECK_THROWS_AS(make_correction(g, MatrixXd::Zero(3, 3)), ContractError);
}

TEST_CASE("m = 2 equal halves: hub gradient plus correction is the pooled gradient") {
    const Fixture f(400, 8);
    const Partition part(400, 2);
    const RoundResult r = run_round(TransportOptions{}, part, f.theta0, f.data);
    const MatrixXd hub = pseudo_nll_grad(f.theta0, part.site_data(f.data, 1));
    CHECK(maxabs(surrogate_gradient_theta(f.theta0, part.site_data(f.data, 1), r.correction) -
                 pseudo_nll_grad(f.theta0, f.data)) < 1e-12);
    CHECK(maxabs(r.hub_gradient - hub) == 0.0);
}

TEST_CASE("one round, three transports, identical bits") {
    const Fixture f;
    for (double x : {0.1, 0.3, 0.5}) {
        const Partition part = make_partition(f.data.n(), x);
        const RoundResult in = run_round(TransportOptions{}, part, f.theta0, f.data);

        TransportOptions dir;
        dir.kind = TransportKind::Directory;
        dir.exchange_dir = scratch_dir("dir");
        const RoundResult viadir = run_round(dir, part, f.theta0, f.data);

        TransportOptions tcp;
        tcp.kind = TransportKind::Tcp;
        const RoundResult viatcp = run_round(tcp, part, f.theta0, f.data);

        CHECK(bit_equal(in.correction, viadir.correction));
        CHECK(bit_equal(in.correction, viatcp.correction));
        for (const RoundResult* r : {&in, &viadir, &viatcp}) {
            CHECK(r->stats.broadcasts_sent == (part.m() > 1 ? 1 : 0));
            CHECK(r->stats.uploads_received == part.m() - 1);
            CHECK(r->stats.messages_aggregated == part.m());
        }
        CHECK(maxabs(in.global_gradient - pseudo_nll_grad(f.theta0, f.data)) < 1e-12);
        std::filesystem::remove_all(dir.exchange_dir);
    }
}

TEST_CASE("m = 1 needs no messages and gives a zero correction") {
    const Fixture f(300, 6);
    const Partition part(300, 1);
    for (TransportKind kind : {TransportKind::InProcess, TransportKind::Directory, TransportKind::Tcp}) {
        TransportOptions t;
        t.kind = kind;
        t.exchange_dir = scratch_dir("m1");
        const RoundResult r = run_round(t, part, f.theta0, f.data);
        CHECK(r.correction == MatrixXd::Zero(6, 6));
        CHECK(r.stats.uploads_received == 0);
        CHECK(r.stats.messages_aggregated == 1);
        std::filesystem::remove_all(t.exchange_dir);
    }
}

TEST_CASE("missing uploads fail the round at the deadline") {
    const Fixture f(100, 4);
    const auto dir = scratch_dir("late");
    auto hub = make_directory_hub(dir, 1, 200ms);
    CHECK_THROWS_AS(hub_round(*hub, f.theta0, f.data, 3), ProtocolError);

    TcpHubChannel tcp("127.0.0.1", 0, 200ms);
    CHECK_THROWS_AS(hub_round(tcp, f.theta0, f.data, 2), ProtocolError);

    InProcessExchange ex(200ms);
    auto inproc = ex.hub();
    CHECK_THROWS_AS(hub_round(*inproc, f.theta0, f.data, 2), ProtocolError);

    auto site = make_directory_site(dir, 9, 2, 100ms);
    CHECK_THROWS_AS(site->receive_broadcast(), ProtocolError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("hub rejects uploads from the wrong round or a corrupted payload") {
    const Fixture f(100, 4);
    const auto dir = scratch_dir("bad");
    auto hub = make_directory_hub(dir, 1, 2s);
    GradientMessage g = site_gradient(f.data, f.theta0, 2, 5);
    write_file_atomic(upload_path(dir, 1, 2), encode_message(g));
    CHECK_THROWS_AS(hub_round(*hub, f.theta0, f.data, 2), ProtocolError);

    g = site_gradient(f.data, f.theta0, 2, 1);
    Bytes b = encode_message(g);
    b[30] ^= 1;
    write_file_atomic(upload_path(dir, 1, 2), b);
    CHECK_THROWS_AS(hub_round(*hub, f.theta0, f.data, 2), WireError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("transport file naming") {
    CHECK(broadcast_path("x", 3).filename() == "round_3_theta0.dnl");
    CHECK(upload_path("x", 3, 5).filename() == "round_3_site_5.dnl");
}

} // TEST_SUITE
