#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "daniel/baselines.hpp"
#include "daniel/dataset_io.hpp"
#include "daniel/evaluate.hpp"
#include "daniel/federation.hpp"
#include "daniel/harness.hpp"
#include "daniel/sampling.hpp"

using namespace daniel;

namespace {

enum Exit { kOk = 0, kUsage = 2, kNumeric = 3, kProtocol = 4 };

struct FitFlags {
    std::string method = "DANIEL";
    Index d = 0;
    double eta = 0.1;
    int gamma = 50;
    double tol = 1e-5;
    std::optional<double> lambda;
    int init_steps = 5;
    double tau = 1e-3;
    std::string theta_out;
    std::string correction_out;

    void add(CLI::App* cmd) {
        cmd->add_option("--method", method, "DANIEL, SvSoft, SvHard, SvTopd or PsdCvx")->capture_default_str();
        cmd->add_option("--d", d, "Rank (default p/10)");
        cmd->add_option("--eta", eta, "Step size")->capture_default_str();
        cmd->add_option("--gamma", gamma, "Maximum iterations")->capture_default_str();
        cmd->add_option("--tol", tol, "Stopping tolerance on ||Theta_g - Theta_{g-1}||_F")->capture_default_str();
        cmd->add_option("--lambda", lambda, "Nuclear penalty for the convex start (default sqrt(p log p / n_hub))");
        cmd->add_option("--init-steps", init_steps, "Proximal steps in the convex start")->capture_default_str();
        cmd->add_option("--tau", tau, "Singular value threshold for SvSoft/SvHard")->capture_default_str();
        cmd->add_option("--theta-out", theta_out, "Write the estimate as a DTH1 file");
        cmd->add_option("--correction-out", correction_out, "Write the correction matrix as a DTH1 file");
    }

    OptimizerConfig optimizer(Index p) const {
        OptimizerConfig c;
        c.eta = eta;
        c.gamma_max = gamma;
        c.tol = tol;
        c.lambda = lambda;
        c.init_steps = init_steps;
        c.d = d > 0 ? d : std::max<Index>(1, p / 10);
        c.validate();
        require(c.d <= p, "--d must not exceed p");
        return c;
    }
};

void print_fit(const std::string& method, Index p, Index n, Index m, Index d, const FitResult& fit) {
    std::printf("method=%s\np=%ld\nn=%ld\nm=%ld\nd=%ld\n", method.c_str(), static_cast<long>(p),
                static_cast<long>(n), static_cast<long>(m), static_cast<long>(d));
    std::printf("iterations=%d\n", fit.iterations_used);
    std::printf("final_delta=%.17g\n", fit.trace.empty() ? 0.0 : fit.trace.back());
    std::printf("theta_norm=%.17g\n", fit.theta_hat.matrix().norm());
    std::printf("wall_time_ms=%.3f\n", fit.wall_time_ms);
}

BaselineMethod make_baseline(Method method, double tau, Index d) {
    switch (method) {
    case Method::SvSoft: return BaselineMethod::sv_soft(tau);
    case Method::SvHard: return BaselineMethod::sv_hard(tau);
    case Method::SvTopd: return BaselineMethod::sv_topd(d);
    case Method::PsdCvx: return BaselineMethod::psd_cvx();
    case Method::Daniel: break;
    }
    throw ContractError("DANIEL is not a baseline");
}

/// Hub-side fit given the hub block and a correction; DANIEL or a surrogate baseline.
FitResult fit_at_hub(const FitFlags& f, const BinaryDataset& hub, const ParameterMatrix& theta0,
                     const MatrixXd& correction, const OptimizerConfig& opt) {
    const Method method = parse_method(f.method);
    if (method == Method::Daniel) {
        const FactorPair init = symmetric_init_from(theta0, opt.d);
        return daniel_fit(hub, correction, init.u, init.v, opt);
    }
    return baseline_fit(GradientSource::surrogate(hub, correction), make_baseline(method, f.tau, opt.d), opt);
}

std::pair<std::string, std::uint16_t> split_host_port(const std::string& s) {
    const auto colon = s.rfind(':');
    if (colon == std::string::npos)
        throw ContractError("--hub expects host:port");
    const int port = std::stoi(s.substr(colon + 1));
    if (port <= 0 || port > 65535)
        throw ContractError("--hub port out of range");
    return {s.substr(0, colon), static_cast<std::uint16_t>(port)};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"DANIEL: distributed low-rank Ising estimation"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Draw a low-rank ground truth and Gibbs samples from it");
    Index sim_p = 0, sim_d = 0, sim_n = 0;
    std::uint64_t sim_seed = 1;
    int sim_burn = 200;
    unsigned sim_threads = 1;
    std::string sim_out, sim_truth;
    bool sim_binary = false;
    sim->add_option("--p", sim_p, "Dimension")->required()->check(CLI::PositiveNumber);
    sim->add_option("--d", sim_d, "Rank")->required()->check(CLI::PositiveNumber);
    sim->add_option("--n", sim_n, "Samples")->required()->check(CLI::PositiveNumber);
    sim->add_option("--seed", sim_seed, "Seed")->capture_default_str();
    sim->add_option("--burn-in", sim_burn, "Gibbs sweeps per sample")->capture_default_str();
    sim->add_option("--threads", sim_threads, "Sampling threads (0 = all cores)")->capture_default_str();
    sim->add_option("--out", sim_out, "Dataset file")->required();
    sim->add_option("--truth-out", sim_truth, "Write Theta* as a DTH1 file");
    sim->add_flag("--binary", sim_binary, "Write the ISD1 binary format");

    // fit
    auto* fit = app.add_subcommand("fit", "Fit on one dataset, simulating the sites in-process");
    std::string fit_data;
    FitFlags fit_flags;
    std::optional<double> fit_x;
    std::optional<Index> fit_sites;
    fit->add_option("--data", fit_data, "Dataset file")->required();
    fit_flags.add(fit);
    auto* x_opt = fit->add_option("--x", fit_x, "Distributedness: m = floor(n^x)");
    fit->add_option("--sites", fit_sites, "Explicit site count")->excludes(x_opt);

    // experiment
    auto* exp = app.add_subcommand("experiment", "Run a simulation grid and write a CSV");
    std::string exp_config, exp_out;
    unsigned exp_jobs = 1;
    std::optional<int> exp_reps;
    exp->add_option("--config", exp_config, "Config file")->required();
    exp->add_option("--out", exp_out, "CSV path (default: output_path from the config)");
    exp->add_option("--jobs", exp_jobs, "Worker threads")->capture_default_str();
    exp->add_option("--reps", exp_reps, "Override the repetition count");

    // federate-hub
    auto* fh = app.add_subcommand("federate-hub", "Hub side of a multi-process one-shot round, then the fit");
    std::string fh_data, fh_dir, fh_host = "127.0.0.1";
    std::optional<int> fh_port;
    std::uint32_t fh_sites = 0, fh_round = 1;
    FitFlags fh_flags;
    fh->add_option("--data", fh_data, "Hub's local dataset")->required();
    fh->add_option("--sites", fh_sites, "Total number of sites including the hub")->required()->check(
        CLI::PositiveNumber);
    auto* fh_port_opt = fh->add_option("--port", fh_port, "TCP port to listen on");
    fh->add_option("--exchange-dir", fh_dir, "Shared directory transport")->excludes(fh_port_opt);
    fh->add_option("--bind", fh_host, "Address to bind for TCP")->capture_default_str();
    fh->add_option("--round", fh_round, "Round id")->capture_default_str();
    fh_flags.add(fh);

    // federate-site
    auto* fs = app.add_subcommand("federate-site", "Site side: receive Theta0, send the local gradient");
    std::string fs_data, fs_dir, fs_hub;
    std::uint32_t fs_site = 0, fs_round = 1;
    fs->add_option("--data", fs_data, "Site's local dataset")->required();
    fs->add_option("--site-id", fs_site, "Site id (2..m)")->required()->check(CLI::Range(2U, 1U << 30));
    auto* fs_hub_opt = fs->add_option("--hub", fs_hub, "Hub address host:port");
    fs->add_option("--exchange-dir", fs_dir, "Shared directory transport")->excludes(fs_hub_opt);
    fs->add_option("--round", fs_round, "Round id (directory transport)")->capture_default_str();

    // partition
    auto* part = app.add_subcommand("partition", "Split a dataset into per-site files");
    std::string part_data, part_dir;
    std::optional<double> part_x;
    std::optional<Index> part_sites;
    part->add_option("--data", part_data, "Dataset file")->required();
    part->add_option("--out-dir", part_dir, "Directory for site_<i>.txt files")->required();
    auto* part_x_opt = part->add_option("--x", part_x, "Distributedness: m = floor(n^x)");
    part->add_option("--sites", part_sites, "Explicit site count")->excludes(part_x_opt);

    // eval
    auto* ev = app.add_subcommand("eval", "Compare an estimate against the truth");
    std::string ev_theta, ev_truth;
    ev->add_option("--theta", ev_theta, "Estimate (DTH1)")->required();
    ev->add_option("--truth", ev_truth, "Truth (DTH1)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*sim) {
            require(sim_d <= sim_p, "--d must not exceed --p");
            const GroundTruth truth = make_ground_truth(sim_p, sim_d, sim_seed);
            const BinaryDataset data =
                gibbs_sample(truth.theta_star, sim_n, sim_seed, GibbsOptions{sim_burn, sim_threads});
            write_dataset(sim_out, data, sim_binary ? DatasetFormat::Binary : DatasetFormat::Text);
            if (!sim_truth.empty())
                write_theta(sim_truth, truth.theta_star.matrix());
            std::printf("p=%ld\nn=%ld\nd=%ld\nseed=%llu\ntheta_star_norm=%.17g\n", static_cast<long>(sim_p),
                        static_cast<long>(sim_n), static_cast<long>(sim_d),
                        static_cast<unsigned long long>(sim_seed), truth.theta_star.matrix().norm());
        } else if (*fit) {
            const BinaryDataset data = read_dataset(fit_data);
            const OptimizerConfig opt = fit_flags.optimizer(data.p());
            const Partition partition =
                fit_sites ? Partition(data.n(), *fit_sites) : make_partition(data.n(), fit_x.value_or(0.0));
            const Method method = parse_method(fit_flags.method);
            const BinaryDataset hub = partition.site_data(data, Partition::hub());

            FitResult result;
            MatrixXd correction = MatrixXd::Zero(data.p(), data.p());
            if (method == Method::Daniel || partition.m() > 1) {
                const ParameterMatrix theta0 = convex_init(hub, opt);
                correction = run_round(TransportOptions{}, partition, theta0, data).correction;
                result = fit_at_hub(fit_flags, hub, theta0, correction, opt);
            } else {
                result = baseline_fit(GradientSource::centralized(data),
                                      make_baseline(method, fit_flags.tau, opt.d), opt);
            }
            print_fit(method_name(method), data.p(), data.n(), partition.m(), opt.d, result);
            if (!fit_flags.theta_out.empty())
                write_theta(fit_flags.theta_out, result.theta_hat.matrix());
            if (!fit_flags.correction_out.empty())
                write_theta(fit_flags.correction_out, correction);
        } else if (*exp) {
            ExperimentConfig cfg = ExperimentConfig::load(exp_config);
            if (exp_reps)
                cfg.reps = *exp_reps;
            const std::string out = exp_out.empty() ? cfg.output_path : exp_out;
            GridOptions opts;
            opts.jobs = exp_jobs;
            opts.progress = [](std::size_t done, std::size_t total) {
                std::fprintf(stderr, "\r%zu/%zu cells", done, total);
                if (done == total)
                    std::fputc('\n', stderr);
            };
            const auto rows = run_grid(cfg, opts);
            write_csv(std::filesystem::path(out), rows);
            std::printf("rows=%zu\nout=%s\n", rows.size(), out.c_str());
        } else if (*fh) {
            const BinaryDataset hub = read_dataset(fh_data);
            const OptimizerConfig opt = fh_flags.optimizer(hub.p());
            const auto deadline = default_round_deadline();
            std::unique_ptr<HubChannel> channel;
            if (!fh_dir.empty()) {
                std::filesystem::create_directories(fh_dir);
                channel = make_directory_hub(fh_dir, fh_round, deadline);
            } else {
                require(fh_port.has_value(), "federate-hub needs --port or --exchange-dir");
                require(*fh_port >= 0 && *fh_port <= 65535, "--port out of range");
                auto tcp = std::make_unique<TcpHubChannel>(fh_host, static_cast<std::uint16_t>(*fh_port), deadline);
                std::fprintf(stderr, "listening on %s:%u\n", fh_host.c_str(), tcp->port());
                channel = std::move(tcp);
            }
            const ParameterMatrix theta0 = convex_init(hub, opt);
            const RoundResult round = hub_round(*channel, theta0, hub, fh_sites, fh_round);
            const FitResult result = fit_at_hub(fh_flags, hub, theta0, round.correction, opt);
            std::printf("uploads_received=%d\nmessages_aggregated=%d\n", round.stats.uploads_received,
                        round.stats.messages_aggregated);
            print_fit(method_name(parse_method(fh_flags.method)), hub.p(), hub.n(), fh_sites, opt.d, result);
            if (!fh_flags.theta_out.empty())
                write_theta(fh_flags.theta_out, result.theta_hat.matrix());
            if (!fh_flags.correction_out.empty())
                write_theta(fh_flags.correction_out, round.correction);
        } else if (*fs) {
            const BinaryDataset local = read_dataset(fs_data);
            const auto deadline = default_round_deadline();
            std::unique_ptr<SiteChannel> channel;
            if (!fs_dir.empty()) {
                channel = make_directory_site(fs_dir, fs_round, fs_site, deadline);
            } else {
                require(!fs_hub.empty(), "federate-site needs --hub or --exchange-dir");
                const auto [host, port] = split_host_port(fs_hub);
                channel = make_tcp_site(host, port, deadline);
            }
            site_round(*channel, local, fs_site);
            std::printf("site=%u\nn_i=%ld\nsent=1\n", fs_site, static_cast<long>(local.n()));
        } else if (*part) {
            const BinaryDataset data = read_dataset(part_data);
            const Partition partition =
                part_sites ? Partition(data.n(), *part_sites) : make_partition(data.n(), part_x.value_or(0.0));
            std::filesystem::create_directories(part_dir);
            std::printf("m=%ld\n", static_cast<long>(partition.m()));
            for (std::uint32_t s = 1; s <= static_cast<std::uint32_t>(partition.m()); ++s) {
                const auto path = std::filesystem::path(part_dir) / ("site_" + std::to_string(s) + ".txt");
                write_dataset(path, partition.site_data(data, s));
                std::printf("site_%u=%ld\n", s, static_cast<long>(partition.size(s)));
            }
        } else if (*ev) {
            const MatrixXd theta = read_theta(ev_theta);
            const MatrixXd truth = read_theta(ev_truth);
            const double err = frob_error(theta, truth);
            std::printf("frob_err=%.17g\n", err);
            std::printf("rel_err=%.17g\n", truth.norm() > 0 ? err / truth.norm() : err);
            std::printf("max_abs_err=%.17g\n", (theta - truth).cwiseAbs().maxCoeff());
        }
    } catch (const ContractError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return kNumeric;
    } catch (const ProtocolError& e) {
        std::fprintf(stderr, "protocol failure: %s\n", e.what());
        return kProtocol;
    } catch (const IoError& e) {
        std::fprintf(stderr, "i/o failure: %s\n", e.what());
        return kProtocol;
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "i/o failure: %s\n", e.what());
        return kProtocol;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    } catch (const std::out_of_range& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    }
    return kOk;
}
