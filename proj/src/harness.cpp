#include "daniel/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

#include "daniel/baselines.hpp"
#include "daniel/evaluate.hpp"
#include "daniel/federation.hpp"
#include "daniel/rng.hpp"
#include "daniel/sampling.hpp"

namespace daniel {

std::uint64_t cell_seed(std::uint64_t base_seed, Index p, Index n, double x, Method method, int rep) {
    return hash64({base_seed, static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(n),
                   std::bit_cast<std::uint64_t>(x), method_id(method), static_cast<std::uint64_t>(rep)});
}

namespace {

BaselineMethod baseline_for(Method m, double tau, Index d) {
    switch (m) {
    case Method::SvSoft: return BaselineMethod::sv_soft(tau);
    case Method::SvHard: return BaselineMethod::sv_hard(tau);
    case Method::SvTopd: return BaselineMethod::sv_topd(d);
    case Method::PsdCvx: return BaselineMethod::psd_cvx();
    case Method::Daniel: break;
    }
    throw ContractError("baseline_for: DANIEL is not a baseline");
}

} // namespace

ResultRow run_cell(const ExperimentConfig& cfg, Index p, Index d, Index n, double x, Method method, int rep) {
    require(d >= 1 && d <= p, "run_cell: need 1 <= d <= p");
    ResultRow row;
    row.method = method;
    row.p = p;
    row.d = d;
    row.n = n;
    row.x = x;
    row.rep = rep;
    row.seed = cell_seed(cfg.base_seed, p, n, x, method, rep);

    const GroundTruth truth = make_ground_truth(p, d, row.seed);
    const BinaryDataset data = gibbs_sample(truth.theta_star, n, row.seed, GibbsOptions{cfg.burn_in, 1});
    const Partition part = make_partition(n, x);
    row.m = part.m();

    OptimizerConfig opt = cfg.optimizer;
    opt.d = d;

    const auto start = std::chrono::steady_clock::now();
    std::chrono::steady_clock::duration tuning{0};
    try {
        const BinaryDataset hub = part.site_data(data, Partition::hub());
        FitResult fit;
        if (method == Method::Daniel) {
            const ParameterMatrix theta0 = convex_init(hub, opt);
            TransportOptions inproc;
            const MatrixXd correction = run_round(inproc, part, theta0, data).correction;
            const FactorPair init = symmetric_init_from(theta0, d);
            if (!cfg.eta_grid.empty()) {
                // Step-size selection is tuning, kept off the clock like any hyperparameter search.
                const auto tune = std::chrono::steady_clock::now();
                opt.eta = grid_search_eta(hub, correction, init.u, init.v, opt, cfg.eta_grid);
                tuning += std::chrono::steady_clock::now() - tune;
            }
            fit = daniel_fit(hub, correction, init.u, init.v, opt);
        } else {
            const BaselineMethod bm = baseline_for(method, cfg.sv_tau, d);
            if (part.m() > 1) {
                const ParameterMatrix theta0 = convex_init(hub, opt);
                TransportOptions inproc;
                const MatrixXd correction = run_round(inproc, part, theta0, data).correction;
                fit = baseline_fit(GradientSource::surrogate(hub, correction), bm, opt);
            } else {
                fit = baseline_fit(GradientSource::centralized(data), bm, opt);
            }
        }
        row.wall_time_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start - tuning).count();
        row.frob_err = frob_error(fit.theta_hat.matrix(), truth.theta_star.matrix());
        MatrixXd z_star(2 * p, d);
        z_star << truth.u_star, truth.u_star;
        row.subspace_err = procrustes_distance(StackedFactors(fit.factors), StackedFactors(z_star));
        row.iterations = fit.iterations_used;
        const MatrixXd prod = fit.factors.product();
        row.asymmetry = (prod - prod.transpose()).cwiseAbs().maxCoeff();
    } catch (const DivergenceError& e) {
        row.wall_time_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start - tuning).count();
        row.frob_err = std::numeric_limits<double>::quiet_NaN();
        row.subspace_err = std::numeric_limits<double>::quiet_NaN();
        row.iterations = e.iteration();
        row.diverged = true;
    }
    return row;
}

std::vector<ResultRow> run_grid(const ExperimentConfig& cfg, const GridOptions& opts) {
    cfg.validate();
    struct Task {
        Method method;
        Index p, d, n;
        double x;
        int rep;
    };
    std::vector<Task> tasks;
    for (Method m : cfg.methods)
        for (Index p : cfg.p_list)
            for (Index n : cfg.n_list)
                for (double x : cfg.x_list)
                    for (int r = 0; r < cfg.reps; ++r)
                        tasks.push_back({m, p, cfg.d_for(p), n, x, r});

    std::vector<ResultRow> rows(tasks.size());
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::mutex mu;
    std::exception_ptr failure;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size())
                return;
            {
                std::lock_guard lock(mu);
                if (failure)
                    return;
            }
            const Task& t = tasks[i];
            try {
                rows[i] = run_cell(cfg, t.p, t.d, t.n, t.x, t.method, t.rep);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure)
                    failure = std::current_exception();
                return;
            }
            const std::size_t k = done.fetch_add(1) + 1;
            if (opts.progress) {
                std::lock_guard lock(mu);
                opts.progress(k, tasks.size());
            }
        }
    };

    const unsigned jobs = std::max(1U, std::min<unsigned>(opts.jobs, static_cast<unsigned>(tasks.size())));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned j = 0; j < jobs; ++j)
            pool.emplace_back(worker);
    }
    if (failure)
        std::rethrow_exception(failure);

    std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
        return std::tuple(method_id(a.method), a.p, a.n, a.x, a.rep) <
               std::tuple(method_id(b.method), b.p, b.n, b.x, b.rep);
    });
    return rows;
}

namespace {

std::string g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
    out << kCsvHeader << '\n';
    for (const ResultRow& r : rows) {
        out << method_name(r.method) << ',' << r.p << ',' << r.d << ',' << r.n << ',' << g17(r.x) << ',' << r.m
            << ',' << r.rep << ',' << g17(r.frob_err) << ',' << g17(r.subspace_err) << ',' << r.iterations << ','
            << g17(r.wall_time_ms) << ',' << r.seed << '\n';
    }
}

void write_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
    auto tmp = path;
    tmp += ".partial";
    try {
        {
            std::ofstream f(tmp, std::ios::trunc);
            if (!f)
                throw IoError("cannot open " + tmp.string() + " for writing");
            write_csv(f, rows);
            f.flush();
            if (!f)
                throw IoError("write failed: " + tmp.string());
        }
        std::filesystem::rename(tmp, path);
    } catch (...) {
        std::error_code ec;
        std::filesystem::remove(tmp, ec);
        throw;
    }
}

std::vector<ResultRow> read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader)
        throw IoError("csv: missing or unexpected header");
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            f.push_back(cell);
        if (f.size() != 12)
            throw IoError("csv: expected 12 fields in '" + line + "'");
        try {
            ResultRow r;
            r.method = parse_method(f[0]);
            r.p = std::stoll(f[1]);
            r.d = std::stoll(f[2]);
            r.n = std::stoll(f[3]);
            r.x = std::stod(f[4]);
            r.m = std::stoll(f[5]);
            r.rep = std::stoi(f[6]);
            r.frob_err = std::stod(f[7]);
            r.subspace_err = std::stod(f[8]);
            r.iterations = std::stoi(f[9]);
            r.wall_time_ms = std::stod(f[10]);
            r.seed = std::stoull(f[11]);
            r.diverged = std::isnan(r.frob_err);
            rows.push_back(r);
        } catch (const std::exception&) {
            throw IoError("csv: malformed row '" + line + "'");
        }
    }
    return rows;
}

} // namespace daniel
