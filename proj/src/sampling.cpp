#include "daniel/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "daniel/rng.hpp"

namespace daniel {

namespace {

constexpr std::uint64_t kGroundTruthStream = 0x67726f756e64ULL; // "ground"
constexpr std::uint64_t kGibbsDomain = 0x6769626273ULL;         // "gibbs"
constexpr std::uint64_t kExactStream = 0x6578616374ULL;         // "exact"

void run_chain(const MatrixXd& theta, std::uint64_t seed, Index chain, Index sweeps, SpinMatrix& out) {
    const Index p = theta.rows();
    const CounterRng rng(seed, hash64({kGibbsDomain, static_cast<std::uint64_t>(chain)}));

    VectorXd x(p);
    for (Index j = 0; j < p; ++j)
        x(j) = rng.uniform(static_cast<std::uint64_t>(j)) < 0.5 ? -1.0 : 1.0;

    // h_k = sum_{m != k} theta_km x_m
    VectorXd h = theta * x - theta.diagonal().cwiseProduct(x);

    std::uint64_t counter = static_cast<std::uint64_t>(p);
    const double* th = theta.data();
    double* hp = h.data();
    double* xp = x.data();
    for (Index s = 0; s < sweeps; ++s) {
        for (Index j = 0; j < p; ++j, ++counter) {
            const double* col = th + j * p;
            const double q = 2.0 * (col[j] + hp[j]);
            // u < logistic(q)  <=>  u * (1 + exp(-q)) < 1
            const double u = rng.uniform(counter);
            const double next = u * (1.0 + std::exp(-q)) < 1.0 ? 1.0 : -1.0;
            const double delta = next - xp[j];
            if (delta != 0.0) {
                for (Index k = 0; k < p; ++k)
                    hp[k] += delta * col[k];
                hp[j] -= delta * col[j];
                xp[j] = next;
            }
        }
    }
    for (Index j = 0; j < p; ++j)
        out(chain, j) = static_cast<std::int8_t>(x(j));
}

} // namespace

BinarySample ExactTable::state(std::uint64_t index) const {
    SpinVector s(p);
    for (int b = 0; b < p; ++b)
        s(b) = (index >> b) & 1U ? 1 : -1;
    return BinarySample(std::move(s));
}

double ExactTable::conditional_plus(const BinarySample& x, Index j) const {
    require(x.size() == p && j >= 0 && j < p, "ExactTable::conditional_plus: bad index");
    std::uint64_t idx = 0;
    for (int b = 0; b < p; ++b)
        if (x[b] == 1)
            idx |= 1ULL << b;
    const std::uint64_t plus = idx | (1ULL << j);
    const std::uint64_t minus = idx & ~(1ULL << j);
    return probs[plus] / (probs[plus] + probs[minus]);
}

GroundTruth make_ground_truth(Index p, Index d, std::uint64_t seed) {
    if (d < 1 || p < 1 || d > p)
        throw ContractError("make_ground_truth: need 1 <= d <= p");
    const CounterRng rng(seed, kGroundTruthStream);
    const double sd = 1.0 / std::sqrt(static_cast<double>(d * p));
    MatrixXd u(p, d);
    for (Index i = 0; i < p; ++i)
        for (Index k = 0; k < d; ++k)
            u(i, k) = sd * rng.normal(static_cast<std::uint64_t>(i * d + k));
    ParameterMatrix theta(MatrixXd(u * u.transpose()));
    return GroundTruth{std::move(u), std::move(theta), seed};
}

double log_potential(const ParameterMatrix& theta, const BinarySample& x) {
    const Index p = theta.dim();
    require(x.size() == p, "log_potential: dimension mismatch");
    double s = 0.0;
    for (Index j = 0; j < p; ++j) {
        s += theta(j, j) * x[j];
        for (Index k = j + 1; k < p; ++k)
            s += theta(j, k) * x[j] * x[k];
    }
    return s;
}

ExactTable exact_table(const ParameterMatrix& theta) {
    const Index p = theta.dim();
    if (p < 1 || p > kMaxExactDim)
        throw ContractError("exact_table: dimension must be in [1, 12]");
    ExactTable t;
    t.p = static_cast<int>(p);
    const std::uint64_t states = 1ULL << p;
    t.probs.resize(states);
    double top = -std::numeric_limits<double>::infinity();
    for (std::uint64_t s = 0; s < states; ++s) {
        t.probs[s] = log_potential(theta, t.state(s));
        top = std::max(top, t.probs[s]);
    }
    double z = 0.0;
    for (double& v : t.probs) {
        v = std::exp(v - top);
        z += v;
    }
    for (double& v : t.probs)
        v /= z;
    return t;
}

BinaryDataset gibbs_sample(const ParameterMatrix& theta, Index n, std::uint64_t seed, const GibbsOptions& opts) {
    require(n >= 1, "gibbs_sample: n must be >= 1");
    require(opts.burn_in_sweeps >= 1, "gibbs_sample: burn_in_sweeps must be >= 1");
    const Index p = theta.dim();
    require(p >= 1, "gibbs_sample: empty parameter matrix");

    SpinMatrix out(n, p);
    unsigned threads = opts.threads == 0 ? std::max(1U, std::thread::hardware_concurrency()) : opts.threads;
    threads = static_cast<unsigned>(std::min<Index>(threads, n));

    auto work = [&](Index begin, Index end) {
        for (Index c = begin; c < end; ++c)
            run_chain(theta.matrix(), seed, c, opts.burn_in_sweeps, out);
    };
    if (threads <= 1) {
        work(0, n);
    } else {
        std::vector<std::jthread> pool;
        const Index chunk = (n + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const Index begin = t * chunk;
            const Index end = std::min(n, begin + chunk);
            if (begin < end)
                pool.emplace_back(work, begin, end);
        }
    }
    return BinaryDataset(std::move(out));
}

BinaryDataset exact_sample(const ExactTable& table, Index n, std::uint64_t seed) {
    require(n >= 1, "exact_sample: n must be >= 1");
    require(table.p >= 1 && table.probs.size() == (1ULL << table.p), "exact_sample: malformed table");
    std::vector<double> cdf(table.probs.size());
    double acc = 0.0;
    for (std::size_t s = 0; s < cdf.size(); ++s)
        cdf[s] = (acc += table.probs[s]);

    const CounterRng rng(seed, kExactStream);
    SpinMatrix out(n, table.p);
    for (Index l = 0; l < n; ++l) {
        const double u = rng.uniform(static_cast<std::uint64_t>(l)) * acc;
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        if (it == cdf.end())
            --it;
        const auto s = static_cast<std::uint64_t>(it - cdf.begin());
        for (int b = 0; b < table.p; ++b)
            out(l, b) = (s >> b) & 1U ? 1 : -1;
    }
    return BinaryDataset(std::move(out));
}

std::vector<double> empirical_distribution(const BinaryDataset& data) {
    require(data.p() <= kMaxExactDim, "empirical_distribution: dimension too large");
    std::vector<double> freq(1ULL << data.p(), 0.0);
    for (Index l = 0; l < data.n(); ++l) {
        std::uint64_t s = 0;
        for (Index b = 0; b < data.p(); ++b)
            if (data.spins()(l, b) == 1)
                s |= 1ULL << b;
        freq[s] += 1.0;
    }
    for (double& f : freq)
        f /= static_cast<double>(data.n());
    return freq;
}

double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
    require(a.size() == b.size(), "total_variation: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += std::abs(a[i] - b[i]);
    return 0.5 * s;
}

} // namespace daniel
