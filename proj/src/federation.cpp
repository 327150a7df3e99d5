#include "daniel/federation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <set>
#include <thread>

namespace daniel {

Partition::Partition(Index n, Index m) : n_(n) {
    require(n >= 1, "Partition: n must be >= 1");
    require(m >= 1 && m <= n, "Partition: need 1 <= m <= n");
    const Index base = n / m;
    const Index extra = n % m;
    sizes_.resize(static_cast<std::size_t>(m));
    offsets_.resize(static_cast<std::size_t>(m));
    Index at = 0;
    for (Index i = 0; i < m; ++i) {
        sizes_[static_cast<std::size_t>(i)] = base + (i < extra ? 1 : 0);
        offsets_[static_cast<std::size_t>(i)] = at;
        at += sizes_[static_cast<std::size_t>(i)];
    }
}

Index Partition::size(std::uint32_t site) const {
    require(site >= 1 && site <= sizes_.size(), "Partition::size: site id out of range");
    return sizes_[site - 1];
}

Index Partition::first(std::uint32_t site) const {
    require(site >= 1 && site <= sizes_.size(), "Partition::first: site id out of range");
    return offsets_[site - 1];
}

std::vector<Index> Partition::indices(std::uint32_t site) const {
    std::vector<Index> out(static_cast<std::size_t>(size(site)));
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k] = first(site) + static_cast<Index>(k);
    return out;
}

BinaryDataset Partition::site_data(const BinaryDataset& full, std::uint32_t site) const {
    require(full.n() == n_, "Partition::site_data: dataset size does not match partition");
    return full.slice(first(site), size(site));
}

Index site_count(Index n, double x) {
    require(n >= 1, "site_count: n must be >= 1");
    require(x >= 0.0 && x <= 1.0, "site_count: x must lie in [0, 1]");
    // pow can land a hair under an exact integer (1000^(1/3) = 9.9999...).
    const double raw = std::pow(static_cast<double>(n), x);
    const auto m = static_cast<Index>(std::floor(raw * (1.0 + 1e-12)));
    return std::clamp<Index>(m, 1, n);
}

Partition make_partition(Index n, double x) { return Partition(n, site_count(n, x)); }

GradientMessage site_gradient(const BinaryDataset& local_data, const ParameterMatrix& theta0, std::uint32_t site_id,
                              std::uint32_t round_id) {
    require(local_data.p() == theta0.dim(), "site_gradient: dimension mismatch");
    GradientMessage msg;
    msg.site_id = site_id;
    msg.round_id = round_id;
    msg.n_i = static_cast<std::uint64_t>(local_data.n());
    msg.gradient = pseudo_nll_grad(theta0, local_data);
    msg.seal();
    return msg;
}

MatrixXd aggregate(std::span<const GradientMessage> messages) {
    if (messages.empty())
        throw ProtocolError("aggregate: no messages");
    std::vector<const GradientMessage*> sorted;
    sorted.reserve(messages.size());
    for (const auto& m : messages)
        sorted.push_back(&m);
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->site_id < b->site_id; });

    const std::uint32_t round = sorted.front()->round_id;
    const Index p = sorted.front()->gradient.rows();
    std::uint64_t total = 0;
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        const GradientMessage& m = *sorted[k];
        if (m.round_id != round)
            throw ProtocolError("aggregate: round id mismatch (site " + std::to_string(m.site_id) + ")");
        if (m.gradient.rows() != p || m.gradient.cols() != p)
            throw ProtocolError("aggregate: dimension mismatch (site " + std::to_string(m.site_id) + ")");
        if (!m.checksum_valid())
            throw ProtocolError("aggregate: checksum failure (site " + std::to_string(m.site_id) + ")");
        if (k > 0 && sorted[k - 1]->site_id == m.site_id)
            throw ProtocolError("aggregate: duplicate message from site " + std::to_string(m.site_id));
        if (m.n_i == 0)
            throw ProtocolError("aggregate: site " + std::to_string(m.site_id) + " reports zero samples");
        total += m.n_i;
    }
    if (sorted.front()->site_id != Partition::hub())
        throw ProtocolError("aggregate: hub message missing");

    MatrixXd out = MatrixXd::Zero(p, p);
    const double denom = static_cast<double>(total);
    for (const auto* m : sorted)
        out += (static_cast<double>(m->n_i) / denom) * m->gradient;
    return out;
}

MatrixXd make_correction(const MatrixXd& global_grad, const MatrixXd& hub_grad) {
    require(global_grad.rows() == hub_grad.rows() && global_grad.cols() == hub_grad.cols(),
            "make_correction: shape mismatch");
    return global_grad - hub_grad;
}

RoundResult hub_round(HubChannel& channel, const ParameterMatrix& theta0, const BinaryDataset& hub_data,
                      std::uint32_t site_count, std::uint32_t round_id) {
    require(site_count >= 1, "hub_round: site_count must be >= 1");
    require(hub_data.p() == theta0.dim(), "hub_round: dimension mismatch");
    RoundResult res;
    std::vector<GradientMessage> msgs;
    msgs.reserve(site_count);

    if (site_count > 1) {
        channel.publish(encode_message(BroadcastMessage{round_id, theta0.matrix()}));
        res.stats.broadcasts_sent = 1;
    }
    msgs.push_back(site_gradient(hub_data, theta0, Partition::hub(), round_id));

    if (site_count > 1) {
        const std::vector<Bytes> uploads = channel.collect(site_count - 1);
        std::set<std::uint32_t> seen;
        for (const Bytes& b : uploads) {
            Message m = decode_message(b);
            auto* g = std::get_if<GradientMessage>(&m);
            if (g == nullptr)
                throw ProtocolError("hub_round: expected a gradient message");
            if (g->round_id != round_id)
                throw ProtocolError("hub_round: upload for round " + std::to_string(g->round_id) + ", expected " +
                                    std::to_string(round_id));
            if (g->site_id < 2 || g->site_id > site_count)
                throw ProtocolError("hub_round: unexpected site id " + std::to_string(g->site_id));
            if (g->p() != theta0.dim())
                throw ProtocolError("hub_round: dimension mismatch from site " + std::to_string(g->site_id));
            if (!seen.insert(g->site_id).second)
                throw ProtocolError("hub_round: duplicate upload from site " + std::to_string(g->site_id));
            msgs.push_back(std::move(*g));
        }
        res.stats.uploads_received = static_cast<int>(uploads.size());
    }
    res.stats.messages_aggregated = static_cast<int>(msgs.size());
    res.hub_gradient = msgs.front().gradient;
    res.global_gradient = aggregate(msgs);
    res.correction = make_correction(res.global_gradient, res.hub_gradient);
    return res;
}

void site_round(SiteChannel& channel, const BinaryDataset& local_data, std::uint32_t site_id) {
    Message m = decode_message(channel.receive_broadcast());
    auto* b = std::get_if<BroadcastMessage>(&m);
    if (b == nullptr)
        throw ProtocolError("site_round: expected a broadcast message");
    if (static_cast<Index>(b->p()) != local_data.p())
        throw ProtocolError("site_round: broadcast dimension does not match local data");
    const GradientMessage g = site_gradient(local_data, ParameterMatrix(b->theta0), site_id, b->round_id);
    channel.send(encode_message(g));
}

RoundResult run_round(const TransportOptions& transport, const Partition& partition, const ParameterMatrix& theta0,
                      const BinaryDataset& full_data, std::uint32_t round_id) {
    require(full_data.n() == partition.n(), "run_round: dataset size does not match partition");
    require(full_data.p() == theta0.dim(), "run_round: dimension mismatch");
    const auto m = static_cast<std::uint32_t>(partition.m());

    std::unique_ptr<HubChannel> hub;
    std::function<std::unique_ptr<SiteChannel>(std::uint32_t)> make_site;
    std::unique_ptr<InProcessExchange> exchange;

    switch (transport.kind) {
    case TransportKind::InProcess:
        exchange = std::make_unique<InProcessExchange>(transport.deadline);
        hub = exchange->hub();
        make_site = [&](std::uint32_t) { return exchange->site(); };
        break;
    case TransportKind::Directory:
        require(!transport.exchange_dir.empty(), "run_round: directory transport needs an exchange directory");
        std::filesystem::create_directories(transport.exchange_dir);
        hub = make_directory_hub(transport.exchange_dir, round_id, transport.deadline);
        make_site = [&](std::uint32_t site) {
            return make_directory_site(transport.exchange_dir, round_id, site, transport.deadline);
        };
        break;
    case TransportKind::Tcp: {
        auto tcp = std::make_unique<TcpHubChannel>(transport.host, transport.port, transport.deadline);
        const std::uint16_t port = tcp->port();
        hub = std::move(tcp);
        make_site = [&transport, port](std::uint32_t) { return make_tcp_site(transport.host, port, transport.deadline); };
        break;
    }
    }

    std::mutex err_mu;
    std::exception_ptr site_error;
    std::vector<std::thread> sites;
    sites.reserve(m > 0 ? m - 1 : 0);
    for (std::uint32_t s = 2; s <= m; ++s) {
        sites.emplace_back([&, s] {
            try {
                auto channel = make_site(s);
                site_round(*channel, partition.site_data(full_data, s), s);
            } catch (...) {
                std::lock_guard lock(err_mu);
                if (!site_error)
                    site_error = std::current_exception();
            }
        });
    }

    RoundResult res;
    std::exception_ptr hub_error;
    try {
        res = hub_round(*hub, theta0, partition.site_data(full_data, Partition::hub()), m, round_id);
    } catch (...) {
        hub_error = std::current_exception();
    }
    for (auto& t : sites)
        t.join();
    if (site_error)
        std::rethrow_exception(site_error);
    if (hub_error)
        std::rethrow_exception(hub_error);
    return res;
}

} // namespace daniel
