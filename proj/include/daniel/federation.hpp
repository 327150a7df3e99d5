#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "daniel/ising.hpp"
#include "daniel/transport.hpp"
#include "daniel/wire.hpp"

namespace daniel {

/// Contiguous split of n samples over m sites. Site ids are 1-based and site 1
/// is the hub. The first (n mod m) sites hold one extra sample.
class Partition {
public:
    Partition(Index n, Index m);

    Index n() const noexcept { return n_; }
    Index m() const noexcept { return static_cast<Index>(sizes_.size()); }
    static constexpr std::uint32_t hub() noexcept { return 1; }

    Index size(std::uint32_t site) const;
    Index first(std::uint32_t site) const;
    std::vector<Index> indices(std::uint32_t site) const;
    const std::vector<Index>& sizes() const noexcept { return sizes_; }

    BinaryDataset site_data(const BinaryDataset& full, std::uint32_t site) const;

private:
    Index n_;
    std::vector<Index> sizes_;
    std::vector<Index> offsets_;
};

/// m = max(1, floor(n^x)).
Index site_count(Index n, double x);
Partition make_partition(Index n, double x);

GradientMessage site_gradient(const BinaryDataset& local_data, const ParameterMatrix& theta0,
                              std::uint32_t site_id = Partition::hub(), std::uint32_t round_id = 1);

/// Sample-size weighted mean of the site gradients, summed in site-id order.
MatrixXd aggregate(std::span<const GradientMessage> messages);

MatrixXd make_correction(const MatrixXd& global_grad, const MatrixXd& hub_grad);

struct RoundStats {
    int broadcasts_sent = 0;
    int uploads_received = 0;
    /// Hub's own gradient plus every upload.
    int messages_aggregated = 0;
};

struct RoundResult {
    MatrixXd correction;
    MatrixXd global_gradient;
    MatrixXd hub_gradient;
    RoundStats stats;
};

/// Hub side of the one-shot round: broadcast theta0, compute the hub gradient,
/// collect one upload from each of sites 2..site_count, aggregate.
RoundResult hub_round(HubChannel& channel, const ParameterMatrix& theta0, const BinaryDataset& hub_data,
                      std::uint32_t site_count, std::uint32_t round_id = 1);

/// Site side: wait for the broadcast, reply with the local gradient.
void site_round(SiteChannel& channel, const BinaryDataset& local_data, std::uint32_t site_id);

/// Full round with every non-hub site simulated on its own thread over the
/// requested transport.
RoundResult run_round(const TransportOptions& transport, const Partition& partition, const ParameterMatrix& theta0,
                      const BinaryDataset& full_data, std::uint32_t round_id = 1);

} // namespace daniel
