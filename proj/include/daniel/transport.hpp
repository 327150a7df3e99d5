#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "daniel/wire.hpp"

namespace daniel {

enum class TransportKind { InProcess, Directory, Tcp };

/// 60 s unless DANIEL_ROUND_DEADLINE_SECS is set.
std::chrono::milliseconds default_round_deadline();

struct TransportOptions {
    TransportKind kind = TransportKind::InProcess;
    std::filesystem::path exchange_dir;
    std::string host = "127.0.0.1";
    /// 0 lets the hub pick an ephemeral port.
    std::uint16_t port = 0;
    std::chrono::milliseconds deadline = default_round_deadline();
};

/// Hub endpoint: one broadcast out, `expected` uploads in.
class HubChannel {
public:
    virtual ~HubChannel() = default;
    virtual void publish(const Bytes& broadcast) = 0;
    /// Blocks until `expected` uploads arrived or the deadline passed; a late
    /// or missing upload fails the whole round.
    virtual std::vector<Bytes> collect(std::size_t expected) = 0;
};

/// Site endpoint: one broadcast in, one upload out.
class SiteChannel {
public:
    virtual ~SiteChannel() = default;
    virtual Bytes receive_broadcast() = 0;
    virtual void send(const Bytes& upload) = 0;
};

/// Shared mailbox for sites simulated as threads of the hub process.
class InProcessExchange {
public:
    explicit InProcessExchange(std::chrono::milliseconds deadline = default_round_deadline());
    ~InProcessExchange();

    std::unique_ptr<HubChannel> hub();
    std::unique_ptr<SiteChannel> site();

    struct State;

private:
    std::shared_ptr<State> state_;
};

/// Files "round_<r>_theta0.dnl" and "round_<r>_site_<i>.dnl" in a shared directory.
std::filesystem::path broadcast_path(const std::filesystem::path& dir, std::uint32_t round_id);
std::filesystem::path upload_path(const std::filesystem::path& dir, std::uint32_t round_id, std::uint32_t site_id);

std::unique_ptr<HubChannel> make_directory_hub(const std::filesystem::path& dir, std::uint32_t round_id,
                                               std::chrono::milliseconds deadline);
std::unique_ptr<SiteChannel> make_directory_site(const std::filesystem::path& dir, std::uint32_t round_id,
                                                 std::uint32_t site_id, std::chrono::milliseconds deadline);

/// TCP hub: listens on construction so the bound port is known before sites dial.
/// Frames are a u32 little-endian length followed by one encoded message.
class TcpHubChannel : public HubChannel {
public:
    TcpHubChannel(const std::string& host, std::uint16_t port, std::chrono::milliseconds deadline);
    ~TcpHubChannel() override;
    TcpHubChannel(const TcpHubChannel&) = delete;
    TcpHubChannel& operator=(const TcpHubChannel&) = delete;

    std::uint16_t port() const noexcept { return port_; }
    void publish(const Bytes& broadcast) override;
    std::vector<Bytes> collect(std::size_t expected) override;

private:
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::chrono::milliseconds deadline_;
    Bytes broadcast_;
};

std::unique_ptr<SiteChannel> make_tcp_site(const std::string& host, std::uint16_t port,
                                           std::chrono::milliseconds deadline);

/// Write to a temporary name then rename, so readers never see partial files.
void write_file_atomic(const std::filesystem::path& path, const Bytes& bytes);
Bytes read_file(const std::filesystem::path& path);

} // namespace daniel
