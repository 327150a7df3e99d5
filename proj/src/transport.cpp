#include "daniel/transport.hpp"

#include <algorithm>
#include <cerrno>
#include <condition_variable>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <mutex>
#include <optional>
#include <thread>
#include <utility>

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

namespace daniel {

using Clock = std::chrono::steady_clock;

namespace {

constexpr auto kPollInterval = std::chrono::milliseconds(10);

int remaining_ms(Clock::time_point until) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(until - Clock::now()).count();
    return static_cast<int>(std::clamp<long long>(left, 0, 1 << 30));
}

[[noreturn]] void sys_fail(const std::string& what) {
    throw ProtocolError("tcp: " + what + ": " + std::strerror(errno));
}

class Fd {
public:
    explicit Fd(int fd = -1) noexcept : fd_(fd) {}
    ~Fd() { reset(); }
    Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    Fd& operator=(Fd&& o) noexcept {
        if (this != &o) {
            reset();
            fd_ = std::exchange(o.fd_, -1);
        }
        return *this;
    }
    int get() const noexcept { return fd_; }
    int release() noexcept { return std::exchange(fd_, -1); }
    void reset() noexcept {
        if (fd_ >= 0)
            ::close(fd_);
        fd_ = -1;
    }

private:
    int fd_;
};

void write_all(int fd, const std::uint8_t* data, std::size_t len, Clock::time_point until) {
    while (len > 0) {
        pollfd pfd{fd, POLLOUT, 0};
        const int ready = ::poll(&pfd, 1, remaining_ms(until));
        if (ready == 0)
            throw ProtocolError("tcp: send timed out");
        if (ready < 0) {
            if (errno == EINTR)
                continue;
            sys_fail("poll");
        }
        const ssize_t k = ::send(fd, data, len, MSG_NOSIGNAL);
        if (k < 0) {
            if (errno == EINTR || errno == EAGAIN || errno == EWOULDBLOCK)
                continue;
            sys_fail("send");
        }
        data += k;
        len -= static_cast<std::size_t>(k);
    }
}

void read_exact(int fd, std::uint8_t* data, std::size_t len, Clock::time_point until) {
    while (len > 0) {
        pollfd pfd{fd, POLLIN, 0};
        const int ready = ::poll(&pfd, 1, remaining_ms(until));
        if (ready == 0)
            throw ProtocolError("tcp: receive timed out");
        if (ready < 0) {
            if (errno == EINTR)
                continue;
            sys_fail("poll");
        }
        const ssize_t k = ::recv(fd, data, len, 0);
        if (k == 0)
            throw ProtocolError("tcp: peer closed the connection mid-frame");
        if (k < 0) {
            if (errno == EINTR || errno == EAGAIN || errno == EWOULDBLOCK)
                continue;
            sys_fail("recv");
        }
        data += k;
        len -= static_cast<std::size_t>(k);
    }
}

Bytes frame(const Bytes& payload) {
    Bytes out;
    out.reserve(payload.size() + 4);
    put_u32(out, static_cast<std::uint32_t>(payload.size()));
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

Bytes read_frame(int fd, Clock::time_point until) {
    std::uint8_t len[4];
    read_exact(fd, len, 4, until);
    Bytes payload(get_u32(len));
    read_exact(fd, payload.data(), payload.size(), until);
    return payload;
}

sockaddr_in resolve(const std::string& host, std::uint16_t port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (host.empty() || host == "0.0.0.0") {
        addr.sin_addr.s_addr = htonl(INADDR_ANY);
        return addr;
    }
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1)
        return addr;
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr)
        throw ProtocolError("tcp: cannot resolve host " + host);
    addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
    ::freeaddrinfo(res);
    return addr;
}

// ---------------------------------------------------------------------------

class DirectoryHub : public HubChannel {
public:
    DirectoryHub(std::filesystem::path dir, std::uint32_t round, std::chrono::milliseconds deadline)
        : dir_(std::move(dir)), round_(round), deadline_(deadline) {}

    void publish(const Bytes& broadcast) override {
        std::filesystem::create_directories(dir_);
        write_file_atomic(broadcast_path(dir_, round_), broadcast);
    }

    std::vector<Bytes> collect(std::size_t expected) override {
        const auto until = Clock::now() + deadline_;
        std::vector<std::optional<Bytes>> got(expected);
        std::size_t have = 0;
        for (;;) {
            for (std::size_t k = 0; k < expected; ++k) {
                if (got[k])
                    continue;
                const auto path = upload_path(dir_, round_, static_cast<std::uint32_t>(k + 2));
                if (std::filesystem::exists(path)) {
                    got[k] = read_file(path);
                    ++have;
                }
            }
            if (have == expected)
                break;
            if (Clock::now() >= until) {
                for (std::size_t k = 0; k < expected; ++k)
                    if (!got[k])
                        throw ProtocolError("directory: missing upload " +
                                            upload_path(dir_, round_, static_cast<std::uint32_t>(k + 2)).string() +
                                            " at deadline");
            }
            std::this_thread::sleep_for(kPollInterval);
        }
        std::vector<Bytes> out;
        out.reserve(expected);
        for (auto& g : got)
            out.push_back(std::move(*g));
        return out;
    }

private:
    std::filesystem::path dir_;
    std::uint32_t round_;
    std::chrono::milliseconds deadline_;
};

class DirectorySite : public SiteChannel {
public:
    DirectorySite(std::filesystem::path dir, std::uint32_t round, std::uint32_t site,
                  std::chrono::milliseconds deadline)
        : dir_(std::move(dir)), round_(round), site_(site), deadline_(deadline) {}

    Bytes receive_broadcast() override {
        const auto until = Clock::now() + deadline_;
        const auto path = broadcast_path(dir_, round_);
        while (!std::filesystem::exists(path)) {
            if (Clock::now() >= until)
                throw ProtocolError("directory: no broadcast at " + path.string() + " before deadline");
            std::this_thread::sleep_for(kPollInterval);
        }
        return read_file(path);
    }

    void send(const Bytes& upload) override { write_file_atomic(upload_path(dir_, round_, site_), upload); }

private:
    std::filesystem::path dir_;
    std::uint32_t round_;
    std::uint32_t site_;
    std::chrono::milliseconds deadline_;
};

class TcpSite : public SiteChannel {
public:
    TcpSite(std::string host, std::uint16_t port, std::chrono::milliseconds deadline)
        : host_(std::move(host)), port_(port), until_(Clock::now() + deadline) {}

    Bytes receive_broadcast() override {
        const sockaddr_in addr = resolve(host_, port_);
        for (;;) {
            Fd fd(::socket(AF_INET, SOCK_STREAM, 0));
            if (fd.get() < 0)
                sys_fail("socket");
            if (::connect(fd.get(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr) == 0) {
                fd_ = std::move(fd);
                break;
            }
            if (errno != ECONNREFUSED && errno != EINTR && errno != ETIMEDOUT)
                sys_fail("connect");
            if (Clock::now() >= until_)
                throw ProtocolError("tcp: hub not reachable before deadline");
            std::this_thread::sleep_for(kPollInterval);
        }
        return read_frame(fd_.get(), until_);
    }

    void send(const Bytes& upload) override {
        require(fd_.get() >= 0, "TcpSite::send: no broadcast received");
        const Bytes f = frame(upload);
        write_all(fd_.get(), f.data(), f.size(), until_);
        ::shutdown(fd_.get(), SHUT_WR);
        fd_.reset();
    }

private:
    std::string host_;
    std::uint16_t port_;
    Clock::time_point until_;
    Fd fd_;
};

} // namespace

std::chrono::milliseconds default_round_deadline() {
    if (const char* env = std::getenv("DANIEL_ROUND_DEADLINE_SECS")) {
        char* end = nullptr;
        const double secs = std::strtod(env, &end);
        if (end != env && secs > 0)
            return std::chrono::milliseconds(static_cast<long long>(secs * 1000.0));
    }
    return std::chrono::seconds(60);
}

// ---------------------------------------------------------------------------

struct InProcessExchange::State {
    std::mutex mu;
    std::condition_variable cv;
    std::optional<Bytes> broadcast;
    std::vector<Bytes> inbox;
    std::chrono::milliseconds deadline;
};

namespace {

class InProcessHub : public HubChannel {
public:
    explicit InProcessHub(std::shared_ptr<InProcessExchange::State> s) : s_(std::move(s)) {}

    void publish(const Bytes& broadcast) override {
        {
            std::lock_guard lock(s_->mu);
            s_->broadcast = broadcast;
        }
        s_->cv.notify_all();
    }

    std::vector<Bytes> collect(std::size_t expected) override {
        std::unique_lock lock(s_->mu);
        if (!s_->cv.wait_for(lock, s_->deadline, [&] { return s_->inbox.size() >= expected; }))
            throw ProtocolError("in-process: uploads missing at deadline");
        std::vector<Bytes> out = std::move(s_->inbox);
        s_->inbox.clear();
        return out;
    }

private:
    std::shared_ptr<InProcessExchange::State> s_;
};

class InProcessSite : public SiteChannel {
public:
    explicit InProcessSite(std::shared_ptr<InProcessExchange::State> s) : s_(std::move(s)) {}

    Bytes receive_broadcast() override {
        std::unique_lock lock(s_->mu);
        if (!s_->cv.wait_for(lock, s_->deadline, [&] { return s_->broadcast.has_value(); }))
            throw ProtocolError("in-process: no broadcast before deadline");
        return *s_->broadcast;
    }

    void send(const Bytes& upload) override {
        {
            std::lock_guard lock(s_->mu);
            s_->inbox.push_back(upload);
        }
        s_->cv.notify_all();
    }

private:
    std::shared_ptr<InProcessExchange::State> s_;
};

} // namespace

InProcessExchange::InProcessExchange(std::chrono::milliseconds deadline) : state_(std::make_shared<State>()) {
    state_->deadline = deadline;
}

InProcessExchange::~InProcessExchange() = default;

std::unique_ptr<HubChannel> InProcessExchange::hub() { return std::make_unique<InProcessHub>(state_); }
std::unique_ptr<SiteChannel> InProcessExchange::site() { return std::make_unique<InProcessSite>(state_); }

// ---------------------------------------------------------------------------

std::filesystem::path broadcast_path(const std::filesystem::path& dir, std::uint32_t round_id) {
    return dir / ("round_" + std::to_string(round_id) + "_theta0.dnl");
}

std::filesystem::path upload_path(const std::filesystem::path& dir, std::uint32_t round_id, std::uint32_t site_id) {
    return dir / ("round_" + std::to_string(round_id) + "_site_" + std::to_string(site_id) + ".dnl");
}

std::unique_ptr<HubChannel> make_directory_hub(const std::filesystem::path& dir, std::uint32_t round_id,
                                               std::chrono::milliseconds deadline) {
    return std::make_unique<DirectoryHub>(dir, round_id, deadline);
}

std::unique_ptr<SiteChannel> make_directory_site(const std::filesystem::path& dir, std::uint32_t round_id,
                                                 std::uint32_t site_id, std::chrono::milliseconds deadline) {
    return std::make_unique<DirectorySite>(dir, round_id, site_id, deadline);
}

// ---------------------------------------------------------------------------

TcpHubChannel::TcpHubChannel(const std::string& host, std::uint16_t port, std::chrono::milliseconds deadline)
    : deadline_(deadline) {
    Fd fd(::socket(AF_INET, SOCK_STREAM, 0));
    if (fd.get() < 0)
        sys_fail("socket");
    const int one = 1;
    ::setsockopt(fd.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    const sockaddr_in addr = resolve(host, port);
    if (::bind(fd.get(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0)
        sys_fail("bind");
    if (::listen(fd.get(), 64) != 0)
        sys_fail("listen");
    sockaddr_in bound{};
    socklen_t len = sizeof bound;
    ::getsockname(fd.get(), reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
    listen_fd_ = fd.release();
}

TcpHubChannel::~TcpHubChannel() {
    if (listen_fd_ >= 0)
        ::close(listen_fd_);
}

void TcpHubChannel::publish(const Bytes& broadcast) { broadcast_ = frame(broadcast); }

std::vector<Bytes> TcpHubChannel::collect(std::size_t expected) {
    require(!broadcast_.empty(), "TcpHubChannel::collect: publish first");
    const auto until = Clock::now() + deadline_;

    struct Pending {
        Fd fd;
        Bytes buf;
    };
    std::vector<Pending> open;
    std::vector<Bytes> out;
    std::size_t accepted = 0;

    while (out.size() < expected) {
        std::vector<pollfd> fds;
        if (accepted < expected)
            fds.push_back({listen_fd_, POLLIN, 0});
        for (const auto& c : open)
            fds.push_back({c.fd.get(), POLLIN, 0});
        const int wait = remaining_ms(until);
        if (wait == 0)
            throw ProtocolError("tcp: " + std::to_string(expected - out.size()) + " site upload(s) missing at deadline");
        const int ready = ::poll(fds.data(), fds.size(), wait);
        if (ready < 0) {
            if (errno == EINTR)
                continue;
            sys_fail("poll");
        }
        if (ready == 0)
            continue;

        std::size_t k = 0;
        if (accepted < expected) {
            if (fds[0].revents & POLLIN) {
                Fd conn(::accept(listen_fd_, nullptr, nullptr));
                if (conn.get() < 0)
                    sys_fail("accept");
                write_all(conn.get(), broadcast_.data(), broadcast_.size(), until);
                ::fcntl(conn.get(), F_SETFL, ::fcntl(conn.get(), F_GETFL) | O_NONBLOCK);
                open.push_back({std::move(conn), {}});
                ++accepted;
            }
            k = 1;
        }
        // Drain readable connections; a frame is complete once 4 + length bytes arrived.
        for (std::size_t c = 0; k + c < fds.size(); ++c) {
            if (!(fds[k + c].revents & (POLLIN | POLLHUP | POLLERR)))
                continue;
            Pending& pc = open[c];
            std::uint8_t chunk[65536];
            for (;;) {
                const ssize_t got = ::recv(pc.fd.get(), chunk, sizeof chunk, 0);
                if (got > 0) {
                    pc.buf.insert(pc.buf.end(), chunk, chunk + got);
                    continue;
                }
                if (got == 0) {
                    if (pc.buf.size() < 4 || pc.buf.size() < 4 + get_u32(pc.buf.data()))
                        throw ProtocolError("tcp: site closed the connection before a full upload");
                }
                if (got < 0 && errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR)
                    sys_fail("recv");
                break;
            }
        }
        // Move completed frames out.
        for (auto it = open.begin(); it != open.end();) {
            if (it->buf.size() >= 4 && it->buf.size() >= 4 + get_u32(it->buf.data())) {
                const std::uint32_t len = get_u32(it->buf.data());
                out.emplace_back(it->buf.begin() + 4, it->buf.begin() + 4 + len);
                it = open.erase(it);
            } else {
                ++it;
            }
        }
    }
    return out;
}

std::unique_ptr<SiteChannel> make_tcp_site(const std::string& host, std::uint16_t port,
                                           std::chrono::milliseconds deadline) {
    return std::make_unique<TcpSite>(host, port, deadline);
}

// ---------------------------------------------------------------------------

void write_file_atomic(const std::filesystem::path& path, const Bytes& bytes) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f)
            throw IoError("cannot open " + tmp.string() + " for writing");
        f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!f)
            throw IoError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

Bytes read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open " + path.string());
    return Bytes(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

} // namespace daniel
