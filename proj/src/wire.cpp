#include "daniel/wire.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

#include <zlib.h>

namespace daniel {

namespace {

constexpr std::uint8_t kMagic[4] = {'D', 'N', 'L', '1'};
constexpr std::size_t kHeaderSize = 4 + 1 + 1 + 4 + 4 + 4 + 8;

Bytes encode(std::uint8_t type, std::uint32_t round, std::uint32_t site, std::uint64_t n_i, const MatrixXd& m) {
    require(m.rows() == m.cols(), "encode_message: matrix must be square");
    const auto p = static_cast<std::uint32_t>(m.rows());
    Bytes out(std::begin(kMagic), std::end(kMagic));
    out.reserve(encoded_size(p));
    out.push_back(kWireVersion);
    out.push_back(type);
    put_u32(out, round);
    put_u32(out, p);
    put_u32(out, site);
    put_u64(out, n_i);
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j)
            put_f64(out, m(i, j));
    put_u32(out, crc32(std::span(out).subspan(4)));
    return out;
}

} // namespace

const char* to_string(WireErrc code) noexcept {
    switch (code) {
    case WireErrc::bad_magic: return "bad magic";
    case WireErrc::bad_version: return "unsupported version";
    case WireErrc::bad_type: return "unknown message type";
    case WireErrc::truncated: return "truncated message";
    case WireErrc::crc_mismatch: return "CRC mismatch";
    case WireErrc::trailing_bytes: return "trailing bytes after message";
    case WireErrc::bad_payload: return "invalid payload";
    }
    return "unknown wire error";
}

WireError::WireError(WireErrc code) : ProtocolError(std::string("wire: ") + to_string(code)), code_(code) {}

void put_u32(Bytes& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(Bytes& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(Bytes& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint32_t get_u32(const std::uint8_t* p) noexcept {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(const std::uint8_t* p) noexcept {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

double get_f64(const std::uint8_t* p) noexcept { return std::bit_cast<double>(get_u64(p)); }

std::uint32_t crc32(std::span<const std::uint8_t> bytes) noexcept {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed large buffers in pieces.
    const std::uint8_t* data = bytes.data();
    std::size_t left = bytes.size();
    while (left > 0) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(left, 1U << 30));
        crc = ::crc32(crc, data, chunk);
        data += chunk;
        left -= chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

std::size_t encoded_size(std::uint32_t p) noexcept {
    return kHeaderSize + 8 * static_cast<std::size_t>(p) * p + 4;
}

void GradientMessage::seal() {
    const Bytes b = encode_message(*this);
    checksum = get_u32(b.data() + b.size() - 4);
}

bool GradientMessage::checksum_valid() const {
    const Bytes b = encode_message(*this);
    return checksum == get_u32(b.data() + b.size() - 4);
}

Bytes encode_message(const BroadcastMessage& m) { return encode(kMsgBroadcast, m.round_id, 0, 0, m.theta0); }

Bytes encode_message(const GradientMessage& m) {
    return encode(kMsgGradient, m.round_id, m.site_id, m.n_i, m.gradient);
}

Message decode_message(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4)
        throw WireError(WireErrc::truncated);
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw WireError(WireErrc::bad_magic);
    if (bytes.size() < kHeaderSize + 4)
        throw WireError(WireErrc::truncated);
    const std::uint8_t* h = bytes.data();
    if (h[4] != kWireVersion)
        throw WireError(WireErrc::bad_version);
    const std::uint8_t type = h[5];
    if (type != kMsgBroadcast && type != kMsgGradient)
        throw WireError(WireErrc::bad_type);
    const std::uint32_t round = get_u32(h + 6);
    const std::uint32_t p = get_u32(h + 10);
    const std::uint32_t site = get_u32(h + 14);
    const std::uint64_t n_i = get_u64(h + 18);

    if (static_cast<std::uint64_t>(p) * p > bytes.size() / 8)
        throw WireError(WireErrc::truncated);
    const std::size_t want = encoded_size(p);
    if (bytes.size() < want)
        throw WireError(WireErrc::truncated);
    if (bytes.size() > want)
        throw WireError(WireErrc::trailing_bytes);
    const std::uint32_t stored = get_u32(h + want - 4);
    if (crc32(bytes.subspan(4, want - 8)) != stored)
        throw WireError(WireErrc::crc_mismatch);

    MatrixXd m(p, p);
    const std::uint8_t* q = h + kHeaderSize;
    for (std::uint32_t i = 0; i < p; ++i)
        for (std::uint32_t j = 0; j < p; ++j, q += 8)
            m(i, j) = get_f64(q);
    if (!m.allFinite())
        throw WireError(WireErrc::bad_payload);

    if (type == kMsgBroadcast) {
        if (site != 0 || n_i != 0)
            throw WireError(WireErrc::bad_payload);
        const double scale = std::max(1.0, p > 0 ? m.cwiseAbs().maxCoeff() : 0.0);
        if (p > 0 && (m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
            throw WireError(WireErrc::bad_payload);
        return BroadcastMessage{round, std::move(m)};
    }
    GradientMessage g{site, round, n_i, std::move(m), stored};
    return g;
}

} // namespace daniel
