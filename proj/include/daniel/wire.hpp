#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "daniel/core.hpp"

namespace daniel {

/// Messages that cross the hub/site boundary. Only p x p matrices travel;
/// there is no message type that can carry a BinarySample.
struct BroadcastMessage {
    std::uint32_t round_id = 0;
    MatrixXd theta0;

    std::uint32_t p() const { return static_cast<std::uint32_t>(theta0.rows()); }
};

struct GradientMessage {
    std::uint32_t site_id = 0;
    std::uint32_t round_id = 0;
    std::uint64_t n_i = 0;
    MatrixXd gradient;
    /// CRC-32 of the encoded payload, filled by seal().
    std::uint32_t checksum = 0;

    std::uint32_t p() const { return static_cast<std::uint32_t>(gradient.rows()); }
    /// Recompute and store the checksum.
    void seal();
    bool checksum_valid() const;
};

using Message = std::variant<BroadcastMessage, GradientMessage>;
using Bytes = std::vector<std::uint8_t>;

enum class WireErrc {
    bad_magic = 1,
    bad_version,
    bad_type,
    truncated,
    crc_mismatch,
    trailing_bytes,
    bad_payload,
};

const char* to_string(WireErrc code) noexcept;

class ProtocolError : public Error {
public:
    using Error::Error;
};

class WireError : public ProtocolError {
public:
    explicit WireError(WireErrc code);
    WireErrc code() const noexcept { return code_; }

private:
    WireErrc code_;
};

inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::uint8_t kMsgBroadcast = 1;
inline constexpr std::uint8_t kMsgGradient = 2;

/// Layout (little-endian): "DNL1" | u8 version | u8 type | u32 round | u32 p |
/// u32 site | u64 n_i | p*p f64 row-major | u32 CRC-32 of everything after the magic.
Bytes encode_message(const BroadcastMessage& m);
Bytes encode_message(const GradientMessage& m);
Message decode_message(std::span<const std::uint8_t> bytes);

std::size_t encoded_size(std::uint32_t p) noexcept;

std::uint32_t crc32(std::span<const std::uint8_t> bytes) noexcept;

// Little-endian helpers shared by the binary file formats.
void put_u32(Bytes& out, std::uint32_t v);
void put_u64(Bytes& out, std::uint64_t v);
void put_f64(Bytes& out, double v);
std::uint32_t get_u32(const std::uint8_t* p) noexcept;
std::uint64_t get_u64(const std::uint8_t* p) noexcept;
double get_f64(const std::uint8_t* p) noexcept;

} // namespace daniel
