#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "mmtrack/core.hpp"

namespace mmtrack {

// Wire layout, little-endian throughout:
//   magic[8] version:u32 total_len:u32 radar_id:u32 seq:u32 timestamp_us:u64
//   num_points:u32 points[num_points * 5 * f32] crc32:u32
// total_len covers the whole packet including magic and crc. The crc covers
// everything after the magic and before the crc field itself.
inline constexpr std::array<uint8_t, 8> kPacketMagic = {0x02, 0x01, 0x04, 0x03,
                                                        0x06, 0x05, 0x08, 0x07};
inline constexpr uint32_t kPacketVersion = 1;
inline constexpr size_t kPacketHeaderBytes = 36;     // magic through num_points
inline constexpr size_t kPointBytes = 20;            // x y z energy speed, f32 each
inline constexpr size_t kEmptyPacketBytes = 40;      // header + crc, zero points
inline constexpr size_t kMaxPacketBytes = 1u << 20;  // 1 MiB hard cap
inline constexpr uint32_t kMaxPointsPerPacket = 65535;

namespace detail {

inline constexpr std::array<uint32_t, 256> makeCrcTable() {
    std::array<uint32_t, 256> table{};
    for (uint32_t i = 0; i < 256; ++i) {
        uint32_t c = i;
        for (int k = 0; k < 8; ++k)
            c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
        table[i] = c;
    }
    return table;
}

inline constexpr auto kCrcTable = makeCrcTable();

inline void putU32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 24));
}

inline void putU64(std::vector<uint8_t>& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

inline void putF32(std::vector<uint8_t>& out, float v) {
    putU32(out, std::bit_cast<uint32_t>(v));
}

inline uint32_t getU32(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
           static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

inline uint64_t getU64(const uint8_t* p) {
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = v << 8 | p[i];
    return v;
}

inline float getF32(const uint8_t* p) { return std::bit_cast<float>(getU32(p)); }

}  // namespace detail

// CRC-32 (IEEE 802.3 polynomial, reflected).
inline uint32_t crc32(const uint8_t* data, size_t len, uint32_t seed = 0) {
    uint32_t c = seed ^ 0xFFFFFFFFu;
    for (size_t i = 0; i < len; ++i)
        c = detail::kCrcTable[(c ^ data[i]) & 0xFFu] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

struct FramePacket {
    uint32_t version = kPacketVersion;
    uint32_t radar_id = 0;
    uint32_t seq = 0;
    uint64_t timestamp_us = 0;
    std::vector<RadarPoint> points;

    double timestampSeconds() const { return timestamp_us * 1e-6; }

    size_t wireSize() const { return kEmptyPacketBytes + kPointBytes * points.size(); }
};

inline std::vector<uint8_t> encodePacket(const FramePacket& p) {
    if (p.points.size() > kMaxPointsPerPacket)
        throw CapacityError("packet exceeds " + std::to_string(kMaxPointsPerPacket) +
                            " points");
    if (p.wireSize() > kMaxPacketBytes)
        throw CapacityError("packet exceeds " + std::to_string(kMaxPacketBytes) +
                            " bytes");
    std::vector<uint8_t> out;
    out.reserve(p.wireSize());
    out.insert(out.end(), kPacketMagic.begin(), kPacketMagic.end());
    detail::putU32(out, p.version);
    detail::putU32(out, static_cast<uint32_t>(p.wireSize()));
    detail::putU32(out, p.radar_id);
    detail::putU32(out, p.seq);
    detail::putU64(out, p.timestamp_us);
    detail::putU32(out, static_cast<uint32_t>(p.points.size()));
    for (const auto& pt : p.points) {
        detail::putF32(out, pt.x);
        detail::putF32(out, pt.y);
        detail::putF32(out, pt.z);
        detail::putF32(out, pt.energy);
        detail::putF32(out, pt.speed);
    }
    detail::putU32(out, crc32(out.data() + kPacketMagic.size(),
                              out.size() - kPacketMagic.size()));
    return out;
}

enum class BadReason : uint8_t {
    Truncated = 0,  // recognizable start, stream ended early
    BadMagic = 1,   // bytes with no packet start
    BadCrc = 2,     // framing intact, checksum mismatch
    BadLength = 3,  // length field impossible or inconsistent
};

inline const char* toString(BadReason r) {
    switch (r) {
        case BadReason::Truncated: return "truncated";
        case BadReason::BadMagic: return "bad_magic";
        case BadReason::BadCrc: return "bad_crc";
        case BadReason::BadLength: return "bad_length";
    }
    return "?";
}

// One decode step. Every outcome consumes at least one byte, so a scan over
// arbitrary input always terminates with the consumed sizes summing to the
// input length.
struct DecodeOutcome {
    bool ok = false;
    FramePacket packet;      // valid when ok
    BadReason reason = BadReason::BadMagic;
    size_t bytes_consumed = 0;
};

// Incremental scanner. feed() emits everything decidable and buffers a tail
// that may still become a packet; finish() flushes that tail.
class StreamDecoder {
public:
    std::vector<DecodeOutcome> feed(const uint8_t* data, size_t len) {
        buffer_.insert(buffer_.end(), data, data + len);
        return scan(false);
    }

    std::vector<DecodeOutcome> feed(const std::vector<uint8_t>& data) {
        return feed(data.data(), data.size());
    }

    std::vector<DecodeOutcome> finish() {
        auto out = scan(true);
        buffer_.clear();
        return out;
    }

    size_t buffered() const { return buffer_.size(); }

private:
    std::vector<uint8_t> buffer_;

    static size_t findMagic(const std::vector<uint8_t>& b, size_t from) {
        if (b.size() < kPacketMagic.size()) return b.size();
        for (size_t i = from; i + kPacketMagic.size() <= b.size(); ++i) {
            if (std::memcmp(b.data() + i, kPacketMagic.data(), kPacketMagic.size()) == 0)
                return i;
        }
        return b.size();
    }

    // Longest proper magic prefix ending the buffer; only these bytes may still
    // become a packet start once more data arrives.
    static size_t trailingMagicPrefix(const std::vector<uint8_t>& b, size_t from) {
        const size_t maxLen = std::min(kPacketMagic.size() - 1, b.size() - from);
        for (size_t len = maxLen; len > 0; --len) {
            if (std::memcmp(b.data() + b.size() - len, kPacketMagic.data(), len) == 0)
                return len;
        }
        return 0;
    }

    std::vector<DecodeOutcome> scan(bool at_end) {
        std::vector<DecodeOutcome> out;
        size_t pos = 0;
        while (pos < buffer_.size()) {
            const size_t m = findMagic(buffer_, pos);
            if (m > pos) {
                // Garbage run. Keep a possible partial magic at the very end
                // of the buffer alive unless the stream is closed.
                size_t end = m;
                if (m == buffer_.size() && !at_end) {
                    const size_t keep = trailingMagicPrefix(buffer_, pos);
                    end = buffer_.size() - keep;
                    if (end <= pos) break;  // all remaining bytes may be a magic prefix
                }
                DecodeOutcome bad;
                bad.reason = BadReason::BadMagic;
                bad.bytes_consumed = end - pos;
                out.push_back(bad);
                pos = end;
                continue;
            }
            if (m >= buffer_.size()) break;

            const size_t avail = buffer_.size() - m;
            if (avail < kPacketHeaderBytes) {
                if (!at_end) break;  // header may still complete
                DecodeOutcome bad;
                bad.reason = BadReason::Truncated;
                bad.bytes_consumed = avail;
                out.push_back(bad);
                pos = buffer_.size();
                break;
            }

            const uint8_t* h = buffer_.data() + m;
            const uint32_t total_len = detail::getU32(h + 12);
            const uint32_t num_points = detail::getU32(h + 32);
            const bool lengthOk =
                total_len >= kEmptyPacketBytes && total_len <= kMaxPacketBytes &&
                num_points <= kMaxPointsPerPacket &&
                total_len == kEmptyPacketBytes + kPointBytes * static_cast<size_t>(num_points);
            if (!lengthOk) {
                const size_t next = findMagic(buffer_, m + 1);
                if (next >= buffer_.size() && !at_end) {
                    const size_t keep = trailingMagicPrefix(buffer_, m + 1);
                    const size_t end = buffer_.size() - keep;
                    if (end <= m) break;
                    DecodeOutcome bad;
                    bad.reason = BadReason::BadLength;
                    bad.bytes_consumed = end - m;
                    out.push_back(bad);
                    pos = end;
                    break;
                }
                DecodeOutcome bad;
                bad.reason = BadReason::BadLength;
                bad.bytes_consumed = (next >= buffer_.size() ? buffer_.size() : next) - m;
                out.push_back(bad);
                pos = m + bad.bytes_consumed;
                continue;
            }

            if (avail < total_len) {
                if (!at_end) break;  // body may still complete
                // Stream ended inside the body; hand back to the next magic if
                // one is embedded, otherwise drop the fragment.
                const size_t next = findMagic(buffer_, m + 1);
                DecodeOutcome bad;
                bad.reason = BadReason::Truncated;
                bad.bytes_consumed = (next >= buffer_.size() ? buffer_.size() : next) - m;
                out.push_back(bad);
                pos = m + bad.bytes_consumed;
                continue;
            }

            const uint32_t stored = detail::getU32(h + total_len - 4);
            const uint32_t actual =
                crc32(h + kPacketMagic.size(), total_len - kPacketMagic.size() - 4);
            if (stored != actual) {
                // The claimed span may have swallowed a real packet; resync on
                // any magic inside it.
                size_t next = findMagic(buffer_, m + 1);
                if (next > m + total_len) next = m + total_len;
                DecodeOutcome bad;
                bad.reason = BadReason::BadCrc;
                bad.bytes_consumed = next - m;
                out.push_back(bad);
                pos = next;
                continue;
            }

            DecodeOutcome good;
            good.ok = true;
            good.packet.version = detail::getU32(h + 8);
            good.packet.radar_id = detail::getU32(h + 16);
            good.packet.seq = detail::getU32(h + 20);
            good.packet.timestamp_us = detail::getU64(h + 24);
            good.packet.points.resize(num_points);
            for (uint32_t i = 0; i < num_points; ++i) {
                const uint8_t* q = h + kPacketHeaderBytes + kPointBytes * i;
                good.packet.points[i].x = detail::getF32(q);
                good.packet.points[i].y = detail::getF32(q + 4);
                good.packet.points[i].z = detail::getF32(q + 8);
                good.packet.points[i].energy = detail::getF32(q + 12);
                good.packet.points[i].speed = detail::getF32(q + 16);
            }
            good.bytes_consumed = total_len;
            out.push_back(good);
            pos = m + total_len;
        }
        buffer_.erase(buffer_.begin(), buffer_.begin() + pos);
        return out;
    }
};

// One-shot scan of a complete byte sequence.
inline std::vector<DecodeOutcome> decodeStream(const uint8_t* data, size_t len) {
    StreamDecoder d;
    auto out = d.feed(data, len);
    auto tail = d.finish();
    out.insert(out.end(), tail.begin(), tail.end());
    return out;
}

inline std::vector<DecodeOutcome> decodeStream(const std::vector<uint8_t>& data) {
    return decodeStream(data.data(), data.size());
}

// ---- .mmr recording files: raw concatenated packets -------------------------

inline void writeMmr(const std::string& path, const std::vector<FramePacket>& packets) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write recording: " + path);
    for (const auto& p : packets) {
        const auto bytes = encodePacket(p);
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
    }
}

inline std::vector<uint8_t> readFileBytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read file: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    return bytes;
}

inline std::vector<DecodeOutcome> readMmr(const std::string& path) {
    return decodeStream(readFileBytes(path));
}

}  // namespace mmtrack
