#pragma once

// Block I/O trace ingestion: MSRC-style CSV, a minimal generic CSV for
// synthetic inputs, and the expansion of byte-range requests into
// fixed-size block accesses.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sgdp {

inline constexpr std::uint64_t kBlockSize = 8192;  // 8KB blocks

enum class Op : std::uint8_t { Read = 0, Write = 1 };

enum class OpFilter { All, Read, Write };

// One raw I/O request as it appears in the trace file. Timestamps stay in
// the source unit (100ns ticks for MSRC, nanoseconds for the generic CSV).
struct TraceRecord {
    std::int64_t timestamp = 0;
    std::string host;
    int disk_id = 0;
    Op op = Op::Read;
    std::uint64_t offset_bytes = 0;
    std::uint64_t size_bytes = 0;
    std::int64_t latency = 0;  // carried through, never used by the pipeline
};

// A single 8KB-block touch derived from a TraceRecord.
struct BlockAccess {
    std::int64_t timestamp = 0;
    std::uint64_t lba = 0;  // block index, not bytes
    Op op = Op::Read;

    bool operator==(const BlockAccess&) const = default;
};

class ParseError : public std::runtime_error {
  public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

enum class ParseMode { Strict, Lenient };

struct ParseResult {
    std::vector<TraceRecord> records;
    std::size_t skipped_lines = 0;  // only populated in lenient mode
    std::string timestamp_unit = "100ns";
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <typename Int>
inline bool parse_int(std::string_view s, Int& out) {
    s = trim(s);
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

inline bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        char ca = a[i], cb = b[i];
        if (ca >= 'A' && ca <= 'Z') ca = static_cast<char>(ca - 'A' + 'a');
        if (cb >= 'A' && cb <= 'Z') cb = static_cast<char>(cb - 'A' + 'a');
        if (ca != cb) return false;
    }
    return true;
}

inline bool parse_op(std::string_view s, Op& out) {
    s = trim(s);
    if (iequals(s, "read") || iequals(s, "r")) {
        out = Op::Read;
        return true;
    }
    if (iequals(s, "write") || iequals(s, "w")) {
        out = Op::Write;
        return true;
    }
    return false;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

}  // namespace detail

// MSRC enterprise trace row:
//   Timestamp,Hostname,DiskNumber,Type,Offset,Size,ResponseTime
// Timestamps are 100ns ticks. Lines failing to parse raise ParseError in
// strict mode and are counted + skipped in lenient mode.
inline ParseResult parse_msrc_csv(std::istream& in, ParseMode mode = ParseMode::Strict) {
    ParseResult result;
    result.timestamp_unit = "100ns";
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& what) -> bool {
        if (mode == ParseMode::Strict) throw ParseError(line_no, what);
        ++result.skipped_lines;
        return false;
    };
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv = detail::trim(line);
        if (sv.empty()) continue;
        auto fields = detail::split_csv(sv);
        if (fields.size() != 7) {
            fail("expected 7 comma-separated fields, got " + std::to_string(fields.size()));
            continue;
        }
        TraceRecord rec;
        if (!detail::parse_int(fields[0], rec.timestamp)) {
            fail("bad timestamp");
            continue;
        }
        rec.host = std::string(detail::trim(fields[1]));
        if (!detail::parse_int(fields[2], rec.disk_id)) {
            fail("bad disk number");
            continue;
        }
        if (!detail::parse_op(fields[3], rec.op)) {
            fail("bad op (want Read/Write)");
            continue;
        }
        if (!detail::parse_int(fields[4], rec.offset_bytes)) {
            fail("bad offset");
            continue;
        }
        if (!detail::parse_int(fields[5], rec.size_bytes)) {
            fail("bad size");
            continue;
        }
        if (!detail::parse_int(fields[6], rec.latency)) {
            fail("bad response time");
            continue;
        }
        if (rec.size_bytes == 0) {
            fail("size must be >= 1");
            continue;
        }
        if (rec.offset_bytes > UINT64_MAX - rec.size_bytes) {
            fail("offset + size overflows 64 bits");
            continue;
        }
        result.records.push_back(std::move(rec));
    }
    return result;
}

// Generic synthetic format: one header line "#unit=ns", then rows of
// "timestamp,lba,op" where lba is already a block index. Rows are mapped
// onto TraceRecord so the rest of the pipeline is format-agnostic.
inline ParseResult parse_generic_csv(std::istream& in, ParseMode mode = ParseMode::Strict,
                                     std::uint64_t block_size = kBlockSize) {
    ParseResult result;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    auto fail = [&](const std::string& what) -> bool {
        if (mode == ParseMode::Strict) throw ParseError(line_no, what);
        ++result.skipped_lines;
        return false;
    };
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv = detail::trim(line);
        if (sv.empty()) continue;
        if (!header_seen) {
            if (!sv.starts_with("#unit=")) throw ParseError(line_no, "missing #unit= header");
            std::string_view unit = sv.substr(6);
            if (unit != "ns") throw ParseError(line_no, "unsupported timestamp unit: " + std::string(unit));
            result.timestamp_unit = std::string(unit);
            header_seen = true;
            continue;
        }
        if (sv.front() == '#') continue;
        auto fields = detail::split_csv(sv);
        if (fields.size() != 3) {
            fail("expected 3 comma-separated fields, got " + std::to_string(fields.size()));
            continue;
        }
        TraceRecord rec;
        std::uint64_t lba = 0;
        if (!detail::parse_int(fields[0], rec.timestamp)) {
            fail("bad timestamp");
            continue;
        }
        if (!detail::parse_int(fields[1], lba)) {
            fail("bad lba");
            continue;
        }
        if (!detail::parse_op(fields[2], rec.op)) {
            fail("bad op (want Read/Write)");
            continue;
        }
        if (lba > UINT64_MAX / block_size) {
            fail("lba out of addressable range");
            continue;
        }
        rec.offset_bytes = lba * block_size;
        rec.size_bytes = block_size;
        result.records.push_back(std::move(rec));
    }
    if (!header_seen && line_no > 0) throw ParseError(1, "missing #unit= header");
    return result;
}

// Expands each request to the blocks it touches:
//   floor(offset/bs) .. floor((offset+size-1)/bs), ascending, same timestamp.
// Record order is preserved.
inline std::vector<BlockAccess> normalize_to_blocks(std::span<const TraceRecord> records,
                                                    std::uint64_t block_size = kBlockSize) {
    if (block_size == 0) throw std::invalid_argument("block_size must be positive");
    std::vector<BlockAccess> out;
    out.reserve(records.size());
    for (const TraceRecord& rec : records) {
        const std::uint64_t first = rec.offset_bytes / block_size;
        const std::uint64_t last = (rec.offset_bytes + rec.size_bytes - 1) / block_size;
        for (std::uint64_t lba = first; lba <= last; ++lba) {
            out.push_back(BlockAccess{rec.timestamp, lba, rec.op});
        }
    }
    return out;
}

inline std::vector<TraceRecord> filter_ops(std::span<const TraceRecord> records, OpFilter filter) {
    if (filter == OpFilter::All) return {records.begin(), records.end()};
    const Op want = filter == OpFilter::Read ? Op::Read : Op::Write;
    std::vector<TraceRecord> out;
    out.reserve(records.size());
    for (const TraceRecord& rec : records) {
        if (rec.op == want) out.push_back(rec);
    }
    return out;
}

namespace detail {

inline void put_u64(std::ostream& out, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 8);
}

inline bool get_u64(std::istream& in, std::uint64_t& v) {
    char buf[8];
    if (!in.read(buf, 8)) return false;
    v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
    return true;
}

inline void put_u32(std::ostream& out, std::uint32_t v) {
    char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 4);
}

inline bool get_u32(std::istream& in, std::uint32_t& v) {
    char buf[4];
    if (!in.read(buf, 4)) return false;
    v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
    return true;
}

inline void put_u16(std::ostream& out, std::uint16_t v) {
    char buf[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
    out.write(buf, 2);
}

inline bool get_u16(std::istream& in, std::uint16_t& v) {
    char buf[2];
    if (!in.read(buf, 2)) return false;
    v = static_cast<std::uint16_t>(static_cast<unsigned char>(buf[0]) |
                                   (static_cast<std::uint16_t>(static_cast<unsigned char>(buf[1])) << 8));
    return true;
}

}  // namespace detail

// Binary block cache: little-endian records of (u64 timestamp, u64 lba, u8 op).
inline void write_blocks_file(std::ostream& out, std::span<const BlockAccess> accesses) {
    for (const BlockAccess& a : accesses) {
        detail::put_u64(out, static_cast<std::uint64_t>(a.timestamp));
        detail::put_u64(out, a.lba);
        char op = static_cast<char>(a.op);
        out.write(&op, 1);
    }
}

inline std::vector<BlockAccess> read_blocks_file(std::istream& in) {
    std::vector<BlockAccess> out;
    std::uint64_t ts = 0, lba = 0;
    while (detail::get_u64(in, ts)) {
        if (!detail::get_u64(in, lba)) throw std::runtime_error("truncated blocks file");
        char op = 0;
        if (!in.read(&op, 1)) throw std::runtime_error("truncated blocks file");
        if (op != 0 && op != 1) throw std::runtime_error("corrupt blocks file: bad op byte");
        out.push_back(BlockAccess{static_cast<std::int64_t>(ts), lba, static_cast<Op>(op)});
    }
    return out;
}

}  // namespace sgdp
