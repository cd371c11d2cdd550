#pragma once

// LBA delta computation, the top-K class vocabulary, and the split of
// encoded delta sequences into fixed-length streams by time gap plus
// sliding window.

#include <algorithm>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sgdp/trace.hpp"

namespace sgdp {

// Bidirectional map between raw LBA deltas and class ids 1..k. Class 0 is
// never produced by any delta: it stands for "infrequent / no-prefetch".
struct DeltaVocab {
    int k = 0;           // effective class count (<= requested_k)
    int requested_k = 0; // what the caller asked for
    std::unordered_map<std::int64_t, int> class_of;
    std::vector<std::int64_t> delta_of;   // index c in 1..k; index 0 unused
    std::vector<std::uint64_t> count_of;  // training-split occurrence counts, same indexing
};

// Fixed-length window of encoded deltas plus what is needed to decode a
// prediction back into a block address.
struct DeltaStream {
    std::vector<int> classes;     // length n, each in [0, k]
    std::uint64_t anchor_lba = 0; // access that produced the last delta
    int target_class = 0;         // class of the following delta
    std::int64_t stream_id = 0;
};

inline std::vector<std::int64_t> compute_deltas(std::span<const std::uint64_t> lbas) {
    if (lbas.size() < 2) throw std::invalid_argument("sequence too short: need at least 2 lbas");
    std::vector<std::int64_t> deltas(lbas.size() - 1);
    for (std::size_t i = 0; i + 1 < lbas.size(); ++i) {
        deltas[i] = static_cast<std::int64_t>(lbas[i + 1]) - static_cast<std::int64_t>(lbas[i]);
    }
    return deltas;
}

// Assigns classes 1..k to the k most frequent deltas. Ties break toward the
// smaller |delta|, then negative before positive, so the result is a total
// order and the vocabulary is deterministic. Fewer than k distinct deltas
// lowers k to the distinct count.
inline DeltaVocab build_vocab(std::span<const std::int64_t> deltas, int k) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (deltas.empty()) throw std::invalid_argument("cannot build vocabulary from empty delta sequence");
    std::unordered_map<std::int64_t, std::uint64_t> counts;
    for (std::int64_t d : deltas) ++counts[d];

    std::vector<std::pair<std::int64_t, std::uint64_t>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        const std::uint64_t abs_a = a.first < 0 ? static_cast<std::uint64_t>(-(a.first + 1)) + 1 : static_cast<std::uint64_t>(a.first);
        const std::uint64_t abs_b = b.first < 0 ? static_cast<std::uint64_t>(-(b.first + 1)) + 1 : static_cast<std::uint64_t>(b.first);
        if (abs_a != abs_b) return abs_a < abs_b;
        return a.first < b.first;  // negative before positive
    });

    DeltaVocab vocab;
    vocab.requested_k = k;
    vocab.k = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(k), ranked.size()));
    vocab.delta_of.resize(static_cast<std::size_t>(vocab.k) + 1, 0);
    vocab.count_of.resize(static_cast<std::size_t>(vocab.k) + 1, 0);
    for (int c = 1; c <= vocab.k; ++c) {
        const auto& [delta, count] = ranked[static_cast<std::size_t>(c - 1)];
        vocab.class_of.emplace(delta, c);
        vocab.delta_of[static_cast<std::size_t>(c)] = delta;
        vocab.count_of[static_cast<std::size_t>(c)] = count;
    }
    return vocab;
}

// Total on all integers: anything outside the vocabulary is class 0.
inline int encode(const DeltaVocab& vocab, std::int64_t delta) {
    auto it = vocab.class_of.find(delta);
    return it == vocab.class_of.end() ? 0 : it->second;
}

// decode(0) is "no prefetch" and yields nothing.
inline std::optional<std::int64_t> decode(const DeltaVocab& vocab, int class_id) {
    if (class_id < 0 || class_id > vocab.k) throw std::out_of_range("class id out of range");
    if (class_id == 0) return std::nullopt;
    return vocab.delta_of[static_cast<std::size_t>(class_id)];
}

struct SplitResult {
    std::vector<DeltaStream> streams;
    std::size_t segments = 0;
    std::size_t short_segments = 0;  // segments that yielded no window
};

// Segments the access sequence wherever the timestamp gap exceeds
// gap_limit, then slides a window of n encoded deltas over each segment.
// Each window needs one following delta as its target; the anchor is the
// access that ends the window, so anchor + decode(target) is the next lba.
inline SplitResult split_streams(std::span<const BlockAccess> accesses, const DeltaVocab& vocab,
                                 std::int64_t gap_limit, std::size_t window_n, std::size_t stride = 1) {
    if (window_n < 1) throw std::invalid_argument("window_n must be >= 1");
    if (stride < 1) throw std::invalid_argument("stride must be >= 1");
    if (gap_limit <= 0) throw std::invalid_argument("gap_limit must be positive");

    SplitResult result;
    std::int64_t next_id = 0;

    std::size_t seg_begin = 0;
    auto flush_segment = [&](std::size_t seg_end) {  // [seg_begin, seg_end)
        const std::size_t len = seg_end - seg_begin;
        if (len == 0) return;
        ++result.segments;
        if (len < window_n + 2) {  // need n deltas plus a target
            ++result.short_segments;
            return;
        }
        std::vector<int> encoded(len - 1);
        for (std::size_t i = 0; i + 1 < len; ++i) {
            const std::int64_t d = static_cast<std::int64_t>(accesses[seg_begin + i + 1].lba) -
                                   static_cast<std::int64_t>(accesses[seg_begin + i].lba);
            encoded[i] = encode(vocab, d);
        }
        for (std::size_t w = 0; w + window_n < encoded.size(); w += stride) {
            DeltaStream s;
            s.classes.assign(encoded.begin() + static_cast<std::ptrdiff_t>(w),
                             encoded.begin() + static_cast<std::ptrdiff_t>(w + window_n));
            s.target_class = encoded[w + window_n];
            s.anchor_lba = accesses[seg_begin + w + window_n].lba;
            s.stream_id = next_id++;
            result.streams.push_back(std::move(s));
        }
    };

    for (std::size_t i = 1; i < accesses.size(); ++i) {
        const std::int64_t gap = accesses[i].timestamp - accesses[i - 1].timestamp;
        if (gap > gap_limit) {
            flush_segment(i);
            seg_begin = i;
        }
    }
    if (!accesses.empty()) flush_segment(accesses.size());
    return result;
}

// ---------------------------------------------------------------------------
// Serialization

// Vocabulary file: "class_id,raw_delta,count" CSV with one row per class 1..k.
inline void save_vocab_csv(std::ostream& out, const DeltaVocab& vocab) {
    out << "class_id,raw_delta,count\n";
    for (int c = 1; c <= vocab.k; ++c) {
        out << c << ',' << vocab.delta_of[static_cast<std::size_t>(c)] << ','
            << vocab.count_of[static_cast<std::size_t>(c)] << '\n';
    }
}

inline DeltaVocab load_vocab_csv(std::istream& in) {
    DeltaVocab vocab;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty vocabulary file");
    if (detail::trim(line) != "class_id,raw_delta,count")
        throw std::runtime_error("bad vocabulary header: " + line);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv = detail::trim(line);
        if (sv.empty()) continue;
        auto fields = detail::split_csv(sv);
        int cls = 0;
        std::int64_t delta = 0;
        std::uint64_t count = 0;
        if (fields.size() != 3 || !detail::parse_int(fields[0], cls) ||
            !detail::parse_int(fields[1], delta) || !detail::parse_int(fields[2], count)) {
            throw ParseError(line_no, "bad vocabulary row");
        }
        if (cls != vocab.k + 1) throw ParseError(line_no, "vocabulary class ids must be contiguous from 1");
        if (vocab.delta_of.empty()) {
            vocab.delta_of.push_back(0);  // slot 0 reserved
            vocab.count_of.push_back(0);
        }
        vocab.delta_of.push_back(delta);
        vocab.count_of.push_back(count);
        vocab.class_of.emplace(delta, cls);
        vocab.k = cls;
    }
    if (vocab.k == 0) throw std::runtime_error("vocabulary file holds no classes");
    vocab.requested_k = vocab.k;
    return vocab;
}

// FNV-1a over the canonical (k, delta, ...) layout; used to pair checkpoints
// with the vocabulary they were trained against.
inline std::uint64_t vocab_hash(const DeltaVocab& vocab) {
    std::uint64_t h = 14695981039346656037ull;
    auto mix = [&h](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 1099511628211ull;
        }
    };
    mix(static_cast<std::uint64_t>(vocab.k));
    for (int c = 1; c <= vocab.k; ++c) mix(static_cast<std::uint64_t>(vocab.delta_of[static_cast<std::size_t>(c)]));
    return h;
}

// Contiguous chronological folds: fold f is held out, the remaining
// n_folds-1 chunks train. Contiguity keeps the temporal structure intact.
inline std::pair<std::vector<DeltaStream>, std::vector<DeltaStream>> fold_split(
    std::span<const DeltaStream> streams, int fold, int n_folds = 10) {
    if (n_folds < 2) throw std::invalid_argument("fold_split: need at least 2 folds");
    if (fold < 0 || fold >= n_folds)
        throw std::invalid_argument("fold_split: fold index out of range");
    const std::size_t total = streams.size();
    const auto begin = total * static_cast<std::size_t>(fold) / static_cast<std::size_t>(n_folds);
    const auto end =
        total * (static_cast<std::size_t>(fold) + 1) / static_cast<std::size_t>(n_folds);
    std::pair<std::vector<DeltaStream>, std::vector<DeltaStream>> out;
    out.first.reserve(total - (end - begin));
    out.second.reserve(end - begin);
    for (std::size_t i = 0; i < total; ++i) {
        if (i >= begin && i < end)
            out.second.push_back(streams[i]);
        else
            out.first.push_back(streams[i]);
    }
    return out;
}

namespace detail {

inline std::string to_hex(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

}  // namespace detail

// Streams file: u32 n, then per stream u16 class ids x n, u16 target,
// u64 anchor lba. Little endian throughout.
inline void write_streams_file(std::ostream& out, std::span<const DeltaStream> streams, std::uint32_t window_n) {
    detail::put_u32(out, window_n);
    for (const DeltaStream& s : streams) {
        if (s.classes.size() != window_n) throw std::invalid_argument("stream length does not match header n");
        for (int c : s.classes) {
            if (c < 0 || c > 0xffff) throw std::invalid_argument("class id does not fit u16");
            detail::put_u16(out, static_cast<std::uint16_t>(c));
        }
        if (s.target_class < 0 || s.target_class > 0xffff) throw std::invalid_argument("target class does not fit u16");
        detail::put_u16(out, static_cast<std::uint16_t>(s.target_class));
        detail::put_u64(out, s.anchor_lba);
    }
}

struct StreamsFile {
    std::uint32_t window_n = 0;
    std::vector<DeltaStream> streams;
};

inline StreamsFile read_streams_file(std::istream& in) {
    StreamsFile file;
    if (!detail::get_u32(in, file.window_n)) throw std::runtime_error("truncated streams file: missing header");
    if (file.window_n == 0) throw std::runtime_error("streams file header n must be >= 1");
    std::int64_t next_id = 0;
    while (true) {
        std::uint16_t first = 0;
        if (!detail::get_u16(in, first)) break;
        DeltaStream s;
        s.classes.resize(file.window_n);
        s.classes[0] = first;
        for (std::uint32_t i = 1; i < file.window_n; ++i) {
            std::uint16_t c = 0;
            if (!detail::get_u16(in, c)) throw std::runtime_error("truncated streams file: mid-record");
            s.classes[i] = c;
        }
        std::uint16_t target = 0;
        if (!detail::get_u16(in, target)) throw std::runtime_error("truncated streams file: missing target");
        s.target_class = target;
        std::uint64_t anchor = 0;
        if (!detail::get_u64(in, anchor)) throw std::runtime_error("truncated streams file: missing anchor");
        s.anchor_lba = anchor;
        s.stream_id = next_id++;
        file.streams.push_back(std::move(s));
    }
    return file;
}

}  // namespace sgdp
