#pragma once

// The two configuration-level variants:
//   sgdp_l  top-10000 delta vocabulary, otherwise the base pipeline
//   sgdp_p  independent streams per 2^page_shift-block page with the fixed
//           enumeration of every in-page delta (no top-K filtering)

#include <cstdint>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sgdp/delta.hpp"
#include "sgdp/model.hpp"
#include "sgdp/trace.hpp"

namespace sgdp {

inline TrainConfig make_sgdp_l_config(TrainConfig base) {
    base.k = 10000;
    return base;
}

struct PageConfig {
    int page_shift = 13;  // 8192 blocks = 64MB of 8KB blocks

    std::uint64_t page_size_blocks() const { return 1ull << page_shift; }
    std::uint64_t page_of(std::uint64_t lba) const { return lba >> page_shift; }

    void validate() const {
        if (page_shift < 1 || page_shift > 62)
            throw std::invalid_argument("page shift out of range");
    }
};

// Stable partition: pages appear in first-touch order, accesses keep their
// within-page order.
inline std::vector<std::pair<std::uint64_t, std::vector<BlockAccess>>> partition_pages(
    std::span<const BlockAccess> accesses, const PageConfig& cfg) {
    cfg.validate();
    std::vector<std::pair<std::uint64_t, std::vector<BlockAccess>>> pages;
    std::unordered_map<std::uint64_t, std::size_t> index;
    for (const BlockAccess& a : accesses) {
        const std::uint64_t page = cfg.page_of(a.lba);
        auto [it, inserted] = index.try_emplace(page, pages.size());
        if (inserted) pages.push_back({page, {}});
        pages[it->second].second.push_back(a);
    }
    return pages;
}

// Every delta an in-page pair can produce, enumerated as class id
// delta + 2^page_shift: ids 1..2*2^page_shift-1 cover [-(2^s-1), +(2^s-1)],
// class 0 stays the no-prefetch class. For the default shift this is
// 16383 delta classes, 16384 ids in total.
inline DeltaVocab make_page_vocab(const PageConfig& cfg) {
    cfg.validate();
    const auto half = static_cast<std::int64_t>(cfg.page_size_blocks());
    DeltaVocab vocab;
    vocab.k = static_cast<int>(2 * half - 1);
    vocab.requested_k = vocab.k;
    vocab.delta_of.resize(static_cast<std::size_t>(vocab.k) + 1, 0);
    vocab.count_of.resize(static_cast<std::size_t>(vocab.k) + 1, 0);
    vocab.class_of.reserve(static_cast<std::size_t>(vocab.k));
    for (int c = 1; c <= vocab.k; ++c) {
        const std::int64_t delta = static_cast<std::int64_t>(c) - half;
        vocab.delta_of[static_cast<std::size_t>(c)] = delta;
        vocab.class_of.emplace(delta, c);
    }
    return vocab;
}

// Per-page stream extraction with the shared gap/window rule; streams from
// all pages are pooled and renumbered. Pages too short to produce a window
// contribute nothing (single-access pages cannot even form a delta).
inline SplitResult split_page_streams(std::span<const BlockAccess> accesses,
                                      const DeltaVocab& vocab, const PageConfig& cfg,
                                      std::int64_t gap_limit, std::size_t window_n,
                                      std::size_t stride = 1) {
    SplitResult pooled;
    for (auto& [page, sequence] : partition_pages(accesses, cfg)) {
        SplitResult part = split_streams(sequence, vocab, gap_limit, window_n, stride);
        pooled.segments += part.segments;
        pooled.short_segments += part.short_segments;
        for (auto& s : part.streams) {
            s.stream_id = static_cast<std::int64_t>(pooled.streams.size());
            pooled.streams.push_back(std::move(s));
        }
    }
    return pooled;
}

}  // namespace sgdp
