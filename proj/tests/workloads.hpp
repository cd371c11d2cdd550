#pragma once

// Deterministic synthetic workloads used across the test suite. The
// generators double as oracles: the patterns are constructed, so the
// learnable fraction and the expected prefetch behaviour are known.

#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sgdp/trace.hpp"

namespace sgdp::testing {

struct Workload {
    std::vector<BlockAccess> accesses;
    std::int64_t gap_limit = 100;  // matches the msrc-format default
};

// Three sequential readers in far-apart regions, visited round-robin, so
// consecutive deltas cycle through three constants. Readers wrap inside a
// fixed-length window (reuse for the cache), every noise_every-th access is
// a one-off random read (two unlearnable deltas that map to class 0), and
// a timestamp gap splits a new segment every segment_len accesses.
inline Workload interleaved_readers(std::size_t count, std::uint64_t seed,
                                    std::size_t noise_every = 41,
                                    std::size_t segment_len = 173) {
    std::mt19937_64 rng(seed);
    const std::uint64_t bases[3] = {1'000'000, 30'000'000, 60'000'000};
    const std::uint64_t loop_len = 2000;
    std::uniform_int_distribution<std::uint64_t> noise_lba(0, 90'000'000);
    std::uniform_int_distribution<std::int64_t> tick(10, 40);

    Workload w;
    w.accesses.reserve(count);
    std::int64_t ts = 1'000'000;
    std::uint64_t j = 0;  // shared reader offset
    int reader = 0;
    for (std::size_t i = 0; i < count; ++i) {
        ts += tick(rng);
        if (i > 0 && i % segment_len == 0) ts += w.gap_limit * 5;  // force a split
        std::uint64_t lba;
        if (noise_every != 0 && i % noise_every == noise_every - 1) {
            lba = noise_lba(rng);
        } else {
            lba = bases[reader] + (j % loop_len);
            if (reader == 2) ++j;
            reader = (reader + 1) % 3;
        }
        w.accesses.push_back(BlockAccess{ts, lba, Op::Read});
    }
    return w;
}

// A mixed block-level workload in the shape of an enterprise volume trace:
// long sequential runs, three-way interleaved readers over a fixed set of
// regions (so their cross deltas recur between any train/eval split), a
// hot random-read pool, and bursts of rereads. Segment gaps at every mode
// switch.
inline Workload mixed_trace(std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const std::uint64_t regions[8] = {1u << 20, 2u << 20, 3u << 20, 4u << 20,
                                      5u << 20, 6u << 20, 7u << 20, 8u << 20};
    std::uniform_int_distribution<int> mode_die(0, 99);
    std::uniform_int_distribution<std::int64_t> tick(15, 60);
    std::uniform_int_distribution<std::size_t> seq_len(120, 400);
    std::uniform_int_distribution<std::uint64_t> seq_base(0, 40'000'000);
    std::uniform_int_distribution<int> region_die(0, 7);
    std::uniform_int_distribution<std::uint64_t> hot_die(0, 1999);

    std::vector<std::uint64_t> hot_pool(2000);
    for (auto& lba : hot_pool) lba = 50'000'000 + hot_die(rng) * 37;

    Workload w;
    w.accesses.reserve(count);
    std::int64_t ts = 5'000'000;
    std::vector<std::uint64_t> recent;
    std::uint64_t interleave_round = 0;
    auto push = [&](std::uint64_t lba) {
        ts += tick(rng);
        w.accesses.push_back(BlockAccess{ts, lba, Op::Read});
        recent.push_back(lba);
        if (recent.size() > 64) recent.erase(recent.begin());
    };

    while (w.accesses.size() < count) {
        ts += w.gap_limit * 8;  // fresh segment per mode chunk
        const int mode = mode_die(rng);
        if (mode < 55) {  // sequential run
            std::uint64_t lba = seq_base(rng);
            const std::size_t len = seq_len(rng);
            for (std::size_t i = 0; i < len && w.accesses.size() < count; ++i) push(lba++);
        } else if (mode < 80) {  // interleaved readers over fixed regions
            int r0 = region_die(rng), r1 = region_die(rng), r2 = region_die(rng);
            while (r1 == r0) r1 = (r1 + 1) % 8;
            while (r2 == r0 || r2 == r1) r2 = (r2 + 1) % 8;
            const std::uint64_t off = 211 * interleave_round++;
            const std::uint64_t starts[3] = {regions[r0] + off, regions[r1] + off,
                                             regions[r2] + off};
            for (std::size_t i = 0; i < 210 && w.accesses.size() < count; ++i)
                push(starts[i % 3] + i / 3);
        } else if (mode < 92) {  // hot random reads
            for (std::size_t i = 0; i < 150 && w.accesses.size() < count; ++i)
                push(hot_pool[hot_die(rng)]);
        } else {  // reread burst over recent blocks
            const auto snapshot = recent;
            for (std::size_t i = 0; i < snapshot.size() && w.accesses.size() < count; ++i)
                push(snapshot[snapshot.size() - 1 - i]);
        }
    }
    return w;
}

// Renders accesses as msrc-format CSV rows (offsets in bytes, 8KB ops).
inline std::string to_msrc_csv(const std::vector<BlockAccess>& accesses,
                               const std::string& host = "srv0") {
    std::ostringstream out;
    for (const auto& a : accesses) {
        out << a.timestamp << ',' << host << ",0," << (a.op == Op::Read ? "Read" : "Write")
            << ',' << a.lba * kBlockSize << ',' << kBlockSize << ",100\n";
    }
    return out.str();
}

// Uniform random accesses over a small block universe; timestamps dense.
inline std::vector<BlockAccess> random_trace(std::size_t count, std::uint64_t distinct,
                                             std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::uint64_t> lba(0, distinct - 1);
    std::vector<BlockAccess> out;
    out.reserve(count);
    std::int64_t ts = 1000;
    for (std::size_t i = 0; i < count; ++i) {
        ts += 5;
        out.push_back(BlockAccess{ts, lba(rng), Op::Read});
    }
    return out;
}

}  // namespace sgdp::testing
