#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "workloads.hpp"
#include "sgdp/prefetch.hpp"
#include "sgdp/variants.hpp"

using namespace sgdp;

namespace {
BlockAccess at(std::int64_t ts, std::uint64_t lba) { return {ts, lba, Op::Read}; }

// Rigged parameters that always score class `winner` highest, regardless of
// the window: zero everything, bias v_h to e0 and align embed[winner] with it.
ModelParams<float> always_predict(int k, int d, int winner) {
    auto p = ModelParams<float>::shaped(k, d);
    p.b_h(0) = 1.0f;
    p.embed(winner, 0) = 1.0f;
    return p;
}

DeltaVocab tiny_vocab(std::vector<std::int64_t> deltas, int k) {
    return build_vocab(deltas, k);
}
}  // namespace

TEST_CASE("none never prefetches") {
    NoPrefetcher p;
    CHECK(p.observe(at(1, 10), 3).lbas.empty());
    CHECK(p.observe(at(2, 11), 3).lbas.empty());
    CHECK(p.name() == "none");
}

TEST_CASE("naive repeats the last delta") {
    NaivePrefetcher p;
    CHECK(p.observe(at(1, 100), 1).lbas.empty());  // no delta yet
    auto d = p.observe(at(2, 108), 1);
    REQUIRE(d.lbas.size() == 1);
    CHECK(d.lbas[0] == 116);
    d = p.observe(at(3, 120), 1);
    REQUIRE(d.lbas.size() == 1);
    CHECK(d.lbas[0] == 132);  // new delta 12

    p.reset();
    CHECK(p.observe(at(9, 50), 1).lbas.empty());
}

TEST_CASE("naive repeats zero deltas and guards against negative targets") {
    NaivePrefetcher p;
    p.observe(at(1, 7), 1);
    auto d = p.observe(at(2, 7), 1);
    REQUIRE(d.lbas.size() == 1);
    CHECK(d.lbas[0] == 7);  // delta 0 predicts a re-read

    NaivePrefetcher q;
    q.observe(at(1, 100), 1);
    auto neg = q.observe(at(2, 10), 1);  // delta -90 from lba 10 -> -80
    CHECK(neg.lbas.empty());
}

TEST_CASE("stride fires only on a constant nonzero stride") {
    StridePrefetcher p;
    CHECK(p.observe(at(1, 100), 1).lbas.empty());
    CHECK(p.observe(at(2, 108), 1).lbas.empty());  // only two observations
    auto d = p.observe(at(3, 116), 1);
    REQUIRE(d.lbas.size() == 1);
    CHECK(d.lbas[0] == 124);

    // sliding history: 108,116,124 after the next access
    d = p.observe(at(4, 124), 1);
    REQUIRE(d.lbas.size() == 1);
    CHECK(d.lbas[0] == 132);
}

TEST_CASE("stride stays silent on broken or zero strides") {
    StridePrefetcher p;
    p.observe(at(1, 100), 1);
    p.observe(at(2, 108), 1);
    CHECK(p.observe(at(3, 120), 1).lbas.empty());  // 8 then 12

    StridePrefetcher z;
    z.observe(at(1, 50), 1);
    z.observe(at(2, 50), 1);
    CHECK(z.observe(at(3, 50), 1).lbas.empty());  // zero stride
}

TEST_CASE("stride tracks interleaved regions independently") {
    // two readers far apart land in different slots (63 and 71 for these)
    StridePrefetcher p;
    const std::uint64_t a = 1 << 20, b = 1 << 24;
    REQUIRE(detail::mix64(a >> 12) % StridePrefetcher::kSlots !=
            detail::mix64(b >> 12) % StridePrefetcher::kSlots);
    p.observe(at(1, a), 1);
    p.observe(at(2, b), 1);
    p.observe(at(3, a + 8), 1);
    p.observe(at(4, b + 16), 1);
    auto da = p.observe(at(5, a + 16), 1);
    REQUIRE(da.lbas.size() == 1);
    CHECK(da.lbas[0] == a + 24);
    auto db = p.observe(at(6, b + 32), 1);
    REQUIRE(db.lbas.size() == 1);
    CHECK(db.lbas[0] == b + 48);

    p.reset();
    p.observe(at(7, a), 1);
    p.observe(at(8, a + 8), 1);  // history cleared: no decision until 3 accesses
    CHECK(p.observe(at(9, a + 16), 1).lbas.size() == 1);
}

TEST_CASE("stride prediction of block zero is allowed, negative is not") {
    // all lbas below keep the same lba>>12 region, hence the same slot
    StridePrefetcher p;
    p.observe(at(1, 3000), 1);
    p.observe(at(2, 2000), 1);
    auto d = p.observe(at(3, 1000), 1);
    REQUIRE(d.lbas.size() == 1);
    CHECK(d.lbas[0] == 0);

    StridePrefetcher q;
    q.observe(at(1, 4000), 1);
    q.observe(at(2, 2500), 1);
    CHECK(q.observe(at(3, 1000), 1).lbas.empty());  // next would be -500
}

TEST_CASE("online window mirrors the offline split rule") {
    auto vocab = tiny_vocab({1, 1, 2, -3}, 4);
    OnlineWindow w(&vocab, 2, 100);
    CHECK_FALSE(w.ingest(at(10, 100)));   // first access: no delta
    CHECK_FALSE(w.ingest(at(20, 101)));   // one delta
    CHECK(w.ingest(at(30, 102)));         // two deltas: full
    CHECK(w.classes() == std::deque<int>{1, 1});
    CHECK(w.ingest(at(40, 104)));         // slides: {1, 2}
    CHECK(w.classes() == std::deque<int>{1, 2});

    CHECK_FALSE(w.ingest(at(500, 200)));  // gap clears the window
    CHECK_FALSE(w.ingest(at(510, 201)));
    CHECK(w.ingest(at(520, 202)));        // refilled from post-gap deltas only
    CHECK(w.classes() == std::deque<int>{1, 1});
}

TEST_CASE("online windows enumerate offline streams plus one trailing state per segment") {
    // property: replaying accesses through OnlineWindow yields the offline
    // stream list in order, plus exactly one extra full window per segment
    // that is long enough (the final state has no target yet).
    auto workload = sgdp::testing::interleaved_readers(3000, 17);
    const auto& accesses = workload.accesses;
    std::vector<std::int64_t> deltas;
    for (std::size_t i = 1; i < accesses.size(); ++i)
        if (accesses[i].timestamp - accesses[i - 1].timestamp <= workload.gap_limit)
            deltas.push_back(static_cast<std::int64_t>(accesses[i].lba) -
                             static_cast<std::int64_t>(accesses[i - 1].lba));
    auto vocab = build_vocab(deltas, 16);
    const std::size_t n = 4;

    auto offline = split_streams(accesses, vocab, workload.gap_limit, n);

    OnlineWindow window(&vocab, static_cast<int>(n), workload.gap_limit);
    std::vector<std::pair<std::vector<int>, std::uint64_t>> online;
    for (const auto& a : accesses)
        if (window.ingest(a))
            online.emplace_back(std::vector<int>(window.classes().begin(),
                                                 window.classes().end()),
                                a.lba);

    // count segments with at least n+1 accesses by scanning gaps independently
    std::size_t eligible = 0, run = 1;
    for (std::size_t i = 1; i <= accesses.size(); ++i) {
        if (i == accesses.size() ||
            accesses[i].timestamp - accesses[i - 1].timestamp > workload.gap_limit) {
            if (run >= n + 1) ++eligible;
            run = 1;
        } else {
            ++run;
        }
    }
    REQUIRE(online.size() == offline.streams.size() + eligible);

    // offline streams appear as an ordered sub-sequence (skipping trailers)
    std::size_t oi = 0;
    for (const auto& s : offline.streams) {
        bool matched = false;
        while (oi < online.size()) {
            if (online[oi].first == s.classes && online[oi].second == s.anchor_lba) {
                matched = true;
                ++oi;
                break;
            }
            ++oi;
        }
        CHECK(matched);
    }
}

TEST_CASE("rolling predictions follow the decoded chain") {
    // model always predicts class of delta +4
    auto vocab = tiny_vocab({4, 4, -2}, 3);
    const int cls = encode(vocab, 4);
    REQUIRE(cls != 0);
    auto params = always_predict(vocab.k, 3, cls);
    std::deque<int> window{cls, cls};
    auto lbas = roll_predictions(params, vocab, window, 100, 5, 1, 0.5);
    CHECK(lbas == std::vector<std::uint64_t>{104, 108, 112, 116, 120});
}

TEST_CASE("rolling stops on class zero") {
    auto vocab = tiny_vocab({4, -2}, 2);
    auto params = always_predict(vocab.k, 3, 0);
    std::deque<int> window{1, 1};
    CHECK(roll_predictions(params, vocab, window, 100, 5, 1, 0.5).empty());
}

TEST_CASE("rolling stops before negative addresses") {
    auto vocab = tiny_vocab({-50, 1}, 2);
    const int cls = encode(vocab, -50);
    auto params = always_predict(vocab.k, 3, cls);
    std::deque<int> window{cls, cls};
    auto lbas = roll_predictions(params, vocab, window, 120, 5, 1, 0.5);
    CHECK(lbas == std::vector<std::uint64_t>{70, 20});  // next would be -30
}

TEST_CASE("rolling dedupes repeats without breaking the chain") {
    auto vocab = tiny_vocab({0, 9}, 2);
    const int cls = encode(vocab, 0);
    REQUIRE(cls != 0);  // delta 0 is a legitimate vocabulary member
    auto params = always_predict(vocab.k, 3, cls);
    std::deque<int> window{cls, cls};
    auto lbas = roll_predictions(params, vocab, window, 55, 4, 1, 0.5);
    CHECK(lbas == std::vector<std::uint64_t>{55});  // four identical predictions
}

TEST_CASE("rolling respects page bounds") {
    auto vocab = tiny_vocab({100, 1}, 2);
    const int cls = encode(vocab, 100);
    auto params = always_predict(vocab.k, 3, cls);
    std::deque<int> window{cls, cls};
    auto lbas =
        roll_predictions(params, vocab, window, 8000, 5, 1, 0.5,
                         std::make_pair<std::uint64_t, std::uint64_t>(0, 8191));
    CHECK(lbas == std::vector<std::uint64_t>{8100});  // 8200 would leave the page
}

TEST_CASE("sgdp prefetcher warms up, predicts, and resets") {
    auto vocab = tiny_vocab({1}, 1);
    auto params = always_predict(vocab.k, 2, 1);
    SgdpPrefetcher<float> p(&params, &vocab, 3, 1, 0.5, 100);
    CHECK(p.name() == "sgdp");
    CHECK(p.observe(at(10, 50), 1).lbas.empty());
    CHECK(p.observe(at(20, 51), 1).lbas.empty());
    CHECK(p.observe(at(30, 52), 1).lbas.empty());  // only 2 deltas so far
    auto d = p.observe(at(40, 53), 1);
    REQUIRE(d.lbas.size() == 1);
    CHECK(d.lbas[0] == 54);

    // a gap forces re-warmup
    CHECK(p.observe(at(999, 80), 1).lbas.empty());
    CHECK(p.observe(at(1009, 81), 1).lbas.empty());
    CHECK(p.observe(at(1019, 82), 1).lbas.empty());
    CHECK(p.observe(at(1029, 83), 1).lbas.size() == 1);

    p.reset();
    CHECK(p.observe(at(2000, 10), 1).lbas.empty());
}

TEST_CASE("steps=1 reduces rolling to one direct model prediction") {
    auto workload = sgdp::testing::interleaved_readers(800, 3);
    const auto& accesses = workload.accesses;
    std::vector<std::int64_t> deltas;
    for (std::size_t i = 1; i < accesses.size(); ++i)
        deltas.push_back(static_cast<std::int64_t>(accesses[i].lba) -
                         static_cast<std::int64_t>(accesses[i - 1].lba));
    auto vocab = build_vocab(deltas, 8);
    TrainConfig cfg;
    cfg.k = vocab.k;
    cfg.d = 4;
    cfg.window_n = 3;
    auto params = init_params<float>(cfg);  // arbitrary weights are fine here

    SgdpPrefetcher<float> prefetcher(&params, &vocab, 3, 1, 0.5, workload.gap_limit);
    OnlineWindow shadow(&vocab, 3, workload.gap_limit);
    for (const auto& a : accesses) {
        auto rolled = prefetcher.observe(a, 1);
        if (!shadow.ingest(a)) {
            CHECK(rolled.lbas.empty());
            continue;
        }
        // independent single-step path: predict once, decode, bound-check
        std::vector<int> classes(shadow.classes().begin(), shadow.classes().end());
        auto input = make_input<float>(std::span<const int>(classes), 0.5, vocab.k);
        auto pred = predict(params, input, 1);
        std::vector<std::uint64_t> want;
        if (pred.class_id != 0) {
            const auto next =
                static_cast<std::int64_t>(a.lba) + *decode(vocab, pred.class_id);
            if (next >= 0) want.push_back(static_cast<std::uint64_t>(next));
        }
        CHECK(rolled.lbas == want);
    }
}

TEST_CASE("recorded decisions replay bit for bit") {
    auto workload = sgdp::testing::interleaved_readers(500, 5);
    NaivePrefetcher naive;
    auto decisions = record_decisions(workload.accesses, naive, 1);
    REQUIRE(decisions.size() == workload.accesses.size());

    ReplayPrefetcher replay("naive", &decisions);
    NaivePrefetcher fresh;
    for (const auto& a : workload.accesses)
        CHECK(replay.observe(a, 1).lbas == fresh.observe(a, 1).lbas);
    CHECK_THROWS_AS(replay.observe(at(1, 1), 1), std::runtime_error);

    replay.reset();  // rewound: can replay again
    CHECK(replay.observe(workload.accesses[0], 1).lbas == decisions[0]);
    CHECK(replay.name() == "naive");
}

TEST_CASE("paged prefetcher keeps per-page windows and in-page predictions") {
    PageConfig pages;  // shift 13
    auto vocab = make_page_vocab(pages);
    const int cls = encode(vocab, 1);
    auto params = always_predict(vocab.k, 2, cls);
    PagedSgdpPrefetcher<float> p(&params, &vocab, 2, 1, 0.5, 1000, pages.page_shift);
    CHECK(p.name() == "sgdp_p");

    // interleave two pages; each page needs its own warmup of 2 deltas
    const std::uint64_t pg0 = 100, pg1 = 9000;  // pages 0 and 1
    CHECK(p.observe(at(1, pg0), 1).lbas.empty());
    CHECK(p.observe(at(2, pg1), 1).lbas.empty());
    CHECK(p.observe(at(3, pg0 + 1), 1).lbas.empty());
    CHECK(p.observe(at(4, pg1 + 1), 1).lbas.empty());
    auto d0 = p.observe(at(5, pg0 + 2), 1);
    REQUIRE(d0.lbas.size() == 1);
    CHECK(d0.lbas[0] == pg0 + 3);  // windows never mixed across pages
    auto d1 = p.observe(at(6, pg1 + 2), 1);
    REQUIRE(d1.lbas.size() == 1);
    CHECK(d1.lbas[0] == pg1 + 3);

    // predictions stay inside the anchor's page even when rolling far
    PagedSgdpPrefetcher<float> edge(&params, &vocab, 2, 1, 0.5, 1000, pages.page_shift);
    edge.observe(at(1, 8189), 1);
    edge.observe(at(2, 8190), 1);
    auto dd = edge.observe(at(3, 8191), 1);  // last block of page 0
    CHECK(dd.lbas.empty());                  // 8192 would cross into page 1
}
