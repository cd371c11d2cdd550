#pragma once

// Prefetching strategies behind one stateful interface: the simulator feeds
// every demand access to observe() and inserts whatever lbas come back.
//
//   none    never prefetches (baseline floor)
//   naive   repeats the last observed delta
//   stride  128-slot table keyed by hash(lba >> shift), fires on a
//           constant nonzero stride across the last 3 same-slot accesses
//   sgdp    online windowed model prediction with multi-step rolling
//   sgdp_p  sgdp with per-page state and the fixed in-page vocabulary
//
// The sgdp variants maintain their delta window with the same gap-split
// rule the offline pipeline uses, so online windows replay the training
// distribution exactly (see OnlineWindow).

#include <array>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sgdp/delta.hpp"
#include "sgdp/model.hpp"
#include "sgdp/trace.hpp"

namespace sgdp {

struct PrefetchDecision {
    std::vector<std::uint64_t> lbas;  // ordered, deduplicated, possibly empty
};

class Prefetcher {
public:
    virtual ~Prefetcher() = default;
    virtual std::string name() const = 0;
    // Called once per demand access, after the cache lookup; `steps` is the
    // rolling depth for model-based strategies (baselines ignore it).
    virtual PrefetchDecision observe(const BlockAccess& access, int steps) = 0;
    virtual void reset() = 0;
};

class NoPrefetcher final : public Prefetcher {
public:
    std::string name() const override { return "none"; }
    PrefetchDecision observe(const BlockAccess&, int) override { return {}; }
    void reset() override {}
};

// Predicts lba + (lba - prev); silent until two accesses have been seen.
class NaivePrefetcher final : public Prefetcher {
public:
    std::string name() const override { return "naive"; }

    PrefetchDecision observe(const BlockAccess& access, int) override {
        PrefetchDecision decision;
        if (have_prev_) {
            last_delta_ = static_cast<std::int64_t>(access.lba) -
                          static_cast<std::int64_t>(prev_lba_);
            have_delta_ = true;
        }
        prev_lba_ = access.lba;
        have_prev_ = true;
        if (have_delta_) {
            const std::int64_t next = static_cast<std::int64_t>(access.lba) + last_delta_;
            if (next >= 0) decision.lbas.push_back(static_cast<std::uint64_t>(next));
        }
        return decision;
    }

    void reset() override {
        have_prev_ = false;
        have_delta_ = false;
    }

private:
    bool have_prev_ = false, have_delta_ = false;
    std::uint64_t prev_lba_ = 0;
    std::int64_t last_delta_ = 0;
};

namespace detail {

// splitmix64 finalizer; spreads page-grained keys across the slot table.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace detail

// 128 independent access streams keyed by coarse spatial region; each slot
// remembers its last three lbas and fires when they form a constant
// nonzero stride.
class StridePrefetcher final : public Prefetcher {
public:
    static constexpr int kSlots = 128;
    static constexpr int kHistory = 3;

    explicit StridePrefetcher(int region_shift = 12) : shift_(region_shift) {
        if (region_shift < 0 || region_shift > 63)
            throw std::invalid_argument("stride: region shift out of range");
    }

    std::string name() const override { return "stride"; }

    PrefetchDecision observe(const BlockAccess& access, int) override {
        Slot& slot = slots_[detail::mix64(access.lba >> shift_) % kSlots];
        if (slot.count < kHistory) {
            slot.lbas[static_cast<std::size_t>(slot.count++)] = access.lba;
        } else {
            slot.lbas[0] = slot.lbas[1];
            slot.lbas[1] = slot.lbas[2];
            slot.lbas[2] = access.lba;
        }
        PrefetchDecision decision;
        if (slot.count == kHistory) {
            const auto a = static_cast<std::int64_t>(slot.lbas[0]);
            const auto b = static_cast<std::int64_t>(slot.lbas[1]);
            const auto c = static_cast<std::int64_t>(slot.lbas[2]);
            if (b - a == c - b && c - b != 0) {
                const std::int64_t next = c + (c - b);
                if (next >= 0) decision.lbas.push_back(static_cast<std::uint64_t>(next));
            }
        }
        return decision;
    }

    void reset() override {
        for (auto& slot : slots_) slot.count = 0;
    }

private:
    struct Slot {
        std::array<std::uint64_t, kHistory> lbas{};
        int count = 0;
    };
    std::array<Slot, kSlots> slots_{};
    int shift_;
};

// Maintains the last `n` encoded deltas of the current stream segment,
// splitting exactly like the offline pipeline: a timestamp gap greater
// than gap_limit starts a fresh segment (and an empty window).
class OnlineWindow {
public:
    OnlineWindow(const DeltaVocab* vocab, int window_n, std::int64_t gap_limit)
        : vocab_(vocab), n_(window_n), gap_(gap_limit) {
        if (window_n < 1) throw std::invalid_argument("online window: n must be >= 1");
    }

    // Returns true when the window holds n deltas after this access.
    bool ingest(const BlockAccess& access) {
        if (have_prev_ && access.timestamp - prev_ts_ > gap_) window_.clear();
        else if (have_prev_) {
            const std::int64_t delta = static_cast<std::int64_t>(access.lba) -
                                       static_cast<std::int64_t>(prev_lba_);
            window_.push_back(encode(*vocab_, delta));
            if (window_.size() > static_cast<std::size_t>(n_)) window_.pop_front();
        }
        prev_lba_ = access.lba;
        prev_ts_ = access.timestamp;
        have_prev_ = true;
        return full();
    }

    bool full() const { return window_.size() == static_cast<std::size_t>(n_); }
    const std::deque<int>& classes() const { return window_; }

    void reset() {
        window_.clear();
        have_prev_ = false;
    }

private:
    const DeltaVocab* vocab_;
    int n_;
    std::int64_t gap_;
    std::deque<int> window_;
    bool have_prev_ = false;
    std::uint64_t prev_lba_ = 0;
    std::int64_t prev_ts_ = 0;
};

// Multi-step rolling prediction: each step feeds the predicted class back
// into the window and advances the anchor by the decoded delta.  Stops on
// class 0 (no-prefetch), a negative lba, or — when a page bound is given —
// the first prediction that leaves [page_lo, page_hi].  Duplicates are
// dropped but do not stop the chain.
template <class T>
std::vector<std::uint64_t> roll_predictions(
    const ModelParams<T>& params, const DeltaVocab& vocab, std::deque<int> window,
    std::uint64_t anchor, int steps, int prop_steps, double w_s,
    std::optional<std::pair<std::uint64_t, std::uint64_t>> page_bounds = std::nullopt) {
    std::vector<std::uint64_t> out;
    std::vector<int> classes(window.begin(), window.end());
    auto lba = static_cast<std::int64_t>(anchor);
    for (int step = 0; step < steps; ++step) {
        auto input = make_input<T>(std::span<const int>(classes), w_s, params.k);
        const Prediction pred = predict(params, input, prop_steps);
        if (pred.class_id == 0) break;
        const auto delta = decode(vocab, pred.class_id);
        lba += *delta;
        if (lba < 0) break;
        const auto next = static_cast<std::uint64_t>(lba);
        if (page_bounds && (next < page_bounds->first || next > page_bounds->second)) break;
        bool seen = false;
        for (std::uint64_t v : out) {
            if (v == next) {
                seen = true;
                break;
            }
        }
        if (!seen) out.push_back(next);
        classes.erase(classes.begin());
        classes.push_back(pred.class_id);
    }
    return out;
}

template <class T>
class SgdpPrefetcher final : public Prefetcher {
public:
    SgdpPrefetcher(const ModelParams<T>* params, const DeltaVocab* vocab, int window_n,
                   int prop_steps, double w_s, std::int64_t gap_limit,
                   std::string label = "sgdp")
        : params_(params),
          vocab_(vocab),
          window_(vocab, window_n, gap_limit),
          prop_steps_(prop_steps),
          w_s_(w_s),
          label_(std::move(label)) {}

    std::string name() const override { return label_; }

    PrefetchDecision observe(const BlockAccess& access, int steps) override {
        PrefetchDecision decision;
        if (!window_.ingest(access)) return decision;
        decision.lbas = roll_predictions(*params_, *vocab_,
                                         std::deque<int>(window_.classes()), access.lba,
                                         steps, prop_steps_, w_s_);
        return decision;
    }

    void reset() override { window_.reset(); }

private:
    const ModelParams<T>* params_;
    const DeltaVocab* vocab_;
    OnlineWindow window_;
    int prop_steps_;
    double w_s_;
    std::string label_;
};

// Prefetcher decisions depend only on the observed access sequence, never
// on cache contents, so a sweep over many cache sizes can record the
// decision sequence once and replay it. Bit-identical to rerunning the
// real prefetcher, minus the model inference cost.
inline std::vector<std::vector<std::uint64_t>> record_decisions(
    std::span<const BlockAccess> accesses, Prefetcher& prefetcher, int steps) {
    prefetcher.reset();
    std::vector<std::vector<std::uint64_t>> decisions;
    decisions.reserve(accesses.size());
    for (const BlockAccess& a : accesses) decisions.push_back(prefetcher.observe(a, steps).lbas);
    return decisions;
}

class ReplayPrefetcher final : public Prefetcher {
public:
    ReplayPrefetcher(std::string label, const std::vector<std::vector<std::uint64_t>>* decisions)
        : label_(std::move(label)), decisions_(decisions) {}

    std::string name() const override { return label_; }

    PrefetchDecision observe(const BlockAccess&, int) override {
        if (pos_ >= decisions_->size())
            throw std::runtime_error("replay prefetcher ran past its recording");
        return {(*decisions_)[pos_++]};
    }

    void reset() override { pos_ = 0; }

private:
    std::string label_;
    const std::vector<std::vector<std::uint64_t>>* decisions_;
    std::size_t pos_ = 0;
};

// Page-partitioned variant: an independent online window per 2^page_shift
// block page, predictions confined to the anchor's page.
template <class T>
class PagedSgdpPrefetcher final : public Prefetcher {
public:
    PagedSgdpPrefetcher(const ModelParams<T>* params, const DeltaVocab* vocab, int window_n,
                        int prop_steps, double w_s, std::int64_t gap_limit, int page_shift = 13,
                        std::string label = "sgdp_p")
        : params_(params),
          vocab_(vocab),
          window_n_(window_n),
          prop_steps_(prop_steps),
          w_s_(w_s),
          gap_(gap_limit),
          page_shift_(page_shift),
          label_(std::move(label)) {}

    std::string name() const override { return label_; }

    PrefetchDecision observe(const BlockAccess& access, int steps) override {
        const std::uint64_t page = access.lba >> page_shift_;
        auto [it, inserted] =
            pages_.try_emplace(page, OnlineWindow(vocab_, window_n_, gap_));
        PrefetchDecision decision;
        if (!it->second.ingest(access)) return decision;
        const std::uint64_t lo = page << page_shift_;
        const std::uint64_t hi = lo + ((1ull << page_shift_) - 1);
        decision.lbas = roll_predictions(*params_, *vocab_,
                                         std::deque<int>(it->second.classes()), access.lba,
                                         steps, prop_steps_, w_s_, std::make_pair(lo, hi));
        return decision;
    }

    void reset() override { pages_.clear(); }

private:
    const ModelParams<T>* params_;
    const DeltaVocab* vocab_;
    int window_n_;
    int prop_steps_;
    double w_s_;
    std::int64_t gap_;
    int page_shift_;
    std::string label_;
    std::unordered_map<std::uint64_t, OnlineWindow> pages_;
};

}  // namespace sgdp
