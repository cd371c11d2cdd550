#pragma once

// Trace-driven LRU simulation producing HR@N and EPR@N.
//
// Per access: the demand lookup runs first (hit refreshes recency and may
// mark a prefetched entry as used; miss demand-fills), then the prefetcher
// observes the access and its predicted blocks are inserted at MRU.
// Prefetching a resident block is a no-op and is not counted.

#include <atomic>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <list>
#include <memory>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "sgdp/prefetch.hpp"
#include "sgdp/trace.hpp"

namespace sgdp {

class LruCache {
public:
    explicit LruCache(std::size_t capacity) : capacity_(capacity) {
        if (capacity < 1) throw std::invalid_argument("cache capacity must be >= 1");
    }

    struct AccessOutcome {
        bool hit = false;
        bool first_prefetch_use = false;  // hit on a prefetched, never-used entry
    };

    AccessOutcome access(std::uint64_t lba) {
        AccessOutcome outcome;
        auto it = index_.find(lba);
        if (it != index_.end()) {
            outcome.hit = true;
            Entry& e = it->second->second;
            if (e.prefetched && !e.used) {
                e.used = true;
                outcome.first_prefetch_use = true;
            }
            order_.splice(order_.begin(), order_, it->second);
        } else {
            insert_front(lba, Entry{false, false});
        }
        return outcome;
    }

    // Returns true if the block was actually inserted (false: already resident).
    bool insert_prefetch(std::uint64_t lba) {
        if (index_.contains(lba)) return false;
        insert_front(lba, Entry{true, false});
        return true;
    }

    bool resident(std::uint64_t lba) const { return index_.contains(lba); }
    std::size_t size() const { return index_.size(); }
    std::size_t capacity() const { return capacity_; }

private:
    struct Entry {
        bool prefetched = false;
        bool used = false;
    };

    void insert_front(std::uint64_t lba, Entry entry) {
        order_.emplace_front(lba, entry);
        index_[lba] = order_.begin();
        if (index_.size() > capacity_) {
            index_.erase(order_.back().first);
            order_.pop_back();
        }
    }

    std::size_t capacity_;
    std::list<std::pair<std::uint64_t, Entry>> order_;  // front = most recent
    std::unordered_map<std::uint64_t, std::list<std::pair<std::uint64_t, Entry>>::iterator>
        index_;
};

struct SimReport {
    std::string prefetcher;
    std::size_t cache_size = 0;
    int steps = 1;
    std::uint64_t hits = 0, misses = 0;
    std::uint64_t prefetch_issued = 0, prefetch_correct = 0;

    double hr() const {
        const std::uint64_t total = hits + misses;
        return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
    }
    double epr() const {
        return prefetch_issued == 0
                   ? 0.0
                   : static_cast<double>(prefetch_correct) / static_cast<double>(prefetch_issued);
    }
};

inline constexpr const char* kReportColumns =
    "prefetcher,cache_size,steps,hits,misses,prefetch_issued,prefetch_correct,hr,epr";

inline void write_report_row(std::ostream& out, const SimReport& r) {
    out << r.prefetcher << ',' << r.cache_size << ',' << r.steps << ',' << r.hits << ','
        << r.misses << ',' << r.prefetch_issued << ',' << r.prefetch_correct << ','
        << std::setprecision(17) << r.hr() << ',' << r.epr() << '\n';
}

inline nlohmann::json report_to_json(const SimReport& r) {
    return nlohmann::json{{"prefetcher", r.prefetcher},
                          {"cache_size", r.cache_size},
                          {"steps", r.steps},
                          {"hits", r.hits},
                          {"misses", r.misses},
                          {"prefetch_issued", r.prefetch_issued},
                          {"prefetch_correct", r.prefetch_correct},
                          {"hr", r.hr()},
                          {"epr", r.epr()}};
}

// hit_log, when given, records the per-access hit/miss sequence (1 = hit)
// so independent oracles can compare more than the final counters.
inline SimReport simulate(std::span<const BlockAccess> accesses, Prefetcher& prefetcher,
                          std::size_t cache_size, int steps,
                          std::vector<char>* hit_log = nullptr) {
    if (steps < 1) throw std::invalid_argument("simulate: steps must be >= 1");
    LruCache cache(cache_size);
    prefetcher.reset();
    SimReport report;
    report.prefetcher = prefetcher.name();
    report.cache_size = cache_size;
    report.steps = steps;
    if (hit_log) {
        hit_log->clear();
        hit_log->reserve(accesses.size());
    }
    for (const BlockAccess& access : accesses) {
        const auto outcome = cache.access(access.lba);
        if (outcome.hit)
            ++report.hits;
        else
            ++report.misses;
        if (outcome.first_prefetch_use) ++report.prefetch_correct;
        if (hit_log) hit_log->push_back(outcome.hit ? 1 : 0);

        const PrefetchDecision decision = prefetcher.observe(access, steps);
        for (std::uint64_t lba : decision.lbas) {
            if (cache.insert_prefetch(lba)) ++report.prefetch_issued;
        }
    }
    return report;
}

using PrefetcherFactory = std::function<std::unique_ptr<Prefetcher>()>;

struct SweepJob {
    PrefetcherFactory factory;
    std::size_t cache_size = 0;
    int steps = 1;
};

// Independent simulations, one fresh cache + prefetcher per job; results
// keep the job order no matter how many worker threads run them.
inline std::vector<SimReport> sweep(std::span<const BlockAccess> accesses,
                                    std::span<const SweepJob> jobs, int threads = 1) {
    if (threads < 1) throw std::invalid_argument("sweep: threads must be >= 1");
    std::vector<SimReport> reports(jobs.size());
    if (jobs.empty()) return reports;
    if (threads == 1) {
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            auto prefetcher = jobs[i].factory();
            reports[i] = simulate(accesses, *prefetcher, jobs[i].cache_size, jobs[i].steps);
        }
        return reports;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            auto prefetcher = jobs[i].factory();
            reports[i] = simulate(accesses, *prefetcher, jobs[i].cache_size, jobs[i].steps);
        }
    };
    std::vector<std::thread> pool;
    const auto n = static_cast<std::size_t>(std::min<std::size_t>(
        static_cast<std::size_t>(threads), jobs.size()));
    pool.reserve(n);
    for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return reports;
}

// Convenience form: one prefetcher configuration across many cache sizes.
inline std::vector<SimReport> sweep(std::span<const BlockAccess> accesses,
                                    const PrefetcherFactory& factory,
                                    std::span<const std::size_t> sizes, int steps,
                                    int threads = 1) {
    if (sizes.empty()) throw std::invalid_argument("sweep: no cache sizes given");
    std::vector<SweepJob> jobs;
    jobs.reserve(sizes.size());
    for (std::size_t size : sizes) jobs.push_back({factory, size, steps});
    return sweep(accesses, jobs, threads);
}

}  // namespace sgdp
