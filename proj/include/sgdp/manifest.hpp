#pragma once

// Experiment identity. Every results file starts with a `# manifest:` line
// holding the JSON manifest (config echo, dataset content hash, vocabulary
// hash, seed, fold), followed by the CSV table. `report` refuses to merge
// results whose dataset hashes differ unless forced.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "sgdp/cache.hpp"
#include "sgdp/delta.hpp"
#include "sgdp/version.hpp"

namespace sgdp {

// FNV-1a over raw file bytes; identifies the dataset a result came from.
inline std::uint64_t file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file for hashing: " + path);
    std::uint64_t h = 14695981039346656037ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const auto got = static_cast<std::size_t>(in.gcount());
        for (std::size_t i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
        if (!in) break;
    }
    return h;
}

struct ExperimentManifest {
    std::string tool_version = kVersion;
    std::string dataset_path;
    std::string dataset_hash;  // hex
    std::string vocab_hash;    // hex, empty when no model is involved
    std::string variant = "base";
    std::uint64_t seed = 0;
    int fold = -1;  // -1 = no fold held out
    nlohmann::json config = nlohmann::json::object();  // echo of the knobs in play

    nlohmann::json to_json() const {
        return nlohmann::json{{"tool_version", tool_version},
                              {"dataset_path", dataset_path},
                              {"dataset_hash", dataset_hash},
                              {"vocab_hash", vocab_hash},
                              {"variant", variant},
                              {"seed", seed},
                              {"fold", fold},
                              {"config", config}};
    }

    static ExperimentManifest from_json(const nlohmann::json& j) {
        ExperimentManifest m;
        m.tool_version = j.value("tool_version", "");
        m.dataset_path = j.value("dataset_path", "");
        m.dataset_hash = j.value("dataset_hash", "");
        m.vocab_hash = j.value("vocab_hash", "");
        m.variant = j.value("variant", "base");
        m.seed = j.value("seed", std::uint64_t{0});
        m.fold = j.value("fold", -1);
        m.config = j.value("config", nlohmann::json::object());
        return m;
    }
};

inline void write_results_csv(std::ostream& out, const ExperimentManifest& manifest,
                              std::span<const SimReport> reports) {
    out << "# manifest: " << manifest.to_json().dump() << '\n';
    out << kReportColumns << '\n';
    for (const SimReport& r : reports) write_report_row(out, r);
}

inline void write_results_csv(const std::string& path, const ExperimentManifest& manifest,
                              std::span<const SimReport> reports) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open results file for writing: " + path);
    write_results_csv(out, manifest, reports);
    if (!out) throw std::runtime_error("short write to results file: " + path);
}

struct ResultsFile {
    ExperimentManifest manifest;
    std::vector<SimReport> rows;
};

namespace detail {

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace detail

inline ResultsFile read_results_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open results file: " + path);
    ResultsFile file;
    std::string line;
    bool have_header = false;
    std::map<std::string, std::size_t> columns;
    static const char* kRequired[] = {"prefetcher",      "cache_size", "steps",
                                      "hits",            "misses",     "prefetch_issued",
                                      "prefetch_correct"};
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.rfind("# manifest:", 0) == 0) {
            file.manifest = ExperimentManifest::from_json(
                nlohmann::json::parse(line.substr(std::string("# manifest:").size())));
            continue;
        }
        if (line[0] == '#') continue;
        auto fields = detail::split_line(line);
        if (!have_header) {
            for (std::size_t i = 0; i < fields.size(); ++i) columns[fields[i]] = i;
            for (const char* name : kRequired) {
                if (!columns.contains(name))
                    throw std::runtime_error(std::string("results file ") + path +
                                             " is missing column: " + name);
            }
            have_header = true;
            continue;
        }
        auto field = [&](const char* name) -> const std::string& {
            const std::size_t i = columns.at(name);
            if (i >= fields.size())
                throw std::runtime_error("results row in " + path + " is missing column: " +
                                         name);
            return fields[i];
        };
        SimReport r;
        r.prefetcher = field("prefetcher");
        r.cache_size = static_cast<std::size_t>(std::stoull(field("cache_size")));
        r.steps = std::stoi(field("steps"));
        r.hits = std::stoull(field("hits"));
        r.misses = std::stoull(field("misses"));
        r.prefetch_issued = std::stoull(field("prefetch_issued"));
        r.prefetch_correct = std::stoull(field("prefetch_correct"));
        file.rows.push_back(std::move(r));
    }
    if (!have_header) throw std::runtime_error("results file has no header row: " + path);
    return file;
}

// Merge keyed by (prefetcher, cache_size, steps); later files win on key
// collisions. Refuses mixed datasets unless force is set.
inline ResultsFile merge_results(std::span<const ResultsFile> files, bool force = false) {
    if (files.empty()) throw std::invalid_argument("no result files to merge");
    for (const ResultsFile& f : files) {
        if (!force && f.manifest.dataset_hash != files.front().manifest.dataset_hash)
            throw std::runtime_error(
                "refusing to merge results from different datasets (use --force to override)");
    }
    ResultsFile merged;
    merged.manifest = files.front().manifest;
    std::map<std::tuple<std::string, std::size_t, int>, std::size_t> index;
    for (const ResultsFile& f : files) {
        for (const SimReport& r : f.rows) {
            const auto key = std::make_tuple(r.prefetcher, r.cache_size, r.steps);
            auto [it, inserted] = index.try_emplace(key, merged.rows.size());
            if (inserted)
                merged.rows.push_back(r);
            else
                merged.rows[it->second] = r;
        }
    }
    return merged;
}

// Human-readable aligned table, one row per (prefetcher, size, steps).
inline std::string render_table(std::span<const SimReport> rows) {
    std::ostringstream out;
    out << std::left << std::setw(12) << "prefetcher" << std::right << std::setw(12)
        << "cache_size" << std::setw(7) << "steps" << std::setw(12) << "hits" << std::setw(12)
        << "misses" << std::setw(10) << "issued" << std::setw(10) << "correct" << std::setw(10)
        << "hr" << std::setw(10) << "epr" << '\n';
    for (const SimReport& r : rows) {
        out << std::left << std::setw(12) << r.prefetcher << std::right << std::setw(12)
            << r.cache_size << std::setw(7) << r.steps << std::setw(12) << r.hits
            << std::setw(12) << r.misses << std::setw(10) << r.prefetch_issued << std::setw(10)
            << r.prefetch_correct << std::fixed << std::setprecision(4) << std::setw(10)
            << r.hr() << std::setw(10) << r.epr() << '\n';
        out.unsetf(std::ios::fixed);
        out << std::setprecision(6);
    }
    return out.str();
}

}  // namespace sgdp
