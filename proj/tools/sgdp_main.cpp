// Command-line front end: preprocess | train | eval | report.
//
// Exit codes: 0 success, 1 internal error, 2 usage or input error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sgdp/cache.hpp"
#include "sgdp/delta.hpp"
#include "sgdp/graph.hpp"
#include "sgdp/manifest.hpp"
#include "sgdp/model.hpp"
#include "sgdp/prefetch.hpp"
#include "sgdp/trace.hpp"
#include "sgdp/variants.hpp"
#include "sgdp/version.hpp"

namespace {

// Anything traceable to bad user input (missing files, malformed data,
// mismatched artifacts) exits with 2; genuine bugs exit with 1.
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

sgdp::OpFilter to_op_filter(const std::string& ops) {
    if (ops == "all") return sgdp::OpFilter::All;
    if (ops == "read") return sgdp::OpFilter::Read;
    if (ops == "write") return sgdp::OpFilter::Write;
    throw InputError("unknown op filter: " + ops);
}

std::int64_t default_gap(const std::string& format) {
    // Stream split threshold in native trace time units: 0.01 ms for the
    // 100ns-tick msrc format, 0.1 ms for nanosecond formats.
    return format == "msrc" ? 100 : 100000;
}

struct LoadedTrace {
    std::vector<sgdp::BlockAccess> accesses;
    std::size_t records = 0;
    std::size_t skipped = 0;
};

LoadedTrace load_accesses(const std::string& path, const std::string& format,
                          const std::string& ops, bool lenient) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open trace: " + path);
    LoadedTrace out;
    try {
        if (format == "blocks") {
            auto blocks = sgdp::read_blocks_file(in);
            out.records = blocks.size();
            const auto filter = to_op_filter(ops);
            if (filter == sgdp::OpFilter::All) {
                out.accesses = std::move(blocks);
            } else {
                const auto want =
                    filter == sgdp::OpFilter::Read ? sgdp::Op::Read : sgdp::Op::Write;
                for (const auto& b : blocks)
                    if (b.op == want) out.accesses.push_back(b);
            }
        } else {
            sgdp::ParseResult parsed;
            const auto mode = lenient ? sgdp::ParseMode::Lenient : sgdp::ParseMode::Strict;
            if (format == "msrc")
                parsed = sgdp::parse_msrc_csv(in, mode);
            else if (format == "generic")
                parsed = sgdp::parse_generic_csv(in, mode);
            else
                throw InputError("unknown trace format: " + format);
            out.records = parsed.records.size();
            out.skipped = parsed.skipped_lines;
            auto kept = sgdp::filter_ops(parsed.records, to_op_filter(ops));
            out.accesses = sgdp::normalize_to_blocks(kept);
        }
    } catch (const sgdp::ParseError& err) {
        throw InputError(path + ": " + err.what());
    } catch (const std::runtime_error& err) {
        throw InputError(path + ": " + err.what());
    }
    return out;
}

sgdp::DeltaVocab load_vocab_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open vocabulary: " + path);
    try {
        return sgdp::load_vocab_csv(in);
    } catch (const std::exception& err) {
        throw InputError(path + ": " + err.what());
    }
}

// ---- preprocess -----------------------------------------------------------

struct PreprocessArgs {
    std::string trace;
    std::string format = "msrc";
    std::string ops = "all";
    bool lenient = false;
    int k = 1000;
    int window = 10;
    int stride = 1;
    std::int64_t gap = 0;  // 0 = format default
    std::string variant = "base";
    int page_shift = 13;
    double w_s = 0.5;
    std::string vocab_in, vocab_out, streams_out, blocks_out;
    std::string dump_graphs;
    int dump_limit = 8;
};

int run_preprocess(const PreprocessArgs& args) {
    auto trace = load_accesses(args.trace, args.format, args.ops, args.lenient);
    const auto& accesses = trace.accesses;
    if (accesses.size() < 2) throw InputError("trace yields fewer than 2 block accesses");
    const std::int64_t gap = args.gap > 0 ? args.gap : default_gap(args.format);

    std::unordered_set<std::uint64_t> distinct;
    for (const auto& a : accesses) distinct.insert(a.lba);

    sgdp::DeltaVocab vocab;
    sgdp::SplitResult split;
    std::vector<std::int64_t> all_deltas;
    if (args.variant == "page") {
        sgdp::PageConfig page_cfg{args.page_shift};
        vocab = sgdp::make_page_vocab(page_cfg);
        split = sgdp::split_page_streams(accesses, vocab, page_cfg, gap,
                                         static_cast<std::size_t>(args.window),
                                         static_cast<std::size_t>(args.stride));
        for (auto& [page, seq] : sgdp::partition_pages(accesses, page_cfg)) {
            if (seq.size() < 2) continue;
            std::vector<std::uint64_t> lbas;
            lbas.reserve(seq.size());
            for (const auto& a : seq) lbas.push_back(a.lba);
            for (std::int64_t d : sgdp::compute_deltas(lbas)) all_deltas.push_back(d);
        }
    } else {
        std::vector<std::uint64_t> lbas;
        lbas.reserve(accesses.size());
        for (const auto& a : accesses) lbas.push_back(a.lba);
        all_deltas = sgdp::compute_deltas(lbas);
        const int k = args.variant == "large" ? 10000 : args.k;
        if (!args.vocab_in.empty())
            vocab = load_vocab_file(args.vocab_in);
        else
            vocab = sgdp::build_vocab(all_deltas, k);
        split = sgdp::split_streams(accesses, vocab, gap, static_cast<std::size_t>(args.window),
                                    static_cast<std::size_t>(args.stride));
    }

    std::size_t covered = 0;
    for (std::int64_t d : all_deltas)
        if (sgdp::encode(vocab, d) != 0) ++covered;
    const double coverage =
        all_deltas.empty() ? 0.0
                           : 100.0 * static_cast<double>(covered) /
                                 static_cast<double>(all_deltas.size());

    if (!args.vocab_out.empty()) {
        std::ofstream out(args.vocab_out, std::ios::trunc);
        if (!out) throw InputError("cannot open vocabulary output: " + args.vocab_out);
        sgdp::save_vocab_csv(out, vocab);
    }
    if (!args.streams_out.empty()) {
        std::ofstream out(args.streams_out, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot open streams output: " + args.streams_out);
        sgdp::write_streams_file(out, split.streams, static_cast<std::uint32_t>(args.window));
    }
    if (!args.blocks_out.empty()) {
        std::ofstream out(args.blocks_out, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot open blocks output: " + args.blocks_out);
        sgdp::write_blocks_file(out, accesses);
    }
    if (!args.dump_graphs.empty()) {
        nlohmann::json dump = nlohmann::json::array();
        const auto limit = std::min<std::size_t>(split.streams.size(),
                                                 static_cast<std::size_t>(args.dump_limit));
        for (std::size_t i = 0; i < limit; ++i) {
            auto g = sgdp::build_stream_graph(split.streams[i].classes, args.w_s);
            auto j = sgdp::graph_to_json(g);
            j["stream_id"] = split.streams[i].stream_id;
            j["anchor_lba"] = split.streams[i].anchor_lba;
            j["target_class"] = split.streams[i].target_class;
            dump.push_back(std::move(j));
        }
        std::ofstream out(args.dump_graphs, std::ios::trunc);
        if (!out) throw InputError("cannot open graph dump output: " + args.dump_graphs);
        out << dump.dump(2) << '\n';
    }

    std::cout << "records:        " << trace.records << "\n"
              << "skipped_lines:  " << trace.skipped << "\n"
              << "block_accesses: " << accesses.size() << "\n"
              << "distinct_lbas:  " << distinct.size() << "\n"
              << "segments:       " << split.segments << " (no window: " << split.short_segments
              << ")\n"
              << "streams:        " << split.streams.size() << "\n"
              << "vocab_classes:  " << vocab.k << " (requested " << vocab.requested_k << ")\n"
              << "vocab_hash:     " << sgdp::detail::to_hex(sgdp::vocab_hash(vocab)) << "\n"
              << "coverage:       " << std::fixed << std::setprecision(2) << coverage << "%\n";
    return 0;
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
    std::string streams, vocab, out, history;
    sgdp::TrainConfig cfg;
    int fold = -1;
    std::string precision = "f32";
};

template <class T>
int run_train_typed(const TrainArgs& args, const sgdp::DeltaVocab& vocab,
                    const sgdp::StreamsFile& file) {
    sgdp::TrainConfig cfg = args.cfg;
    cfg.k = vocab.k;
    cfg.window_n = static_cast<int>(file.window_n);
    cfg.validate();

    std::vector<sgdp::DeltaStream> train_set;
    std::vector<sgdp::DeltaStream> holdout;
    if (args.fold >= 0) {
        auto parts = sgdp::fold_split(file.streams, args.fold);
        train_set = std::move(parts.first);
        holdout = std::move(parts.second);
    } else {
        train_set = file.streams;
    }
    if (train_set.empty()) throw InputError("no training streams after fold split");

    auto model = sgdp::train<T>(train_set, cfg);

    sgdp::save_checkpoint(args.out, model.params, model.config, sgdp::vocab_hash(vocab));

    sgdp::ExperimentManifest manifest;
    manifest.dataset_path = args.streams;
    manifest.dataset_hash = sgdp::detail::to_hex(sgdp::file_hash(args.streams));
    manifest.vocab_hash = sgdp::detail::to_hex(sgdp::vocab_hash(vocab));
    manifest.seed = cfg.seed;
    manifest.fold = args.fold;
    manifest.config = {{"k", cfg.k},           {"d", cfg.d},
                       {"lr0", cfg.lr0},       {"lr_decay", cfg.lr_decay},
                       {"batch", cfg.batch},   {"epochs", cfg.epochs},
                       {"l2_lambda", cfg.l2_lambda}, {"prop_steps", cfg.prop_steps},
                       {"w_s", cfg.w_s},       {"window_n", cfg.window_n},
                       {"tol", cfg.tol},       {"precision", args.precision}};

    if (!args.history.empty()) {
        std::ofstream out(args.history, std::ios::trunc);
        if (!out) throw InputError("cannot open history output: " + args.history);
        out << "# manifest: " << manifest.to_json().dump() << '\n';
        out << "epoch,lr,mean_loss,accuracy\n";
        for (const auto& e : model.history)
            out << e.epoch << ',' << std::setprecision(17) << e.lr << ',' << e.mean_loss << ','
                << e.accuracy << '\n';
    }

    for (const auto& e : model.history)
        std::cout << "epoch " << e.epoch << "  lr " << e.lr << "  loss " << e.mean_loss
                  << "  acc " << e.accuracy << "\n";
    if (!holdout.empty()) {
        std::size_t correct = 0;
        for (const auto& s : holdout) {
            if (sgdp::predict(model.params, s, cfg).class_id == s.target_class) ++correct;
        }
        std::cout << "holdout accuracy (fold " << args.fold << "): "
                  << static_cast<double>(correct) / static_cast<double>(holdout.size()) << " ("
                  << holdout.size() << " streams)\n";
    }
    std::cout << "checkpoint: " << args.out << "\n";
    return 0;
}

int run_train(const TrainArgs& args) {
    auto vocab = load_vocab_file(args.vocab);
    std::ifstream in(args.streams, std::ios::binary);
    if (!in) throw InputError("cannot open streams: " + args.streams);
    sgdp::StreamsFile file;
    try {
        file = sgdp::read_streams_file(in);
    } catch (const std::exception& err) {
        throw InputError(args.streams + ": " + err.what());
    }
    if (file.streams.empty()) throw InputError("streams file holds no streams");
    for (const auto& s : file.streams) {
        if (s.target_class > vocab.k) throw InputError("streams file does not match vocabulary");
        for (int c : s.classes)
            if (c > vocab.k) throw InputError("streams file does not match vocabulary");
    }
    if (args.precision == "f64") return run_train_typed<double>(args, vocab, file);
    return run_train_typed<float>(args, vocab, file);
}

// ---- eval -------------------------------------------------------------

struct EvalArgs {
    std::string trace;
    std::string format = "msrc";
    std::string ops = "all";
    bool lenient = false;
    std::int64_t gap = 0;
    std::string checkpoint, vocab;
    std::vector<std::size_t> sizes{100};
    int steps = 1;
    std::vector<std::string> prefetchers;
    int page_shift = 13;
    int jobs = 1;
    std::string out = "results.csv";
    std::string json_out;
};

int run_eval(const EvalArgs& args) {
    auto trace = load_accesses(args.trace, args.format, args.ops, args.lenient);
    const auto& accesses = trace.accesses;
    if (accesses.empty()) throw InputError("trace yields no block accesses");
    const std::int64_t gap = args.gap > 0 ? args.gap : default_gap(args.format);

    std::vector<std::string> names = args.prefetchers;
    if (names.empty()) {
        names = {"none", "naive", "stride"};
        if (!args.checkpoint.empty()) names.push_back("sgdp");
    }

    bool wants_model = false;
    for (const auto& n : names)
        if (n == "sgdp" || n == "sgdp_l" || n == "sgdp_p") wants_model = true;

    std::optional<sgdp::LoadedCheckpoint<float>> ckpt;
    sgdp::DeltaVocab vocab;
    if (wants_model) {
        if (args.checkpoint.empty())
            throw InputError("a model prefetcher was requested but no --checkpoint given");
        try {
            ckpt = sgdp::load_checkpoint<float>(args.checkpoint);
        } catch (const std::exception& err) {
            throw InputError(args.checkpoint + ": " + err.what());
        }
        bool wants_page = false;
        for (const auto& n : names)
            if (n == "sgdp_p") wants_page = true;
        if (wants_page) {
            vocab = sgdp::make_page_vocab(sgdp::PageConfig{args.page_shift});
        } else {
            if (args.vocab.empty())
                throw InputError("a model prefetcher was requested but no --vocab given");
            vocab = load_vocab_file(args.vocab);
        }
        const std::string have = sgdp::detail::to_hex(sgdp::vocab_hash(vocab));
        if (ckpt->vocab_hash.empty())
            throw InputError("checkpoint has no vocabulary hash sidecar: " + args.checkpoint);
        if (ckpt->vocab_hash != have)
            throw InputError("vocabulary hash mismatch: checkpoint was trained against " +
                             ckpt->vocab_hash + " but the supplied vocabulary is " + have);
    }

    // One recording per prefetcher, replayed across all cache sizes.
    std::vector<std::vector<std::vector<std::uint64_t>>> recordings(names.size());
    for (std::size_t i = 0; i < names.size(); ++i) {
        const std::string& n = names[i];
        std::unique_ptr<sgdp::Prefetcher> p;
        if (n == "none")
            p = std::make_unique<sgdp::NoPrefetcher>();
        else if (n == "naive")
            p = std::make_unique<sgdp::NaivePrefetcher>();
        else if (n == "stride")
            p = std::make_unique<sgdp::StridePrefetcher>();
        else if (n == "sgdp" || n == "sgdp_l")
            p = std::make_unique<sgdp::SgdpPrefetcher<float>>(
                &ckpt->params, &vocab, ckpt->config.window_n, ckpt->config.prop_steps,
                ckpt->config.w_s, gap, n);
        else if (n == "sgdp_p")
            p = std::make_unique<sgdp::PagedSgdpPrefetcher<float>>(
                &ckpt->params, &vocab, ckpt->config.window_n, ckpt->config.prop_steps,
                ckpt->config.w_s, gap, args.page_shift, n);
        else
            throw InputError("unknown prefetcher: " + n);
        recordings[i] = sgdp::record_decisions(accesses, *p, args.steps);
    }

    std::vector<sgdp::SweepJob> jobs;
    for (std::size_t i = 0; i < names.size(); ++i) {
        for (std::size_t size : args.sizes) {
            jobs.push_back({[label = names[i], rec = &recordings[i]] {
                                return std::make_unique<sgdp::ReplayPrefetcher>(label, rec);
                            },
                            size, args.steps});
        }
    }
    auto reports = sgdp::sweep(accesses, jobs, args.jobs);

    sgdp::ExperimentManifest manifest;
    manifest.dataset_path = args.trace;
    manifest.dataset_hash = sgdp::detail::to_hex(sgdp::file_hash(args.trace));
    if (wants_model) {
        manifest.vocab_hash = ckpt->vocab_hash;
        manifest.seed = ckpt->config.seed;
    }
    bool page = false, large = false;
    for (const auto& n : names) {
        if (n == "sgdp_p") page = true;
        if (n == "sgdp_l") large = true;
    }
    manifest.variant = page ? "page" : (large ? "large" : "base");
    manifest.config = {{"sizes", args.sizes},   {"steps", args.steps},
                       {"gap", gap},            {"ops", args.ops},
                       {"format", args.format}, {"prefetchers", names},
                       {"page_shift", args.page_shift}};
    if (wants_model) {
        manifest.config["k"] = ckpt->config.k;
        manifest.config["d"] = ckpt->config.d;
        manifest.config["window_n"] = ckpt->config.window_n;
        manifest.config["prop_steps"] = ckpt->config.prop_steps;
        manifest.config["w_s"] = ckpt->config.w_s;
    }

    sgdp::write_results_csv(args.out, manifest, reports);
    if (!args.json_out.empty()) {
        nlohmann::json j;
        j["manifest"] = manifest.to_json();
        j["rows"] = nlohmann::json::array();
        for (const auto& r : reports) j["rows"].push_back(sgdp::report_to_json(r));
        std::ofstream out(args.json_out, std::ios::trunc);
        if (!out) throw InputError("cannot open json output: " + args.json_out);
        out << j.dump(2) << '\n';
    }
    std::cout << sgdp::render_table(reports) << "results: " << args.out << "\n";
    return 0;
}

// ---- report -----------------------------------------------------------

struct ReportArgs {
    std::vector<std::string> files;
    std::string format = "table";
    bool force = false;
    std::string out;
};

int run_report(const ReportArgs& args) {
    std::vector<sgdp::ResultsFile> loaded;
    for (const auto& path : args.files) {
        try {
            loaded.push_back(sgdp::read_results_csv(path));
        } catch (const std::exception& err) {
            throw InputError(err.what());
        }
    }
    sgdp::ResultsFile merged;
    try {
        merged = sgdp::merge_results(loaded, args.force);
    } catch (const std::runtime_error& err) {
        throw InputError(err.what());
    }

    std::ostringstream body;
    if (args.format == "csv") {
        sgdp::write_results_csv(body, merged.manifest, merged.rows);
    } else if (args.format == "json") {
        nlohmann::json j;
        j["manifest"] = merged.manifest.to_json();
        j["rows"] = nlohmann::json::array();
        for (const auto& r : merged.rows) j["rows"].push_back(sgdp::report_to_json(r));
        body << j.dump(2) << '\n';
    } else {
        body << sgdp::render_table(merged.rows);
    }
    if (args.out.empty()) {
        std::cout << body.str();
    } else {
        std::ofstream out(args.out, std::ios::trunc);
        if (!out) throw InputError("cannot open report output: " + args.out);
        out << body.str();
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stream-graph data prefetching toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Flat key=value config file; command-line flags win");
    app.set_version_flag("--version", std::string(sgdp::kVersion));

    const std::vector<std::string> formats{"msrc", "generic", "blocks"};
    const std::vector<std::string> op_filters{"all", "read", "write"};
    const std::vector<std::string> variants{"base", "large", "page"};
    const std::vector<std::string> prefetcher_names{"none",  "naive",  "stride",
                                                    "sgdp", "sgdp_l", "sgdp_p"};

    PreprocessArgs pre_args;
    auto* pre = app.add_subcommand("preprocess", "Trace -> vocabulary + delta streams");
    pre->add_option("--trace", pre_args.trace, "Input trace file")
        ->required()
        ->check(CLI::ExistingFile);
    pre->add_option("--format", pre_args.format, "Trace format")
        ->check(CLI::IsMember(formats))
        ->capture_default_str();
    pre->add_option("--ops", pre_args.ops, "Keep only these operations")
        ->check(CLI::IsMember(op_filters))
        ->capture_default_str();
    pre->add_flag("--lenient", pre_args.lenient, "Skip malformed lines instead of failing");
    pre->add_option("--k", pre_args.k, "Vocabulary size (top-K deltas)")
        ->check(CLI::PositiveNumber)
        ->envname("SGDP_K")
        ->capture_default_str();
    pre->add_option("--window", pre_args.window, "Deltas per stream window")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    pre->add_option("--stride", pre_args.stride, "Window stride")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    pre->add_option("--gap", pre_args.gap,
                    "Stream split gap in native time units (default 100 for msrc, 100000 "
                    "otherwise)")
        ->check(CLI::PositiveNumber)
        ->envname("SGDP_GAP");
    pre->add_option("--variant", pre_args.variant, "Pipeline variant")
        ->check(CLI::IsMember(variants))
        ->capture_default_str();
    pre->add_option("--page-shift", pre_args.page_shift, "log2 blocks per page (page variant)")
        ->check(CLI::Range(1, 62))
        ->capture_default_str();
    pre->add_option("--w-s", pre_args.w_s, "Graph fusion weight (only for --dump-graphs)")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    pre->add_option("--vocab-in", pre_args.vocab_in, "Reuse an existing vocabulary")
        ->check(CLI::ExistingFile);
    pre->add_option("--vocab-out", pre_args.vocab_out, "Write the vocabulary CSV here");
    pre->add_option("--streams-out", pre_args.streams_out, "Write the streams file here");
    pre->add_option("--blocks-out", pre_args.blocks_out, "Write normalized block accesses here");
    pre->add_option("--dump-graphs", pre_args.dump_graphs,
                    "Write the first few stream graphs as JSON");
    pre->add_option("--dump-limit", pre_args.dump_limit, "How many graphs to dump")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    TrainArgs train_args;
    auto* tr = app.add_subcommand("train", "Streams + vocabulary -> model checkpoint");
    tr->add_option("--streams", train_args.streams, "Streams file from preprocess")
        ->required()
        ->check(CLI::ExistingFile);
    tr->add_option("--vocab", train_args.vocab, "Vocabulary CSV from preprocess")
        ->required()
        ->check(CLI::ExistingFile);
    tr->add_option("--out", train_args.out, "Checkpoint output path")->required();
    tr->add_option("--history", train_args.history, "Per-epoch loss/accuracy CSV");
    tr->add_option("--d", train_args.cfg.d, "Latent width")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    tr->add_option("--lr0", train_args.cfg.lr0, "Initial learning rate")->capture_default_str();
    tr->add_option("--lr-decay", train_args.cfg.lr_decay, "Decay factor per 3 epochs")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    tr->add_option("--batch", train_args.cfg.batch, "Mini-batch size")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    tr->add_option("--epochs", train_args.cfg.epochs, "Training epochs")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    tr->add_option("--lambda", train_args.cfg.l2_lambda, "l2 penalty factor")
        ->capture_default_str();
    tr->add_option("--prop-steps", train_args.cfg.prop_steps, "Propagation steps")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    tr->add_option("--w-s", train_args.cfg.w_s, "Graph fusion weight")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    tr->add_option("--seed", train_args.cfg.seed, "Seed for init and shuffling")
        ->envname("SGDP_SEED")
        ->capture_default_str();
    tr->add_option("--tol", train_args.cfg.tol, "Early-stop loss tolerance (0 = off)")
        ->capture_default_str();
    tr->add_option("--fold", train_args.fold, "Hold out this fold of 10 (trains on the rest)")
        ->check(CLI::Range(0, 9));
    tr->add_option("--precision", train_args.precision, "Training scalar type")
        ->check(CLI::IsMember({"f32", "f64"}))
        ->capture_default_str();

    EvalArgs eval_args;
    auto* ev = app.add_subcommand("eval", "Simulate prefetchers over a trace");
    ev->add_option("--trace", eval_args.trace, "Input trace file")
        ->required()
        ->check(CLI::ExistingFile);
    ev->add_option("--format", eval_args.format, "Trace format")
        ->check(CLI::IsMember(formats))
        ->capture_default_str();
    ev->add_option("--ops", eval_args.ops, "Keep only these operations")
        ->check(CLI::IsMember(op_filters))
        ->capture_default_str();
    ev->add_flag("--lenient", eval_args.lenient, "Skip malformed lines instead of failing");
    ev->add_option("--gap", eval_args.gap, "Stream split gap in native time units")
        ->check(CLI::PositiveNumber)
        ->envname("SGDP_GAP");
    ev->add_option("--checkpoint", eval_args.checkpoint, "Model checkpoint")
        ->check(CLI::ExistingFile);
    ev->add_option("--vocab", eval_args.vocab, "Vocabulary CSV")->check(CLI::ExistingFile);
    ev->add_option("--sizes", eval_args.sizes, "Cache sizes in blocks")
        ->delimiter(',')
        ->check(CLI::PositiveNumber);
    ev->add_option("--steps", eval_args.steps, "Rolling prefetch depth (1..10)")
        ->check(CLI::Range(1, 10))
        ->capture_default_str();
    ev->add_option("--prefetchers", eval_args.prefetchers, "Comma list of strategies")
        ->delimiter(',')
        ->check(CLI::IsMember(prefetcher_names));
    ev->add_option("--page-shift", eval_args.page_shift, "log2 blocks per page (sgdp_p)")
        ->check(CLI::Range(1, 62))
        ->capture_default_str();
    ev->add_option("--jobs", eval_args.jobs, "Parallel simulations")
        ->check(CLI::PositiveNumber)
        ->envname("SGDP_JOBS")
        ->capture_default_str();
    ev->add_option("--out", eval_args.out, "Results CSV path")->capture_default_str();
    ev->add_option("--json", eval_args.json_out, "Also write results as JSON here");

    ReportArgs report_args;
    auto* rep = app.add_subcommand("report", "Merge and render result files");
    rep->add_option("files", report_args.files, "Result CSV files")
        ->required()
        ->check(CLI::ExistingFile);
    rep->add_option("--format", report_args.format, "Output format")
        ->check(CLI::IsMember({"csv", "table", "json"}))
        ->capture_default_str();
    rep->add_flag("--force", report_args.force, "Merge results from different datasets");
    rep->add_option("--out", report_args.out, "Write here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*pre) return run_preprocess(pre_args);
        if (*tr) return run_train(train_args);
        if (*ev) return run_eval(eval_args);
        if (*rep) return run_report(report_args);
    } catch (const InputError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "internal error: " << err.what() << "\n";
        return 1;
    }
    return 0;
}
