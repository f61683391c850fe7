// forge: single entry point for the data-generation, filtering, sequence,
// evaluation, ensembling, and toy-training pipelines.
//
// Exit codes: 0 success, 1 validation/config error, 2 backend/transport
// failure. Logs are line-delimited JSON on stderr; human-readable output
// goes to stdout. Files are written only under the path given to --out.

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "forge/config.hpp"
#include "forge/context.hpp"
#include "forge/datagen.hpp"
#include "forge/errors.hpp"
#include "forge/filter.hpp"
#include "forge/gateway.hpp"
#include "forge/judge.hpp"
#include "forge/jsonl.hpp"
#include "forge/prompt.hpp"
#include "forge/rng.hpp"
#include "forge/sequence.hpp"
#include "forge/sqa.hpp"
#include "forge/toy.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void log_event(json j) { std::cerr << j.dump() << "\n"; }

std::string hex64(uint64_t v) {
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << v;
    return out.str();
}

// Layered settings: defaults < config file < environment < flags. Flags are
// applied by the caller via CLI11 callbacks that also update the provenance
// map, so `forge config show` can print where each value came from.
struct CliState {
    forge::Config cfg;
    std::string config_path;

    void load() {
        if (!config_path.empty()) cfg = forge::load_config_file(config_path, cfg);
        cfg = forge::apply_env(cfg);
    }
};

// The shared --backend/--seed/... flags. Values land here during parsing;
// apply() copies only the flags actually given onto the layered config, so
// flags win over environment and file (defaults < file < env < flags).
struct CommonFlags {
    std::string backend, model, api_base, prompts, cache;
    uint64_t seed = 0;
    double rate = 0;
    int concurrency = 0;
    CLI::Option *o_backend = nullptr, *o_seed = nullptr, *o_model = nullptr, *o_api_base = nullptr,
                *o_rate = nullptr, *o_concurrency = nullptr, *o_prompts = nullptr, *o_cache = nullptr;

    void add_to(CLI::App* sub) {
        o_backend = sub->add_option("--backend", backend, "mock | api")
                        ->check(CLI::IsMember({"mock", "api"}));
        o_seed = sub->add_option("--seed", seed, "random seed");
        o_model = sub->add_option("--model", model, "model id for the api backend");
        o_api_base = sub->add_option("--api-base", api_base, "api base url");
        o_rate = sub->add_option("--rate", rate, "gateway requests per second");
        o_concurrency =
            sub->add_option("--concurrency", concurrency, "max in-flight requests / worker pool size");
        o_prompts = sub->add_option("--prompts", prompts, "prompt asset directory");
        o_cache = sub->add_option("--cache", cache, "completion disk-cache directory");
    }

    void apply(forge::Config& cfg) const {
        auto set = [&cfg](CLI::Option* o, auto& dst, const auto& src, const char* key) {
            if (o != nullptr && o->count() > 0) {
                dst = src;
                cfg.source[key] = "flag";
            }
        };
        set(o_backend, cfg.backend, backend, "backend");
        set(o_seed, cfg.seed, seed, "seed");
        set(o_model, cfg.model_id, model, "model_id");
        set(o_api_base, cfg.api_base, api_base, "api_base");
        set(o_rate, cfg.rate_per_sec, rate, "rate_per_sec");
        set(o_concurrency, cfg.concurrency, concurrency, "concurrency");
        set(o_prompts, cfg.prompts_dir, prompts, "prompts_dir");
        set(o_cache, cfg.cache_dir, cache, "cache_dir");
    }
};

std::shared_ptr<forge::Backend> make_backend(const forge::Config& cfg,
                                             forge::MockBackend::Handler mock_handler) {
    if (cfg.backend == "mock") {
        auto mb = std::make_shared<forge::MockBackend>();
        mb->set_handler(std::move(mock_handler));
        return mb;
    }
    if (cfg.backend == "api") {
        const char* key = std::getenv(cfg.api_key_env.c_str());
        if (key == nullptr || *key == '\0')
            throw forge::ConfigError("backend 'api' requires an API key in the " +
                                     cfg.api_key_env + " environment variable");
        return std::make_shared<forge::HttpBackend>(cfg.api_base, key, cfg.model_id);
    }
    throw forge::ConfigError("unknown backend: " + cfg.backend);
}

forge::Gateway make_gateway(std::shared_ptr<forge::Backend> backend, const forge::Config& cfg) {
    forge::GatewayOptions opts;
    opts.rate_per_sec = cfg.rate_per_sec;
    opts.bucket_capacity = std::max(1.0, 2.0 * cfg.rate_per_sec);
    opts.max_in_flight = cfg.concurrency;
    if (!cfg.cache_dir.empty()) opts.cache_dir = cfg.cache_dir;
    return forge::Gateway(std::move(backend), std::move(opts));
}

std::array<size_t, 3> parse_mix(const std::string& s) {
    std::array<size_t, 3> mix{};
    std::istringstream in(s);
    std::string part;
    size_t i = 0;
    while (std::getline(in, part, ',')) {
        if (i >= 3) throw forge::ConfigError("--mix wants exactly three comma-separated counts");
        try {
            mix[i++] = std::stoull(part);
        } catch (const std::exception&) {
            throw forge::ConfigError("--mix: bad number '" + part + "'");
        }
    }
    if (i != 3) throw forge::ConfigError("--mix wants exactly three comma-separated counts");
    return mix;
}

// Deterministic judge stand-in for offline eval runs: both scores are
// derived from the request hash, so identical prompts always score the same.
forge::MockBackend::Handler make_synthetic_judge() {
    return [](const forge::CompletionRequest& req) {
        uint64_t h = forge::request_hash(req);
        int ref = 1 + static_cast<int>((h >> 8) % 10);
        int cand = 1 + static_cast<int>((h >> 24) % 10);
        std::ostringstream out;
        out << ref << " " << cand << "\n"
            << "Synthetic offline verdict keyed on request " << hex64(h) << ".";
        return out.str();
    };
}

// Deterministic arbiter for offline sqa --scheme judge runs.
forge::MockBackend::Handler make_synthetic_arbiter() {
    return [](const forge::CompletionRequest& req) {
        uint64_t h = forge::request_hash(req);
        char letter = (h % 2 == 0) ? 'A' : 'B';
        std::ostringstream out;
        out << "Considering both proposed answers against the question, one is better "
               "supported. The answer is "
            << letter << ".";
        return out.str();
    };
}

// ---- generate ----------------------------------------------------------

struct GenerateArgs {
    std::string corpus;
    std::string mix = "58,23,77";
    size_t total = 0;
    std::string out;
    std::string corpus_id = "corpus";
    bool no_boxes = false;
};

int cmd_generate(CliState& st, const GenerateArgs& a) {
    const forge::Config& cfg = st.cfg;
    std::vector<forge::SymbolicContext> corpus;
    forge::for_each_context(a.corpus, [&](const forge::SymbolicContext& c) { corpus.push_back(c); });
    if (corpus.empty()) throw forge::ValidationError("empty corpus: " + a.corpus);

    std::array<size_t, 3> mix = parse_mix(a.mix);
    size_t mix_sum = mix[0] + mix[1] + mix[2];
    std::array<size_t, 3> targets = mix;
    if (a.total != 0 && a.total != mix_sum) targets = forge::allocate_mix(mix, a.total);
    size_t total = targets[0] + targets[1] + targets[2];

    forge::PromptLibrary prompts = forge::PromptLibrary::load(cfg.prompts_dir);
    auto backend = make_backend(cfg, forge::make_synthetic_teacher());
    forge::Gateway gateway = make_gateway(backend, cfg);

    forge::GenerateOptions opts;
    opts.mix = targets;
    opts.seed = cfg.seed;
    opts.workers = cfg.concurrency;
    opts.boxes_in_context = !a.no_boxes;
    opts.corpus_id = a.corpus_id;

    fs::create_directories(a.out);
    forge::JsonlWriter dataset(fs::path(a.out) / "dataset.jsonl");

    forge::DataGenerator gen(gateway, std::move(prompts), opts);
    forge::GenerateResult res =
        gen.generate(corpus, [&](const forge::InstructSample& s) { dataset.write(forge::sample_to_json(s)); });

    std::ostringstream hash_src;
    hash_src << a.corpus_id << "|" << targets[0] << "," << targets[1] << "," << targets[2] << "|"
             << cfg.seed << "|" << (opts.boxes_in_context ? 1 : 0) << "|" << cfg.backend << "|"
             << cfg.model_id;
    res.manifest.config_hash = hex64(forge::fnv1a64(hash_src.str()));
    res.manifest.corpus_id = a.corpus_id;

    std::ofstream manifest(fs::path(a.out) / "manifest.json");
    manifest << res.manifest.to_json().dump(2) << "\n";

    forge::JsonlWriter rejects(fs::path(a.out) / "rejects.jsonl");
    for (const auto& r : res.rejects)
        rejects.write({{"image", r.image_id}, {"type", r.rtype}, {"raw", r.raw_text}, {"error", r.error}});

    log_event({{"event", "generate.done"},
               {"total", res.manifest.total},
               {"rejects", res.rejects.size()},
               {"config_hash", res.manifest.config_hash}});
    std::cout << "generated " << res.manifest.total << "/" << total << " samples ("
              << res.manifest.counts[0] << " conversation, " << res.manifest.counts[1]
              << " detailed_description, " << res.manifest.counts[2] << " complex_reasoning), "
              << res.rejects.size() << " rejects\n";
    return 0;
}

// ---- filter ------------------------------------------------------------

struct FilterArgs {
    std::string in;
    size_t cap = 100;
    size_t min_freq = 3;
    std::string out;
    std::string report;
    bool dynamic = false;
};

int cmd_filter(CliState& st, const FilterArgs& a) {
    auto corpus = forge::load_phrase_corpus(a.in);
    auto freq = forge::build_frequency_table(corpus);

    forge::FilterOptions opts;
    opts.cap = a.cap;
    opts.min_freq = a.min_freq;
    opts.seed = st.cfg.seed;
    opts.dynamic_recount = a.dynamic;
    auto selection = forge::filter_corpus(corpus, freq, opts);

    if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
    std::ofstream ids(a.out);
    if (!ids) throw forge::ValidationError("cannot open file for writing: " + a.out);
    for (const auto& id : selection) ids << id << "\n";

    auto report = forge::coverage_report(selection, corpus, freq);
    std::string report_path = a.report.empty() ? a.out + ".report.json" : a.report;
    std::ofstream rep(report_path);
    rep << report.to_json().dump(2) << "\n";

    log_event({{"event", "filter.done"},
               {"records_before", report.records_before},
               {"records_after", report.records_after}});
    std::cout << "kept " << report.records_after << " of " << report.records_before
              << " records (" << report.phrases_after << " of " << report.phrases_before
              << " phrases covered)\n";
    return 0;
}

// ---- build-seq ---------------------------------------------------------

struct BuildSeqArgs {
    std::string in;
    std::string out;
    std::string system_file;
};

int cmd_build_seq(CliState& st, const BuildSeqArgs& a) {
    forge::SequenceTemplate tpl;
    fs::path sys_path = a.system_file.empty()
                            ? fs::path(st.cfg.prompts_dir) / "system.sequence.txt"
                            : fs::path(a.system_file);
    if (fs::exists(sys_path)) {
        tpl.system_message = forge::read_text_file(sys_path);
        while (!tpl.system_message.empty() &&
               (tpl.system_message.back() == '\n' || tpl.system_message.back() == '\r'))
            tpl.system_message.pop_back();
    }

    if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
    forge::JsonlWriter out(a.out);
    forge::WhitespaceTokenizer tok;
    forge::Tokenizer tok_fn = [&tok](const std::string& s) { return tok(s); };

    size_t count = 0;
    forge::for_each_jsonl(a.in, [&](const json& j, size_t) {
        forge::InstructSample sample = forge::sample_from_json(j);
        forge::MaskedSequence seq = forge::build_sequence(sample, tpl, st.cfg.seed, tok_fn);
        std::vector<int> mask(seq.token_mask.begin(), seq.token_mask.end());
        out.write({{"id", sample.id},
                   {"text", seq.text},
                   {"image_first", forge::image_first_layout(st.cfg.seed, sample.id)},
                   {"token_ids", seq.token_ids},
                   {"token_mask", mask},
                   {"masked_tokens", forge::masked_token_count(seq)}});
        ++count;
    });

    log_event({{"event", "build-seq.done"}, {"sequences", count}, {"vocab", tok.vocab_size()}});
    std::cout << "built " << count << " sequences (vocab " << tok.vocab_size() << ")\n";
    return 0;
}

// ---- eval --------------------------------------------------------------

struct EvalArgs {
    std::string bench;
    std::string answers;
    int runs = 0; // 0 = config default
    std::string layout = "auto";
    std::string out;
};

int cmd_eval(CliState& st, const EvalArgs& a) {
    const forge::Config& cfg = st.cfg;
    auto items = forge::load_bench_items(a.bench);
    if (a.layout == "coco" || (a.layout == "auto" && items.size() == 90))
        forge::validate_coco_bench(items);
    else if (a.layout == "wild" || (a.layout == "auto" && items.size() == 60))
        forge::validate_wild_bench(items);

    std::map<std::string, std::string> answers;
    forge::for_each_jsonl(a.answers, [&](const json& j, size_t lineno) {
        if (!j.contains("id") || !j.contains("text"))
            throw forge::ParseError(a.answers + ":" + std::to_string(lineno) +
                                    ": answer wants {\"id\",\"text\"}");
        answers[j.at("id").get<std::string>()] = j.at("text").get<std::string>();
    });
    for (const auto& item : items)
        if (!answers.count(item.item_id))
            throw forge::ValidationError("no candidate answer for bench item " + item.item_id);

    auto backend = make_backend(cfg, make_synthetic_judge());
    forge::Gateway gateway = make_gateway(backend, cfg);

    int runs = a.runs > 0 ? a.runs : cfg.judge_runs;
    std::vector<std::vector<forge::JudgeVerdict>> all_runs;
    for (int r = 0; r < runs; ++r) {
        std::vector<forge::JudgeVerdict> verdicts;
        verdicts.reserve(items.size());
        for (const auto& item : items) {
            forge::CompletionRequest req;
            req.messages = forge::build_judge_prompt(item, answers.at(item.item_id));
            req.model_id = cfg.model_id;
            verdicts.push_back(forge::parse_verdict(gateway.complete(req).text));
        }
        all_runs.push_back(std::move(verdicts));
        log_event({{"event", "eval.run"}, {"run", r + 1}, {"items", items.size()}});
    }

    forge::BenchReport report = forge::aggregate_runs(all_runs, items);
    std::cout << report.to_table();
    if (!a.out.empty()) {
        fs::create_directories(a.out);
        std::ofstream rep(fs::path(a.out) / "report.json");
        rep << report.to_json().dump(2) << "\n";
    }
    return 0;
}

// ---- sqa ---------------------------------------------------------------

struct SqaArgs {
    std::string items;
    std::string pred_a;
    std::string pred_b;
    std::string scheme = "complement";
    std::string out;
};

int cmd_sqa(CliState& st, const SqaArgs& a) {
    auto items = forge::load_sqa_items(a.items);
    auto pred_a = forge::load_predictions(a.pred_a, items);
    auto pred_b = forge::load_predictions(a.pred_b, items);

    std::vector<forge::Prediction> combined;
    if (a.scheme == "complement") {
        combined = forge::ensemble_complement(pred_a, pred_b);
    } else if (a.scheme == "judge") {
        auto backend = make_backend(st.cfg, make_synthetic_arbiter());
        forge::Gateway gateway = make_gateway(backend, st.cfg);
        combined.reserve(items.size());
        for (size_t i = 0; i < items.size(); ++i)
            combined.push_back(forge::ensemble_judge(pred_a[i], pred_b[i], items[i], gateway));
    } else {
        throw forge::ConfigError("unknown scheme: " + a.scheme + " (want complement|judge)");
    }

    forge::AccuracyTable acc_a = forge::accuracy_breakdown(items, pred_a);
    forge::AccuracyTable acc_b = forge::accuracy_breakdown(items, pred_b);
    forge::AccuracyTable acc_e = forge::accuracy_breakdown(items, combined);

    std::cout << "model A:\n" << acc_a.to_table() << "model B:\n" << acc_b.to_table()
              << "ensemble (" << a.scheme << "):\n" << acc_e.to_table();

    if (!a.out.empty()) {
        fs::create_directories(a.out);
        std::ofstream rep(fs::path(a.out) / "sqa_report.json");
        rep << json{{"model_a", acc_a.to_json()},
                    {"model_b", acc_b.to_json()},
                    {"ensemble", acc_e.to_json()},
                    {"scheme", a.scheme}}
                   .dump(2)
            << "\n";
    }
    log_event({{"event", "sqa.done"}, {"items", items.size()}, {"scheme", a.scheme}});
    return 0;
}

// ---- toy-train ---------------------------------------------------------

struct ToyArgs {
    int stage = 1;
    size_t epochs = 0;
    double lr = 0;
    size_t examples = 16;
    size_t seq_len = 8;
    std::string out;
};

int cmd_toy_train(CliState& st, const ToyArgs& a) {
    const forge::Config& cfg = st.cfg;
    if (a.stage != 1 && a.stage != 2) throw forge::ConfigError("--stage wants 1 or 2");
    forge::TrainStage stage = a.stage == 1 ? forge::TrainStage::stage1 : forge::TrainStage::stage2;
    size_t epochs = a.epochs > 0 ? a.epochs : cfg.toy_epochs;
    double lr = a.lr > 0 ? a.lr : cfg.toy_lr;

    forge::ToyModel model =
        forge::init_toy_model(cfg.toy_vocab, cfg.toy_embed_dim, cfg.toy_visual_dim, cfg.seed);
    auto dataset = forge::make_synthetic_toy_dataset(model, a.examples, a.seq_len, cfg.seed);
    forge::TrainTrace trace = forge::train(model, dataset, stage, lr, epochs);

    fs::create_directories(a.out);
    forge::save_checkpoint(model, cfg.seed, stage, fs::path(a.out) / "checkpoint.txt");
    forge::save_trace_csv(trace, fs::path(a.out) / "trace.csv");

    double first = trace.epoch_loss.front(), last = trace.epoch_loss.back();
    log_event({{"event", "toy-train.done"},
               {"stage", a.stage},
               {"epochs", epochs},
               {"first_loss", first},
               {"last_loss", last}});
    std::cout << "stage " << a.stage << ": loss " << first << " -> " << last << " over " << epochs
              << " epochs\n";
    return 0;
}

// ---- report ------------------------------------------------------------

int cmd_report(const std::string& in) {
    json j;
    {
        std::ifstream f(in);
        if (!f) throw forge::ValidationError("cannot open file: " + in);
        try {
            f >> j;
        } catch (const json::exception& e) {
            throw forge::ParseError(in + ": " + e.what());
        }
    }
    // Evaluation reports get the fixed-point table; anything else is
    // pretty-printed as-is.
    bool bench_shape = j.is_object() && !j.empty();
    if (bench_shape)
        for (const auto& [k, v] : j.items())
            if (!v.is_object() || !v.contains("per_run") || !v.contains("mean") || !v.contains("std"))
                bench_shape = false;
    if (bench_shape) {
        forge::BenchReport rep;
        // keep pooled "all" last regardless of JSON object ordering
        std::vector<std::string> names;
        for (const auto& [k, v] : j.items())
            if (k != "all") names.push_back(k);
        if (j.contains("all")) names.push_back("all");
        for (const auto& name : names) {
            const json& col = j.at(name);
            rep.category_names.push_back(name);
            rep.per_run.push_back(col.at("per_run").get<std::vector<double>>());
            rep.mean.push_back(col.at("mean").get<double>());
            rep.stddev.push_back(col.at("std").get<double>());
        }
        std::cout << rep.to_table();
    } else {
        std::cout << j.dump(2) << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"forge: symbolic-context instruction data and evaluation toolkit"};
    app.require_subcommand(1);

    CliState st;
    app.add_option("--config", st.config_path, "key=value config file")->check(CLI::ExistingFile);

    GenerateArgs gen_args;
    auto* gen = app.add_subcommand("generate", "generate instruction data from a context corpus");
    gen->add_option("--corpus", gen_args.corpus, "context JSONL")->required()->check(CLI::ExistingFile);
    gen->add_option("--mix", gen_args.mix, "per-type counts or ratio a,b,c (default 58,23,77)");
    gen->add_option("--total", gen_args.total, "scale --mix to this many samples");
    gen->add_option("--out", gen_args.out, "output directory")->required();
    gen->add_option("--corpus-id", gen_args.corpus_id, "corpus label for the manifest");
    gen->add_flag("--no-boxes", gen_args.no_boxes, "omit box lines from teacher queries");
    CommonFlags gen_flags;
    gen_flags.add_to(gen);

    FilterArgs filt_args;
    auto* filt = app.add_subcommand("filter", "concept-balanced corpus subset selection");
    filt->add_option("--in", filt_args.in, "phrase corpus JSONL")->required()->check(CLI::ExistingFile);
    filt->add_option("--cap", filt_args.cap, "max records per over-frequent phrase");
    filt->add_option("--min-freq", filt_args.min_freq, "minimum phrase frequency");
    filt->add_option("--out", filt_args.out, "selected ids, one per line")->required();
    filt->add_option("--report", filt_args.report, "coverage report path (default <out>.report.json)");
    filt->add_flag("--dynamic", filt_args.dynamic, "recount frequencies over unselected records");
    CommonFlags filt_flags;
    filt_flags.add_to(filt);

    BuildSeqArgs seq_args;
    auto* seq = app.add_subcommand("build-seq", "render samples into masked training sequences");
    seq->add_option("--in", seq_args.in, "dataset JSONL")->required()->check(CLI::ExistingFile);
    seq->add_option("--out", seq_args.out, "sequence JSONL")->required();
    seq->add_option("--system-file", seq_args.system_file, "system message file");
    CommonFlags seq_flags;
    seq_flags.add_to(seq);

    EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "judge-score candidate answers against references");
    eval->add_option("--bench", eval_args.bench, "bench item JSONL")->required()->check(CLI::ExistingFile);
    eval->add_option("--answers", eval_args.answers, "candidate answers JSONL {id,text}")
        ->required()
        ->check(CLI::ExistingFile);
    eval->add_option("--runs", eval_args.runs, "judge inference runs (default from config)");
    eval->add_option("--layout", eval_args.layout, "bench shape check: coco|wild|auto|none")
        ->check(CLI::IsMember({"coco", "wild", "auto", "none"}));
    eval->add_option("--out", eval_args.out, "directory for report.json");
    CommonFlags eval_flags;
    eval_flags.add_to(eval);

    SqaArgs sqa_args;
    auto* sqa = app.add_subcommand("sqa", "multiple-choice ensembling and accuracy breakdown");
    sqa->add_option("--items", sqa_args.items, "items JSONL")->required()->check(CLI::ExistingFile);
    sqa->add_option("--pred-a", sqa_args.pred_a, "model A predictions JSONL")
        ->required()
        ->check(CLI::ExistingFile);
    sqa->add_option("--pred-b", sqa_args.pred_b, "model B predictions JSONL")
        ->required()
        ->check(CLI::ExistingFile);
    sqa->add_option("--scheme", sqa_args.scheme, "complement | judge")
        ->check(CLI::IsMember({"complement", "judge"}));
    sqa->add_option("--out", sqa_args.out, "directory for sqa_report.json");
    CommonFlags sqa_flags;
    sqa_flags.add_to(sqa);

    ToyArgs toy_args;
    auto* toy = app.add_subcommand("toy-train", "train the toy projection/decoder");
    toy->add_option("--stage", toy_args.stage, "1 = projection only, 2 = projection + embeddings");
    toy->add_option("--epochs", toy_args.epochs, "training epochs");
    toy->add_option("--lr", toy_args.lr, "learning rate");
    toy->add_option("--examples", toy_args.examples, "synthetic dataset size");
    toy->add_option("--seq-len", toy_args.seq_len, "synthetic sequence length");
    toy->add_option("--out", toy_args.out, "output directory")->required();
    CommonFlags toy_flags;
    toy_flags.add_to(toy);

    std::string report_in;
    auto* rep = app.add_subcommand("report", "render a saved JSON report as a table");
    rep->add_option("--in", report_in, "report JSON file")->required()->check(CLI::ExistingFile);

    auto* conf = app.add_subcommand("config", "configuration utilities");
    auto* conf_show = conf->add_subcommand("show", "print effective settings with provenance");
    conf->require_subcommand(1);
    CommonFlags conf_flags;
    conf_flags.add_to(conf_show);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        st.load(); // file + environment; flags below win
        for (const CommonFlags* f : {&gen_flags, &filt_flags, &seq_flags, &eval_flags, &sqa_flags,
                                     &toy_flags, &conf_flags})
            f->apply(st.cfg);
    } catch (const forge::Error& e) {
        log_event({{"event", "error"}, {"message", e.what()}});
        return 1;
    }

    try {
        if (gen->parsed()) return cmd_generate(st, gen_args);
        if (filt->parsed()) return cmd_filter(st, filt_args);
        if (seq->parsed()) return cmd_build_seq(st, seq_args);
        if (eval->parsed()) return cmd_eval(st, eval_args);
        if (sqa->parsed()) return cmd_sqa(st, sqa_args);
        if (toy->parsed()) return cmd_toy_train(st, toy_args);
        if (rep->parsed()) return cmd_report(report_in);
        if (conf->parsed()) {
            std::cout << forge::config_show(st.cfg);
            return 0;
        }
    } catch (const forge::TransportError& e) {
        log_event({{"event", "transport_error"}, {"message", e.what()}});
        return 2;
    } catch (const forge::TransientBackendError& e) {
        log_event({{"event", "transport_error"}, {"message", e.what()}});
        return 2;
    } catch (const forge::PermanentBackendError& e) {
        log_event({{"event", "transport_error"}, {"message", e.what()}});
        return 2;
    } catch (const forge::Error& e) {
        log_event({{"event", "error"}, {"message", e.what()}});
        return 1;
    } catch (const std::exception& e) {
        log_event({{"event", "error"}, {"message", e.what()}});
        return 1;
    }
    return 0;
}
