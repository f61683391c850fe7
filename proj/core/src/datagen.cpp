#include "forge/datagen.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>
#include <thread>

#include "forge/rng.hpp"

namespace forge {

void validate_sample(const InstructSample& sample) {
    if (sample.id.empty() || sample.image_id.empty())
        throw ValidationError("sample: empty id or image_id");
    if (sample.turns.empty())
        throw ValidationError("sample " + sample.id + ": no turns");
    if (sample.rtype != ResponseType::conversation && sample.turns.size() > 1)
        throw ValidationError("sample " + sample.id + ": " + response_type_name(sample.rtype) +
                              " must be single-turn, got " + std::to_string(sample.turns.size()));
    for (const auto& t : sample.turns)
        if (t.question.empty() || t.answer.empty())
            throw ValidationError("sample " + sample.id + ": empty question or answer");
}

nlohmann::json sample_to_json(const InstructSample& sample) {
    nlohmann::json conv = nlohmann::json::array();
    for (const auto& t : sample.turns) {
        conv.push_back({{"from", "human"}, {"value", t.question}});
        conv.push_back({{"from", "gpt"}, {"value", t.answer}});
    }
    return {{"id", sample.id},
            {"image", sample.image_id},
            {"type", response_type_name(sample.rtype)},
            {"conversations", conv}};
}

InstructSample sample_from_json(const nlohmann::json& j) {
    InstructSample s;
    s.id = j.at("id").get<std::string>();
    s.image_id = j.at("image").get<std::string>();
    s.rtype = response_type_from_name(j.at("type").get<std::string>());
    const auto& conv = j.at("conversations");
    if (conv.size() % 2 != 0)
        throw ParseError("sample " + s.id + ": conversations must alternate human/gpt");
    for (size_t i = 0; i < conv.size(); i += 2) {
        if (conv[i].at("from") != "human" || conv[i + 1].at("from") != "gpt")
            throw ParseError("sample " + s.id + ": conversations must alternate human/gpt");
        s.turns.push_back({conv[i].at("value").get<std::string>(),
                           conv[i + 1].at("value").get<std::string>()});
    }
    validate_sample(s);
    return s;
}

nlohmann::json DatasetManifest::to_json() const {
    return {{"counts",
             {{"conversation", counts[0]},
              {"detailed_description", counts[1]},
              {"complex_reasoning", counts[2]}}},
            {"total", total},
            {"corpus_id", corpus_id},
            {"config_hash", config_hash}};
}

InstructSample naive_expand(const SymbolicContext& ctx, uint64_t seed, bool random_caption) {
    validate_context(ctx);
    InstructSample s;
    s.image_id = ctx.image_id;
    s.rtype = ResponseType::detailed_description; // single-turn caption pair
    s.id = ctx.image_id + "-naive-0";
    std::string question = sample_brief_instruction(seed, ctx.image_id);
    size_t cap_idx = 0;
    if (random_caption)
        cap_idx = KeyedRng(seed, ctx.image_id + "/caption").next_index(ctx.captions.size());
    s.turns.push_back({std::move(question), ctx.captions[cap_idx]});
    return s;
}

std::array<size_t, kResponseTypeCount> allocate_mix(const std::array<size_t, 3>& ratio,
                                                    size_t total) {
    double denom = static_cast<double>(ratio[0] + ratio[1] + ratio[2]);
    if (denom <= 0) throw ValidationError("mix ratio must have a positive sum");
    std::array<size_t, 3> out{};
    std::array<double, 3> rem{};
    size_t assigned = 0;
    for (size_t i = 0; i < 3; ++i) {
        double exact = total * ratio[i] / denom;
        out[i] = static_cast<size_t>(exact);
        rem[i] = exact - static_cast<double>(out[i]);
        assigned += out[i];
    }
    while (assigned < total) {
        size_t best = 0;
        for (size_t i = 1; i < 3; ++i)
            if (rem[i] > rem[best]) best = i;
        ++out[best];
        rem[best] = -1;
        ++assigned;
    }
    return out;
}

DataGenerator::DataGenerator(Gateway& gateway, PromptLibrary prompts, GenerateOptions opts)
    : gateway_(gateway), prompts_(std::move(prompts)), opts_(std::move(opts)) {}

CompletionRequest DataGenerator::make_request(const SymbolicContext& ctx,
                                              ResponseType rtype) const {
    const PromptSet& set = prompts_.get(rtype);
    std::string query = prompt_text(ctx, opts_.boxes_in_context);
    CompletionRequest req;
    req.messages = build_messages(rtype, set.system_prompt, set.fewshot, query);
    req.temperature = 0.0;
    return req;
}

namespace {

struct Job {
    size_t index;
    const SymbolicContext* ctx;
    ResponseType rtype;
};

struct JobResult {
    std::optional<InstructSample> sample;
    std::optional<RejectRecord> reject;
};

} // namespace

GenerateResult DataGenerator::generate(const std::vector<SymbolicContext>& corpus,
                                       const std::function<void(const InstructSample&)>& sink) {
    const size_t total = opts_.mix[0] + opts_.mix[1] + opts_.mix[2];
    if (total > corpus.size())
        throw ValidationError("mix total " + std::to_string(total) + " exceeds corpus size " +
                              std::to_string(corpus.size()));

    // Deterministic interleaved type assignment: at each step take the type
    // with the largest fraction of its target still unmet.
    std::vector<Job> jobs;
    jobs.reserve(total);
    std::array<size_t, 3> remaining = opts_.mix;
    for (size_t i = 0; i < corpus.size() && jobs.size() < total; ++i) {
        size_t best = 3;
        double best_frac = -1;
        for (size_t t = 0; t < 3; ++t) {
            if (remaining[t] == 0 || opts_.mix[t] == 0) continue;
            double frac = static_cast<double>(remaining[t]) / static_cast<double>(opts_.mix[t]);
            if (frac > best_frac) {
                best_frac = frac;
                best = t;
            }
        }
        if (best == 3) break;
        --remaining[best];
        jobs.push_back({jobs.size(), &corpus[i], static_cast<ResponseType>(best)});
    }

    std::vector<JobResult> results(jobs.size());
    std::atomic<size_t> next{0};
    auto run_job = [&](const Job& job) {
        JobResult& out = results[job.index];
        std::string raw;
        try {
            CompletionRequest req = make_request(*job.ctx, job.rtype);
            CompletionResult res = gateway_.complete(req);
            raw = res.text;
            InstructSample s;
            s.image_id = job.ctx->image_id;
            s.rtype = job.rtype;
            s.id = "pending"; // final id assigned at ordered emission
            switch (job.rtype) {
                case ResponseType::conversation:
                    s.turns = parse_conversation(raw);
                    break;
                case ResponseType::detailed_description: {
                    std::string q = sample_detailed_instruction(opts_.seed, job.ctx->image_id);
                    std::string a = raw;
                    // trim outer whitespace
                    size_t b = a.find_first_not_of(" \t\r\n");
                    size_t e = a.find_last_not_of(" \t\r\n");
                    if (b == std::string::npos)
                        throw ParseError("empty detailed description from teacher");
                    s.turns.push_back({std::move(q), a.substr(b, e - b + 1)});
                    break;
                }
                case ResponseType::complex_reasoning: {
                    auto pairs = parse_conversation(raw);
                    s.turns.push_back(pairs.front());
                    break;
                }
            }
            out.sample = std::move(s);
        } catch (const Error& e) {
            out.reject = RejectRecord{job.ctx->image_id, response_type_name(job.rtype), raw,
                                      e.what()};
        }
    };

    int workers = std::max(1, std::min<int>(opts_.workers, static_cast<int>(jobs.size())));
    if (workers <= 1) {
        for (const auto& job : jobs) run_job(job);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (;;) {
                    size_t i = next.fetch_add(1);
                    if (i >= jobs.size()) return;
                    run_job(jobs[i]);
                }
            });
        for (auto& t : pool) t.join();
    }

    // Ordered emission: ids and counts follow input order, not completion time.
    GenerateResult result;
    result.manifest.corpus_id = opts_.corpus_id;
    char cfg[64];
    std::snprintf(cfg, sizeof(cfg), "%016llx",
                  static_cast<unsigned long long>(splitmix64(
                      opts_.seed ^ fnv1a64(std::to_string(opts_.mix[0]) + "," +
                                           std::to_string(opts_.mix[1]) + "," +
                                           std::to_string(opts_.mix[2]) + "," +
                                           (opts_.boxes_in_context ? "b" : "-")))));
    result.manifest.config_hash = cfg;
    std::array<size_t, 3> ordinal{};
    for (size_t i = 0; i < jobs.size(); ++i) {
        if (results[i].reject) {
            result.rejects.push_back(std::move(*results[i].reject));
            continue;
        }
        InstructSample s = std::move(*results[i].sample);
        size_t t = static_cast<size_t>(s.rtype);
        s.id = s.image_id + "-" + response_type_name(s.rtype) + "-" +
               std::to_string(ordinal[t]++);
        validate_sample(s);
        ++result.manifest.counts[t];
        ++result.manifest.total;
        sink(s);
    }
    return result;
}

MockBackend::Handler make_synthetic_teacher() {
    return [](const CompletionRequest& req) -> std::string {
        const uint64_t h = request_hash(req);
        const std::string tag = std::to_string(h % 100000);
        std::string first_line;
        if (!req.messages.empty()) {
            const std::string& q = req.messages.back().content;
            first_line = q.substr(0, q.find('\n'));
        }
        const std::string& sys = req.messages.empty() ? "" : req.messages.front().content;
        if (sys.find("Design a conversation") != std::string::npos) {
            return "Question:\nWhat is the main subject of the image?\n===\nAnswer:\nThe image "
                   "shows " + first_line + " (scene " + tag + ").\n===\nQuestion:\nHow many "
                   "objects can be seen?\n===\nAnswer:\nSeveral distinct objects are visible in "
                   "scene " + tag + ".\n";
        }
        if (sys.find("reasoning") != std::string::npos) {
            return "Question:\nWhat might happen next in this scene?\n===\nAnswer:\nGiven that " +
                   first_line + ", the most plausible next step follows from the visible "
                   "arrangement of objects (case " + tag + ").\n";
        }
        return "The image shows " + first_line + " The scene contains several objects arranged "
               "as described, with clear foreground and background structure (render " + tag +
               ").";
    };
}

} // namespace forge
