#include <doctest.h>

#include <algorithm>

#include "forge/datagen.hpp"
#include "forge/rng.hpp"

using namespace forge;

namespace {

SymbolicContext ctx_of(const std::string& id) {
    return {id, {"a scene labelled " + id, "another caption for " + id},
            {{"person", {0.1, 0.2, 0.3, 0.4}}}};
}

std::vector<SymbolicContext> corpus_of(size_t n) {
    std::vector<SymbolicContext> out;
    for (size_t i = 0; i < n; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "img%03zu", i);
        out.push_back(ctx_of(buf));
    }
    return out;
}

struct Pipeline {
    std::shared_ptr<MockBackend> mock = std::make_shared<MockBackend>();
    GatewayOptions gw_opts;
    Gateway gateway;

    explicit Pipeline(MockBackend::Handler handler = make_synthetic_teacher())
        : gw_opts([] {
              GatewayOptions o;
              o.rate_per_sec = 1e6;
              o.bucket_capacity = 1e6;
              return o;
          }()),
          gateway(mock, gw_opts) {
        mock->set_handler(std::move(handler));
    }
};

} // namespace

TEST_CASE("sample json round-trip and alternation checks") {
    InstructSample s;
    s.id = "img0-conversation-0";
    s.image_id = "img0";
    s.rtype = ResponseType::conversation;
    s.turns = {{"q1", "a1"}, {"q2", "a2"}};
    auto j = sample_to_json(s);
    CHECK(j.at("conversations").size() == 4);
    CHECK(j.at("conversations")[0].at("from") == "human");
    CHECK(j.at("conversations")[1].at("from") == "gpt");
    InstructSample back = sample_from_json(j);
    CHECK(back.id == s.id);
    CHECK(back.turns == s.turns);

    j["conversations"][1]["from"] = "human";
    CHECK_THROWS_AS(sample_from_json(j), ParseError);
}

TEST_CASE("validate_sample enforces single-turn non-conversation types") {
    InstructSample s;
    s.id = "x-detailed_description-0";
    s.image_id = "x";
    s.rtype = ResponseType::detailed_description;
    s.turns = {{"q", "a"}, {"q2", "a2"}};
    CHECK_THROWS_AS(validate_sample(s), ValidationError);
    s.turns.resize(1);
    CHECK_NOTHROW(validate_sample(s));
    s.rtype = ResponseType::conversation;
    s.turns.push_back({"q2", "a2"});
    CHECK_NOTHROW(validate_sample(s));
    s.turns.push_back({"", "a3"});
    CHECK_THROWS_AS(validate_sample(s), ValidationError);
}

TEST_CASE("naive_expand pairs a sampled brief instruction with a caption") {
    SymbolicContext ctx = ctx_of("img42");
    InstructSample s = naive_expand(ctx, 7);
    CHECK(s.id == "img42-naive-0");
    CHECK(s.image_id == "img42");
    CHECK(s.rtype == ResponseType::detailed_description);
    REQUIRE(s.turns.size() == 1);
    CHECK(s.turns[0].answer == ctx.captions[0]);
    auto brief = brief_instruction_list();
    CHECK(std::find(brief.begin(), brief.end(), s.turns[0].question) != brief.end());
    // keyed on (seed, image id): stable across calls
    CHECK(naive_expand(ctx, 7).turns[0].question == s.turns[0].question);
    // random caption flag draws from the caption list
    InstructSample r = naive_expand(ctx, 7, /*random_caption=*/true);
    CHECK(std::find(ctx.captions.begin(), ctx.captions.end(), r.turns[0].answer) !=
          ctx.captions.end());
}

TEST_CASE("allocate_mix largest-remainder oracles") {
    CHECK(allocate_mix({58, 23, 77}, 40) == std::array<size_t, 3>{15, 6, 19});
    CHECK(allocate_mix({58, 23, 77}, 158) == std::array<size_t, 3>{58, 23, 77});
    CHECK(allocate_mix({1, 1, 1}, 10) == std::array<size_t, 3>{4, 3, 3});
    CHECK(allocate_mix({1, 0, 0}, 5) == std::array<size_t, 3>{5, 0, 0});
    CHECK_THROWS_AS(allocate_mix({0, 0, 0}, 4), ValidationError);

    KeyedRng rng(3, "mix");
    for (int i = 0; i < 300; ++i) {
        std::array<size_t, 3> ratio = {1 + rng.next_index(100), 1 + rng.next_index(100),
                                       1 + rng.next_index(100)};
        size_t total = rng.next_index(500);
        auto out = allocate_mix(ratio, total);
        CHECK(out[0] + out[1] + out[2] == total);
        // each count within one of the exact share
        double denom = static_cast<double>(ratio[0] + ratio[1] + ratio[2]);
        for (size_t t = 0; t < 3; ++t) {
            double exact = total * ratio[t] / denom;
            CHECK(static_cast<double>(out[t]) >= exact - 1.0);
            CHECK(static_cast<double>(out[t]) <= exact + 1.0);
        }
    }
}

TEST_CASE("generator emits deterministic, ordered samples") {
    Pipeline pipe;
    PromptLibrary prompts = PromptLibrary::load(FORGE_PROMPTS_DIR);
    GenerateOptions opts;
    opts.mix = {2, 2, 2};
    opts.seed = 5;
    opts.workers = 4;

    auto corpus = corpus_of(8);
    auto run = [&](int workers) {
        GenerateOptions o = opts;
        o.workers = workers;
        Pipeline p;
        DataGenerator gen(p.gateway, PromptLibrary::load(FORGE_PROMPTS_DIR), o);
        std::vector<InstructSample> got;
        auto res = gen.generate(corpus, [&](const InstructSample& s) { got.push_back(s); });
        return std::pair(res, got);
    };

    auto [res, got] = run(4);
    CHECK(res.manifest.total == 6);
    CHECK(res.manifest.counts == std::array<size_t, 3>{2, 2, 2});
    CHECK(res.rejects.empty());
    REQUIRE(got.size() == 6);
    // emission follows corpus order; per-type ordinals count up
    CHECK(got[0].image_id == "img000");
    CHECK(got[5].image_id == "img005");
    std::array<size_t, 3> ordinals{};
    for (const auto& s : got) {
        size_t t = static_cast<size_t>(s.rtype);
        CHECK(s.id == s.image_id + "-" + response_type_name(s.rtype) + "-" +
                          std::to_string(ordinals[t]++));
        validate_sample(s);
        if (s.rtype == ResponseType::conversation) CHECK(s.turns.size() >= 2);
        else CHECK(s.turns.size() == 1);
    }

    // worker count does not change the output
    auto [res1, got1] = run(1);
    REQUIRE(got1.size() == got.size());
    for (size_t i = 0; i < got.size(); ++i) {
        CHECK(got1[i].id == got[i].id);
        CHECK(got1[i].turns == got[i].turns);
    }
}

TEST_CASE("generator records rejects and keeps going") {
    // teacher that answers descriptions but emits garbage for QA grammars
    Pipeline pipe([](const CompletionRequest&) { return "no labels here at all"; });
    GenerateOptions opts;
    opts.mix = {1, 1, 1};
    DataGenerator gen(pipe.gateway, PromptLibrary::load(FORGE_PROMPTS_DIR), opts);
    auto corpus = corpus_of(3);
    std::vector<InstructSample> got;
    auto res = gen.generate(corpus, [&](const InstructSample& s) { got.push_back(s); });
    CHECK(res.manifest.total == 1); // only the detailed description survives
    CHECK(res.manifest.counts[1] == 1);
    REQUIRE(res.rejects.size() == 2);
    CHECK(res.rejects[0].raw_text == "no labels here at all");
    CHECK(!res.rejects[0].error.empty());
    REQUIRE(got.size() == 1);
    CHECK(got[0].rtype == ResponseType::detailed_description);
}

TEST_CASE("generator validates the mix against the corpus size") {
    Pipeline pipe;
    GenerateOptions opts;
    opts.mix = {5, 5, 5};
    DataGenerator gen(pipe.gateway, PromptLibrary::load(FORGE_PROMPTS_DIR), opts);
    auto corpus = corpus_of(3);
    CHECK_THROWS_AS(gen.generate(corpus, [](const InstructSample&) {}), ValidationError);
}

TEST_CASE("make_request assembles few-shot teacher prompts") {
    Pipeline pipe;
    GenerateOptions opts;
    opts.mix = {1, 0, 0};
    opts.boxes_in_context = true;
    DataGenerator gen(pipe.gateway, PromptLibrary::load(FORGE_PROMPTS_DIR), opts);
    auto req = gen.make_request(ctx_of("imgZ"), ResponseType::conversation);
    REQUIRE(req.messages.size() >= 2);
    CHECK(req.messages.front().role == Role::system);
    CHECK(req.messages.back().role == Role::user);
    CHECK(req.messages.back().content.find("a scene labelled imgZ") != std::string::npos);
    CHECK(req.messages.back().content.find("person: [0.1, 0.2, 0.3, 0.4]") != std::string::npos);
    CHECK(req.temperature == 0.0);

    GenerateOptions no_boxes = opts;
    no_boxes.boxes_in_context = false;
    DataGenerator gen2(pipe.gateway, PromptLibrary::load(FORGE_PROMPTS_DIR), no_boxes);
    auto req2 = gen2.make_request(ctx_of("imgZ"), ResponseType::conversation);
    CHECK(req2.messages.back().content.find("person:") == std::string::npos);
}

TEST_CASE("synthetic teacher speaks every response grammar") {
    PromptLibrary prompts = PromptLibrary::load(FORGE_PROMPTS_DIR);
    auto teacher = make_synthetic_teacher();
    Pipeline pipe;
    GenerateOptions opts;
    opts.mix = {1, 1, 1};
    DataGenerator gen(pipe.gateway, PromptLibrary::load(FORGE_PROMPTS_DIR), opts);

    auto conv = teacher(gen.make_request(ctx_of("a"), ResponseType::conversation));
    CHECK(parse_conversation(conv).size() == 2);
    auto cr = teacher(gen.make_request(ctx_of("a"), ResponseType::complex_reasoning));
    CHECK(parse_conversation(cr).size() == 1);
    auto det = teacher(gen.make_request(ctx_of("a"), ResponseType::detailed_description));
    CHECK(!det.empty());
    CHECK_THROWS(parse_conversation(det)); // prose, not the QA grammar
}
