#include <benchmark/benchmark.h>

#include "forge/context.hpp"
#include "forge/datagen.hpp"
#include "forge/filter.hpp"
#include "forge/rng.hpp"
#include "forge/sequence.hpp"
#include "forge/toy.hpp"

using namespace forge;

namespace {

SymbolicContext make_context(size_t boxes) {
    SymbolicContext ctx;
    ctx.image_id = "bench-img";
    ctx.captions = {
        "A group of people standing outside of a black vehicle with various luggage.",
        "Luggage surrounds a vehicle in an underground parking area",
        "People try to fit all of their luggage in an SUV.",
    };
    KeyedRng rng(1, "bench-ctx");
    static const char* labels[] = {"person", "car", "suitcase", "backpack"};
    for (size_t i = 0; i < boxes; ++i) {
        double a = rng.next_double() * 0.5, b = rng.next_double() * 0.5;
        ctx.boxes.push_back({labels[i % 4], {a, b, a + 0.3, b + 0.4}});
    }
    return ctx;
}

void bm_serialize_context(benchmark::State& state) {
    SymbolicContext ctx = make_context(static_cast<size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(serialize_context(ctx));
}
BENCHMARK(bm_serialize_context)->Arg(4)->Arg(32);

void bm_parse_context(benchmark::State& state) {
    std::string text = serialize_context(make_context(16));
    for (auto _ : state) benchmark::DoNotOptimize(parse_context(text));
}
BENCHMARK(bm_parse_context);

void bm_filter_corpus(benchmark::State& state) {
    static const char* phrases[] = {"red car",  "snowy street", "fire hydrant",
                                    "black suv", "backpack",     "trail sign"};
    std::vector<PhraseRecord> corpus;
    KeyedRng rng(7, "bench-filter");
    for (int i = 0; i < state.range(0); ++i) {
        PhraseRecord rec;
        rec.record_id = "r" + std::to_string(i);
        for (size_t k = 0; k < 1 + rng.next_index(3); ++k)
            rec.phrases.push_back(phrases[rng.next_index(6)]);
        corpus.push_back(std::move(rec));
    }
    auto freq = build_frequency_table(corpus);
    FilterOptions opts;
    opts.cap = 50;
    opts.min_freq = 3;
    for (auto _ : state) benchmark::DoNotOptimize(filter_corpus(corpus, freq, opts));
}
BENCHMARK(bm_filter_corpus)->Arg(500)->Arg(5000);

void bm_build_sequence(benchmark::State& state) {
    InstructSample s;
    s.id = "bench-0";
    s.image_id = "bench";
    s.rtype = ResponseType::conversation;
    for (int t = 0; t < state.range(0); ++t)
        s.turns.push_back({"What is visible in region " + std::to_string(t) + "?",
                           "A detailed answer describing the region in several words."});
    SequenceTemplate tpl;
    tpl.system_message = "You are a helpful assistant.";
    for (auto _ : state) {
        WhitespaceTokenizer tok;
        Tokenizer fn = [&tok](const std::string& text) { return tok(text); };
        benchmark::DoNotOptimize(build_sequence(s, tpl, 17, fn));
    }
}
BENCHMARK(bm_build_sequence)->Arg(1)->Arg(8);

void bm_forward_loss(benchmark::State& state) {
    ToyModel model = init_toy_model(64, 16, 8, 3);
    auto batch = make_synthetic_toy_dataset(model, 16, 12, 5);
    for (auto _ : state) benchmark::DoNotOptimize(forward_loss(model, batch));
}
BENCHMARK(bm_forward_loss);

} // namespace

BENCHMARK_MAIN();
