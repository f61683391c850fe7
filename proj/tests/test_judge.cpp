#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "forge/errors.hpp"
#include "forge/judge.hpp"

using namespace forge;
namespace fs = std::filesystem;

namespace {

BenchItem item_of(const std::string& id, BenchCategory cat) {
    BenchItem it;
    it.item_id = id;
    it.image_id = "img-" + id;
    it.category = cat;
    it.question = "What is happening?";
    it.gt_description = "a scene described in text";
    it.reference_answer = "the reference answer";
    return it;
}

} // namespace

TEST_CASE("judge prompt carries the rubric and both answers") {
    auto msgs = build_judge_prompt(item_of("q1", BenchCategory::detail), "the candidate answer");
    REQUIRE(msgs.size() == 2);
    CHECK(msgs[0].role == Role::system);
    CHECK(msgs[0].content.find("helpfulness, relevance, accuracy, and level of detail") !=
          std::string::npos);
    CHECK(msgs[0].content.find("1 to 10") != std::string::npos);
    const std::string& user = msgs[1].content;
    CHECK(user.find("[Question]") != std::string::npos);
    CHECK(user.find("[Visual Context]") != std::string::npos);
    CHECK(user.find("[Assistant 1]\nthe reference answer") != std::string::npos);
    CHECK(user.find("[Assistant 2]\nthe candidate answer") != std::string::npos);
    CHECK_THROWS_AS(build_judge_prompt(item_of("q1", BenchCategory::detail), ""),
                    ValidationError);
}

TEST_CASE("parse_verdict reads two integers then the explanation") {
    JudgeVerdict v = parse_verdict("8 9\nBoth answers are good.\nAssistant 2 is more precise.");
    CHECK(v.score_reference == 8);
    CHECK(v.score_candidate == 9);
    CHECK(v.explanation == "Both answers are good.\nAssistant 2 is more precise.");

    JudgeVerdict bare = parse_verdict("10 1");
    CHECK(bare.score_reference == 10);
    CHECK(bare.explanation.empty());

    CHECK_THROWS_AS(parse_verdict("11 5\nx"), ParseError); // out of range, not clamped
    CHECK_THROWS_AS(parse_verdict("0 5\nx"), ParseError);
    CHECK_THROWS_AS(parse_verdict("5\nx"), ParseError);
    CHECK_THROWS_AS(parse_verdict("5 6 7\nx"), ParseError);
    CHECK_THROWS_AS(parse_verdict("eight nine\nx"), ParseError);
    CHECK_THROWS_AS(parse_verdict(""), ParseError);
}

TEST_CASE("format_verdict round-trips") {
    JudgeVerdict v{7, 4, "shorter but accurate"};
    CHECK(parse_verdict(format_verdict(v)) == v);
}

TEST_CASE("relative_score arithmetic oracles") {
    std::vector<JudgeVerdict> v = {{10, 8, ""}, {10, 9, ""}};
    CHECK(relative_score(v) == doctest::Approx(85.0).epsilon(1e-12));
    std::vector<JudgeVerdict> same = {{7, 7, ""}, {3, 3, ""}};
    CHECK(relative_score(same) == doctest::Approx(100.0).epsilon(1e-12));
    std::vector<JudgeVerdict> none;
    CHECK_THROWS_AS(relative_score(none), ComputationError);
}

TEST_CASE("aggregate_runs pools the overall column and uses sample stddev") {
    std::vector<BenchItem> items = {item_of("a", BenchCategory::conversation),
                                    item_of("b", BenchCategory::detail),
                                    item_of("c", BenchCategory::complex_reasoning)};
    // three runs, scores chosen for easy hand arithmetic
    std::vector<std::vector<JudgeVerdict>> runs = {
        {{10, 8, ""}, {10, 9, ""}, {10, 10, ""}},
        {{10, 9, ""}, {10, 9, ""}, {10, 9, ""}},
        {{10, 7, ""}, {10, 9, ""}, {10, 8, ""}},
    };
    BenchReport rep = aggregate_runs(runs, items);
    REQUIRE(rep.category_names ==
            std::vector<std::string>{"conversation", "detail", "complex", "all"});
    // conversation per-run: 80, 90, 70 -> mean 80, sample std 10
    CHECK(rep.mean[0] == doctest::Approx(80.0).epsilon(1e-12));
    CHECK(rep.stddev[0] == doctest::Approx(10.0).epsilon(1e-12));
    // detail per-run: 90, 90, 90 -> std 0
    CHECK(rep.mean[1] == doctest::Approx(90.0).epsilon(1e-12));
    CHECK(rep.stddev[1] == doctest::Approx(0.0).epsilon(1e-12));
    // overall pools items: (27+27+24)/30 -> 90, 90, 80; mean 260/3
    CHECK(rep.per_run[3] == std::vector<double>{90.0, 90.0, 80.0});
    CHECK(rep.mean[3] == doctest::Approx(260.0 / 3.0).epsilon(1e-12));
    double m = 260.0 / 3.0;
    double s = std::sqrt(((90 - m) * (90 - m) * 2 + (80 - m) * (80 - m)) / 2.0);
    CHECK(rep.stddev[3] == doctest::Approx(s).epsilon(1e-12));

    std::string table = rep.to_table();
    CHECK(table.find("conversation: 80.0 +/- 10.0") != std::string::npos);
    CHECK(table.find("all: 86.7") != std::string::npos);
    auto j = rep.to_json();
    CHECK(j.at("all").at("per_run").size() == 3);

    runs[0].pop_back();
    CHECK_THROWS_AS(aggregate_runs(runs, items), ValidationError);
    CHECK_THROWS_AS(aggregate_runs({}, items), ValidationError);
}

TEST_CASE("bench loaders and shape validators") {
    fs::path path = fs::temp_directory_path() / "forge_bench_test.jsonl";
    {
        std::ofstream out(path);
        for (int img = 0; img < 30; ++img)
            for (const char* cat : {"conversation", "detail", "complex"})
                out << nlohmann::json{{"id", "q" + std::to_string(img) + "-" + cat},
                                      {"image", "im" + std::to_string(img)},
                                      {"category", cat},
                                      {"question", "q?"},
                                      {"gt_description", "desc"},
                                      {"reference_answer", "ref"}}
                           .dump()
                    << "\n";
    }
    auto items = load_bench_items(path);
    REQUIRE(items.size() == 90);
    CHECK_NOTHROW(validate_coco_bench(items));
    CHECK_THROWS_AS(validate_wild_bench(items), ValidationError);

    items.pop_back();
    CHECK_THROWS_AS(validate_coco_bench(items), ValidationError);

    // 24 images, 60 questions
    std::vector<BenchItem> wild;
    for (int q = 0; q < 60; ++q) {
        BenchItem it = item_of("w" + std::to_string(q), BenchCategory::conversation);
        it.image_id = "wild-" + std::to_string(q % 24);
        wild.push_back(it);
    }
    CHECK_NOTHROW(validate_wild_bench(wild));
    wild[0].image_id = "wild-extra";
    CHECK_THROWS_AS(validate_wild_bench(wild), ValidationError);
    fs::remove(path);
}

TEST_CASE("category names") {
    CHECK(bench_category_name(BenchCategory::complex_reasoning) == "complex");
    CHECK(bench_category_from_name("conv") == BenchCategory::conversation);
    CHECK_THROWS_AS(bench_category_from_name("poetry"), ValidationError);
}
