#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "forge/prompt.hpp"

namespace forge {

enum class BenchCategory { conversation, detail, complex_reasoning };

std::string bench_category_name(BenchCategory c);
BenchCategory bench_category_from_name(const std::string& name);

struct BenchItem {
    std::string item_id;
    std::string image_id;
    BenchCategory category = BenchCategory::conversation;
    std::string question;
    std::string gt_description; // ground-truth textual description (+ boxes)
    std::string reference_answer; // frozen text-only answer from ground truth
};

struct JudgeVerdict {
    int score_reference = 0; // 1-10
    int score_candidate = 0; // 1-10
    std::string explanation;

    bool operator==(const JudgeVerdict&) const = default;
};

// Deterministic judge prompt: question, ground-truth description, both
// answers (reference as Assistant 1, candidate as Assistant 2), and the
// two-integers-first-line output contract.
std::vector<ChatMessage> build_judge_prompt(const BenchItem& item,
                                            const std::string& candidate_answer);

// First line "<ref_score> <cand_score>", remainder explanation. Scores
// outside [1,10] are rejected, not clamped.
JudgeVerdict parse_verdict(const std::string& text);
std::string format_verdict(const JudgeVerdict& v);

// 100 * sum(candidate) / sum(reference).
double relative_score(std::span<const JudgeVerdict> verdicts);

struct BenchReport {
    std::vector<std::string> category_names; // row labels, pooled "all" last
    // per category: one relative score per run
    std::vector<std::vector<double>> per_run;
    std::vector<double> mean;
    std::vector<double> stddev; // sample (n-1); 0 for a single run

    nlohmann::json to_json() const;
    std::string to_table() const; // human-readable, one decimal place
};

// runs[r][i] is the verdict for item i in run r; all runs must cover the
// same item set in the same order.
BenchReport aggregate_runs(const std::vector<std::vector<JudgeVerdict>>& runs,
                           const std::vector<BenchItem>& items);

// Bench JSONL: {"id","image","category","question","gt_description",
// "reference_answer"?}
std::vector<BenchItem> load_bench_items(const std::filesystem::path& path);

// Layout validators for the two released benchmark shapes.
void validate_coco_bench(const std::vector<BenchItem>& items);   // 30 images x 3 = 90
void validate_wild_bench(const std::vector<BenchItem>& items);   // 24 images, 60 questions

} // namespace forge
