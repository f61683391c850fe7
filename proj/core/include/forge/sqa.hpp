#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "forge/gateway.hpp"

namespace forge {

enum class SqaSubject { NAT, SOC, LAN };
enum class GradeBand { G1_6, G7_12 };

struct SQAItem {
    std::string item_id;
    std::string question;
    std::vector<std::string> choices; // >= 2
    size_t gold = 0;                  // index into choices
    SqaSubject subject = SqaSubject::NAT;
    bool has_text_context = false;
    bool has_image_context = false;
    GradeBand grade_band = GradeBand::G1_6;
};

struct Prediction {
    std::string item_id;
    std::string raw_text;
    std::optional<size_t> choice; // absent iff failed
    bool failed = false;
};

// Default phrases treated as "the model declined for lack of context".
std::vector<std::string> default_refusal_phrases();

// Extracts the chosen option from free-form model output. Priority:
// the last "The answer is X" sentence; otherwise a refusal phrase marks
// the prediction failed; otherwise the last standalone option letter.
Prediction parse_answer(const std::string& raw, size_t n_choices,
                        const std::vector<std::string>& refusal_phrases =
                            default_refusal_phrases());

struct AccuracyTable {
    // NAT, SOC, LAN, TXT, IMG, NO, G1-6, G7-12 (percent); absent categories NaN
    double nat = 0, soc = 0, lan = 0;
    double txt = 0, img = 0, no = 0;
    double g1_6 = 0, g7_12 = 0;
    double average = 0;

    nlohmann::json to_json() const;
    std::string to_table() const;
};

// Failed predictions count as incorrect; a missing prediction is an error.
AccuracyTable accuracy_breakdown(const std::vector<SQAItem>& items,
                                 const std::vector<Prediction>& predictions);

// Scheme (i): primary's answer unless primary failed, then fallback.
std::vector<Prediction> ensemble_complement(const std::vector<Prediction>& primary,
                                            const std::vector<Prediction>& fallback);

// Builds the arbitration request fed to the judge when two models disagree.
CompletionRequest make_arbitration_request(const SQAItem& item, const Prediction& model_a,
                                           const Prediction& model_b);

// Scheme (ii): agreement short-circuits with no gateway call; disagreement
// (or any failure) asks the judge for a final answer.
Prediction ensemble_judge(const Prediction& model_a, const Prediction& model_b,
                          const SQAItem& item, Gateway& gateway);

// JSONL mirroring the public dataset fields: {"id","question","choices",
// "answer","subject","has_image","grade","hint"?}
std::vector<SQAItem> load_sqa_items(const std::filesystem::path& path);

// Predictions JSONL: {"id","text"}; returned aligned with `items`.
std::vector<Prediction> load_predictions(const std::filesystem::path& path,
                                         const std::vector<SQAItem>& items);

} // namespace forge
