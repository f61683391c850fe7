#include "forge/judge.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "forge/errors.hpp"
#include "forge/jsonl.hpp"

namespace forge {

std::string bench_category_name(BenchCategory c) {
    switch (c) {
        case BenchCategory::conversation: return "conversation";
        case BenchCategory::detail: return "detail";
        case BenchCategory::complex_reasoning: return "complex";
    }
    throw ValidationError("bad bench category");
}

BenchCategory bench_category_from_name(const std::string& name) {
    if (name == "conversation" || name == "conv") return BenchCategory::conversation;
    if (name == "detail") return BenchCategory::detail;
    if (name == "complex") return BenchCategory::complex_reasoning;
    throw ValidationError("unknown bench category: " + name);
}

std::vector<ChatMessage> build_judge_prompt(const BenchItem& item,
                                            const std::string& candidate_answer) {
    if (candidate_answer.empty())
        throw ValidationError("judge prompt: empty candidate answer for item " + item.item_id);
    static const std::string kSystem =
        "You are a helpful and precise assistant for checking the quality of two answers. "
        "Evaluate the helpfulness, relevance, accuracy, and level of detail of each "
        "assistant's response to the user question, given the visual content described in "
        "text. Give each assistant an overall score on a scale of 1 to 10, where a higher "
        "score indicates better overall performance. Output exactly two integers separated "
        "by a single space on the first line (Assistant 1 score, then Assistant 2 score). "
        "From the second line, provide a comprehensive explanation of your evaluation, "
        "avoiding any potential bias and ensuring that the order in which the responses "
        "were presented does not affect your judgment.";

    std::string user = "[Question]\n" + item.question + "\n\n[Visual Context]\n" +
                       item.gt_description + "\n\n[Assistant 1]\n" + item.reference_answer +
                       "\n[End of Assistant 1]\n\n[Assistant 2]\n" + candidate_answer +
                       "\n[End of Assistant 2]";
    return {{Role::system, kSystem}, {Role::user, user}};
}

JudgeVerdict parse_verdict(const std::string& text) {
    size_t eol = text.find('\n');
    std::string first = text.substr(0, eol);
    std::istringstream ss(first);
    long a = 0, b = 0;
    std::string rest;
    if (!(ss >> a >> b) || (ss >> rest))
        throw ParseError("verdict: first line must be exactly two integers, got '" + first + "'");
    if (a < 1 || a > 10 || b < 1 || b > 10)
        throw ParseError("verdict: scores must be in [1,10], got " + std::to_string(a) + " " +
                         std::to_string(b));
    JudgeVerdict v;
    v.score_reference = static_cast<int>(a);
    v.score_candidate = static_cast<int>(b);
    if (eol != std::string::npos) {
        std::string expl = text.substr(eol + 1);
        size_t begin = expl.find_first_not_of(" \t\r\n");
        size_t end = expl.find_last_not_of(" \t\r\n");
        if (begin != std::string::npos) v.explanation = expl.substr(begin, end - begin + 1);
    }
    return v;
}

std::string format_verdict(const JudgeVerdict& v) {
    return std::to_string(v.score_reference) + " " + std::to_string(v.score_candidate) + "\n" +
           v.explanation;
}

double relative_score(std::span<const JudgeVerdict> verdicts) {
    if (verdicts.empty()) throw ComputationError("relative_score: empty verdict list");
    long long ref = 0, cand = 0;
    for (const auto& v : verdicts) {
        ref += v.score_reference;
        cand += v.score_candidate;
    }
    if (ref <= 0) throw ComputationError("relative_score: zero reference score sum");
    return 100.0 * static_cast<double>(cand) / static_cast<double>(ref);
}

nlohmann::json BenchReport::to_json() const {
    nlohmann::json cols = nlohmann::json::object();
    for (size_t c = 0; c < category_names.size(); ++c) {
        cols[category_names[c]] = {{"per_run", per_run[c]},
                                   {"mean", mean[c]},
                                   {"std", stddev[c]}};
    }
    return cols;
}

std::string BenchReport::to_table() const {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(1);
    for (size_t c = 0; c < category_names.size(); ++c) {
        out << category_names[c] << ": " << mean[c];
        if (per_run[c].size() > 1) out << " +/- " << stddev[c];
        out << "\n";
    }
    return out.str();
}

BenchReport aggregate_runs(const std::vector<std::vector<JudgeVerdict>>& runs,
                           const std::vector<BenchItem>& items) {
    if (runs.empty()) throw ValidationError("aggregate_runs: no runs");
    for (const auto& run : runs)
        if (run.size() != items.size())
            throw ValidationError("aggregate_runs: run covers " + std::to_string(run.size()) +
                                  " items, expected " + std::to_string(items.size()));

    BenchReport rep;
    for (BenchCategory c : {BenchCategory::conversation, BenchCategory::detail,
                            BenchCategory::complex_reasoning})
        rep.category_names.push_back(bench_category_name(c));
    rep.category_names.push_back("all");

    const size_t ncols = rep.category_names.size();
    rep.per_run.assign(ncols, {});
    for (const auto& run : runs) {
        for (size_t c = 0; c < 3; ++c) {
            std::vector<JudgeVerdict> subset;
            for (size_t i = 0; i < items.size(); ++i)
                if (static_cast<size_t>(items[i].category) == c) subset.push_back(run[i]);
            if (!subset.empty()) rep.per_run[c].push_back(relative_score(subset));
        }
        // overall pools all items, not the mean of category means
        rep.per_run[3].push_back(relative_score(run));
    }

    for (size_t c = 0; c < ncols; ++c) {
        const auto& vals = rep.per_run[c];
        if (vals.empty()) {
            rep.mean.push_back(0);
            rep.stddev.push_back(0);
            continue;
        }
        double m = 0;
        for (double v : vals) m += v;
        m /= static_cast<double>(vals.size());
        double s = 0;
        if (vals.size() > 1) {
            for (double v : vals) s += (v - m) * (v - m);
            s = std::sqrt(s / static_cast<double>(vals.size() - 1));
        }
        rep.mean.push_back(m);
        rep.stddev.push_back(s);
    }
    return rep;
}

std::vector<BenchItem> load_bench_items(const std::filesystem::path& path) {
    std::vector<BenchItem> items;
    for_each_jsonl(path, [&](const nlohmann::json& j, size_t lineno) {
        BenchItem it;
        it.item_id = j.at("id").is_string() ? j.at("id").get<std::string>()
                                            : j.at("id").dump();
        it.image_id = j.at("image").get<std::string>();
        it.category = bench_category_from_name(j.at("category").get<std::string>());
        it.question = j.at("question").get<std::string>();
        it.gt_description = j.at("gt_description").get<std::string>();
        it.reference_answer = j.value("reference_answer", "");
        if (it.question.empty() || it.gt_description.empty())
            throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                                  ": empty question or gt_description");
        items.push_back(std::move(it));
    });
    return items;
}

void validate_coco_bench(const std::vector<BenchItem>& items) {
    if (items.size() != 90)
        throw ValidationError("COCO bench: expected 90 items, got " +
                              std::to_string(items.size()));
    std::map<std::string, std::set<BenchCategory>> per_image;
    for (const auto& it : items) per_image[it.image_id].insert(it.category);
    if (per_image.size() != 30)
        throw ValidationError("COCO bench: expected 30 images, got " +
                              std::to_string(per_image.size()));
    for (const auto& [img, cats] : per_image)
        if (cats.size() != 3)
            throw ValidationError("COCO bench: image " + img +
                                  " must have one question per category");
}

void validate_wild_bench(const std::vector<BenchItem>& items) {
    if (items.size() != 60)
        throw ValidationError("In-the-Wild bench: expected 60 questions, got " +
                              std::to_string(items.size()));
    std::set<std::string> images;
    for (const auto& it : items) images.insert(it.image_id);
    if (images.size() != 24)
        throw ValidationError("In-the-Wild bench: expected 24 images, got " +
                              std::to_string(images.size()));
}

} // namespace forge
