#include "forge/sqa.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <unordered_map>

#include "forge/errors.hpp"
#include "forge/jsonl.hpp"

namespace forge {

std::vector<std::string> default_refusal_phrases() {
    return {"insufficient context", "cannot see the image", "cannot answer without the image",
            "without seeing the image", "no image is provided"};
}

namespace {

std::string lowercase(const std::string& s) {
    std::string out(s.size(), '\0');
    std::transform(s.begin(), s.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Last "the answer is X" occurrence, case-insensitive on the lead phrase.
std::optional<size_t> find_answer_sentence(const std::string& raw, size_t n_choices) {
    const std::string lower = lowercase(raw);
    const std::string needle = "the answer is ";
    size_t pos = lower.rfind(needle);
    if (pos == std::string::npos) return std::nullopt;
    size_t at = pos + needle.size();
    // tolerate an opening parenthesis: "The answer is (B)."
    if (at < raw.size() && raw[at] == '(') ++at;
    if (at >= raw.size()) return std::nullopt;
    char c = raw[at];
    if (c >= 'A' && c < static_cast<char>('A' + n_choices)) return static_cast<size_t>(c - 'A');
    return std::nullopt;
}

// Last standalone option letter: a single uppercase letter delimited by
// non-alphanumerics, e.g. "(B)", "B.", or a lone "B".
std::optional<size_t> find_standalone_letter(const std::string& raw, size_t n_choices) {
    std::optional<size_t> found;
    for (size_t i = 0; i < raw.size(); ++i) {
        char c = raw[i];
        if (c < 'A' || c >= static_cast<char>('A' + n_choices)) continue;
        bool left_ok = i == 0 || !std::isalnum(static_cast<unsigned char>(raw[i - 1]));
        bool right_ok =
            i + 1 == raw.size() || !std::isalnum(static_cast<unsigned char>(raw[i + 1]));
        if (left_ok && right_ok) found = static_cast<size_t>(c - 'A');
    }
    return found;
}

} // namespace

Prediction parse_answer(const std::string& raw, size_t n_choices,
                        const std::vector<std::string>& refusal_phrases) {
    if (n_choices < 2 || n_choices > 26)
        throw ValidationError("parse_answer: n_choices must be in [2,26]");
    Prediction pred;
    pred.raw_text = raw;

    if (auto idx = find_answer_sentence(raw, n_choices)) {
        pred.choice = *idx;
        return pred;
    }
    const std::string lower = lowercase(raw);
    for (const auto& phrase : refusal_phrases) {
        if (lower.find(lowercase(phrase)) != std::string::npos) {
            pred.failed = true;
            return pred;
        }
    }
    if (auto idx = find_standalone_letter(raw, n_choices)) {
        pred.choice = *idx;
        return pred;
    }
    pred.failed = true;
    return pred;
}

nlohmann::json AccuracyTable::to_json() const {
    return {{"NAT", nat},  {"SOC", soc},   {"LAN", lan},     {"TXT", txt},    {"IMG", img},
            {"NO", no},    {"G1-6", g1_6}, {"G7-12", g7_12}, {"average", average}};
}

std::string AccuracyTable::to_table() const {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(2);
    out << "NAT " << nat << "  SOC " << soc << "  LAN " << lan << "  TXT " << txt << "  IMG "
        << img << "  NO " << no << "  G1-6 " << g1_6 << "  G7-12 " << g7_12 << "  Average "
        << average << "\n";
    return out.str();
}

AccuracyTable accuracy_breakdown(const std::vector<SQAItem>& items,
                                 const std::vector<Prediction>& predictions) {
    if (predictions.size() != items.size())
        throw ValidationError("accuracy_breakdown: predictions must cover all items");
    struct Cell {
        size_t correct = 0, total = 0;
        double pct() const { return total ? 100.0 * correct / total : 0.0; }
    };
    Cell nat, soc, lan, txt, img, no, g16, g712, avg;
    for (size_t i = 0; i < items.size(); ++i) {
        const auto& it = items[i];
        const auto& p = predictions[i];
        if (p.item_id != it.item_id)
            throw ValidationError("accuracy_breakdown: prediction order mismatch at " +
                                  it.item_id);
        bool correct = !p.failed && p.choice && *p.choice == it.gold;
        auto tally = [&](Cell& c) {
            ++c.total;
            if (correct) ++c.correct;
        };
        switch (it.subject) {
            case SqaSubject::NAT: tally(nat); break;
            case SqaSubject::SOC: tally(soc); break;
            case SqaSubject::LAN: tally(lan); break;
        }
        if (it.has_text_context) tally(txt);
        if (it.has_image_context) tally(img);
        if (!it.has_text_context && !it.has_image_context) tally(no);
        tally(it.grade_band == GradeBand::G1_6 ? g16 : g712);
        tally(avg);
    }
    AccuracyTable t;
    t.nat = nat.pct();
    t.soc = soc.pct();
    t.lan = lan.pct();
    t.txt = txt.pct();
    t.img = img.pct();
    t.no = no.pct();
    t.g1_6 = g16.pct();
    t.g7_12 = g712.pct();
    t.average = avg.pct();
    return t;
}

std::vector<Prediction> ensemble_complement(const std::vector<Prediction>& primary,
                                            const std::vector<Prediction>& fallback) {
    if (primary.size() != fallback.size())
        throw ValidationError("ensemble_complement: prediction sets differ in size");
    std::vector<Prediction> out;
    out.reserve(primary.size());
    for (size_t i = 0; i < primary.size(); ++i) {
        if (primary[i].item_id != fallback[i].item_id)
            throw ValidationError("ensemble_complement: item order mismatch at index " +
                                  std::to_string(i));
        out.push_back(primary[i].failed ? fallback[i] : primary[i]);
    }
    return out;
}

CompletionRequest make_arbitration_request(const SQAItem& item, const Prediction& model_a,
                                           const Prediction& model_b) {
    static const std::string kSystem =
        "You are given a multiple-choice question and two assistants' full answers. Analyze "
        "the reasoning in both answers, decide which conclusion is more plausible, and give "
        "your own final answer. End your reply with the sentence 'The answer is X.' where X "
        "is the option letter.";
    std::string options;
    for (size_t i = 0; i < item.choices.size(); ++i) {
        options += " (" + std::string(1, static_cast<char>('A' + i)) + ") " + item.choices[i];
    }
    std::string user = "Question:\n" + item.question + "\nOptions:" + options +
                       "\n\nAssistant 1's answer:\n" + model_a.raw_text +
                       "\n\nAssistant 2's answer:\n" + model_b.raw_text +
                       "\n\nWhich answer is correct? Give your final answer.";
    CompletionRequest req;
    req.messages = {{Role::system, kSystem}, {Role::user, user}};
    req.temperature = 0.0;
    return req;
}

Prediction ensemble_judge(const Prediction& model_a, const Prediction& model_b,
                          const SQAItem& item, Gateway& gateway) {
    if (!model_a.failed && !model_b.failed && model_a.choice == model_b.choice) {
        Prediction out = model_a;
        out.item_id = item.item_id;
        return out;
    }
    CompletionResult res = gateway.complete(make_arbitration_request(item, model_a, model_b));
    Prediction out = parse_answer(res.text, item.choices.size());
    out.item_id = item.item_id;
    return out;
}

namespace {

SqaSubject subject_from_json(const nlohmann::json& j) {
    std::string s = j.get<std::string>();
    if (s == "NAT" || s == "natural science") return SqaSubject::NAT;
    if (s == "SOC" || s == "social science") return SqaSubject::SOC;
    if (s == "LAN" || s == "language science") return SqaSubject::LAN;
    throw ValidationError("unknown subject: " + s);
}

GradeBand grade_from_json(const nlohmann::json& j) {
    int g;
    if (j.is_number_integer()) {
        g = j.get<int>();
    } else {
        std::string s = j.get<std::string>();
        if (s.rfind("grade", 0) == 0) s = s.substr(5);
        g = std::stoi(s);
    }
    if (g < 1 || g > 12) throw ValidationError("grade out of range: " + std::to_string(g));
    return g <= 6 ? GradeBand::G1_6 : GradeBand::G7_12;
}

} // namespace

std::vector<SQAItem> load_sqa_items(const std::filesystem::path& path) {
    std::vector<SQAItem> items;
    for_each_jsonl(path, [&](const nlohmann::json& j, size_t lineno) {
        SQAItem it;
        it.item_id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
        it.question = j.at("question").get<std::string>();
        it.choices = j.at("choices").get<std::vector<std::string>>();
        it.gold = j.at("answer").get<size_t>();
        it.subject = subject_from_json(j.at("subject"));
        it.has_image_context = j.value("has_image", false);
        it.has_text_context = !j.value("hint", std::string()).empty();
        it.grade_band = grade_from_json(j.at("grade"));
        if (it.choices.size() < 2 || it.gold >= it.choices.size())
            throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                                  ": bad choices/answer for item " + it.item_id);
        items.push_back(std::move(it));
    });
    return items;
}

std::vector<Prediction> load_predictions(const std::filesystem::path& path,
                                         const std::vector<SQAItem>& items) {
    std::unordered_map<std::string, std::string> raw;
    for_each_jsonl(path, [&](const nlohmann::json& j, size_t) {
        std::string id =
            j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
        raw[id] = j.at("text").get<std::string>();
    });
    std::vector<Prediction> out;
    out.reserve(items.size());
    for (const auto& it : items) {
        auto found = raw.find(it.item_id);
        if (found == raw.end())
            throw ValidationError("missing prediction for item " + it.item_id);
        Prediction p = parse_answer(found->second, it.choices.size());
        p.item_id = it.item_id;
        out.push_back(std::move(p));
    }
    return out;
}

} // namespace forge
