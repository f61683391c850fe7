#include "forge/sequence.hpp"

#include <cctype>

#include "forge/errors.hpp"
#include "forge/rng.hpp"

namespace forge {

std::string span_kind_name(SpanKind k) {
    switch (k) {
        case SpanKind::system: return "system";
        case SpanKind::human_turn: return "human_turn";
        case SpanKind::assistant_answer: return "assistant_answer";
        case SpanKind::stop_after_answer: return "stop_after_answer";
        case SpanKind::stop_other: return "stop_other";
        case SpanKind::image_slot: return "image_slot";
    }
    throw ValidationError("bad span kind");
}

std::vector<Token> WhitespaceTokenizer::operator()(const std::string& text) {
    std::vector<Token> out;
    size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i >= text.size()) break;
        size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        out.push_back({id_of(text.substr(start, i - start)), start, i});
    }
    return out;
}

int64_t WhitespaceTokenizer::id_of(const std::string& word) {
    auto [it, inserted] = vocab_.try_emplace(word, static_cast<int64_t>(vocab_.size()));
    return it->second;
}

bool image_first_layout(uint64_t layout_seed, const std::string& sample_id) {
    return KeyedRng(layout_seed, sample_id).next_bool(0.5);
}

namespace {

class SpanBuilder {
public:
    void append(const std::string& piece, SpanKind kind, bool predict = false) {
        if (piece.empty()) return;
        size_t start = text_.size();
        text_ += piece;
        spans_.push_back({start, text_.size(), predict, kind});
    }
    std::string take_text() { return std::move(text_); }
    std::vector<Span> take_spans() { return std::move(spans_); }

private:
    std::string text_;
    std::vector<Span> spans_;
};

} // namespace

MaskedSequence build_sequence(const InstructSample& sample, const SequenceTemplate& tpl,
                              uint64_t layout_seed, const Tokenizer& tokenizer) {
    validate_sample(sample);
    if (tpl.stop_token.empty()) throw ValidationError("sequence template: empty stop token");
    if (tpl.role_human == tpl.role_assistant)
        throw ValidationError("sequence template: role names must be distinct");

    const bool image_first = image_first_layout(layout_seed, sample.id);

    SpanBuilder b;
    if (!tpl.system_message.empty()) b.append(tpl.system_message, SpanKind::system);
    b.append((tpl.system_message.empty() ? "" : " ") + tpl.stop_token + " ",
             SpanKind::stop_other);

    for (size_t t = 0; t < sample.turns.size(); ++t) {
        const auto& turn = sample.turns[t];
        b.append(tpl.role_human + ": ", SpanKind::human_turn);
        if (t == 0) {
            if (image_first) {
                b.append(tpl.image_placeholder, SpanKind::image_slot);
                b.append("\n" + turn.question, SpanKind::human_turn);
            } else {
                b.append(turn.question + "\n", SpanKind::human_turn);
                b.append(tpl.image_placeholder, SpanKind::image_slot);
            }
        } else {
            b.append(turn.question, SpanKind::human_turn);
        }
        b.append(" " + tpl.stop_token + " ", SpanKind::stop_other);
        b.append(tpl.role_assistant + ": ", SpanKind::human_turn);
        b.append(turn.answer, SpanKind::assistant_answer, /*predict=*/true);
        b.append(" " + tpl.stop_token, SpanKind::stop_after_answer, /*predict=*/true);
        if (t + 1 < sample.turns.size()) b.append(" ", SpanKind::stop_other);
    }

    MaskedSequence seq;
    seq.text = b.take_text();
    seq.spans = b.take_spans();

    auto tokens = tokenizer(seq.text);
    seq.token_ids.reserve(tokens.size());
    seq.token_mask.reserve(tokens.size());
    for (const auto& tok : tokens) {
        if (tok.end <= tok.start || tok.end > seq.text.size())
            throw ValidationError("tokenizer produced an out-of-range token offset");
        bool predict = false;
        for (const auto& span : seq.spans) {
            if (tok.start >= span.start && tok.end <= span.end) {
                predict = span.predict;
                break;
            }
        }
        // Tokens straddling a span boundary fall through with predict=false.
        seq.token_ids.push_back(tok.id);
        seq.token_mask.push_back(predict);
    }
    return seq;
}

size_t masked_token_count(const MaskedSequence& seq) {
    size_t n = 0;
    for (bool m : seq.token_mask)
        if (m) ++n;
    return n;
}

} // namespace forge
