#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "forge/datagen.hpp"

namespace forge {

// Rendering template for the unified training sequence:
//   system <STOP> (Human: instruct <STOP> Assistant: answer <STOP>)+
struct SequenceTemplate {
    std::string system_message;
    std::string role_human = "Human";
    std::string role_assistant = "Assistant";
    std::string stop_token = "###";
    std::string image_placeholder = "<image>";
};

enum class SpanKind {
    system,
    human_turn, // instruction text and role headers (never predicted)
    assistant_answer,
    stop_after_answer, // the <STOP> the model must learn to emit
    stop_other,
    image_slot,
};

std::string span_kind_name(SpanKind k);

struct Span {
    size_t start = 0; // char offsets, [start, end)
    size_t end = 0;
    bool predict = false;
    SpanKind kind = SpanKind::system;

    bool operator==(const Span&) const = default;
};

struct Token {
    int64_t id = 0;
    size_t start = 0;
    size_t end = 0;
};

// text -> tokens with character offsets. Offsets must be within the input
// and non-overlapping in order.
using Tokenizer = std::function<std::vector<Token>(const std::string&)>;

// Splits on ASCII whitespace; ids come from an internal growing vocab so
// equal strings map to equal ids. The image placeholder registers as one
// atomic token like any other whitespace-delimited word.
class WhitespaceTokenizer {
public:
    std::vector<Token> operator()(const std::string& text);
    int64_t id_of(const std::string& word);
    size_t vocab_size() const { return vocab_.size(); }

private:
    std::unordered_map<std::string, int64_t> vocab_;
};

struct MaskedSequence {
    std::string text;
    std::vector<Span> spans; // partition of [0, text.size())
    std::vector<int64_t> token_ids;
    std::vector<bool> token_mask; // true = token contributes to the loss
};

// Renders a sample into the unified sequence and computes the per-token
// prediction mask: assistant answers and the <STOP> immediately following
// each answer predict, everything else does not. The image placeholder is
// placed before or after the first turn's question with equal probability,
// keyed on (layout_seed, sample.id). Tokens straddling a predict boundary
// are excluded from the loss.
MaskedSequence build_sequence(const InstructSample& sample, const SequenceTemplate& tpl,
                              uint64_t layout_seed, const Tokenizer& tokenizer);

// Number of loss-contributing tokens (denominator for mean loss).
size_t masked_token_count(const MaskedSequence& seq);

// Whether the first turn drew image-before-question; exposed so callers
// can audit the coin flip without re-deriving it.
bool image_first_layout(uint64_t layout_seed, const std::string& sample_id);

} // namespace forge
