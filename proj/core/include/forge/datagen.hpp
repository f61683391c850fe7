#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "forge/context.hpp"
#include "forge/gateway.hpp"
#include "forge/prompt.hpp"

namespace forge {

// One image's instruction data. Conversation samples may be multi-turn;
// detailed_description and complex_reasoning are always single-turn.
struct InstructSample {
    std::string id; // {image_id}-{rtype}-{ordinal}
    std::string image_id;
    ResponseType rtype = ResponseType::conversation;
    std::vector<QAPair> turns;
};

void validate_sample(const InstructSample& sample);

nlohmann::json sample_to_json(const InstructSample& sample);
InstructSample sample_from_json(const nlohmann::json& j);

struct DatasetManifest {
    std::array<size_t, kResponseTypeCount> counts{}; // indexed by ResponseType
    size_t total = 0;
    std::string corpus_id;
    std::string config_hash;

    nlohmann::json to_json() const;
};

// Pairs a seeded brief-description instruction with an existing caption.
// The draw is keyed on (seed, image_id) so it is order-independent.
InstructSample naive_expand(const SymbolicContext& ctx, uint64_t seed,
                            bool random_caption = false);

// Scales a target ratio to `total` samples by largest remainder, ties to
// the earlier type.
std::array<size_t, kResponseTypeCount> allocate_mix(const std::array<size_t, 3>& ratio,
                                                    size_t total);

struct GenerateOptions {
    std::array<size_t, kResponseTypeCount> mix{}; // absolute per-type targets
    uint64_t seed = 0;
    int workers = 4;
    bool boxes_in_context = true; // include box lines in teacher queries
    std::string corpus_id = "corpus";
};

struct RejectRecord {
    std::string image_id;
    std::string rtype;
    std::string raw_text;
    std::string error;
};

struct GenerateResult {
    DatasetManifest manifest;
    std::vector<RejectRecord> rejects;
};

// Orchestrates context -> prompt -> teacher -> parse for each requested
// sample. Emission order follows input order regardless of worker timing.
// Teacher outputs that fail to parse become reject records; the pipeline
// continues.
class DataGenerator {
public:
    DataGenerator(Gateway& gateway, PromptLibrary prompts, GenerateOptions opts);

    GenerateResult generate(const std::vector<SymbolicContext>& corpus,
                            const std::function<void(const InstructSample&)>& sink);

    // Builds the teacher request for one (context, type) pair.
    CompletionRequest make_request(const SymbolicContext& ctx, ResponseType rtype) const;

private:
    Gateway& gateway_;
    PromptLibrary prompts_;
    GenerateOptions opts_;
};

// Fallback handler for offline runs: synthesizes a deterministic,
// well-formed reply from the request itself (keyed on the request hash).
MockBackend::Handler make_synthetic_teacher();

} // namespace forge
