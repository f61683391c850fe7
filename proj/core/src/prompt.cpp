#include "forge/prompt.hpp"

#include <array>

#include "forge/errors.hpp"
#include "forge/jsonl.hpp"
#include "forge/rng.hpp"

namespace forge {

std::string role_name(Role r) {
    switch (r) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    throw ValidationError("bad role value");
}

Role role_from_name(const std::string& name) {
    if (name == "system") return Role::system;
    if (name == "user") return Role::user;
    if (name == "assistant") return Role::assistant;
    throw ValidationError("unknown role: " + name);
}

std::string response_type_name(ResponseType t) {
    switch (t) {
        case ResponseType::conversation: return "conversation";
        case ResponseType::detailed_description: return "detailed_description";
        case ResponseType::complex_reasoning: return "complex_reasoning";
    }
    throw ValidationError("bad response type value");
}

ResponseType response_type_from_name(const std::string& name) {
    if (name == "conversation") return ResponseType::conversation;
    if (name == "detailed_description") return ResponseType::detailed_description;
    if (name == "complex_reasoning") return ResponseType::complex_reasoning;
    throw ValidationError("unknown response type: " + name);
}

std::vector<ChatMessage> build_messages(ResponseType /*rtype*/,
                                        const std::string& system_prompt,
                                        std::span<const FewShotExample> fewshot,
                                        const std::string& query_ctx) {
    if (system_prompt.empty()) throw ValidationError("build_messages: empty system prompt");
    if (query_ctx.empty()) throw ValidationError("build_messages: empty query context");
    std::vector<ChatMessage> out;
    out.reserve(2 + 2 * fewshot.size());
    out.push_back({Role::system, system_prompt});
    for (const auto& ex : fewshot) {
        if (ex.context.empty() || ex.response.empty())
            throw ValidationError("build_messages: empty few-shot example text");
        out.push_back({Role::user, ex.context});
        out.push_back({Role::assistant, ex.response});
    }
    out.push_back({Role::user, query_ctx});
    return out;
}

namespace {

const std::array<std::string, 11> kBriefInstructions = {
    "Describe the image concisely.",
    "Provide a brief description of the given image.",
    "Offer a succinct explanation of the picture presented.",
    "Summarize the visual content of the image.",
    "Give a short and clear explanation of the subsequent image.",
    "Share a concise interpretation of the image provided.",
    "Present a compact description of the photo's key features.",
    "Relay a brief, clear account of the picture shown.",
    "Render a clear and concise summary of the photo.",
    "Write a terse but informative summary of the picture.",
    "Create a compact narrative representing the image presented.",
};

const std::array<std::string, 16> kDetailedInstructions = {
    "Describe the following image in detail",
    "Provide a detailed description of the given image",
    "Give an elaborate explanation of the image you see",
    "Share a comprehensive rundown of the presented image",
    "Offer a thorough analysis of the image",
    "Explain the various aspects of the image before you",
    "Clarify the contents of the displayed image with great detail",
    "Characterize the image using a well-detailed description",
    "Break down the elements of the image in a detailed manner",
    "Walk through the important details of the image",
    "Portray the image with a rich, descriptive narrative",
    "Narrate the contents of the image with precision",
    "Analyze the image in a comprehensive and detailed manner",
    "Illustrate the image through a descriptive explanation",
    "Examine the image closely and share its details",
    "Write an exhaustive depiction of the given image",
};

} // namespace

std::span<const std::string> brief_instruction_list() { return kBriefInstructions; }
std::span<const std::string> detailed_instruction_list() { return kDetailedInstructions; }

std::string sample_brief_instruction(uint64_t rng_seed) {
    return kBriefInstructions[KeyedRng(rng_seed).next_index(kBriefInstructions.size())];
}

std::string sample_brief_instruction(uint64_t rng_seed, const std::string& key) {
    return kBriefInstructions[KeyedRng(rng_seed, key).next_index(kBriefInstructions.size())];
}

std::string sample_detailed_instruction(uint64_t rng_seed) {
    return kDetailedInstructions[KeyedRng(rng_seed).next_index(kDetailedInstructions.size())];
}

std::string sample_detailed_instruction(uint64_t rng_seed, const std::string& key) {
    return kDetailedInstructions[KeyedRng(rng_seed, key).next_index(kDetailedInstructions.size())];
}

const PromptSet& PromptLibrary::get(ResponseType t) const {
    return sets_[static_cast<size_t>(t)];
}

PromptSet& PromptLibrary::get(ResponseType t) {
    return sets_[static_cast<size_t>(t)];
}

namespace {

// Text assets carry one editor-added trailing newline; drop it so message
// contents end exactly where the prose does.
std::string read_asset(const std::filesystem::path& path) {
    std::string s = read_text_file(path);
    if (!s.empty() && s.back() == '\n') s.pop_back();
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

} // namespace

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir))
        throw ConfigError("prompt directory not found: " + dir.string());
    PromptLibrary lib;
    for (ResponseType t : {ResponseType::conversation, ResponseType::detailed_description,
                           ResponseType::complex_reasoning}) {
        const std::string name = response_type_name(t);
        fs::path sys = dir / ("system." + name + ".txt");
        if (!fs::exists(sys))
            throw ConfigError("missing prompt asset: " + sys.string());
        PromptSet& set = lib.get(t);
        set.system_prompt = read_asset(sys);
        for (int n = 0;; ++n) {
            fs::path ctx = dir / ("fewshot." + name + "." + std::to_string(n) + ".context.txt");
            fs::path rsp = dir / ("fewshot." + name + "." + std::to_string(n) + ".response.txt");
            if (!fs::exists(ctx)) break;
            if (!fs::exists(rsp))
                throw ConfigError("few-shot context without response: " + ctx.string());
            set.fewshot.push_back({read_asset(ctx), read_asset(rsp)});
        }
    }
    return lib;
}

} // namespace forge
