#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace forge {

enum class Role { system, user, assistant };

struct ChatMessage {
    Role role = Role::user;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

std::string role_name(Role r);
Role role_from_name(const std::string& name);

// One in-context-learning seed: a serialized context and the target output.
struct FewShotExample {
    std::string context;
    std::string response;
};

enum class ResponseType { conversation, detailed_description, complex_reasoning };

constexpr size_t kResponseTypeCount = 3;
std::string response_type_name(ResponseType t);
ResponseType response_type_from_name(const std::string& name);

// Assembles [system, (user, assistant)*, user]. The trailing user message
// carries query_ctx. Throws ValidationError on empty query/system text.
std::vector<ChatMessage> build_messages(ResponseType rtype,
                                        const std::string& system_prompt,
                                        std::span<const FewShotExample> fewshot,
                                        const std::string& query_ctx);

// The fixed instruction pools the samplers draw from.
std::span<const std::string> brief_instruction_list();    // 11 entries
std::span<const std::string> detailed_instruction_list(); // 16 entries

// Uniform draws from the fixed lists; deterministic under a fixed seed.
// The keyed overloads give each image its own stream, so per-image draws
// do not depend on processing order.
std::string sample_brief_instruction(uint64_t rng_seed);
std::string sample_brief_instruction(uint64_t rng_seed, const std::string& key);
std::string sample_detailed_instruction(uint64_t rng_seed);
std::string sample_detailed_instruction(uint64_t rng_seed, const std::string& key);

// Per-response-type prompt assets: one system prompt plus zero or more
// few-shot examples, loaded from a prompts/ directory laid out as
//   system.<type>.txt
//   fewshot.<type>.<n>.context.txt / fewshot.<type>.<n>.response.txt
struct PromptSet {
    std::string system_prompt;
    std::vector<FewShotExample> fewshot;
};

class PromptLibrary {
public:
    static PromptLibrary load(const std::filesystem::path& dir);

    const PromptSet& get(ResponseType t) const;
    PromptSet& get(ResponseType t);

private:
    PromptSet sets_[kResponseTypeCount];
};

} // namespace forge
