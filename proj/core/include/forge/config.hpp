#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace forge {

// Effective settings after layering defaults < config file < environment
// < flags. Unknown keys in the file are rejected up front.
struct Config {
    std::string backend = "mock"; // mock | api
    std::string api_base = "https://api.openai.com/v1";
    std::string model_id = "gpt-4";
    std::string api_key_env = "FORGE_API_KEY";
    double rate_per_sec = 5.0;
    int concurrency = 8;
    uint64_t seed = 0;
    std::string prompts_dir = "prompts";
    std::string cache_dir;
    std::array<size_t, 3> mix = {58, 23, 77};
    int judge_runs = 3;
    // toy defaults; the full-scale pretraining/finetuning hyperparameters
    // ship as named presets, not defaults
    size_t toy_vocab = 32;
    size_t toy_embed_dim = 8;
    size_t toy_visual_dim = 4;
    double toy_lr = 0.1;
    size_t toy_epochs = 50;

    // provenance per key, for `forge config show`
    std::map<std::string, std::string> source;
};

// Key = value lines, '#' comments, optional [section] headers ignored.
Config load_config_file(const std::filesystem::path& path, Config base = {});

// FORGE_BACKEND, FORGE_MODEL, FORGE_SEED, FORGE_PROMPTS, FORGE_CACHE.
Config apply_env(Config cfg);

// Named hyperparameter presets (learning rate, batch size) recorded from
// the original training recipe; informational, not used by toy defaults.
struct TrainingPreset {
    std::string name;
    double learning_rate;
    int batch_size;
    int epochs;
};
std::array<TrainingPreset, 2> training_presets(); // pretrain, finetune

std::string config_show(const Config& cfg);

} // namespace forge
