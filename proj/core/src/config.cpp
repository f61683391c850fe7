#include "forge/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "forge/errors.hpp"

namespace forge {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string unquote(std::string v) {
    if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') ||
                          (v.front() == '\'' && v.back() == '\'')))
        return v.substr(1, v.size() - 2);
    return v;
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        return std::stoull(v);
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
    }
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        return std::stod(v);
    } catch (const std::exception&) {
        throw ConfigError("config: bad number for " + key + ": '" + v + "'");
    }
}

void set_key(Config& cfg, const std::string& key, const std::string& value,
             const std::string& origin) {
    if (key == "backend") {
        if (value != "mock" && value != "api")
            throw ConfigError("config: backend must be 'mock' or 'api'");
        cfg.backend = value;
    } else if (key == "api_base") {
        cfg.api_base = value;
    } else if (key == "model_id") {
        cfg.model_id = value;
    } else if (key == "api_key_env") {
        cfg.api_key_env = value;
    } else if (key == "rate_per_sec") {
        cfg.rate_per_sec = parse_double(key, value);
    } else if (key == "concurrency") {
        cfg.concurrency = static_cast<int>(parse_u64(key, value));
    } else if (key == "seed") {
        cfg.seed = parse_u64(key, value);
    } else if (key == "prompts_dir") {
        cfg.prompts_dir = value;
    } else if (key == "cache_dir") {
        cfg.cache_dir = value;
    } else if (key == "mix") {
        std::istringstream ss(value);
        std::string tok;
        std::array<size_t, 3> mix{};
        for (size_t i = 0; i < 3; ++i) {
            if (!std::getline(ss, tok, ','))
                throw ConfigError("config: mix needs 3 comma-separated counts");
            mix[i] = parse_u64(key, trim(tok));
        }
        cfg.mix = mix;
    } else if (key == "judge_runs") {
        cfg.judge_runs = static_cast<int>(parse_u64(key, value));
    } else if (key == "toy_vocab") {
        cfg.toy_vocab = parse_u64(key, value);
    } else if (key == "toy_embed_dim") {
        cfg.toy_embed_dim = parse_u64(key, value);
    } else if (key == "toy_visual_dim") {
        cfg.toy_visual_dim = parse_u64(key, value);
    } else if (key == "toy_lr") {
        cfg.toy_lr = parse_double(key, value);
    } else if (key == "toy_epochs") {
        cfg.toy_epochs = parse_u64(key, value);
    } else {
        throw ConfigError("config: unknown key '" + key + "'");
    }
    cfg.source[key] = origin;
}

} // namespace

Config load_config_file(const std::filesystem::path& path, Config base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[' && t.back() == ']') continue; // section headers are cosmetic
        size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                              ": expected key = value");
        std::string key = trim(t.substr(0, eq));
        std::string value = unquote(trim(t.substr(eq + 1)));
        set_key(base, key, value, "file");
    }
    return base;
}

Config apply_env(Config cfg) {
    auto maybe = [&](const char* var, const std::string& key) {
        if (const char* v = std::getenv(var)) set_key(cfg, key, v, "env");
    };
    maybe("FORGE_BACKEND", "backend");
    maybe("FORGE_MODEL", "model_id");
    maybe("FORGE_SEED", "seed");
    maybe("FORGE_PROMPTS", "prompts_dir");
    maybe("FORGE_CACHE", "cache_dir");
    return cfg;
}

std::array<TrainingPreset, 2> training_presets() {
    return {TrainingPreset{"pretrain", 2e-3, 128, 1}, TrainingPreset{"finetune", 2e-5, 32, 3}};
}

std::string config_show(const Config& cfg) {
    std::ostringstream out;
    auto origin = [&](const std::string& key) {
        auto it = cfg.source.find(key);
        return it == cfg.source.end() ? std::string("default") : it->second;
    };
    auto row = [&](const std::string& key, const std::string& value) {
        out << key << " = " << value << "  (" << origin(key) << ")\n";
    };
    row("backend", cfg.backend);
    row("api_base", cfg.api_base);
    row("model_id", cfg.model_id);
    row("api_key_env", cfg.api_key_env);
    row("rate_per_sec", std::to_string(cfg.rate_per_sec));
    row("concurrency", std::to_string(cfg.concurrency));
    row("seed", std::to_string(cfg.seed));
    row("prompts_dir", cfg.prompts_dir);
    row("cache_dir", cfg.cache_dir);
    row("mix", std::to_string(cfg.mix[0]) + "," + std::to_string(cfg.mix[1]) + "," +
                   std::to_string(cfg.mix[2]));
    row("judge_runs", std::to_string(cfg.judge_runs));
    row("toy_vocab", std::to_string(cfg.toy_vocab));
    row("toy_embed_dim", std::to_string(cfg.toy_embed_dim));
    row("toy_visual_dim", std::to_string(cfg.toy_visual_dim));
    row("toy_lr", std::to_string(cfg.toy_lr));
    row("toy_epochs", std::to_string(cfg.toy_epochs));
    return out.str();
}

} // namespace forge
