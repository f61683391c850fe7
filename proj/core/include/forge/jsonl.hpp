#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include <nlohmann/json.hpp>

#include "forge/errors.hpp"

namespace forge {

// Streams a JSON Lines file, invoking fn once per non-empty line.
// Parse failures carry the 1-based line number.
inline void for_each_jsonl(const std::filesystem::path& path,
                           const std::function<void(const nlohmann::json&, size_t)>& fn) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open file: " + path.string());
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        fn(j, lineno);
    }
}

class JsonlWriter {
public:
    explicit JsonlWriter(const std::filesystem::path& path) : out_(path) {
        if (!out_) throw ValidationError("cannot open file for writing: " + path.string());
    }
    void write(const nlohmann::json& j) { out_ << j.dump() << '\n'; }
    void flush() { out_.flush(); }

private:
    std::ofstream out_;
};

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path.string());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

} // namespace forge
