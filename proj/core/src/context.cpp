#include "forge/context.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "forge/errors.hpp"
#include "forge/jsonl.hpp"

namespace forge {

void validate_context(const SymbolicContext& ctx) {
    if (ctx.image_id.empty()) throw ValidationError("context: image_id is empty");
    if (ctx.captions.empty()) throw ValidationError("context: captions list is empty");
    for (size_t i = 0; i < ctx.boxes.size(); ++i) {
        const auto& b = ctx.boxes[i];
        if (b.label.empty())
            throw ValidationError("box " + std::to_string(i) + ": empty label");
        const auto& c = b.coords;
        bool finite = std::isfinite(c[0]) && std::isfinite(c[1]) &&
                      std::isfinite(c[2]) && std::isfinite(c[3]);
        if (!finite || c[0] < 0 || c[2] > 1 || c[0] > c[2] || c[1] < 0 || c[3] > 1 || c[1] > c[3])
            throw ValidationError("box " + std::to_string(i) + " (" + b.label +
                                  "): coordinates must satisfy 0 <= min <= max <= 1");
    }
}

std::string format_coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    std::string s(buf);
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
}

std::string format_box(const BoundingBox& box) {
    std::string out = box.label + ": [";
    for (size_t i = 0; i < 4; ++i) {
        if (i) out += ", ";
        out += format_coord(box.coords[i]);
    }
    out += "]";
    return out;
}

static std::string box_line(const std::vector<BoundingBox>& boxes) {
    std::string out;
    for (size_t i = 0; i < boxes.size(); ++i) {
        if (i) out += ", ";
        out += format_box(boxes[i]);
    }
    return out;
}

std::string serialize_context(const SymbolicContext& ctx) {
    validate_context(ctx);
    std::string out = "image: " + ctx.image_id + "\nCaptions:\n";
    for (const auto& c : ctx.captions) out += c + "\n";
    if (!ctx.boxes.empty()) out += "Boxes:\n" + box_line(ctx.boxes) + "\n";
    return out;
}

std::string prompt_text(const SymbolicContext& ctx, bool include_boxes) {
    validate_context(ctx);
    std::string out;
    for (size_t i = 0; i < ctx.captions.size(); ++i) {
        if (i) out += "\n";
        out += ctx.captions[i];
    }
    if (include_boxes && !ctx.boxes.empty()) out += "\n\n" + box_line(ctx.boxes);
    return out;
}

// Parses one `label: [a, b, c, d]` chunk starting at pos; advances pos past
// the closing bracket.
static BoundingBox parse_box_chunk(const std::string& line, size_t& pos, size_t lineno) {
    auto fail = [&](const std::string& why) -> ParseError {
        return ParseError("line " + std::to_string(lineno) + ": malformed box entry: " + why);
    };
    size_t colon = line.find(": [", pos);
    if (colon == std::string::npos) throw fail("missing ': ['");
    BoundingBox box;
    box.label = line.substr(pos, colon - pos);
    if (box.label.empty()) throw fail("empty label");
    size_t close = line.find(']', colon);
    if (close == std::string::npos) throw fail("missing ']'");
    std::string nums = line.substr(colon + 3, close - colon - 3);
    std::istringstream ss(nums);
    for (size_t i = 0; i < 4; ++i) {
        std::string tok;
        if (!std::getline(ss, tok, ',')) throw fail("expected 4 coordinates");
        try {
            box.coords[i] = std::stod(tok);
        } catch (const std::exception&) {
            throw fail("bad coordinate '" + tok + "'");
        }
    }
    std::string extra;
    if (std::getline(ss, extra, ',')) throw fail("more than 4 coordinates");
    pos = close + 1;
    return box;
}

SymbolicContext parse_context(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    size_t lineno = 0;
    auto next = [&](std::string& out) {
        if (!std::getline(in, out)) return false;
        ++lineno;
        return true;
    };

    SymbolicContext ctx;
    if (!next(line) || line.rfind("image: ", 0) != 0)
        throw ParseError("line 1: expected 'image: <id>' header");
    ctx.image_id = line.substr(7);
    if (!next(line) || line != "Captions:")
        throw ParseError("line " + std::to_string(lineno) + ": expected 'Captions:'");
    bool saw_boxes = false;
    while (next(line)) {
        if (line == "Boxes:") {
            saw_boxes = true;
            break;
        }
        ctx.captions.push_back(line);
    }
    if (saw_boxes) {
        if (!next(line))
            throw ParseError("line " + std::to_string(lineno) + ": 'Boxes:' with no box line");
        size_t pos = 0;
        while (pos < line.size()) {
            ctx.boxes.push_back(parse_box_chunk(line, pos, lineno));
            if (pos < line.size()) {
                if (line.compare(pos, 2, ", ") != 0)
                    throw ParseError("line " + std::to_string(lineno) +
                                     ": expected ', ' between boxes");
                pos += 2;
            }
        }
    }
    validate_context(ctx);
    return ctx;
}

void for_each_context(const std::filesystem::path& path,
                      const std::function<void(const SymbolicContext&)>& fn) {
    for_each_jsonl(path, [&](const nlohmann::json& j, size_t lineno) {
        SymbolicContext ctx;
        try {
            ctx.image_id = j.at("id").get<std::string>();
            ctx.captions = j.at("captions").get<std::vector<std::string>>();
            if (j.contains("boxes")) {
                for (const auto& jb : j.at("boxes")) {
                    BoundingBox b;
                    b.label = jb.at("label").get<std::string>();
                    auto bbox = jb.at("bbox").get<std::vector<double>>();
                    if (bbox.size() != 4)
                        throw ValidationError("bbox must have 4 entries");
                    std::copy(bbox.begin(), bbox.end(), b.coords.begin());
                    ctx.boxes.push_back(std::move(b));
                }
            }
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        validate_context(ctx);
        fn(ctx);
    });
}

} // namespace forge
