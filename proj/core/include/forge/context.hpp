#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace forge {

// Axis-aligned box in normalized image fractions, corner format
// (x_min, y_min, x_max, y_max). The corner interpretation matches the
// printed examples this codec round-trips against; see README.
struct BoundingBox {
    std::string label;
    std::array<double, 4> coords{}; // x_min, y_min, x_max, y_max

    bool operator==(const BoundingBox&) const = default;
};

// Text-only stand-in for one image: captions plus object boxes.
// This is what a text-only teacher LLM sees instead of pixels.
struct SymbolicContext {
    std::string image_id;
    std::vector<std::string> captions;
    std::vector<BoundingBox> boxes;

    bool operator==(const SymbolicContext&) const = default;
};

// Throws ValidationError naming the offending box index / field.
void validate_context(const SymbolicContext& ctx);

// Coordinate rendering: up to 3 decimal places, trailing zeros trimmed
// ("0.630" -> "0.63", "1.000" -> "1").
std::string format_coord(double v);

// One box as `label: [a, b, c, d]`.
std::string format_box(const BoundingBox& box);

// Full round-trippable form:
//   image: <id>
//   Captions:
//   <one caption per line>
//   Boxes:
//   <boxes joined by ", ", single line>
// The Boxes section is absent when the box list is empty.
// Deterministic: identical input yields identical bytes.
std::string serialize_context(const SymbolicContext& ctx);

// Inverse of serialize_context. Malformed input raises ParseError with a
// line number.
SymbolicContext parse_context(const std::string& text);

// Prompt-facing rendering: captions one per line, then (optionally) a
// blank line and the box line. No image id; this is the text that goes
// into teacher queries.
std::string prompt_text(const SymbolicContext& ctx, bool include_boxes);

// Reads annotation JSONL: {"id", "captions": [...], "boxes": [{"label", "bbox": [4]}]}.
void for_each_context(const std::filesystem::path& path,
                      const std::function<void(const SymbolicContext&)>& fn);

} // namespace forge
