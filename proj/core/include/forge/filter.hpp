#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace forge {

struct PhraseRecord {
    std::string record_id;
    std::string caption;
    std::vector<std::string> phrases; // precomputed noun-phrases
};

// phrase -> number of records containing it (duplicates within one record
// count once).
using FrequencyTable = std::map<std::string, size_t>;

FrequencyTable build_frequency_table(const std::vector<PhraseRecord>& corpus);

struct FilterOptions {
    size_t cap = 100;      // max records kept per over-frequent phrase
    size_t min_freq = 3;   // phrases rarer than this never drive selection
    uint64_t seed = 0;
    // When true, phrase frequencies are recounted over not-yet-selected
    // records as selection proceeds ("remaining frequency" read literally).
    // Default is the static interpretation.
    bool dynamic_recount = false;
};

// Frequency-ordered concept-balanced selection: phrases ascending by
// frequency (ties lexicographic); each qualifying phrase pulls in its
// records, capped by a seeded uniform subset when over-frequent. Returns
// record ids in first-selection order.
std::vector<std::string> filter_corpus(const std::vector<PhraseRecord>& corpus,
                                       const FrequencyTable& freq, const FilterOptions& opts);

struct CoverageReport {
    // bucket upper bounds -> count of unique phrases whose frequency falls
    // in the bucket, before and after filtering
    std::vector<size_t> bucket_bounds;
    std::vector<size_t> before;
    std::vector<size_t> after;
    size_t records_before = 0;
    size_t records_after = 0;
    size_t phrases_before = 0;
    size_t phrases_after = 0;

    nlohmann::json to_json() const;
};

CoverageReport coverage_report(const std::vector<std::string>& selection,
                               const std::vector<PhraseRecord>& corpus,
                               const FrequencyTable& freq);

// JSONL {"id","caption","phrases":[...]}
std::vector<PhraseRecord> load_phrase_corpus(const std::filesystem::path& path);

} // namespace forge
