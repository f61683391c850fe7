#include "forge/filter.hpp"

#include <algorithm>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "forge/errors.hpp"
#include "forge/jsonl.hpp"
#include "forge/rng.hpp"

namespace forge {

FrequencyTable build_frequency_table(const std::vector<PhraseRecord>& corpus) {
    FrequencyTable freq;
    for (const auto& rec : corpus) {
        std::unordered_set<std::string_view> seen;
        for (const auto& p : rec.phrases)
            if (seen.insert(p).second) ++freq[p];
    }
    return freq;
}

namespace {

// k distinct indices from [0, n), uniform, by partial Fisher-Yates.
std::vector<size_t> sample_indices(size_t n, size_t k, KeyedRng& rng) {
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    for (size_t i = 0; i < k; ++i)
        std::swap(idx[i], idx[i + rng.next_index(n - i)]);
    idx.resize(k);
    std::sort(idx.begin(), idx.end()); // keep corpus order within the sample
    return idx;
}

} // namespace

std::vector<std::string> filter_corpus(const std::vector<PhraseRecord>& corpus,
                                       const FrequencyTable& freq, const FilterOptions& opts) {
    if (opts.cap < 1 || opts.min_freq < 1)
        throw ConfigError("filter: cap and min_freq must be >= 1");

    // phrase -> record indices, in corpus order, de-duplicated per record
    std::unordered_map<std::string, std::vector<size_t>> members;
    for (size_t i = 0; i < corpus.size(); ++i) {
        std::unordered_set<std::string_view> seen;
        for (const auto& p : corpus[i].phrases)
            if (seen.insert(p).second) members[p].push_back(i);
    }

    std::vector<std::pair<size_t, std::string>> order; // (freq, phrase) ascending
    order.reserve(freq.size());
    for (const auto& [phrase, count] : freq) order.emplace_back(count, phrase);
    std::sort(order.begin(), order.end());

    std::vector<bool> selected(corpus.size(), false);
    std::vector<std::string> out;

    auto select_for_phrase = [&](const std::string& phrase, size_t remaining_freq) {
        const auto& all = members.at(phrase);
        std::vector<size_t> candidates;
        if (opts.dynamic_recount) {
            for (size_t i : all)
                if (!selected[i]) candidates.push_back(i);
        } else {
            candidates = all;
        }
        if (remaining_freq > opts.cap) {
            KeyedRng rng(opts.seed, phrase);
            auto chosen = sample_indices(candidates.size(), opts.cap, rng);
            for (size_t c : chosen) {
                size_t i = candidates[c];
                if (!selected[i]) {
                    selected[i] = true;
                    out.push_back(corpus[i].record_id);
                }
            }
        } else {
            for (size_t i : candidates) {
                if (!selected[i]) {
                    selected[i] = true;
                    out.push_back(corpus[i].record_id);
                }
            }
        }
    };

    if (!opts.dynamic_recount) {
        for (const auto& [count, phrase] : order) {
            if (count < opts.min_freq) continue;
            select_for_phrase(phrase, count);
        }
    } else {
        // Recount over unselected records each round; process the current
        // minimum-frequency phrase (ties lexicographic) until none qualify.
        std::map<std::string, size_t> remaining;
        for (const auto& [phrase, count] : freq) remaining[phrase] = count;
        std::unordered_set<std::string> done;
        for (;;) {
            std::string best;
            size_t best_count = 0;
            for (const auto& [phrase, count] : remaining) {
                if (done.count(phrase) || count < opts.min_freq) continue;
                if (best.empty() || count < best_count) {
                    best = phrase;
                    best_count = count;
                }
            }
            if (best.empty()) break;
            select_for_phrase(best, best_count);
            done.insert(best);
            // recount all phrases over unselected records
            for (auto& [phrase, count] : remaining) {
                if (done.count(phrase)) continue;
                size_t n = 0;
                for (size_t i : members.at(phrase))
                    if (!selected[i]) ++n;
                count = n;
            }
        }
    }
    return out;
}

nlohmann::json CoverageReport::to_json() const {
    return {{"bucket_bounds", bucket_bounds},
            {"phrases_per_bucket_before", before},
            {"phrases_per_bucket_after", after},
            {"records_before", records_before},
            {"records_after", records_after},
            {"unique_phrases_before", phrases_before},
            {"unique_phrases_after", phrases_after}};
}

CoverageReport coverage_report(const std::vector<std::string>& selection,
                               const std::vector<PhraseRecord>& corpus,
                               const FrequencyTable& freq) {
    std::unordered_set<std::string_view> keep(selection.begin(), selection.end());
    std::vector<PhraseRecord> subset;
    for (const auto& rec : corpus)
        if (keep.count(rec.record_id)) subset.push_back(rec);
    FrequencyTable after_freq = build_frequency_table(subset);

    CoverageReport rep;
    rep.bucket_bounds = {1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024,
                         std::numeric_limits<size_t>::max()};
    rep.before.assign(rep.bucket_bounds.size(), 0);
    rep.after.assign(rep.bucket_bounds.size(), 0);
    auto bucket_of = [&](size_t f) {
        size_t b = 0;
        while (f > rep.bucket_bounds[b]) ++b;
        return b;
    };
    for (const auto& [phrase, count] : freq) {
        ++rep.before[bucket_of(count)];
        auto it = after_freq.find(phrase);
        if (it != after_freq.end()) ++rep.after[bucket_of(it->second)];
    }
    rep.records_before = corpus.size();
    rep.records_after = subset.size();
    rep.phrases_before = freq.size();
    rep.phrases_after = after_freq.size();
    return rep;
}

std::vector<PhraseRecord> load_phrase_corpus(const std::filesystem::path& path) {
    std::vector<PhraseRecord> corpus;
    std::unordered_set<std::string> ids;
    for_each_jsonl(path, [&](const nlohmann::json& j, size_t lineno) {
        PhraseRecord rec;
        rec.record_id = j.at("id").get<std::string>();
        rec.caption = j.value("caption", "");
        rec.phrases = j.at("phrases").get<std::vector<std::string>>();
        if (!ids.insert(rec.record_id).second)
            throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                                  ": duplicate record id " + rec.record_id);
        corpus.push_back(std::move(rec));
    });
    return corpus;
}

} // namespace forge
