#pragma once

#include "imagetalk/domain.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace imagetalk {

// ---------------------------------------------------------------- keystrokes

// Characters of the story with Unicode punctuation (P*) removed. Spaces count
// one each; a newline (LF, CR or CRLF) counts as one keystroke.
std::size_t count_story_keystrokes(std::string_view text);

// Sum over keywords of (code points + 1): a space is typed after every
// keyword, the last one included.
std::size_t count_keyword_keystrokes(const KeywordList& keywords);

// (N_story - N_keyword) / N_story * 100. Throws undefined_metric when the
// story has no countable characters. Can be negative.
double keystroke_savings(std::string_view story_text, const KeywordList& keywords);

// N_keyword / N_story(reference) * 100; can exceed 100.
double keyword_ratio(const KeywordList& keywords, std::string_view reference_story);

// ---------------------------------------------------------------- embeddings

enum class CasePolicy { lowercase_lookup };

// Word vectors in word2vec text format. Tokens are stored as written; lookups
// lowercase the query first.
struct EmbeddingTable {
    std::size_t dimension = 0;
    std::unordered_map<std::string, std::vector<double>> entries;
    CasePolicy case_policy = CasePolicy::lowercase_lookup;
    std::vector<std::string> warnings;  // e.g. duplicate tokens

    const std::vector<double>* lookup(std::string_view token) const;
};

// Header "<vocab_size> <dimension>", then one token per line followed by
// `dimension` numbers. Throws schema on header/body mismatch, short rows or
// non-numeric components; io when unreadable. Duplicate tokens: last wins,
// with a warning.
EmbeddingTable load_embeddings(const std::filesystem::path& path);
EmbeddingTable parse_embeddings(std::string_view contents, std::string_view source_name = "<memory>");

struct DocVector {
    std::vector<double> values;
    std::size_t in_vocabulary = 0;
    std::size_t out_of_vocabulary = 0;
};

// Mean of the in-vocabulary word vectors of the tokenized text (lowercase,
// punctuation stripped, whitespace split). Throws no_vector when no token is
// in the table.
DocVector doc_vector(std::string_view text, const EmbeddingTable& table);

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

// Cosine of the two document vectors, in [-1, 1]. Throws no_vector, or
// undefined_metric for a zero-norm document vector.
double semantic_similarity(std::string_view a, std::string_view b, const EmbeddingTable& table);

// ---------------------------------------------------------------- reports

struct ItemMetrics {
    std::string session_id;
    StoryMode mode = StoryMode::kts;
    int version = 0;
    double keystroke_savings = 0;
    double semantic_similarity = 0;
    double keyword_ratio = 0;
    std::size_t oov_tokens = 0;  // story + reference tokens missing from the table
};

struct SummaryStats {
    std::size_t count = 0;
    double mean = 0;
    double standard_deviation = 0;  // sample (n - 1); 0 for a single sample
    double min = 0;
    double q1 = 0;
    double median = 0;
    double q3 = 0;
    double max = 0;
};

// Linear-interpolation quantiles (position p * (n - 1)).
SummaryStats summarize(std::vector<double> values);

struct ModeAggregate {
    SummaryStats keystroke_savings;
    SummaryStats semantic_similarity;
    SummaryStats keyword_ratio;
};

struct MetricsReport {
    std::vector<ItemMetrics> per_item;
    std::map<StoryMode, ModeAggregate> aggregate;
    std::vector<std::string> warnings;
};

// Rebuilds the aggregate block from per_item rows.
std::map<StoryMode, ModeAggregate> aggregate_rows(const std::vector<ItemMetrics>& rows);

// For every session and every required mode, evaluates the latest story of
// that mode against the session's keywords and reference story. When
// `modes` is empty the required set is every mode that occurs anywhere in
// the dataset. Throws precondition for an empty dataset, a missing reference
// story or a missing mode (naming session and mode).
MetricsReport benchmark_report(const std::vector<Session>& dataset, const EmbeddingTable& table,
                               std::vector<StoryMode> modes = {});

json report_to_json(const MetricsReport& report);
std::string report_to_csv(const MetricsReport& report);
// Plain-text summary: keystroke savings and similarity per mode, then the
// keyword/reference ratio.
std::string report_summary_table(const MetricsReport& report);

} // namespace imagetalk
