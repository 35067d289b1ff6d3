#include "imagetalk/metrics.hpp"

#include "imagetalk/store.hpp"
#include "imagetalk/text.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

namespace imagetalk {

// ---------------------------------------------------------------- keystrokes

std::size_t count_story_keystrokes(std::string_view story) {
    const auto cps = text::decode_utf8(story);
    std::size_t n = 0;
    for (std::size_t i = 0; i < cps.size(); ++i) {
        const char32_t cp = cps[i];
        if (text::is_punctuation(cp)) continue;
        if (cp == U'\r' && i + 1 < cps.size() && cps[i + 1] == U'\n') continue;  // CRLF is one newline
        ++n;
    }
    return n;
}

std::size_t count_keyword_keystrokes(const KeywordList& keywords) {
    std::size_t n = 0;
    for (const auto& k : keywords) n += text::code_point_count(k) + 1;
    return n;
}

double keystroke_savings(std::string_view story_text, const KeywordList& keywords) {
    const auto n_story = count_story_keystrokes(story_text);
    if (n_story == 0) throw Error(ErrorCode::undefined_metric, "keystroke savings undefined for an empty story");
    const auto n_keyword = count_keyword_keystrokes(keywords);
    return (static_cast<double>(n_story) - static_cast<double>(n_keyword)) / static_cast<double>(n_story) * 100.0;
}

double keyword_ratio(const KeywordList& keywords, std::string_view reference_story) {
    const auto n_ref = count_story_keystrokes(reference_story);
    if (n_ref == 0) throw Error(ErrorCode::undefined_metric, "keyword ratio undefined for an empty reference story",
                                "reference_story");
    return static_cast<double>(count_keyword_keystrokes(keywords)) / static_cast<double>(n_ref) * 100.0;
}

// ---------------------------------------------------------------- embeddings

const std::vector<double>* EmbeddingTable::lookup(std::string_view token) const {
    auto it = entries.find(text::to_lower(token));
    return it == entries.end() ? nullptr : &it->second;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        const std::size_t b = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (i > b) out.push_back(line.substr(b, i - b));
    }
    return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size();
}

} // namespace

EmbeddingTable parse_embeddings(std::string_view contents, std::string_view source_name) {
    const std::string src(source_name);
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < contents.size()) {
        auto nl = contents.find('\n', pos);
        if (nl == std::string_view::npos) nl = contents.size();
        auto line = contents.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        pos = nl + 1;
    }
    while (!lines.empty() && text::trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty()) throw Error(ErrorCode::schema, src + ": empty embedding file");

    const auto header = split_fields(lines[0]);
    std::size_t vocab = 0;
    std::size_t dim = 0;
    if (header.size() != 2 || !parse_number(header[0], vocab) || !parse_number(header[1], dim) || dim == 0)
        throw Error(ErrorCode::schema, src + ": header must be '<vocab_size> <dimension>'");
    if (lines.size() - 1 != vocab)
        throw Error(ErrorCode::schema, src + ": header declares " + std::to_string(vocab) + " entries, body has " +
                                           std::to_string(lines.size() - 1));

    EmbeddingTable table;
    table.dimension = dim;
    table.entries.reserve(vocab);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto fields = split_fields(lines[i]);
        const std::string where = src + ":" + std::to_string(i + 1);
        if (fields.size() != dim + 1)
            throw Error(ErrorCode::schema, where + ": expected a token and " + std::to_string(dim) + " components");
        std::vector<double> vec(dim);
        for (std::size_t k = 0; k < dim; ++k) {
            if (!parse_number(fields[k + 1], vec[k]) || !std::isfinite(vec[k]))
                throw Error(ErrorCode::schema, where + ": non-numeric component '" + std::string(fields[k + 1]) + "'");
        }
        std::string token(fields[0]);
        auto [it, inserted] = table.entries.try_emplace(token, vec);
        if (!inserted) {
            it->second = std::move(vec);
            table.warnings.push_back(where + ": duplicate token '" + token + "', last definition wins");
        }
    }
    return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
    return parse_embeddings(read_file(path), path.string());
}

DocVector doc_vector(std::string_view text_in, const EmbeddingTable& table) {
    DocVector d;
    d.values.assign(table.dimension, 0.0);
    for (const auto& tok : text::tokenize(text_in)) {
        const auto* v = table.lookup(tok);
        if (!v) {
            ++d.out_of_vocabulary;
            continue;
        }
        ++d.in_vocabulary;
        for (std::size_t k = 0; k < table.dimension; ++k) d.values[k] += (*v)[k];
    }
    if (d.in_vocabulary == 0) throw Error(ErrorCode::no_vector, "no in-vocabulary tokens in text");
    for (auto& x : d.values) x /= static_cast<double>(d.in_vocabulary);
    return d;
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw Error(ErrorCode::invalid_argument, "vector dimensions differ");
    const double dot = std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
    const double na = std::sqrt(std::inner_product(a.begin(), a.end(), a.begin(), 0.0));
    const double nb = std::sqrt(std::inner_product(b.begin(), b.end(), b.begin(), 0.0));
    if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::undefined_metric, "cosine undefined for a zero vector");
    return std::clamp(dot / (na * nb), -1.0, 1.0);
}

double semantic_similarity(std::string_view a, std::string_view b, const EmbeddingTable& table) {
    return cosine_similarity(doc_vector(a, table).values, doc_vector(b, table).values);
}

// ---------------------------------------------------------------- reports

SummaryStats summarize(std::vector<double> v) {
    SummaryStats s;
    s.count = v.size();
    if (v.empty()) return s;
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    if (v.size() > 1) {
        double ss = 0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.standard_deviation = std::sqrt(ss / (n - 1.0));
    }
    auto quantile = [&](double p) {
        const double h = p * (n - 1.0);
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const auto hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
    };
    s.min = v.front();
    s.q1 = quantile(0.25);
    s.median = quantile(0.5);
    s.q3 = quantile(0.75);
    s.max = v.back();
    return s;
}

std::map<StoryMode, ModeAggregate> aggregate_rows(const std::vector<ItemMetrics>& rows) {
    std::map<StoryMode, std::vector<const ItemMetrics*>> by_mode;
    for (const auto& r : rows) by_mode[r.mode].push_back(&r);
    std::map<StoryMode, ModeAggregate> out;
    for (const auto& [mode, items] : by_mode) {
        std::vector<double> ks, sim, ratio;
        for (const auto* r : items) {
            ks.push_back(r->keystroke_savings);
            sim.push_back(r->semantic_similarity);
            ratio.push_back(r->keyword_ratio);
        }
        out[mode] = {summarize(std::move(ks)), summarize(std::move(sim)), summarize(std::move(ratio))};
    }
    return out;
}

MetricsReport benchmark_report(const std::vector<Session>& dataset, const EmbeddingTable& table,
                               std::vector<StoryMode> modes) {
    if (dataset.empty()) throw Error(ErrorCode::precondition, "benchmark dataset is empty", "dataset");
    if (modes.empty()) {
        std::set<StoryMode> seen;
        for (const auto& s : dataset)
            for (const auto& st : s.stories) seen.insert(st.mode);
        modes.assign(seen.begin(), seen.end());
    }
    if (modes.empty()) throw Error(ErrorCode::precondition, "no generated stories in the dataset", "stories");

    MetricsReport report;
    for (const auto& s : dataset) {
        if (!s.reference_story || text::trim(*s.reference_story).empty())
            throw Error(ErrorCode::precondition, "session " + s.id + " has no reference story", "reference_story");
        const double ratio = keyword_ratio(s.keywords, *s.reference_story);
        for (StoryMode mode : modes) {
            const StoryVersion* story = latest_story(s, mode);
            if (!story)
                throw Error(ErrorCode::precondition,
                            "session " + s.id + " has no story for mode " + std::string(to_string(mode)), "mode");
            ItemMetrics row;
            row.session_id = s.id;
            row.mode = mode;
            row.version = story->version;
            row.keystroke_savings = keystroke_savings(story->text, s.keywords);
            row.keyword_ratio = ratio;
            try {
                const auto a = doc_vector(story->text, table);
                const auto b = doc_vector(*s.reference_story, table);
                row.semantic_similarity = cosine_similarity(a.values, b.values);
                row.oov_tokens = a.out_of_vocabulary + b.out_of_vocabulary;
            } catch (const Error& e) {
                throw Error(e.code(), "session " + s.id + ", mode " + std::string(to_string(mode)) + ": " + e.what(),
                            e.field());
            }
            report.per_item.push_back(std::move(row));
        }
    }
    report.aggregate = aggregate_rows(report.per_item);
    for (const auto& [mode, agg] : report.aggregate)
        if (agg.keystroke_savings.count == 1)
            report.warnings.push_back("mode " + std::string(to_string(mode)) +
                                      " has a single sample; standard deviation reported as 0");
    return report;
}

namespace {

json stats_json(const SummaryStats& s) {
    return json{{"count", s.count},   {"mean", s.mean}, {"standard_deviation", s.standard_deviation},
                {"min", s.min},       {"q1", s.q1},     {"median", s.median},
                {"q3", s.q3},         {"max", s.max}};
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

} // namespace

json report_to_json(const MetricsReport& report) {
    json rows = json::array();
    for (const auto& r : report.per_item) {
        rows.push_back(json{{"session_id", r.session_id},
                            {"mode", to_string(r.mode)},
                            {"version", r.version},
                            {"keystroke_savings", r.keystroke_savings},
                            {"semantic_similarity", r.semantic_similarity},
                            {"keyword_ratio", r.keyword_ratio},
                            {"oov_tokens", r.oov_tokens}});
    }
    json agg = json::object();
    for (const auto& [mode, a] : report.aggregate) {
        agg[std::string(to_string(mode))] = json{{"keystroke_savings", stats_json(a.keystroke_savings)},
                                                 {"semantic_similarity", stats_json(a.semantic_similarity)},
                                                 {"keyword_ratio", stats_json(a.keyword_ratio)}};
    }
    return json{{"per_item", rows}, {"aggregate", agg}, {"warnings", report.warnings}};
}

std::string report_to_csv(const MetricsReport& report) {
    std::ostringstream out;
    out << "session_id,mode,version,keystroke_savings,semantic_similarity,keyword_ratio,oov_tokens\n";
    for (const auto& r : report.per_item) {
        out << r.session_id << ',' << to_string(r.mode) << ',' << r.version << ',' << fixed(r.keystroke_savings, 6)
            << ',' << fixed(r.semantic_similarity, 6) << ',' << fixed(r.keyword_ratio, 6) << ',' << r.oov_tokens
            << '\n';
    }
    return out.str();
}

std::string report_summary_table(const MetricsReport& report) {
    std::ostringstream out;
    auto row = [&](const std::string& label, const SummaryStats& s, double scale) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%-44s %8s%% %8s%%\n", label.c_str(), fixed(s.mean * scale, 1).c_str(),
                      fixed(s.standard_deviation * scale, 1).c_str());
        out << buf;
    };
    char head[160];
    std::snprintf(head, sizeof head, "%-44s %9s %9s\n", "", "Mean", "SD");
    out << head;
    for (const auto& [mode, a] : report.aggregate)
        row("Keystroke savings for " + std::string(to_string(mode)), a.keystroke_savings, 1.0);
    for (const auto& [mode, a] : report.aggregate)
        row("Semantic similarity for " + std::string(to_string(mode)), a.semantic_similarity, 100.0);
    if (!report.aggregate.empty()) row("Keywords/Reference story", report.aggregate.begin()->second.keyword_ratio, 1.0);
    return out.str();
}

} // namespace imagetalk
