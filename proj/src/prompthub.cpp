#include "imagetalk/prompthub.hpp"

#include "imagetalk/digest.hpp"
#include "imagetalk/store.hpp"
#include "imagetalk/text.hpp"

#include <cmath>
#include <cstdio>
#include <set>

namespace imagetalk {

namespace {

const std::set<std::string, std::less<>>& known_blocks() {
    static const std::set<std::string, std::less<>> names = [] {
        std::set<std::string, std::less<>> s{"template_version", "system_directive", "context_header",
                                             "keyword_header", "style_header"};
        for (auto id : {StyleId::plain, StyleId::colloquial, StyleId::vivid, StyleId::formal, StyleId::custom})
            s.insert("style." + std::string(to_string(id)));
        for (auto l : {AcceptanceLevel::authentic, AcceptanceLevel::augmented, AcceptanceLevel::articulated,
                       AcceptanceLevel::creative})
            s.insert("acceptance." + std::string(to_string(l)));
        return s;
    }();
    return names;
}

// Single left-to-right pass; substituted values are not rescanned.
std::string substitute(std::string_view tmpl, const std::map<std::string, std::string, std::less<>>& values) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            const auto close = tmpl.find('}', i + 1);
            if (close != std::string_view::npos) {
                auto it = values.find(tmpl.substr(i + 1, close - i - 1));
                if (it != values.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(tmpl[i++]);
    }
    return out;
}

std::string join(const std::vector<std::string>& items, std::string_view sep, std::string_view prefix = {}) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += prefix;
        out += items[i];
    }
    return out;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

std::string_view to_string(PromptMode m) { return m == PromptMode::kts ? "kts" : "imagetalk"; }

void GenerationParams::validate() const {
    if (!(temperature >= 0.0) || !std::isfinite(temperature))
        throw Error(ErrorCode::invalid_argument, "temperature must be a finite number >= 0", "temperature");
    if (max_length <= 0) throw Error(ErrorCode::invalid_argument, "max_length must be positive", "max_length");
}

void to_json(json& j, const GenerationParams& v) {
    j = json{{"temperature", v.temperature}, {"max_length", v.max_length}};
    j["seed"] = v.seed ? json(*v.seed) : json(nullptr);
}

void from_json(const json& j, GenerationParams& v) {
    if (!j.is_object()) throw Error(ErrorCode::schema, "params must be an object", "params");
    if (auto it = j.find("temperature"); it != j.end()) {
        if (!it->is_number()) throw Error(ErrorCode::schema, "temperature must be a number", "temperature");
        v.temperature = it->get<double>();
    }
    if (auto it = j.find("max_length"); it != j.end()) {
        if (!it->is_number_integer()) throw Error(ErrorCode::schema, "max_length must be an integer", "max_length");
        v.max_length = it->get<int>();
    }
    if (auto it = j.find("seed"); it != j.end()) {
        if (it->is_null()) v.seed.reset();
        else if (it->is_number_integer()) v.seed = it->get<std::int64_t>();
        else throw Error(ErrorCode::schema, "seed must be an integer or null", "seed");
    }
}

void to_json(json& j, const PromptBundle& v) {
    j = json{{"mode", to_string(v.mode)},
             {"system_directive", v.system_directive},
             {"context_block", v.context_block},
             {"keyword_block", v.keyword_block},
             {"style_block", v.style_block},
             {"params", v.params},
             {"assembled_text", v.assembled_text},
             {"hash", v.hash}};
}

// ---------------------------------------------------------------- templates

namespace {

using BlockMap = std::map<std::string, std::string, std::less<>>;

BlockMap parse_blocks(std::string_view src) {
    BlockMap blocks;
    std::string current;
    std::string body;
    bool in_block = false;
    auto flush = [&] {
        if (!in_block) return;
        while (!body.empty() && body.back() == '\n') body.pop_back();
        blocks[current] = body;
        body.clear();
    };

    std::size_t pos = 0;
    int line_no = 0;
    while (pos < src.size()) {
        auto nl = src.find('\n', pos);
        if (nl == std::string_view::npos) nl = src.size();
        std::string_view line = src.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

        if (line.size() >= 3 && line.front() == '[' && line.back() == ']') {
            std::string name(line.substr(1, line.size() - 2));
            if (!known_blocks().count(name))
                throw Error(ErrorCode::schema,
                            "unknown template block [" + name + "] on line " + std::to_string(line_no), name);
            flush();
            current = std::move(name);
            in_block = true;
            continue;
        }
        if (!in_block) {
            if (text::trim(line).empty() || line.front() == '#') continue;
            throw Error(ErrorCode::schema, "text outside a template block on line " + std::to_string(line_no));
        }
        body.append(line);
        body.push_back('\n');
    }
    flush();
    return blocks;
}

} // namespace

PromptTemplates PromptTemplates::parse(std::string_view text) {
    PromptTemplates t;
    t.blocks_ = parse_blocks(text);
    for (const auto& [k, v] : defaults().blocks_) t.blocks_.try_emplace(k, v);
    return t;
}

const PromptTemplates& PromptTemplates::defaults() {
    static const PromptTemplates d = [] {
        PromptTemplates t;
        t.blocks_ = parse_blocks(kDefaultTemplateText);
        for (const auto& name : known_blocks())
            if (!t.blocks_.count(name)) throw Error(ErrorCode::schema, "shipped templates lack block " + name);
        return t;
    }();
    return d;
}

PromptTemplates PromptTemplates::from_file(const std::filesystem::path& path) {
    return parse(read_file(path));
}

const std::string& PromptTemplates::block(std::string_view name) const {
    auto it = blocks_.find(name);
    if (it == blocks_.end()) throw Error(ErrorCode::not_found, "template block " + std::string(name) + " missing");
    return it->second;
}

// ---------------------------------------------------------------- assembly

std::string render_acceptance_directive(AcceptanceLevel level, const PromptTemplates& templates) {
    return templates.block("acceptance." + std::string(to_string(level)));
}

std::string prompt_hash(std::string_view assembled_text, const GenerationParams& params) {
    std::string material(assembled_text);
    material += "\n\x1f";
    material += "temperature=" + format_double(params.temperature);
    material += ";max_length=" + std::to_string(params.max_length);
    material += ";seed=" + (params.seed ? std::to_string(*params.seed) : std::string("none"));
    return sha256_hex(material);
}

PromptBundle assemble_prompt(const ContextCorpus* corpus, const KeywordList& keywords, const LanguageStyle& style,
                             PromptMode mode, const GenerationParams& params, const PromptTemplates& templates) {
    if (keywords.empty()) throw Error(ErrorCode::precondition, "at least one keyword is required", "keywords");
    for (const auto& k : keywords) validate_keyword(k);
    validate(style);
    params.validate();
    if (mode == PromptMode::imagetalk && corpus == nullptr)
        throw Error(ErrorCode::precondition, "imagetalk mode requires a context corpus", "corpus");

    PromptBundle b;
    b.mode = mode;
    b.params = params;
    b.keywords = keywords;
    b.style = style;
    b.system_directive = templates.block("system_directive");

    if (mode == PromptMode::imagetalk) {
        for (const auto& c : corpus->captions)
            if (!c.deleted) b.context_captions.push_back(c.text);
        for (const auto& o : corpus->objects)
            if (!o.deleted) b.context_objects.push_back(o.label);
        b.context_block = substitute(
            templates.block("context_header"),
            {{"captions", b.context_captions.empty() ? std::string("- none") : join(b.context_captions, "\n", "- ")},
             {"objects", b.context_objects.empty() ? std::string("none") : join(b.context_objects, ", ")}});
    }

    b.keyword_block = substitute(templates.block("keyword_header"), {{"keywords", join(keywords, "; ")}});

    const std::string style_text = substitute(templates.block("style." + std::string(to_string(style.style_id))),
                                              {{"custom_directive", style.custom_directive.value_or("")}});
    b.style_block = substitute(templates.block("style_header"),
                               {{"style", style_text},
                                {"acceptance", render_acceptance_directive(style.acceptance_level, templates)}});

    b.assembled_text = b.system_directive + "\n\n";
    if (!b.context_block.empty()) b.assembled_text += b.context_block + "\n\n";
    b.assembled_text += b.keyword_block + "\n\n" + b.style_block + "\n";
    b.hash = prompt_hash(b.assembled_text, b.params);
    return b;
}

} // namespace imagetalk
