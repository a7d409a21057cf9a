#include "dpr/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "dpr/random.hpp"

namespace dpr {

namespace {

using json = nlohmann::ordered_json;

constexpr std::array<PronounLabel, kPronounCount> kPronouns{{
    {PronounTag::wo, "wo", "我", false},
    {PronounTag::women, "women", "我们", false},
    {PronounTag::ni, "ni", "你", false},
    {PronounTag::nimen, "nimen", "你们", false},
    {PronounTag::ta_m, "ta_m", "他", false},
    {PronounTag::tamen_m, "tamen_m", "他们", false},
    {PronounTag::ta_f, "ta_f", "她", false},
    {PronounTag::tamen_f, "tamen_f", "她们", false},
    {PronounTag::ta_n, "ta_n", "它", false},
    {PronounTag::tamen_n, "tamen_n", "它们", false},
    {PronounTag::existential, "existential", "existential", true},
    {PronounTag::unspecified, "unspecified", "unspecified", true},
    {PronounTag::event, "event", "event", true},
    {PronounTag::pleonastic, "pleonastic", "pleonastic", true},
}};

std::string where(std::size_t line) {
    return line == 0 ? std::string{} : "line " + std::to_string(line) + ": ";
}

} // namespace

const std::array<PronounLabel, kPronounCount>& all_pronouns() { return kPronouns; }

const PronounLabel& pronoun(PronounTag tag) { return kPronouns[static_cast<std::size_t>(tag)]; }

std::string_view tag_name(PronounTag tag) { return pronoun(tag).name; }

std::optional<PronounTag> parse_tag(std::string_view name) {
    for (const auto& p : kPronouns)
        if (p.name == name) return p.tag;
    return std::nullopt;
}

LabelSet::LabelSet(std::string name, std::vector<PronounTag> labels)
    : name_(std::move(name)), labels_(std::move(labels)) {
    auto sorted = labels_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw UsageError("label set '" + name_ + "' has duplicate tags");
    if (labels_.empty()) throw UsageError("label set '" + name_ + "' is empty");
}

const LabelSet& LabelSet::full14() {
    static const LabelSet set = [] {
        std::vector<PronounTag> tags;
        for (const auto& p : kPronouns) tags.push_back(p.tag);
        return LabelSet("full14", std::move(tags));
    }();
    return set;
}

const LabelSet& LabelSet::actual10() {
    static const LabelSet set = [] {
        std::vector<PronounTag> tags;
        for (const auto& p : kPronouns)
            if (!p.is_abstract) tags.push_back(p.tag);
        return LabelSet("actual10", std::move(tags));
    }();
    return set;
}

LabelSet LabelSet::by_name(std::string_view name) {
    if (name == "full14") return full14();
    if (name == "actual10") return actual10();
    throw DataError("unknown label set '" + std::string(name) + "'");
}

std::optional<std::size_t> LabelSet::index_of(PronounTag tag) const noexcept {
    auto it = std::find(labels_.begin(), labels_.end(), tag);
    if (it == labels_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - labels_.begin());
}

std::optional<PronounTag> AnnotatedSentence::label_at(std::size_t gap) const noexcept {
    for (const auto& a : annotations)
        if (a.gap == gap) return a.tag;
    return std::nullopt;
}

std::size_t Corpus::annotation_count() const noexcept {
    std::size_t n = 0;
    for (const auto& s : sentences) n += s.annotations.size();
    return n;
}

CorpusError::CorpusError(CorpusErrorKind kind, std::size_t line, const std::string& what)
    : DataError(where(line) + what), kind_(kind), line_(line) {}

void validate_sentence(const AnnotatedSentence& sentence, const LabelSet& labels,
                       std::size_t line) {
    if (sentence.tokens.empty())
        throw CorpusError(CorpusErrorKind::empty_tokens, line, "sentence has no tokens");
    for (const auto& t : sentence.tokens)
        if (t.empty()) throw CorpusError(CorpusErrorKind::empty_tokens, line, "empty token");

    std::vector<bool> seen(sentence.gap_count(), false);
    for (const auto& a : sentence.annotations) {
        if (a.gap > sentence.tokens.size())
            throw CorpusError(CorpusErrorKind::gap_out_of_range, line,
                              "gap " + std::to_string(a.gap) + " outside [0, " +
                                  std::to_string(sentence.tokens.size()) + "]");
        if (!labels.contains(a.tag))
            throw CorpusError(CorpusErrorKind::label_not_in_set, line,
                              "label '" + std::string(tag_name(a.tag)) + "' not in label set '" +
                                  labels.name() + "'");
        if (seen[a.gap])
            throw CorpusError(CorpusErrorKind::duplicate_gap, line,
                              "gap " + std::to_string(a.gap) + " annotated twice");
        seen[a.gap] = true;
    }
}

void validate_corpus(const Corpus& corpus) {
    for (std::size_t i = 0; i < corpus.sentences.size(); ++i)
        validate_sentence(corpus.sentences[i], corpus.label_set);
}

namespace {

AnnotatedSentence parse_sentence(const json& obj, const LabelSet& labels, std::size_t line) {
    auto malformed = [line](const std::string& what) {
        return CorpusError(CorpusErrorKind::malformed, line, what);
    };
    if (!obj.is_object()) throw malformed("expected a JSON object");
    if (!obj.contains("tokens") || !obj["tokens"].is_array())
        throw malformed("missing \"tokens\" array");
    if (!obj.contains("annotations") || !obj["annotations"].is_array())
        throw malformed("missing \"annotations\" array");

    AnnotatedSentence s;
    for (const auto& t : obj["tokens"]) {
        if (!t.is_string()) throw malformed("token is not a string");
        s.tokens.push_back(t.get<std::string>());
    }
    for (const auto& a : obj["annotations"]) {
        if (!a.is_array() || a.size() != 2 || !a[0].is_number_integer() || !a[1].is_string())
            throw malformed("annotation must be [int, string]");
        const auto gap = a[0].get<std::int64_t>();
        if (gap < 0)
            throw CorpusError(CorpusErrorKind::gap_out_of_range, line,
                              "gap " + std::to_string(gap) + " is negative");
        const auto name = a[1].get<std::string>();
        const auto tag = parse_tag(name);
        if (!tag) throw CorpusError(CorpusErrorKind::unknown_label, line, "unknown label '" + name + "'");
        s.annotations.push_back({static_cast<std::size_t>(gap), *tag});
    }
    validate_sentence(s, labels, line);
    return s;
}

} // namespace

Corpus parse_corpus(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    Corpus corpus;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw CorpusError(CorpusErrorKind::malformed, line_no, std::string("invalid JSON: ") + e.what());
        }
        if (!have_header) {
            if (!obj.is_object() || !obj.contains("label_set") || !obj["label_set"].is_string())
                throw CorpusError(CorpusErrorKind::malformed, line_no,
                                  "first line must be a header with \"label_set\"");
            try {
                corpus.label_set = LabelSet::by_name(obj["label_set"].get<std::string>());
            } catch (const DataError& e) {
                throw CorpusError(CorpusErrorKind::malformed, line_no, e.what());
            }
            if (obj.contains("metadata")) {
                if (!obj["metadata"].is_object())
                    throw CorpusError(CorpusErrorKind::malformed, line_no, "\"metadata\" must be an object");
                for (const auto& [k, v] : obj["metadata"].items()) {
                    if (!v.is_string())
                        throw CorpusError(CorpusErrorKind::malformed, line_no,
                                          "metadata value for '" + k + "' is not a string");
                    corpus.metadata[k] = v.get<std::string>();
                }
            }
            have_header = true;
            continue;
        }
        corpus.sentences.push_back(parse_sentence(obj, corpus.label_set, line_no));
    }
    if (!have_header) throw CorpusError(CorpusErrorKind::malformed, 1, "missing header line");
    return corpus;
}

std::string format_corpus(const Corpus& corpus) {
    std::string out;
    json header;
    header["label_set"] = corpus.label_set.name();
    header["metadata"] = json::object();
    for (const auto& [k, v] : corpus.metadata) header["metadata"][k] = v;
    out += header.dump() + '\n';

    for (const auto& s : corpus.sentences) {
        json obj;
        obj["tokens"] = s.tokens;
        obj["annotations"] = json::array();
        for (const auto& a : s.annotations)
            obj["annotations"].push_back(json::array({a.gap, std::string(tag_name(a.tag))}));
        out += obj.dump() + '\n';
    }
    return out;
}

Corpus load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CorpusError(CorpusErrorKind::io, 0, "cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_corpus(buf.str());
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    validate_corpus(corpus);
    const auto text = format_corpus(corpus);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CorpusError(CorpusErrorKind::io, 0, "cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw CorpusError(CorpusErrorKind::io, 0, "write failed for '" + path.string() + "'");
}

CorpusSplit split_corpus(const Corpus& corpus, std::uint64_t seed) {
    const std::size_t n = corpus.sentences.size();
    if (n < 5)
        throw CorpusError(CorpusErrorKind::too_small, 0,
                          "need at least 5 sentences to split, got " + std::to_string(n));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    SplitMix64 rng(seed);
    shuffle(std::span<std::size_t>(order), rng);

    const std::size_t held_out = n / 5;
    const std::size_t train_n = n - 2 * held_out;

    auto part = [&](std::size_t begin, std::size_t end, const char* name) {
        Corpus c;
        c.label_set = corpus.label_set;
        c.metadata = corpus.metadata;
        c.metadata["split"] = name;
        c.metadata["split_seed"] = std::to_string(seed);
        for (std::size_t i = begin; i < end; ++i) c.sentences.push_back(corpus.sentences[order[i]]);
        return c;
    };
    return {part(0, train_n, "train"), part(train_n, train_n + held_out, "dev"),
            part(train_n + held_out, n, "test")};
}

} // namespace dpr
