#include "dpr/synth.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dpr/random.hpp"

namespace dpr {

namespace {

using json = nlohmann::ordered_json;

constexpr std::string_view kSlot = "<P>";
constexpr std::string_view kLeftCue = "<L>";
constexpr std::string_view kRightCue = "<R>";
constexpr std::string_view kFiller = "*";

const std::vector<std::string>& filler_vocab() {
    static const std::vector<std::string> words{
        "说", "要", "买", "去", "看", "吃", "喜欢", "觉得", "知道", "想", "是", "在", "做", "来",
        "给", "用", "学习", "工作", "东西", "时候", "今天", "明天", "朋友", "老师", "学校", "电脑",
        "手机", "问题", "事情", "地方", "已经", "还", "也", "都", "很", "不", "没", "就", "再", "吧"};
    return words;
}

std::vector<std::vector<std::string>> default_templates() {
    return {
        {"*", "<L>", "<P>", "<R>", "*"},
        {"<L>", "<P>", "<R>", "*", "*"},
        {"*", "*", "<L>", "<P>", "<R>", "*"},
        {"<P>", "<R>", "*", "*"},
        {"*", "<L>", "<P>", "<R>", "*", "*", "<L>", "<P>", "<R>", "*"},
        {"*", "*", "*", "*"},
    };
}

std::pair<std::string, std::string> unique_cues(PronounTag tag) {
    const std::string n(tag_name(tag));
    return {"L_" + n, "R_" + n};
}

} // namespace

const std::vector<ProfileRow>& annotation_statistics() {
    static const std::vector<ProfileRow> rows{
        {PronounTag::wo, 3.62, 31.49},          {PronounTag::women, 5.91, 0.28},
        {PronounTag::ni, 5.41, 31.31},          {PronounTag::nimen, 0.21, 0.13},
        {PronounTag::ta_m, 6.92, 1.38},         {PronounTag::tamen_m, 11.96, 0.3},
        {PronounTag::ta_f, 2.80, 0.63},         {PronounTag::tamen_f, 0.18, 0.00},
        {PronounTag::ta_n, 19.56, 33.08},       {PronounTag::tamen_n, 1.37, 1.96},
        {PronounTag::existential, 6.12, 0.00},  {PronounTag::unspecified, 15.39, 0.00},
        {PronounTag::event, 6.86, 0.00},        {PronounTag::pleonastic, 9.69, 0.00},
    };
    return rows;
}

void TemplateGrammar::validate() const {
    auto fail = [this](const std::string& what) { throw UsageError("grammar '" + name + "': " + what); };
    if (templates.empty()) fail("no templates");
    const auto labels = LabelSet::by_name(label_set);
    bool has_slot = false, has_filler = false;
    for (const auto& t : templates) {
        std::size_t plain = 0;
        for (const auto& tok : t) {
            if (tok.empty()) fail("empty template token");
            if (tok == kSlot) has_slot = true;
            else if (tok == kFiller) has_filler = true, ++plain;
            else ++plain;
        }
        if (plain == 0) fail("every template needs at least one non-slot token");
    }
    if (has_filler && vocab.empty()) fail("templates use '*' but vocab is empty");
    if (has_slot && distribution.empty()) fail("templates have slots but the distribution is empty");
    double sum = 0.0;
    std::set<PronounTag> seen;
    for (const auto& [tag, p] : distribution) {
        if (!labels.contains(tag)) fail("label '" + std::string(tag_name(tag)) + "' is not in " + label_set);
        if (!seen.insert(tag).second) fail("label '" + std::string(tag_name(tag)) + "' listed twice");
        if (!(p >= 0.0) || !std::isfinite(p)) fail("negative or non-finite probability");
        sum += p;
    }
    if (!distribution.empty() && std::fabs(sum - 1.0) > 1e-9) fail("distribution sums to " + std::to_string(sum));
    if (!(drop_rate >= 0.0 && drop_rate <= 1.0)) fail("drop_rate must be in [0, 1]");
    if (!(cue_noise >= 0.0 && cue_noise <= 1.0)) fail("cue_noise must be in [0, 1]");
    if (cue_noise > 0.0 && vocab.empty()) fail("cue_noise needs a vocab");
    for (const auto& [tag, pairs] : cues)
        if (pairs.empty()) fail("label '" + std::string(tag_name(tag)) + "' has an empty cue list");
}

TemplateGrammar builtin_grammar(std::string_view profile) {
    TemplateGrammar g;
    g.name = std::string(profile);
    g.templates = default_templates();
    g.vocab = filler_vocab();
    const auto& stats = annotation_statistics();

    if (profile == "ontonotes-like") {
        g.label_set = "full14";
        double total = 0.0;
        for (const auto& row : stats) total += row.ontonotes_percent;
        for (const auto& row : stats) g.distribution.emplace_back(row.tag, row.ontonotes_percent / total);
        // Labels pair up (singular/plural, or two abstract categories). The
        // left cue names the pair plus a random bit x, the right cue carries
        // y, and the member is x XOR y: no additive model of the two context
        // words can resolve it.
        for (std::size_t i = 0; i < stats.size(); ++i) {
            const auto pair_id = std::to_string(i / 2);
            const std::size_t member = i % 2;
            auto& alts = g.cues[stats[i].tag];
            for (std::size_t x = 0; x < 2; ++x)
                alts.emplace_back("L" + pair_id + (x ? "b" : "a"), "R" + std::to_string(x ^ member));
        }
        g.drop_rate = 0.5;
        g.cue_noise = 0.15;
    } else if (profile == "zhidao-like") {
        g.label_set = "actual10";
        double total = 0.0;
        for (const auto& row : stats) total += row.zhidao_percent;
        for (const auto& row : stats) {
            if (row.zhidao_percent == 0.0) continue;
            g.distribution.emplace_back(row.tag, row.zhidao_percent / total);
            g.cues[row.tag].push_back(unique_cues(row.tag));
        }
        g.drop_rate = 0.5;
        g.cue_noise = 0.15;
    } else if (profile == "separable") {
        g.label_set = "actual10";
        const auto labels = LabelSet::actual10();
        for (auto tag : labels.labels()) {
            g.distribution.emplace_back(tag, 1.0 / static_cast<double>(labels.size()));
            g.cues[tag].push_back(unique_cues(tag));
        }
        g.drop_rate = 0.5;
        g.cue_noise = 0.0;
    } else {
        throw UsageError("unknown grammar profile '" + std::string(profile) +
                         "' (expected ontonotes-like, zhidao-like or separable)");
    }
    return g;
}

Corpus generate_corpus(const TemplateGrammar& grammar, std::size_t n, std::uint64_t seed) {
    grammar.validate();
    if (n == 0) throw UsageError("cannot generate an empty corpus");

    Corpus corpus;
    corpus.label_set = LabelSet::by_name(grammar.label_set);
    corpus.metadata["generator"] = "synth";
    corpus.metadata["profile"] = grammar.name;
    corpus.metadata["seed"] = std::to_string(seed);
    corpus.sentences.reserve(n);

    for (std::size_t i = 0; i < n; ++i) {
        SplitMix64 rng(derive_seed(seed, i));
        const auto& tmpl = grammar.templates[rng.below(grammar.templates.size())];

        // Labels and cue alternatives first, so <L> can see the next slot.
        struct Slot {
            PronounTag tag;
            std::size_t cue_alt;
        };
        std::vector<Slot> slots;
        for (const auto& tok : tmpl) {
            if (tok != kSlot) continue;
            const double u = rng.uniform();
            double acc = 0.0;
            PronounTag tag = grammar.distribution.back().first;
            for (const auto& [t, p] : grammar.distribution) {
                acc += p;
                if (u < acc) {
                    tag = t;
                    break;
                }
            }
            const auto it = grammar.cues.find(tag);
            const std::size_t alt = it == grammar.cues.end() ? 0 : rng.below(it->second.size());
            slots.push_back({tag, alt});
        }

        auto cue = [&](const Slot& slot, bool left) -> std::string {
            const auto it = grammar.cues.find(slot.tag);
            std::string word;
            if (it == grammar.cues.end()) {
                word = unique_cues(slot.tag).first;
                if (!left) word = unique_cues(slot.tag).second;
            } else {
                const auto& pair = it->second[slot.cue_alt];
                word = left ? pair.first : pair.second;
            }
            if (grammar.cue_noise > 0.0 && rng.uniform() < grammar.cue_noise)
                word = grammar.vocab[rng.below(grammar.vocab.size())];
            return word;
        };

        AnnotatedSentence s;
        std::size_t slot_index = 0; // slots seen so far
        for (const auto& tok : tmpl) {
            if (tok == kSlot) {
                const auto& slot = slots[slot_index++];
                if (rng.uniform() < grammar.drop_rate) {
                    s.annotations.push_back({s.tokens.size(), slot.tag});
                } else if (!pronoun(slot.tag).is_abstract) {
                    s.tokens.emplace_back(pronoun(slot.tag).surface_form);
                }
            } else if (tok == kLeftCue) {
                if (slot_index < slots.size()) s.tokens.push_back(cue(slots[slot_index], true));
            } else if (tok == kRightCue) {
                if (slot_index > 0) s.tokens.push_back(cue(slots[slot_index - 1], false));
            } else if (tok == kFiller) {
                s.tokens.push_back(grammar.vocab[rng.below(grammar.vocab.size())]);
            } else {
                s.tokens.push_back(tok);
            }
        }
        validate_sentence(s, corpus.label_set);
        corpus.sentences.push_back(std::move(s));
    }
    return corpus;
}

std::string grammar_to_json(const TemplateGrammar& g) {
    json j;
    j["name"] = g.name;
    j["label_set"] = g.label_set;
    j["drop_rate"] = g.drop_rate;
    j["cue_noise"] = g.cue_noise;
    j["templates"] = g.templates;
    j["distribution"] = json::array();
    for (const auto& [tag, p] : g.distribution) j["distribution"].push_back(json::array({std::string(tag_name(tag)), p}));
    j["vocab"] = g.vocab;
    j["cues"] = json::object();
    for (const auto& [tag, pairs] : g.cues) {
        json arr = json::array();
        for (const auto& [l, r] : pairs) arr.push_back(json::array({l, r}));
        j["cues"][std::string(tag_name(tag))] = std::move(arr);
    }
    return j.dump(2) + '\n';
}

TemplateGrammar grammar_from_json(std::string_view text) {
    TemplateGrammar g;
    try {
        const auto j = json::parse(text);
        g.name = j.value("name", std::string("custom"));
        g.label_set = j.value("label_set", std::string("full14"));
        g.drop_rate = j.at("drop_rate").get<double>();
        g.cue_noise = j.value("cue_noise", 0.0);
        g.templates = j.at("templates").get<std::vector<std::vector<std::string>>>();
        for (const auto& entry : j.at("distribution")) {
            const auto name = entry.at(0).get<std::string>();
            const auto tag = parse_tag(name);
            if (!tag) throw DataError("grammar: unknown label '" + name + "'");
            g.distribution.emplace_back(*tag, entry.at(1).get<double>());
        }
        g.vocab = j.value("vocab", std::vector<std::string>{});
        if (j.contains("cues")) {
            for (const auto& [name, pairs] : j.at("cues").items()) {
                const auto tag = parse_tag(name);
                if (!tag) throw DataError("grammar: unknown cue label '" + name + "'");
                auto& out = g.cues[*tag];
                for (const auto& p : pairs) out.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed grammar file: ") + e.what());
    }
    g.validate();
    return g;
}

TemplateGrammar load_grammar(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open grammar '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return grammar_from_json(buf.str());
}

void save_grammar(const TemplateGrammar& grammar, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write grammar '" + path.string() + "'");
    out << grammar_to_json(grammar);
}

} // namespace dpr
