#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dpr/corpus.hpp"

namespace dpr {

/// Sentence templates with pronoun slots.
///
/// Template tokens:
///   "<P>"  pronoun slot; a label is drawn from `distribution`
///   "<L>"  left cue of the next slot's label
///   "<R>"  right cue of the previous slot's label
///   "*"    uniform draw from `vocab`
///   other  literal token
///
/// A slot is dropped with probability `drop_rate` and becomes an annotation
/// at its gap; otherwise the label's surface form is emitted (abstract labels
/// have no surface form, so a kept abstract slot emits nothing). A label may
/// list several (left, right) cue pairs; one is drawn uniformly per slot.
/// Each emitted cue is replaced by a `vocab` word with probability
/// `cue_noise`.
struct TemplateGrammar {
    std::string name;
    std::string label_set = "full14";
    std::vector<std::vector<std::string>> templates;
    std::vector<std::pair<PronounTag, double>> distribution;
    double drop_rate = 0.5;
    std::vector<std::string> vocab;
    std::map<PronounTag, std::vector<std::pair<std::string, std::string>>> cues;
    double cue_noise = 0.0;

    /// Throws UsageError on an empty grammar, bad probabilities, or a label
    /// outside `label_set`.
    void validate() const;
};

/// "ontonotes-like", "zhidao-like" or "separable".
TemplateGrammar builtin_grammar(std::string_view profile);

/// Per-label percentages as printed in the annotation statistics of the two
/// source datasets (column order: OntoNotes 4.0, Baidu Zhidao).
struct ProfileRow {
    PronounTag tag;
    double ontonotes_percent;
    double zhidao_percent;
};
const std::vector<ProfileRow>& annotation_statistics();

/// n sentences; sentence i draws from SplitMix64(derive_seed(seed, i)).
Corpus generate_corpus(const TemplateGrammar& grammar, std::size_t n, std::uint64_t seed);

std::string grammar_to_json(const TemplateGrammar& grammar);
TemplateGrammar grammar_from_json(std::string_view text);
TemplateGrammar load_grammar(const std::filesystem::path& path);
void save_grammar(const TemplateGrammar& grammar, const std::filesystem::path& path);

} // namespace dpr
