#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dpr/error.hpp"

namespace dpr {

// Pronoun taxonomy: ten overt pronouns followed by four abstract categories
// that have no Chinese surface word. Enumerator order is the canonical class
// order of the "full14" label set.
enum class PronounTag : std::uint8_t {
    wo,
    women,
    ni,
    nimen,
    ta_m,
    tamen_m,
    ta_f,
    tamen_f,
    ta_n,
    tamen_n,
    existential,
    unspecified,
    event,
    pleonastic,
};

inline constexpr std::size_t kPronounCount = 14;

struct PronounLabel {
    PronounTag tag;
    std::string_view name;         // wire name used in files ("ta_m")
    std::string_view surface_form; // "他", or the category name for abstract labels
    bool is_abstract;
};

const std::array<PronounLabel, kPronounCount>& all_pronouns();
const PronounLabel& pronoun(PronounTag tag);
std::string_view tag_name(PronounTag tag);
std::optional<PronounTag> parse_tag(std::string_view name);

/// Ordered subset of tags. Position in `labels` is the class index.
class LabelSet {
public:
    LabelSet(std::string name, std::vector<PronounTag> labels);

    static const LabelSet& full14();
    static const LabelSet& actual10();
    /// "full14" or "actual10"; throws DataError otherwise.
    static LabelSet by_name(std::string_view name);

    const std::string& name() const noexcept { return name_; }
    const std::vector<PronounTag>& labels() const noexcept { return labels_; }
    std::size_t size() const noexcept { return labels_.size(); }
    bool contains(PronounTag tag) const noexcept { return index_of(tag).has_value(); }
    std::optional<std::size_t> index_of(PronounTag tag) const noexcept;
    PronounTag at(std::size_t index) const { return labels_.at(index); }

    friend bool operator==(const LabelSet&, const LabelSet&) = default;

private:
    std::string name_;
    std::vector<PronounTag> labels_;
};

struct Annotation {
    std::size_t gap = 0; // 0 = before the first token, n = after the last
    PronounTag tag = PronounTag::wo;
    friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct AnnotatedSentence {
    std::vector<std::string> tokens;
    std::vector<Annotation> annotations;

    std::size_t gap_count() const noexcept { return tokens.size() + 1; }
    /// Label annotated at `gap`, if any.
    std::optional<PronounTag> label_at(std::size_t gap) const noexcept;
    friend bool operator==(const AnnotatedSentence&, const AnnotatedSentence&) = default;
};

struct Corpus {
    LabelSet label_set = LabelSet::full14();
    std::vector<AnnotatedSentence> sentences;
    std::map<std::string, std::string> metadata;

    std::size_t annotation_count() const noexcept;
    friend bool operator==(const Corpus&, const Corpus&) = default;
};

/// Failure classes raised while reading or validating a corpus.
enum class CorpusErrorKind {
    io,
    malformed,
    empty_tokens,
    gap_out_of_range,
    unknown_label,
    label_not_in_set,
    duplicate_gap,
    too_small,
};

class CorpusError : public DataError {
public:
    CorpusError(CorpusErrorKind kind, std::size_t line, const std::string& what);
    CorpusErrorKind kind() const noexcept { return kind_; }
    /// 1-based line of the offending record; 0 when not file-related.
    std::size_t line() const noexcept { return line_; }

private:
    CorpusErrorKind kind_;
    std::size_t line_;
};

/// Checks token and annotation invariants against `labels`. `line` is only
/// used for diagnostics.
void validate_sentence(const AnnotatedSentence& sentence, const LabelSet& labels,
                       std::size_t line = 0);
void validate_corpus(const Corpus& corpus);

Corpus load_corpus(const std::filesystem::path& path);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// In-memory JSONL codec used by load/save and by the recovery writer.
Corpus parse_corpus(std::string_view text);
std::string format_corpus(const Corpus& corpus);

struct CorpusSplit {
    Corpus train;
    Corpus dev;
    Corpus test;
};

/// 3:1:1 sentence-level split. dev and test get floor(n/5) sentences each and
/// train takes the remainder, after a SplitMix64 Fisher-Yates shuffle of the
/// sentence indices seeded with `seed`. Requires n >= 5.
CorpusSplit split_corpus(const Corpus& corpus, std::uint64_t seed);

} // namespace dpr
