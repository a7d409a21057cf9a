#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dpr/corpus.hpp"
#include "dpr/embeddings.hpp"

namespace dpr {

/// A candidate gap where a pronoun may have been dropped.
struct DroppedHypothesis {
    std::size_t sentence_ref = 0;
    std::size_t gap = 0;
    ContextVector feature; // empty until featurized
};

/// A feature vector with its class index. For DPI the label is 1 (dropped)
/// or 0 (not dropped); for DPG it indexes the corpus LabelSet.
struct Instance {
    std::vector<double> feature;
    std::size_t label = 0;
};

using DpiInstance = Instance;
using DpgInstance = Instance;

inline constexpr std::size_t kNotDropped = 0;
inline constexpr std::size_t kDropped = 1;

/// One hypothesis per gap 0..n, in order. Features are left empty.
std::vector<DroppedHypothesis> enumerate_hypotheses(const AnnotatedSentence& sentence,
                                                    std::size_t sentence_ref = 0);

/// Same, with context embeddings filled in.
std::vector<DroppedHypothesis> enumerate_hypotheses(const AnnotatedSentence& sentence,
                                                    const EmbeddingTable& table,
                                                    std::size_t window,
                                                    std::size_t sentence_ref = 0);

/// Every annotated gap becomes a positive. Of the m unannotated gaps in the
/// corpus, k = round(negative_rate * m) are kept: a SplitMix64(seed) partial
/// Fisher-Yates picks them, and the output is then ordered by sentence and gap.
std::vector<DpiInstance> build_dpi_instances(const Corpus& corpus, const EmbeddingTable& table,
                                             std::size_t window, double negative_rate = 1.0,
                                             std::uint64_t seed = 0);

/// One instance per annotation, labelled by LabelSet index.
std::vector<DpgInstance> build_dpg_instances(const Corpus& corpus, const EmbeddingTable& table,
                                             std::size_t window);

} // namespace dpr
