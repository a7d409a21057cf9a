#include "dpr/hypothesis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dpr/random.hpp"

namespace dpr {

std::vector<DroppedHypothesis> enumerate_hypotheses(const AnnotatedSentence& sentence,
                                                    std::size_t sentence_ref) {
    if (sentence.tokens.empty()) throw UsageError("cannot enumerate gaps of an empty sentence");
    std::vector<DroppedHypothesis> out(sentence.gap_count());
    for (std::size_t g = 0; g < out.size(); ++g) {
        out[g].sentence_ref = sentence_ref;
        out[g].gap = g;
    }
    return out;
}

std::vector<DroppedHypothesis> enumerate_hypotheses(const AnnotatedSentence& sentence,
                                                    const EmbeddingTable& table, std::size_t window,
                                                    std::size_t sentence_ref) {
    auto out = enumerate_hypotheses(sentence, sentence_ref);
    for (auto& h : out) h.feature = context_embedding(sentence.tokens, h.gap, window, table);
    return out;
}

std::vector<DpiInstance> build_dpi_instances(const Corpus& corpus, const EmbeddingTable& table,
                                             std::size_t window, double negative_rate,
                                             std::uint64_t seed) {
    if (!(negative_rate > 0.0 && negative_rate <= 1.0))
        throw UsageError("negative_rate must be in (0, 1]");

    struct Gap {
        std::size_t sentence;
        std::size_t gap;
        bool dropped;
    };
    std::vector<Gap> gaps;
    std::vector<std::size_t> negatives; // indices into gaps
    for (std::size_t s = 0; s < corpus.sentences.size(); ++s) {
        const auto& sentence = corpus.sentences[s];
        std::vector<bool> annotated(sentence.gap_count(), false);
        for (const auto& a : sentence.annotations) annotated.at(a.gap) = true;
        for (std::size_t g = 0; g < sentence.gap_count(); ++g) {
            if (!annotated[g]) negatives.push_back(gaps.size());
            gaps.push_back({s, g, annotated[g]});
        }
    }

    std::vector<bool> keep(gaps.size(), true);
    const auto m = negatives.size();
    const auto k = static_cast<std::size_t>(std::llround(negative_rate * static_cast<double>(m)));
    if (k < m) {
        // Partial Fisher-Yates: the first k slots end up as a uniform sample.
        SplitMix64 rng(seed);
        for (std::size_t i = 0; i < k; ++i) {
            const auto j = i + static_cast<std::size_t>(rng.below(m - i));
            std::swap(negatives[i], negatives[j]);
        }
        for (std::size_t i = k; i < m; ++i) keep[negatives[i]] = false;
    }

    std::vector<DpiInstance> out;
    out.reserve(gaps.size() - (m - std::min(k, m)));
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        if (!keep[i]) continue;
        const auto& g = gaps[i];
        DpiInstance inst;
        inst.feature = context_embedding(corpus.sentences[g.sentence].tokens, g.gap, window, table).values;
        inst.label = g.dropped ? kDropped : kNotDropped;
        out.push_back(std::move(inst));
    }
    return out;
}

std::vector<DpgInstance> build_dpg_instances(const Corpus& corpus, const EmbeddingTable& table,
                                             std::size_t window) {
    std::vector<DpgInstance> out;
    out.reserve(corpus.annotation_count());
    for (const auto& sentence : corpus.sentences) {
        for (const auto& a : sentence.annotations) {
            const auto index = corpus.label_set.index_of(a.tag);
            if (!index)
                throw DataError("label '" + std::string(tag_name(a.tag)) + "' is not in label set '" +
                                corpus.label_set.name() + "'");
            DpgInstance inst;
            inst.feature = context_embedding(sentence.tokens, a.gap, window, table).values;
            inst.label = *index;
            out.push_back(std::move(inst));
        }
    }
    return out;
}

} // namespace dpr
