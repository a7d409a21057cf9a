#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dpr/corpus.hpp"

namespace dpr {

/// Where a table came from; stored in recovery models so the same table can
/// be rebuilt at inference time.
struct EmbeddingSource {
    enum class Kind { word2vec, fallback };
    Kind kind = Kind::fallback;
    std::string path;               // word2vec
    std::uint64_t seed = 0;         // fallback
    std::vector<std::string> vocab; // fallback
};

/// Word -> dense vector map of fixed dimension. Absent words resolve to the
/// unknown vector, which is all zeros.
class EmbeddingTable {
public:
    explicit EmbeddingTable(std::size_t dim);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return index_.size(); }
    bool contains(std::string_view word) const;

    /// Inserts `word` unless already present. Returns false for duplicates.
    bool insert(std::string word, std::span<const double> vector);

    std::span<const double> lookup(std::string_view word) const;
    std::span<const double> unk_vector() const noexcept { return unk_; }

    /// Rows skipped because their word was already present.
    std::size_t duplicate_count() const noexcept { return duplicates_; }

    const EmbeddingSource& source() const noexcept { return source_; }
    void set_source(EmbeddingSource source) { source_ = std::move(source); }

private:
    struct Hash {
        using is_transparent = void;
        std::size_t operator()(std::string_view s) const noexcept {
            return std::hash<std::string_view>{}(s);
        }
    };

    std::size_t dim_;
    std::vector<double> rows_;
    std::vector<double> unk_;
    std::unordered_map<std::string, std::size_t, Hash, std::equal_to<>> index_;
    std::size_t duplicates_ = 0;
    EmbeddingSource source_;
};

/// Reads the word2vec text format: a "vocab_size dim" header, then one
/// "word v1 ... vD" row per line.
EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               std::optional<std::size_t> expected_dim = std::nullopt);
EmbeddingTable parse_embeddings(std::string_view text,
                                std::optional<std::size_t> expected_dim = std::nullopt);

/// Vector of one word in a fallback table: a SplitMix64 stream seeded from
/// derive_seed(seed, fnv1a64(word)), component k = (uniform() - 0.5) / dim.
std::vector<double> fallback_vector(std::string_view word, std::size_t dim, std::uint64_t seed);

/// Table over `vocab` built from fallback_vector. Stands in for pretrained
/// vectors when none are available.
EmbeddingTable deterministic_fallback_table(std::span<const std::string> vocab, std::size_t dim,
                                            std::uint64_t seed);

/// Distinct tokens of a corpus in first-seen order.
std::vector<std::string> corpus_vocabulary(const Corpus& corpus);

/// Rebuilds a table from its recorded source.
EmbeddingTable materialize(const EmbeddingSource& source, std::size_t dim);

struct ContextVector {
    std::vector<double> values; // 2 * window * dim
    std::size_t window = 0;
    std::size_t gap = 0;
};

/// Concatenates the `window` tokens left of `gap` (farthest first, nearest
/// last) and then the `window` tokens right of it (nearest first). Positions
/// outside the sentence contribute zero vectors.
ContextVector context_embedding(std::span<const std::string> tokens, std::size_t gap,
                                std::size_t window, const EmbeddingTable& table);

/// Same as above, writing into `out` (size 2 * window * dim).
void context_embedding_into(std::span<const std::string> tokens, std::size_t gap,
                            std::size_t window, const EmbeddingTable& table,
                            std::span<double> out);

} // namespace dpr
