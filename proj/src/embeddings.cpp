#include "dpr/embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "dpr/random.hpp"

namespace dpr {

EmbeddingTable::EmbeddingTable(std::size_t dim) : dim_(dim), unk_(dim, 0.0) {
    if (dim == 0) throw UsageError("embedding dimension must be positive");
}

bool EmbeddingTable::contains(std::string_view word) const { return index_.find(word) != index_.end(); }

bool EmbeddingTable::insert(std::string word, std::span<const double> vector) {
    if (vector.size() != dim_)
        throw DataError("vector for '" + word + "' has " + std::to_string(vector.size()) +
                        " components, table dim is " + std::to_string(dim_));
    if (contains(word)) {
        ++duplicates_;
        return false;
    }
    index_.emplace(std::move(word), rows_.size() / dim_);
    rows_.insert(rows_.end(), vector.begin(), vector.end());
    return true;
}

std::span<const double> EmbeddingTable::lookup(std::string_view word) const {
    auto it = index_.find(word);
    if (it == index_.end()) return unk_;
    return std::span<const double>(rows_).subspan(it->second * dim_, dim_);
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if constexpr (std::is_floating_point_v<T>) {
        if (first != last && *first == '+') ++first;
    }
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

} // namespace

EmbeddingTable parse_embeddings(std::string_view text, std::optional<std::size_t> expected_dim) {
    std::size_t pos = 0;
    std::size_t line_no = 0;
    auto next_line = [&](std::string_view& line) {
        if (pos >= text.size()) return false;
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos = end + 1;
        ++line_no;
        return true;
    };

    std::string_view line;
    if (!next_line(line)) throw DataError("embedding file is empty");
    const auto header = split_fields(line);
    std::size_t vocab_size = 0;
    std::size_t dim = 0;
    if (header.size() != 2 || !parse_number(header[0], vocab_size) || !parse_number(header[1], dim) ||
        dim == 0)
        throw DataError("line 1: expected header \"vocab_size dim\"");
    if (expected_dim && *expected_dim != dim)
        throw DataError("embedding dim " + std::to_string(dim) + " conflicts with expected " +
                        std::to_string(*expected_dim));

    EmbeddingTable table(dim);
    std::vector<double> row(dim);
    std::size_t rows = 0;
    while (next_line(line)) {
        const auto fields = split_fields(line);
        if (fields.empty()) continue;
        if (fields.size() != dim + 1)
            throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(dim) +
                            " components, got " + std::to_string(fields.size() - 1));
        for (std::size_t k = 0; k < dim; ++k) {
            if (!parse_number(fields[k + 1], row[k]))
                throw DataError("line " + std::to_string(line_no) + ": non-numeric component '" +
                                std::string(fields[k + 1]) + "'");
        }
        table.insert(std::string(fields[0]), row);
        ++rows;
    }
    if (rows != vocab_size)
        throw DataError("header declares " + std::to_string(vocab_size) + " rows, file has " +
                        std::to_string(rows));
    return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path, std::optional<std::size_t> expected_dim) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open embeddings '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    auto table = parse_embeddings(buf.str(), expected_dim);
    table.set_source({EmbeddingSource::Kind::word2vec, path.string(), 0, {}});
    return table;
}

std::vector<double> fallback_vector(std::string_view word, std::size_t dim, std::uint64_t seed) {
    SplitMix64 rng(derive_seed(seed, fnv1a64(word)));
    std::vector<double> v(dim);
    const double scale = 1.0 / static_cast<double>(dim);
    for (auto& c : v) c = (rng.uniform() - 0.5) * scale;
    return v;
}

EmbeddingTable deterministic_fallback_table(std::span<const std::string> vocab, std::size_t dim,
                                            std::uint64_t seed) {
    EmbeddingTable table(dim);
    for (const auto& w : vocab) table.insert(w, fallback_vector(w, dim, seed));
    EmbeddingSource src;
    src.kind = EmbeddingSource::Kind::fallback;
    src.seed = seed;
    src.vocab.assign(vocab.begin(), vocab.end());
    table.set_source(std::move(src));
    return table;
}

std::vector<std::string> corpus_vocabulary(const Corpus& corpus) {
    std::vector<std::string> vocab;
    std::unordered_set<std::string> seen;
    for (const auto& s : corpus.sentences)
        for (const auto& t : s.tokens)
            if (seen.insert(t).second) vocab.push_back(t);
    return vocab;
}

EmbeddingTable materialize(const EmbeddingSource& source, std::size_t dim) {
    if (source.kind == EmbeddingSource::Kind::word2vec) return load_embeddings(source.path, dim);
    return deterministic_fallback_table(source.vocab, dim, source.seed);
}

void context_embedding_into(std::span<const std::string> tokens, std::size_t gap, std::size_t window,
                            const EmbeddingTable& table, std::span<double> out) {
    if (gap > tokens.size())
        throw UsageError("gap " + std::to_string(gap) + " outside [0, " + std::to_string(tokens.size()) + "]");
    if (window == 0) throw UsageError("window must be at least 1");
    const std::size_t dim = table.dim();
    if (out.size() != 2 * window * dim) throw UsageError("context buffer has the wrong size");

    // Slot k covers token position gap - window + k.
    for (std::size_t k = 0; k < 2 * window; ++k) {
        auto dst = out.subspan(k * dim, dim);
        const auto pos = static_cast<std::ptrdiff_t>(gap) - static_cast<std::ptrdiff_t>(window) +
                         static_cast<std::ptrdiff_t>(k);
        if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(tokens.size())) {
            std::fill(dst.begin(), dst.end(), 0.0);
        } else {
            const auto src = table.lookup(tokens[static_cast<std::size_t>(pos)]);
            std::copy(src.begin(), src.end(), dst.begin());
        }
    }
}

ContextVector context_embedding(std::span<const std::string> tokens, std::size_t gap, std::size_t window,
                                const EmbeddingTable& table) {
    ContextVector cv;
    cv.values.resize(2 * window * table.dim());
    cv.window = window;
    cv.gap = gap;
    context_embedding_into(tokens, gap, window, table, cv.values);
    return cv;
}

} // namespace dpr
