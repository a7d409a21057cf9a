#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dpr/corpus.hpp"
#include "dpr/embeddings.hpp"
#include "dpr/neuralnet.hpp"

namespace dpr {

/// The two-stage recoverer: a binary DPI network that scores every gap and
/// a DPG network that names the pronoun at gaps DPI accepts.
struct RecoveryModel {
    MlpModel dpi;
    MlpModel dpg;
    std::shared_ptr<const EmbeddingTable> table;
    LabelSet label_set = LabelSet::full14();
    std::size_t window = 1;
    double threshold = 0.5;
    std::map<std::string, std::string> metadata;

    /// Throws DataError when the two networks disagree with the table/window.
    void check() const;
};

struct RecoveredPronoun {
    std::size_t gap = 0;
    PronounTag tag = PronounTag::wo;
    double confidence = 0.0;
    friend bool operator==(const RecoveredPronoun&, const RecoveredPronoun&) = default;
};

struct RecoveredSentence {
    std::vector<std::string> tokens;
    std::vector<RecoveredPronoun> recovered;
    friend bool operator==(const RecoveredSentence&, const RecoveredSentence&) = default;
};

/// Progress hook: (stage name "dpi"/"dpg", epoch stats).
using TrainProgress = std::function<void(const std::string&, const EpochStats&)>;

/// Trains DPI on all gaps (negatives subsampled by hp_dpi.negative_rate) and
/// DPG on gold positions, then picks the DPI threshold from the grid
/// 0.05, 0.10, ..., 0.95 that maximises dev DPI accuracy (ties: nearest to
/// 0.5, then the lower value).
RecoveryModel train_recovery(const Corpus& train, const Corpus& dev,
                             std::shared_ptr<const EmbeddingTable> table,
                             const Hyperparams& hp_dpi, const Hyperparams& hp_dpg,
                             const TrainProgress& progress = {});

/// P(dropped) at `gap`.
double predict_dpi(const RecoveryModel& model, std::span<const std::string> tokens,
                   std::size_t gap);

struct DpgPrediction {
    PronounTag tag;
    std::size_t class_index;
    double confidence;
};
DpgPrediction predict_dpg(const RecoveryModel& model, std::span<const std::string> tokens,
                          std::size_t gap);

/// Scores every gap; those with P(dropped) >= threshold get a DPG label.
RecoveredSentence recover(const RecoveryModel& model, std::span<const std::string> tokens);
RecoveredSentence recover(const RecoveryModel& model, std::span<const std::string> tokens,
                          double threshold);
inline RecoveredSentence recover(const RecoveryModel& model, const AnnotatedSentence& sentence) {
    return recover(model, sentence.tokens);
}

/// Dev-set threshold choice, exposed for testing. `dropped_probs[i]` is the
/// DPI score of gap i and `gold[i]` whether it is annotated.
double tune_threshold(std::span<const double> dropped_probs, std::span<const std::uint8_t> gold);

/// Recovery output: the corpus JSONL layout where every annotation carries a
/// third element, the DPG confidence.
std::string format_recovered(const std::vector<RecoveredSentence>& sentences,
                             const LabelSet& label_set,
                             const std::map<std::string, std::string>& metadata = {});
void save_recovered(const std::vector<RecoveredSentence>& sentences, const LabelSet& label_set,
                    const std::filesystem::path& path,
                    const std::map<std::string, std::string>& metadata = {});

/// Bundle of both networks plus table source, window and threshold.
std::string serialize_recovery_model(const RecoveryModel& model);
/// `table` overrides the recorded embedding source when given.
RecoveryModel deserialize_recovery_model(std::string_view text,
                                         std::shared_ptr<const EmbeddingTable> table = nullptr);
void save_recovery_model(const RecoveryModel& model, const std::filesystem::path& path);
RecoveryModel load_recovery_model(const std::filesystem::path& path,
                                  std::shared_ptr<const EmbeddingTable> table = nullptr);

} // namespace dpr
