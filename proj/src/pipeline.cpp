#include "dpr/pipeline.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dpr/hypothesis.hpp"
#include "model_json.hpp"

namespace dpr {

namespace {

using detail::ojson;

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::vector<double> features_at(const RecoveryModel& model, std::span<const std::string> tokens,
                                std::size_t gap) {
    std::vector<double> x(2 * model.window * model.table->dim());
    context_embedding_into(tokens, gap, model.window, *model.table, x);
    return x;
}

double accuracy_of(const MlpModel& model, std::span<const Instance> instances) {
    if (instances.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& inst : instances) hits += argmax(predict_proba(model, inst.feature)) == inst.label;
    return static_cast<double>(hits) / static_cast<double>(instances.size());
}

} // namespace

void RecoveryModel::check() const {
    if (!table) throw DataError("recovery model has no embedding table");
    const std::size_t input = 2 * window * table->dim();
    if (dpi.input_dim() != input || dpg.input_dim() != input)
        throw DataError("network input sizes (" + std::to_string(dpi.input_dim()) + ", " +
                        std::to_string(dpg.input_dim()) + ") do not match 2 * window * dim = " +
                        std::to_string(input));
    if (dpi.num_classes() != 2) throw DataError("DPI network must have 2 outputs");
    if (dpg.num_classes() != label_set.size())
        throw DataError("DPG network has " + std::to_string(dpg.num_classes()) + " outputs, label set '" +
                        label_set.name() + "' has " + std::to_string(label_set.size()));
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw DataError("threshold outside [0, 1]");
}

double tune_threshold(std::span<const double> dropped_probs, std::span<const std::uint8_t> gold) {
    if (dropped_probs.size() != gold.size()) throw UsageError("threshold tuning inputs differ in length");
    double best_t = 0.5;
    std::size_t best_hits = 0;
    bool first = true;
    for (int k = 1; k <= 19; ++k) {
        const double t = k / 20.0;
        std::size_t hits = 0;
        for (std::size_t i = 0; i < gold.size(); ++i) hits += (dropped_probs[i] >= t) == (gold[i] != 0);
        const bool closer = std::fabs(t - 0.5) < std::fabs(best_t - 0.5);
        if (first || hits > best_hits || (hits == best_hits && closer)) {
            best_t = t;
            best_hits = hits;
            first = false;
        }
    }
    return best_t;
}

RecoveryModel train_recovery(const Corpus& train, const Corpus& dev, std::shared_ptr<const EmbeddingTable> table,
                             const Hyperparams& hp_dpi, const Hyperparams& hp_dpg, const TrainProgress& progress) {
    if (!table) throw UsageError("train_recovery needs an embedding table");
    if (train.sentences.empty()) throw DataError("training corpus is empty");
    if (dev.sentences.empty()) throw DataError("development corpus is empty");
    if (train.label_set != dev.label_set)
        throw DataError("label set mismatch: train uses '" + train.label_set.name() + "', dev uses '" +
                        dev.label_set.name() + "'");
    hp_dpi.validate();
    hp_dpg.validate();
    if (hp_dpi.window != hp_dpg.window)
        throw DataError("DPI and DPG must share the context window");
    if (hp_dpi.embed_dim != table->dim() || hp_dpg.embed_dim != table->dim())
        throw DataError("embedding table has dim " + std::to_string(table->dim()) + ", hyperparams ask for " +
                        std::to_string(hp_dpi.embed_dim));

    const std::size_t window = hp_dpi.window;
    const std::size_t input = hp_dpi.input_dim();

    RecoveryModel model;
    model.table = table;
    model.label_set = train.label_set;
    model.window = window;

    const auto dpi_train = build_dpi_instances(train, *table, window, hp_dpi.negative_rate, hp_dpi.seed);
    model.dpi = MlpModel::initialized(input, 2, hp_dpi, "dpi");
    dpr::train(model.dpi, dpi_train, hp_dpi, [&](const EpochStats& s) {
        if (progress) progress("dpi", s);
    });

    const auto dpg_train = build_dpg_instances(train, *table, window);
    if (dpg_train.empty()) throw DataError("training corpus has no annotated dropped pronouns");
    model.dpg = MlpModel::initialized(input, train.label_set.size(), hp_dpg, train.label_set.name());
    dpr::train(model.dpg, dpg_train, hp_dpg, [&](const EpochStats& s) {
        if (progress) progress("dpg", s);
    });

    std::vector<double> dev_probs;
    std::vector<std::uint8_t> dev_gold;
    for (const auto& s : dev.sentences) {
        for (std::size_t g = 0; g < s.gap_count(); ++g) {
            dev_probs.push_back(predict_proba(model.dpi, features_at(model, s.tokens, g))[kDropped]);
            dev_gold.push_back(s.label_at(g).has_value());
        }
    }
    model.threshold = tune_threshold(dev_probs, dev_gold);

    std::size_t hits = 0;
    for (std::size_t i = 0; i < dev_probs.size(); ++i) hits += (dev_probs[i] >= model.threshold) == (dev_gold[i] != 0);
    const double dev_dpi = static_cast<double>(hits) / static_cast<double>(dev_probs.size());
    const auto dev_dpg_instances = build_dpg_instances(dev, *table, window);

    model.metadata["dev_dpi_accuracy"] = format_double(dev_dpi);
    model.metadata["dev_dpg_accuracy"] = format_double(accuracy_of(model.dpg, dev_dpg_instances));
    model.metadata["dev_dpg_instances"] = std::to_string(dev_dpg_instances.size());
    model.metadata["threshold"] = format_double(model.threshold);
    model.metadata["dpi_train_instances"] = std::to_string(dpi_train.size());
    model.metadata["dpg_train_instances"] = std::to_string(dpg_train.size());
    model.metadata["negative_rate"] = format_double(hp_dpi.negative_rate);
    model.check();
    return model;
}

double predict_dpi(const RecoveryModel& model, std::span<const std::string> tokens, std::size_t gap) {
    return predict_proba(model.dpi, features_at(model, tokens, gap))[kDropped];
}

DpgPrediction predict_dpg(const RecoveryModel& model, std::span<const std::string> tokens, std::size_t gap) {
    const auto probs = predict_proba(model.dpg, features_at(model, tokens, gap));
    const auto best = argmax(probs);
    return {model.label_set.at(best), best, probs[best]};
}

RecoveredSentence recover(const RecoveryModel& model, std::span<const std::string> tokens, double threshold) {
    if (tokens.empty()) throw UsageError("cannot recover an empty sentence");
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw UsageError("threshold must be in [0, 1]");
    RecoveredSentence out;
    out.tokens.assign(tokens.begin(), tokens.end());
    std::vector<double> x(2 * model.window * model.table->dim());
    for (std::size_t g = 0; g <= tokens.size(); ++g) {
        context_embedding_into(tokens, g, model.window, *model.table, x);
        if (predict_proba(model.dpi, x)[kDropped] < threshold) continue;
        const auto probs = predict_proba(model.dpg, x);
        const auto best = argmax(probs);
        out.recovered.push_back({g, model.label_set.at(best), probs[best]});
    }
    return out;
}

RecoveredSentence recover(const RecoveryModel& model, std::span<const std::string> tokens) {
    return recover(model, tokens, model.threshold);
}

std::string format_recovered(const std::vector<RecoveredSentence>& sentences, const LabelSet& label_set,
                             const std::map<std::string, std::string>& metadata) {
    std::string out;
    ojson header;
    header["label_set"] = label_set.name();
    header["metadata"] = ojson::object();
    for (const auto& [k, v] : metadata) header["metadata"][k] = v;
    out += header.dump() + '\n';
    for (const auto& s : sentences) {
        ojson obj;
        obj["tokens"] = s.tokens;
        obj["annotations"] = ojson::array();
        for (const auto& r : s.recovered)
            obj["annotations"].push_back(ojson::array({r.gap, std::string(tag_name(r.tag)), r.confidence}));
        out += obj.dump() + '\n';
    }
    return out;
}

void save_recovered(const std::vector<RecoveredSentence>& sentences, const LabelSet& label_set,
                    const std::filesystem::path& path, const std::map<std::string, std::string>& metadata) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << format_recovered(sentences, label_set, metadata);
}

std::string serialize_recovery_model(const RecoveryModel& model) {
    model.check();
    ojson j;
    j["format"] = "dpr-recovery";
    j["version"] = detail::kModelFormatVersion;
    j["label_set"] = model.label_set.name();
    j["window"] = model.window;
    j["threshold"] = to_hex_float(model.threshold);
    ojson emb;
    const auto& src = model.table->source();
    emb["kind"] = src.kind == EmbeddingSource::Kind::word2vec ? "word2vec" : "fallback";
    emb["dim"] = model.table->dim();
    if (src.kind == EmbeddingSource::Kind::word2vec) {
        emb["path"] = src.path;
    } else {
        emb["seed"] = src.seed;
        emb["vocab"] = src.vocab;
    }
    j["embeddings"] = std::move(emb);
    j["metadata"] = ojson::object();
    for (const auto& [k, v] : model.metadata) j["metadata"][k] = v;
    j["dpi"] = detail::model_to_json(model.dpi);
    j["dpg"] = detail::model_to_json(model.dpg);
    return j.dump(1) + '\n';
}

RecoveryModel deserialize_recovery_model(std::string_view text, std::shared_ptr<const EmbeddingTable> table) {
    ojson j;
    try {
        j = ojson::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("corrupt recovery model: ") + e.what());
    }
    try {
        if (!j.is_object() || j.value("format", "") != "dpr-recovery") throw DataError("not a dpr-recovery model file");
        const int version = j.at("version").get<int>();
        if (version != detail::kModelFormatVersion)
            throw DataError("recovery model version " + std::to_string(version) + " is not supported");
        RecoveryModel model;
        model.label_set = LabelSet::by_name(j.at("label_set").get<std::string>());
        model.window = j.at("window").get<std::size_t>();
        model.threshold = from_hex_float(j.at("threshold").get<std::string>());
        for (const auto& [k, v] : j.at("metadata").items()) model.metadata[k] = v.get<std::string>();
        model.dpi = detail::model_from_json(j.at("dpi"));
        model.dpg = detail::model_from_json(j.at("dpg"));
        if (table) {
            model.table = std::move(table);
        } else {
            const auto& emb = j.at("embeddings");
            EmbeddingSource src;
            const auto kind = emb.at("kind").get<std::string>();
            if (kind == "word2vec") {
                src.kind = EmbeddingSource::Kind::word2vec;
                src.path = emb.at("path").get<std::string>();
            } else if (kind == "fallback") {
                src.kind = EmbeddingSource::Kind::fallback;
                src.seed = emb.at("seed").get<std::uint64_t>();
                src.vocab = emb.at("vocab").get<std::vector<std::string>>();
            } else {
                throw DataError("unknown embedding source '" + kind + "'");
            }
            model.table = std::make_shared<const EmbeddingTable>(materialize(src, emb.at("dim").get<std::size_t>()));
        }
        model.check();
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed recovery model: ") + e.what());
    }
}

void save_recovery_model(const RecoveryModel& model, const std::filesystem::path& path) {
    const auto text = serialize_recovery_model(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write model '" + path.string() + "'");
    out << text;
    if (!out) throw DataError("write failed for model '" + path.string() + "'");
}

RecoveryModel load_recovery_model(const std::filesystem::path& path, std::shared_ptr<const EmbeddingTable> table) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize_recovery_model(buf.str(), std::move(table));
}

} // namespace dpr
