#include "dpr/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <cmath>
#include <set>
#include <sstream>
#include <tuple>

#include <CLI11.hpp>
#include <json.hpp>

#include "dpr/corpus.hpp"
#include "dpr/embeddings.hpp"
#include "dpr/eval.hpp"
#include "dpr/pipeline.hpp"
#include "dpr/synth.hpp"

namespace dpr::cli {

namespace {

namespace fs = std::filesystem;

struct GenArgs {
    std::string profile;
    std::string grammar;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::string out;
};

struct SplitArgs {
    std::string in;
    std::uint64_t seed = 0;
    std::string out_dir;
};

struct TrainArgs {
    std::string train;
    std::string dev;
    std::string embeddings;
    std::size_t fallback_dim = 0;
    std::size_t window = 1;
    std::size_t layers = 3;
    double dropout = 0.5;
    std::size_t epochs = 25;
    double lr = 0.01;
    std::size_t hidden = 200;
    std::size_t batch = 1;
    std::uint64_t seed = 0;
    double negative_rate = 1.0;
    std::string label_set;
    std::optional<std::size_t> dpg_layers;
    std::optional<double> dpg_dropout;
    std::optional<std::size_t> dpg_epochs;
    std::string out_model;
    // compare only
    double alpha = 0.05;
    std::string test;
    std::string report;
};

struct RecoverArgs {
    std::string model;
    std::string in;
    std::string out;
    std::optional<double> threshold;
    std::string embeddings;
};

struct EvalArgs {
    std::string model;
    std::string test;
    std::string positions = "gold";
    std::string report;
    std::string embeddings;
};

void add_train_options(CLI::App& cmd, TrainArgs& a) {
    cmd.add_option("--train", a.train, "Training corpus (JSONL)")->required();
    cmd.add_option("--dev", a.dev, "Development corpus (JSONL)")->required();
    cmd.add_option("--embeddings", a.embeddings, "word2vec text-format vectors");
    cmd.add_option("--fallback-dim", a.fallback_dim, "Use seeded fallback vectors of this dimension")
        ->check(CLI::PositiveNumber);
    cmd.add_option("--window", a.window, "Context words per side (W)")->check(CLI::PositiveNumber);
    cmd.add_option("--layers", a.layers, "MLP layer count (L)")->check(CLI::PositiveNumber);
    cmd.add_option("--dropout", a.dropout, "Dropout rate (Do), in [0, 1)");
    cmd.add_option("--epochs", a.epochs, "Epochs (E)")->check(CLI::PositiveNumber);
    cmd.add_option("--lr", a.lr, "SGD learning rate");
    cmd.add_option("--hidden", a.hidden, "Hidden layer width")->check(CLI::PositiveNumber);
    cmd.add_option("--batch", a.batch, "Mini-batch size")->check(CLI::PositiveNumber);
    cmd.add_option("--seed", a.seed, "Seed for initialisation, shuffling, dropout and fallback vectors");
    cmd.add_option("--negative-rate", a.negative_rate, "Fraction of non-dropped gaps used for DPI training");
    cmd.add_option("--label-set", a.label_set, "Expected label set (full14 or actual10)");
    cmd.add_option("--dpg-layers", a.dpg_layers, "DPG layer count (defaults to --layers)")->check(CLI::PositiveNumber);
    cmd.add_option("--dpg-dropout", a.dpg_dropout, "DPG dropout rate (defaults to --dropout)");
    cmd.add_option("--dpg-epochs", a.dpg_epochs, "DPG epochs (defaults to --epochs)")->check(CLI::PositiveNumber);
    auto* emb = cmd.get_option("--embeddings");
    auto* fb = cmd.get_option("--fallback-dim");
    emb->excludes(fb);
}

std::pair<Hyperparams, Hyperparams> hyperparams_from(const TrainArgs& a, std::size_t dim) {
    Hyperparams dpi;
    dpi.embed_dim = dim;
    dpi.window = a.window;
    dpi.layer_count = a.layers;
    dpi.dropout_rate = a.dropout;
    dpi.epochs = a.epochs;
    dpi.learning_rate = a.lr;
    dpi.batch_size = a.batch;
    dpi.hidden_dim = a.hidden;
    dpi.seed = a.seed;
    dpi.negative_rate = a.negative_rate;
    Hyperparams dpg = dpi;
    dpg.layer_count = a.dpg_layers.value_or(a.layers);
    dpg.dropout_rate = a.dpg_dropout.value_or(a.dropout);
    dpg.epochs = a.dpg_epochs.value_or(a.epochs);
    dpg.seed = a.seed + 1;
    dpi.validate();
    dpg.validate();
    return {dpi, dpg};
}

std::shared_ptr<const EmbeddingTable> table_for(const TrainArgs& a, const Corpus& train, const Corpus& dev) {
    if (!a.embeddings.empty()) return std::make_shared<const EmbeddingTable>(load_embeddings(a.embeddings));
    auto vocab = corpus_vocabulary(train);
    for (auto& w : corpus_vocabulary(dev)) vocab.push_back(std::move(w));
    std::vector<std::string> unique;
    std::set<std::string> seen;
    for (auto& w : vocab)
        if (seen.insert(w).second) unique.push_back(std::move(w));
    return std::make_shared<const EmbeddingTable>(deterministic_fallback_table(unique, a.fallback_dim, a.seed));
}

struct Loaded {
    Corpus train;
    Corpus dev;
    std::shared_ptr<const EmbeddingTable> table;
    Hyperparams dpi;
    Hyperparams dpg;
};

Loaded load_training_inputs(const TrainArgs& a) {
    if (a.embeddings.empty() && a.fallback_dim == 0)
        throw UsageError("one of --embeddings or --fallback-dim is required");
    // Validate numbers before touching any file.
    hyperparams_from(a, a.fallback_dim == 0 ? 1 : a.fallback_dim);
    std::optional<LabelSet> expected;
    if (!a.label_set.empty()) {
        if (a.label_set != "full14" && a.label_set != "actual10")
            throw UsageError("--label-set must be full14 or actual10");
        expected = LabelSet::by_name(a.label_set);
    }

    Loaded in;
    in.train = load_corpus(a.train);
    in.dev = load_corpus(a.dev);
    if (expected && in.train.label_set != *expected)
        throw DataError("--label-set " + a.label_set + " conflicts with training corpus label set '" +
                        in.train.label_set.name() + "'");
    in.table = table_for(a, in.train, in.dev);
    std::tie(in.dpi, in.dpg) = hyperparams_from(a, in.table->dim());
    return in;
}

TrainProgress progress_printer(std::ostream& out, std::string prefix = {}) {
    return [&out, prefix](const std::string& stage, const EpochStats& s) {
        out << prefix << stage << " epoch " << s.epoch << " loss " << std::fixed << std::setprecision(6)
            << s.mean_loss << " acc " << std::setprecision(4) << s.accuracy << '\n';
        out.unsetf(std::ios::floatfield);
    };
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write '" + path.string() + "'");
    f << text;
    if (!f) throw DataError("write failed for '" + path.string() + "'");
}

int cmd_gen(const GenArgs& a, std::ostream& out) {
    if (a.profile.empty() == a.grammar.empty()) throw UsageError("give exactly one of --profile or --grammar");
    if (a.n == 0) throw UsageError("--n must be at least 1");
    const auto grammar = a.grammar.empty() ? builtin_grammar(a.profile) : load_grammar(a.grammar);
    const auto corpus = generate_corpus(grammar, a.n, a.seed);
    save_corpus(corpus, a.out);
    out << "wrote " << corpus.sentences.size() << " sentences (" << corpus.annotation_count()
        << " dropped pronouns, label set " << corpus.label_set.name() << ") to " << a.out << '\n';
    return ok;
}

int cmd_split(const SplitArgs& a, std::ostream& out) {
    const auto corpus = load_corpus(a.in);
    const auto parts = split_corpus(corpus, a.seed);
    fs::create_directories(a.out_dir);
    const fs::path dir(a.out_dir);
    save_corpus(parts.train, dir / "train.jsonl");
    save_corpus(parts.dev, dir / "dev.jsonl");
    save_corpus(parts.test, dir / "test.jsonl");
    out << "split " << corpus.sentences.size() << " sentences into train " << parts.train.sentences.size()
        << ", dev " << parts.dev.sentences.size() << ", test " << parts.test.sentences.size() << " under "
        << a.out_dir << '\n';
    return ok;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
    if (a.out_model.empty()) throw UsageError("--out-model is required");
    auto in = load_training_inputs(a);
    const auto model = train_recovery(in.train, in.dev, in.table, in.dpi, in.dpg, progress_printer(out));
    save_recovery_model(model, a.out_model);
    out << "dev DPI accuracy " << model.metadata.at("dev_dpi_accuracy") << " (threshold "
        << model.metadata.at("threshold") << "), dev DPG accuracy " << model.metadata.at("dev_dpg_accuracy")
        << '\n'
        << "saved model to " << a.out_model << '\n';
    return ok;
}

std::shared_ptr<const EmbeddingTable> override_table(const std::string& path) {
    if (path.empty()) return nullptr;
    return std::make_shared<const EmbeddingTable>(load_embeddings(path));
}

int cmd_recover(const RecoverArgs& a, std::ostream& out) {
    if (a.threshold && !(*a.threshold >= 0.0 && *a.threshold <= 1.0))
        throw UsageError("--threshold must be in [0, 1]");
    const auto model = load_recovery_model(a.model, override_table(a.embeddings));
    const auto corpus = load_corpus(a.in);
    const double threshold = a.threshold.value_or(model.threshold);
    std::vector<RecoveredSentence> result;
    std::size_t found = 0;
    for (const auto& s : corpus.sentences) {
        result.push_back(recover(model, s.tokens, threshold));
        found += result.back().recovered.size();
    }
    auto meta = corpus.metadata;
    std::ostringstream t;
    t << threshold;
    meta["threshold"] = t.str();
    save_recovered(result, model.label_set, a.out, meta);
    out << "recovered " << found << " pronouns in " << result.size() << " sentences -> " << a.out << '\n';
    return ok;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    if (a.positions != "gold" && a.positions != "predicted")
        throw UsageError("--positions must be gold or predicted");
    const auto model = load_recovery_model(a.model, override_table(a.embeddings));
    const auto corpus = load_corpus(a.test);
    if (corpus.label_set != model.label_set)
        throw DataError("test corpus label set '" + corpus.label_set.name() + "' differs from model label set '" +
                        model.label_set.name() + "'");
    const auto dpi = evaluate_dpi(model, corpus);
    const auto dpg = evaluate_dpg(model, corpus, a.positions == "gold" ? Positions::gold : Positions::predicted);
    out << report_to_text(dpi) << report_to_text(dpg);
    if (!a.report.empty()) {
        nlohmann::ordered_json j;
        j["dpi"] = nlohmann::ordered_json::parse(report_to_json(dpi));
        j["dpg"] = nlohmann::ordered_json::parse(report_to_json(dpg));
        write_text(a.report, j.dump(2) + '\n');
    }
    return ok;
}

nlohmann::ordered_json significance_json(const SignificanceResult& r) {
    nlohmann::ordered_json j;
    j["t"] = std::isfinite(r.statistic) ? nlohmann::ordered_json(r.statistic)
                                        : nlohmann::ordered_json(r.statistic > 0 ? "inf" : "-inf");
    j["df"] = r.df;
    j["p_value"] = r.p_value;
    j["significant"] = r.significant;
    if (!r.note.empty()) j["note"] = r.note;
    return j;
}

int cmd_compare(const TrainArgs& a, std::ostream& out) {
    if (!(a.alpha > 0.0 && a.alpha < 1.0)) throw UsageError("--alpha must be in (0, 1)");
    auto in = load_training_inputs(a);
    const auto test = a.test.empty() ? in.dev : load_corpus(a.test);
    if (test.label_set != in.train.label_set) throw DataError("test corpus uses a different label set");

    auto base_dpi = in.dpi;
    auto base_dpg = in.dpg;
    base_dpi.layer_count = 1;
    base_dpg.layer_count = 1;
    out << "training linear baseline (L=1)\n";
    const auto baseline = train_recovery(in.train, in.dev, in.table, base_dpi, base_dpg, progress_printer(out, "  "));
    out << "training MLP (DPI L=" << in.dpi.layer_count << ", DPG L=" << in.dpg.layer_count << ")\n";
    const auto mlp = train_recovery(in.train, in.dev, in.table, in.dpi, in.dpg, progress_printer(out, "  "));

    const auto b_dpi = evaluate_dpi(baseline, test);
    const auto m_dpi = evaluate_dpi(mlp, test);
    const auto b_dpg = evaluate_dpg(baseline, test, Positions::gold);
    const auto m_dpg = evaluate_dpg(mlp, test, Positions::gold);
    const auto s_dpi = paired_significance(m_dpi.correct, b_dpi.correct, a.alpha);
    const auto s_dpg = paired_significance(m_dpg.correct, b_dpg.correct, a.alpha);

    auto line = [&](const char* task, const EvalReport& b, const EvalReport& m, const SignificanceResult& s) {
        out << std::left << std::setw(5) << task << std::right << " baseline " << std::fixed << std::setprecision(4)
            << b.accuracy << "  mlp " << m.accuracy << "  t " << std::setprecision(3) << s.statistic << "  p "
            << std::setprecision(6) << s.p_value << (s.significant ? "  significant" : "  not significant") << '\n';
        out.unsetf(std::ios::floatfield);
    };
    line("DPI", b_dpi, m_dpi, s_dpi);
    line("DPG", b_dpg, m_dpg, s_dpg);

    if (!a.report.empty()) {
        nlohmann::ordered_json j;
        j["alpha"] = a.alpha;
        for (auto [task, b, m, s] : {std::tuple{"dpi", &b_dpi, &m_dpi, &s_dpi}, std::tuple{"dpg", &b_dpg, &m_dpg, &s_dpg}}) {
            j[task]["baseline_accuracy"] = b->accuracy;
            j[task]["mlp_accuracy"] = m->accuracy;
            j[task]["n"] = m->n;
            j[task]["significance"] = significance_json(*s);
        }
        write_text(a.report, j.dump(2) + '\n');
    }
    return ok;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Dropped pronoun recovery: generate, split, train, recover, evaluate, compare", "dpr"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic annotated corpus");
    gen_cmd->add_option("--profile", gen.profile, "ontonotes-like | zhidao-like | separable");
    gen_cmd->add_option("--grammar", gen.grammar, "Grammar JSON file");
    gen_cmd->add_option("--n", gen.n, "Number of sentences")->required()->check(CLI::PositiveNumber);
    gen_cmd->add_option("--seed", gen.seed, "Generator seed");
    gen_cmd->add_option("--out", gen.out, "Output corpus (JSONL)")->required();

    SplitArgs split;
    auto* split_cmd = app.add_subcommand("split", "Split a corpus 3:1:1 into train/dev/test");
    split_cmd->add_option("--in", split.in, "Input corpus")->required();
    split_cmd->add_option("--seed", split.seed, "Shuffle seed");
    split_cmd->add_option("--out-dir", split.out_dir, "Directory for train/dev/test.jsonl")->required();

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "Train the DPI and DPG networks");
    add_train_options(*train_cmd, train);
    train_cmd->add_option("--out-model", train.out_model, "Output model file")->required();

    RecoverArgs rec;
    auto* rec_cmd = app.add_subcommand("recover", "Recover dropped pronouns in a corpus");
    rec_cmd->add_option("--model", rec.model, "Model file")->required();
    rec_cmd->add_option("--in", rec.in, "Input corpus (annotations ignored)")->required();
    rec_cmd->add_option("--out", rec.out, "Output JSONL with confidences")->required();
    rec_cmd->add_option("--threshold", rec.threshold, "Override the tuned DPI threshold");
    rec_cmd->add_option("--embeddings", rec.embeddings, "Override the model's word2vec file");

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate DPI and DPG on an annotated corpus");
    eval_cmd->add_option("--model", ev.model, "Model file")->required();
    eval_cmd->add_option("--test", ev.test, "Annotated test corpus")->required();
    eval_cmd->add_option("--positions", ev.positions, "gold | predicted");
    eval_cmd->add_option("--report", ev.report, "Write the JSON report here");
    eval_cmd->add_option("--embeddings", ev.embeddings, "Override the model's word2vec file");

    TrainArgs cmp;
    auto* cmp_cmd = app.add_subcommand("compare", "Linear baseline (L=1) vs configured MLP with a paired t-test");
    add_train_options(*cmp_cmd, cmp);
    cmp_cmd->add_option("--alpha", cmp.alpha, "Significance level");
    cmp_cmd->add_option("--test", cmp.test, "Evaluation corpus (defaults to --dev)");
    cmp_cmd->add_option("--report", cmp.report, "Write the JSON comparison here");

    std::vector<std::string> argv_storage{"dpr"};
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : argv_storage) argv.push_back(s.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : usage_error;
    }

    try {
        if (gen_cmd->parsed()) return cmd_gen(gen, out);
        if (split_cmd->parsed()) return cmd_split(split, out);
        if (train_cmd->parsed()) return cmd_train(train, out);
        if (rec_cmd->parsed()) return cmd_recover(rec, out);
        if (eval_cmd->parsed()) return cmd_eval(ev, out);
        if (cmp_cmd->parsed()) return cmd_compare(cmp, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return usage_error;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << '\n';
        return numeric_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return data_error;
    }
    return usage_error;
}

} // namespace dpr::cli
