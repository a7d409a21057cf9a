#include "dpr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "dpr/hypothesis.hpp"

namespace dpr {

EvalReport make_report(std::string task, std::vector<std::string> class_names, std::span<const std::size_t> gold,
                       std::span<const std::size_t> predicted, std::string note) {
    if (gold.size() != predicted.size()) throw UsageError("gold and predicted lengths differ");
    const std::size_t k = class_names.size();
    EvalReport r;
    r.task = std::move(task);
    r.note = std::move(note);
    r.class_names = std::move(class_names);
    r.confusion.assign(k, std::vector<std::size_t>(k, 0));
    r.n = gold.size();
    r.correct.reserve(r.n);
    std::size_t trace = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (gold[i] >= k || predicted[i] >= k) throw UsageError("class index outside the report's classes");
        ++r.confusion[gold[i]][predicted[i]];
        r.correct.push_back(gold[i] == predicted[i]);
        trace += gold[i] == predicted[i];
    }
    r.accuracy = r.n == 0 ? 0.0 : static_cast<double>(trace) / static_cast<double>(r.n);

    for (std::size_t c = 0; c < k; ++c) {
        std::size_t row = 0, col = 0;
        for (std::size_t j = 0; j < k; ++j) {
            row += r.confusion[c][j];
            col += r.confusion[j][c];
        }
        ClassMetrics m;
        m.label = r.class_names[c];
        m.support = row;
        const double tp = static_cast<double>(r.confusion[c][c]);
        m.precision = col == 0 ? 0.0 : tp / static_cast<double>(col);
        m.recall = row == 0 ? 0.0 : tp / static_cast<double>(row);
        m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
        r.per_class.push_back(std::move(m));
    }
    return r;
}

namespace {

std::vector<std::string> label_names(const LabelSet& labels) {
    std::vector<std::string> names;
    for (auto tag : labels.labels()) names.emplace_back(tag_name(tag));
    return names;
}

void check_compatible(const RecoveryModel& model, const Corpus& corpus) {
    if (model.label_set != corpus.label_set)
        throw DataError("model label set '" + model.label_set.name() + "' differs from corpus label set '" +
                        corpus.label_set.name() + "'");
}

} // namespace

EvalReport evaluate_dpi(const RecoveryModel& model, const Corpus& corpus) {
    std::vector<std::size_t> gold, pred;
    for (const auto& s : corpus.sentences) {
        for (std::size_t g = 0; g < s.gap_count(); ++g) {
            gold.push_back(s.label_at(g) ? kDropped : kNotDropped);
            pred.push_back(predict_dpi(model, s.tokens, g) >= model.threshold ? kDropped : kNotDropped);
        }
    }
    std::ostringstream note;
    note << "every gap of every sentence; predicted dropped iff P(dropped) >= " << model.threshold;
    return make_report("dpi", {"not_dropped", "dropped"}, gold, pred, note.str());
}

EvalReport evaluate_dpg(const RecoveryModel& model, const Corpus& corpus, Positions positions) {
    check_compatible(model, corpus);
    std::vector<std::size_t> gold, pred;
    if (positions == Positions::gold) {
        for (const auto& s : corpus.sentences) {
            for (const auto& a : s.annotations) {
                gold.push_back(*corpus.label_set.index_of(a.tag));
                pred.push_back(predict_dpg(model, s.tokens, a.gap).class_index);
            }
        }
        return make_report("dpg_gold", label_names(corpus.label_set), gold, pred,
                           "annotated gaps only; accuracy = correct labels / annotated gaps");
    }

    const std::size_t none = corpus.label_set.size();
    for (const auto& s : corpus.sentences) {
        for (std::size_t g = 0; g < s.gap_count(); ++g) {
            const auto gold_tag = s.label_at(g);
            const bool accepted = predict_dpi(model, s.tokens, g) >= model.threshold;
            if (!gold_tag && !accepted) continue;
            gold.push_back(gold_tag ? *corpus.label_set.index_of(*gold_tag) : none);
            pred.push_back(accepted ? predict_dpg(model, s.tokens, g).class_index : none);
        }
    }
    auto names = label_names(corpus.label_set);
    names.emplace_back("none");
    return make_report("dpg_predicted", std::move(names), gold, pred,
                       "items = gold gaps union DPI-accepted gaps; a missed gold gap (predicted none) or a "
                       "spurious gap (gold none) is an error; accuracy = correct / items");
}

EvalReport evaluate_dpg(const MlpModel& dpg, const Corpus& corpus, const EmbeddingTable& table, std::size_t window) {
    const auto instances = build_dpg_instances(corpus, table, window);
    std::vector<std::size_t> gold, pred;
    for (const auto& inst : instances) {
        gold.push_back(inst.label);
        pred.push_back(argmax(predict_proba(dpg, inst.feature)));
    }
    return make_report("dpg_gold", label_names(corpus.label_set), gold, pred,
                       "annotated gaps only; accuracy = correct labels / annotated gaps");
}

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0 && b > 0.0)) throw UsageError("incomplete_beta needs a, b > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;

    // Continued fraction (modified Lentz), evaluated on whichever side
    // converges quickly.
    auto continued_fraction = [](double a, double b, double x) {
        constexpr double tiny = 1e-300;
        constexpr double eps = 1e-15;
        double c = 1.0;
        double d = 1.0 - (a + b) * x / (a + 1.0);
        if (std::fabs(d) < tiny) d = tiny;
        d = 1.0 / d;
        double h = d;
        for (int m = 1; m <= 10000; ++m) {
            const double m2 = 2.0 * m;
            double aa = m * (b - m) * x / ((a - 1.0 + m2) * (a + m2));
            d = 1.0 + aa * d;
            if (std::fabs(d) < tiny) d = tiny;
            c = 1.0 + aa / c;
            if (std::fabs(c) < tiny) c = tiny;
            d = 1.0 / d;
            h *= d * c;
            aa = -(a + m) * (a + b + m) * x / ((a + m2) * (a + 1.0 + m2));
            d = 1.0 + aa * d;
            if (std::fabs(d) < tiny) d = tiny;
            c = 1.0 + aa / c;
            if (std::fabs(c) < tiny) c = tiny;
            d = 1.0 / d;
            const double delta = d * c;
            h *= delta;
            if (std::fabs(delta - 1.0) < eps) break;
        }
        return h;
    };

    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * continued_fraction(a, b, x) / a;
    return 1.0 - front * continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
    if (!(df > 0.0)) throw UsageError("degrees of freedom must be positive");
    if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
    if (std::isinf(t)) return 0.0;
    return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

SignificanceResult paired_significance(std::span<const double> a, std::span<const double> b, double alpha) {
    if (a.size() != b.size())
        throw UsageError("paired test needs equal lengths, got " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()));
    if (a.size() < 2) throw UsageError("paired test needs at least 2 items");
    if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must be in (0, 1)");

    const double n = static_cast<double>(a.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
    mean /= n;
    double ss = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double e = (a[i] - b[i]) - mean;
        ss += e * e;
    }
    const double var = ss / (n - 1.0);

    SignificanceResult r;
    r.df = a.size() - 1;
    if (var == 0.0) {
        if (mean == 0.0) {
            r.statistic = 0.0;
            r.p_value = 1.0;
            r.note = "zero variance: all paired differences are 0";
        } else {
            r.statistic = mean > 0.0 ? std::numeric_limits<double>::infinity()
                                     : -std::numeric_limits<double>::infinity();
            r.p_value = 0.0;
            r.note = "zero variance: every paired difference equals the same nonzero value";
        }
    } else {
        r.statistic = mean / std::sqrt(var / n);
        r.p_value = student_t_two_sided_p(r.statistic, static_cast<double>(r.df));
    }
    r.significant = r.p_value < alpha;
    return r;
}

SignificanceResult paired_significance(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b,
                                       double alpha) {
    std::vector<double> da(a.begin(), a.end()), db(b.begin(), b.end());
    return paired_significance(std::span<const double>(da), std::span<const double>(db), alpha);
}

std::string report_to_json(const EvalReport& r, int indent) {
    nlohmann::ordered_json j;
    j["task"] = r.task;
    j["note"] = r.note;
    j["n"] = r.n;
    j["accuracy"] = r.accuracy;
    j["class_names"] = r.class_names;
    j["per_class"] = nlohmann::ordered_json::array();
    for (const auto& m : r.per_class) {
        nlohmann::ordered_json c;
        c["label"] = m.label;
        c["precision"] = m.precision;
        c["recall"] = m.recall;
        c["f1"] = m.f1;
        c["support"] = m.support;
        j["per_class"].push_back(std::move(c));
    }
    j["confusion"] = r.confusion;
    return j.dump(indent);
}

std::string report_to_text(const EvalReport& r) {
    std::ostringstream out;
    out << r.task << ": accuracy " << std::fixed << std::setprecision(4) << r.accuracy << " over " << r.n
        << " items\n";
    if (!r.note.empty()) out << "  (" << r.note << ")\n";
    std::size_t width = 5;
    for (const auto& name : r.class_names) width = std::max(width, name.size());
    out << "  " << std::left << std::setw(static_cast<int>(width)) << "class" << std::right << std::setw(10)
        << "precision" << std::setw(10) << "recall" << std::setw(10) << "f1" << std::setw(10) << "support" << '\n';
    for (const auto& m : r.per_class)
        out << "  " << std::left << std::setw(static_cast<int>(width)) << m.label << std::right << std::setw(10)
            << m.precision << std::setw(10) << m.recall << std::setw(10) << m.f1 << std::setw(10) << m.support
            << '\n';
    out << "  confusion (rows gold, columns predicted):\n";
    for (std::size_t i = 0; i < r.confusion.size(); ++i) {
        out << "  " << std::left << std::setw(static_cast<int>(width)) << r.class_names[i] << std::right;
        for (auto c : r.confusion[i]) out << std::setw(6) << c;
        out << '\n';
    }
    return out.str();
}

} // namespace dpr
