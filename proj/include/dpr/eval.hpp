#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dpr/corpus.hpp"
#include "dpr/pipeline.hpp"

namespace dpr {

struct ClassMetrics {
    std::string label;
    double precision = 0.0; // 0 when the class is never predicted
    double recall = 0.0;    // 0 when the class never occurs
    double f1 = 0.0;
    std::size_t support = 0;
};

struct EvalReport {
    std::string task;
    std::string note;
    std::vector<std::string> class_names;
    std::vector<std::vector<std::size_t>> confusion; // [gold][predicted]
    std::vector<ClassMetrics> per_class;
    std::vector<std::uint8_t> correct; // per evaluation item, in corpus order
    double accuracy = 0.0;
    std::size_t n = 0;
};

/// Builds confusion, per-class metrics and accuracy from parallel gold and
/// predicted class indices.
EvalReport make_report(std::string task, std::vector<std::string> class_names,
                       std::span<const std::size_t> gold, std::span<const std::size_t> predicted,
                       std::string note = {});

/// Every gap of every sentence; gold positive iff annotated.
EvalReport evaluate_dpi(const RecoveryModel& model, const Corpus& corpus);

enum class Positions { gold, predicted };

/// gold: DPG scored on annotated gaps only.
/// predicted: items are the union of gold gaps and DPI-accepted gaps; a
/// missed or spurious gap counts as an error through an extra "none" class.
EvalReport evaluate_dpg(const RecoveryModel& model, const Corpus& corpus, Positions positions);

/// Scores a bare DPG network on gold positions.
EvalReport evaluate_dpg(const MlpModel& dpg, const Corpus& corpus, const EmbeddingTable& table,
                        std::size_t window);

struct SignificanceResult {
    double statistic = 0.0; // paired t
    double p_value = 1.0;   // two-sided
    std::size_t df = 0;
    bool significant = false;
    std::string note;
};

/// Paired t-test on d_i = a_i - b_i with n-1 degrees of freedom. When all
/// differences are equal the t statistic is 0 (all zero) or +/-inf.
SignificanceResult paired_significance(std::span<const double> scores_a,
                                       std::span<const double> scores_b, double alpha = 0.05);
SignificanceResult paired_significance(std::span<const std::uint8_t> correct_a,
                                       std::span<const std::uint8_t> correct_b,
                                       double alpha = 0.05);

/// Two-sided tail P(|T| >= |t|) of Student's t with `df` degrees of freedom.
double student_t_two_sided_p(double t, double df);
/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

std::string report_to_json(const EvalReport& report, int indent = 2);
/// Aligned plain-text summary: accuracy line, per-class table, confusion.
std::string report_to_text(const EvalReport& report);

} // namespace dpr
