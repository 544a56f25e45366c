#pragma once

#include <string>
#include <vector>

#include "mtlre/model.hpp"

namespace mtlre {

// Count table over an ordered label list.  Rows are gold classes, columns
// are predicted classes.
struct ConfusionMatrix {
    std::vector<std::string> labels;
    std::vector<std::vector<Index>> counts;

    explicit ConfusionMatrix(std::vector<std::string> labels_);

    Index size() const { return static_cast<Index>(labels.size()); }
    void add(Index gold, Index predicted, Index count = 1);
    Index total() const;
    Index gold_support(Index cls) const;
};

struct ClassMetrics {
    std::string label;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    Index support = 0;  // gold count
};

struct TaskMetrics {
    std::vector<ClassMetrics> per_class;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    double weighted_f1 = 0.0;  // gold-support-weighted mean of per-class F1
    Index total_examples = 0;
};

// Per-class P = TP/(TP+FP) and R = TP/(TP+FN), each 0 when its denominator
// is 0; F1 is the harmonic mean (0 when P+R = 0).  Macro values average only
// classes that actually occur in the gold standard, so a never-gold class
// cannot move the score.
TaskMetrics macro_prf(const ConfusionMatrix& confusion);

struct PrPoint {
    double recall = 0.0;
    double precision = 0.0;
};

// Precision/recall pairs for a binary task, one point per distinct score
// threshold walked in descending order (tied scores enter together).  The
// sweep stops at the first point reaching recall 1.0.  `gold_positive`
// entries must be 0 or 1 and at least one must be 1.
std::vector<PrPoint> pr_curve_points(const std::vector<double>& scores,
                                     const std::vector<int>& gold_positive);

// Comma-separated table "recall,precision" with one point per line.
void write_pr_points_csv(const std::string& path, const std::vector<PrPoint>& points);

// Structured metrics report: per-class block, macro block, weighted block,
// confusion counts, schema version.
void write_metrics_json(const std::string& path, const TaskMetrics& metrics,
                        const ConfusionMatrix& confusion);

// Attention heatmap for one example: header "aspect,<token>,...", then one
// row per aspect with that aspect's weight on each token.  The example is
// masked and truncated exactly as inference would; weights per row sum to 1.
// Variants without attention refuse.
void export_attention(const RelationExample& example, MtlModel& model,
                      const std::string& task_id, const std::string& path);

// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

}  // namespace mtlre
