#include "mtlre/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace mtlre {

using json = nlohmann::ordered_json;

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> labels_)
    : labels(std::move(labels_)) {
    if (labels.empty()) throw ValidationError("confusion matrix needs >= 1 class");
    counts.assign(labels.size(), std::vector<Index>(labels.size(), 0));
}

void ConfusionMatrix::add(Index gold, Index predicted, Index count) {
    if (gold < 0 || gold >= size() || predicted < 0 || predicted >= size()) {
        throw ValidationError("confusion cell (" + std::to_string(gold) + "," +
                              std::to_string(predicted) + ") outside " +
                              std::to_string(size()) + " classes");
    }
    if (count < 0) throw ValidationError("confusion counts cannot be negative");
    counts[gold][predicted] += count;
}

Index ConfusionMatrix::total() const {
    Index t = 0;
    for (const auto& row : counts) t += std::accumulate(row.begin(), row.end(), Index{0});
    return t;
}

Index ConfusionMatrix::gold_support(Index cls) const {
    return std::accumulate(counts[cls].begin(), counts[cls].end(), Index{0});
}

TaskMetrics macro_prf(const ConfusionMatrix& confusion) {
    if (confusion.total() == 0) {
        throw ValidationError("cannot compute metrics over zero scored examples");
    }
    const Index c = confusion.size();
    TaskMetrics out;
    out.total_examples = confusion.total();
    double p_sum = 0, r_sum = 0, f_sum = 0, wf_sum = 0;
    Index present = 0, support_sum = 0;
    for (Index k = 0; k < c; ++k) {
        Index tp = confusion.counts[k][k];
        Index gold = confusion.gold_support(k);
        Index predicted = 0;
        for (Index g = 0; g < c; ++g) predicted += confusion.counts[g][k];
        ClassMetrics m;
        m.label = confusion.labels[k];
        m.support = gold;
        m.precision = predicted > 0 ? double(tp) / double(predicted) : 0.0;
        m.recall = gold > 0 ? double(tp) / double(gold) : 0.0;
        m.f1 = (m.precision + m.recall) > 0.0
                   ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                   : 0.0;
        if (gold > 0) {
            present += 1;
            p_sum += m.precision;
            r_sum += m.recall;
            f_sum += m.f1;
            wf_sum += double(gold) * m.f1;
            support_sum += gold;
        }
        out.per_class.push_back(std::move(m));
    }
    // total > 0 guarantees at least one class has gold support
    out.macro_precision = p_sum / double(present);
    out.macro_recall = r_sum / double(present);
    out.macro_f1 = f_sum / double(present);
    out.weighted_f1 = wf_sum / double(support_sum);
    return out;
}

std::vector<PrPoint> pr_curve_points(const std::vector<double>& scores,
                                     const std::vector<int>& gold_positive) {
    if (scores.size() != gold_positive.size()) {
        throw ValidationError("scores and gold labels differ in length");
    }
    if (scores.empty()) throw ValidationError("precision-recall sweep needs >= 1 example");
    Index positives = 0;
    for (int g : gold_positive) {
        if (g != 0 && g != 1) {
            throw ValidationError("gold labels for a precision-recall sweep must be 0 or 1");
        }
        positives += g;
    }
    if (positives == 0) {
        throw ValidationError("precision-recall sweep needs >= 1 positive example");
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b];
    });

    std::vector<PrPoint> points;
    Index tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        double threshold = scores[order[i]];
        // everything tied at this score crosses the threshold together
        while (i < order.size() && scores[order[i]] == threshold) {
            (gold_positive[order[i]] ? tp : fp) += 1;
            ++i;
        }
        PrPoint p;
        p.recall = double(tp) / double(positives);
        p.precision = double(tp) / double(tp + fp);
        points.push_back(p);
        if (tp == positives) break;  // lower thresholds only dilute precision
    }
    return points;
}

std::string format_double(double value) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc{}) throw NumericError("double formatting failed");
    return std::string(buf, end);
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char ch : s) {
        quoted += ch;
        if (ch == '"') quoted += '"';
    }
    quoted += '"';
    return quoted;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + path);
    return os;
}

}  // namespace

void write_pr_points_csv(const std::string& path, const std::vector<PrPoint>& points) {
    std::ofstream os = open_out(path);
    os << "recall,precision\n";
    for (const PrPoint& p : points) {
        os << format_double(p.recall) << "," << format_double(p.precision) << "\n";
    }
    os.flush();
    if (!os) throw IoError("write failed: " + path);
}

void write_metrics_json(const std::string& path, const TaskMetrics& metrics,
                        const ConfusionMatrix& confusion) {
    json j;
    j["format_version"] = 1;
    j["total_examples"] = metrics.total_examples;
    j["labels"] = confusion.labels;
    json rows = json::array();
    for (const auto& row : confusion.counts) rows.push_back(row);
    j["confusion"] = rows;
    json per_class = json::array();
    for (const ClassMetrics& m : metrics.per_class) {
        json cj;
        cj["label"] = m.label;
        cj["precision"] = m.precision;
        cj["recall"] = m.recall;
        cj["f1"] = m.f1;
        cj["support"] = m.support;
        per_class.push_back(cj);
    }
    j["per_class"] = per_class;
    j["macro"] = {{"precision", metrics.macro_precision},
                  {"recall", metrics.macro_recall},
                  {"f1", metrics.macro_f1}};
    j["weighted"] = {{"f1", metrics.weighted_f1}};
    std::ofstream os = open_out(path);
    os << j.dump(2) << "\n";
    os.flush();
    if (!os) throw IoError("write failed: " + path);
}

void export_attention(const RelationExample& example, MtlModel& model,
                      const std::string& task_id, const std::string& path) {
    if (!model.config.uses_attention()) {
        throw ValidationError("variant " + variant_name(model.config.variant) +
                              " has no attention weights to export");
    }
    Index k = model.task_index(task_id);
    const std::vector<std::string>& labels = model.heads[k].info.labels;
    RelationExample masked = mask_entities(example);
    masked.label = labels[0];  // gold plays no role here
    std::mt19937_64 batch_rng(0);
    std::vector<Batch> batches = make_batches({masked}, labels, model.vocab, 1,
                                              model.config.max_sentence_length, batch_rng);
    if (batches.empty()) {
        throw ValidationError("example '" + example.example_id +
                              "': entity spans too far apart for max sentence length " +
                              std::to_string(model.config.max_sentence_length));
    }
    const Batch& batch = batches[0];
    Tape tape;
    std::mt19937_64 unused(0);
    ForwardResult fwd =
        forward_task(tape, batch, task_id, model, ForwardMode::infer, unused);
    if (fwd.attention.empty()) {
        throw ValidationError("forward pass produced no attention weights");
    }
    const Mat& weights = fwd.attention[0];

    std::ofstream os = open_out(path);
    os << "aspect";
    for (Index t = 0; t < batch.cols; ++t) {
        os << "," << csv_field(model.vocab.token(batch.token_at(0, t)));
    }
    os << "\n";
    for (Index a = 0; a < weights.rows(); ++a) {
        os << a;
        for (Index t = 0; t < weights.cols(); ++t) {
            os << "," << format_double(weights(a, t));
        }
        os << "\n";
    }
    os.flush();
    if (!os) throw IoError("write failed: " + path);
}

}  // namespace mtlre
