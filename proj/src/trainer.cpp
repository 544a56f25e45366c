#include "mtlre/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>

#include <json.hpp>

#include "mtlre/init.hpp"
#include "mtlre/log.hpp"
#include "mtlre/ops.hpp"

namespace mtlre {

using json = nlohmann::ordered_json;

void TrainConfig::validate() const {
    std::vector<std::string> problems;
    if (epochs_max < 0) problems.push_back("epochs_max must be >= 0");
    if (batch_size < 1) problems.push_back("batch_size must be >= 1");
    if (!(learning_rate > 0.0)) problems.push_back("learning_rate must be positive");
    if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0)) {
        problems.push_back("adam_beta1 must lie in (0,1)");
    }
    if (!(adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
        problems.push_back("adam_beta2 must lie in (0,1)");
    }
    if (!(adam_epsilon > 0.0)) problems.push_back("adam_epsilon must be positive");
    if (discriminator_pretrain_epochs < 0) {
        problems.push_back("discriminator_pretrain_epochs must be >= 0");
    }
    if (validation_fraction < 0.0 || validation_fraction >= 1.0) {
        problems.push_back("validation_fraction must lie in [0,1)");
    }
    if (!problems.empty()) {
        std::string msg = "train config invalid:";
        for (const std::string& p : problems) msg += "\n  - " + p;
        throw ValidationError(msg);
    }
}

AdamState::AdamState(double learning_rate_, double beta1_, double beta2_,
                     double epsilon_)
    : learning_rate(learning_rate_), beta1(beta1_), beta2(beta2_), epsilon(epsilon_) {}

AdamState::AdamState(const TrainConfig& config)
    : AdamState(config.learning_rate, config.adam_beta1, config.adam_beta2,
                config.adam_epsilon) {}

void adam_step(Tape& tape, std::span<Parameter* const> params, AdamState& state) {
    for (Parameter* p : params) {
        if (!p->trainable) continue;
        Vec g = tape.gradient(*p);
        if (!g.allFinite()) {
            throw NumericError("gradient for parameter '" + p->name +
                               "' is not finite");
        }
        if (!p->frozen_rows.empty() && p->shape.rank() == 2) {
            Index cols = p->shape.cols();
            for (Index r : p->frozen_rows) g.segment(r * cols, cols).setZero();
        }
        AdamState::Slot& slot = state.slots[p];
        if (slot.m.size() == 0) {
            slot.m = Vec::Zero(g.size());
            slot.v = Vec::Zero(g.size());
        }
        slot.step += 1;
        slot.m = state.beta1 * slot.m + (1.0 - state.beta1) * g;
        slot.v = (state.beta2 * slot.v.array() +
                  (1.0 - state.beta2) * g.array().square())
                     .matrix();
        double c1 = 1.0 - std::pow(state.beta1, double(slot.step));
        double c2 = 1.0 - std::pow(state.beta2, double(slot.step));
        p->value.array() -= state.learning_rate * (slot.m.array() / c1) /
                            ((slot.v.array() / c2).sqrt() + state.epsilon);
    }
}

namespace {

// Per-task shuffled batch queues plus a cursor, so tasks can interleave.
struct BatchStreams {
    std::vector<std::vector<Batch>> per_task;  // aligned with model.tasks
    std::vector<std::size_t> cursor;

    bool exhausted() const {
        for (std::size_t k = 0; k < per_task.size(); ++k) {
            if (cursor[k] < per_task[k].size()) return false;
        }
        return true;
    }
};

BatchStreams build_streams(MtlModel& model, std::span<const TaskCorpus> corpora,
                           Index batch_size, std::mt19937_64& rng) {
    BatchStreams s;
    s.per_task.resize(model.tasks.size());
    s.cursor.assign(model.tasks.size(), 0);
    for (const TaskCorpus& tc : corpora) {
        Index k = model.task_index(tc.info.task_id);
        if (tc.examples.empty()) {
            MTLRE_LOG_AT(LogLevel::warn)
                << "task '" << tc.info.task_id << "' has no training examples; skipped";
            continue;
        }
        s.per_task[k] = make_batches(tc.examples, model.tasks[k].labels, model.vocab,
                                     batch_size, model.config.max_sentence_length, rng);
    }
    return s;
}

// Raw-Eigen pass through the discriminator feed-forward stack; used for
// accuracy reporting so no graph is built.
Index discriminator_hits(const MtlModel& model, const Mat& shared_features,
                         Index task) {
    const ProjectionParameters& d = *model.discriminator;
    Mat h = (shared_features * d.W1.matrix()).rowwise() +
            d.b1.matrix().row(0);
    h = h.cwiseMax(0.0);
    Mat logits = (h * d.W2.matrix()).rowwise() + d.b2.matrix().row(0);
    Index hits = 0;
    for (Index r = 0; r < logits.rows(); ++r) {
        Index best = 0;
        for (Index c = 1; c < logits.cols(); ++c) {
            if (logits(r, c) > logits(r, best)) best = c;
        }
        if (best == task) hits += 1;
    }
    return hits;
}

void check_tasks_match(const MtlModel& model, std::span<const TaskCorpus> corpora) {
    for (const TaskCorpus& tc : corpora) {
        model.task_index(tc.info.task_id);  // throws LookupError when unknown
    }
}

}  // namespace

double pretrain_discriminator(MtlModel& model, std::span<const TaskCorpus> corpora,
                              const TrainConfig& config, std::mt19937_64& rng) {
    config.validate();
    if (!model.discriminator) {
        throw ValidationError("variant " + variant_name(model.config.variant) +
                              " has no discriminator to pre-train");
    }
    if (model.task_count() < 2) {
        throw ValidationError("discriminator pre-training needs >= 2 tasks");
    }
    check_tasks_match(model, corpora);
    AdamState state(config);
    std::vector<Parameter*> disc = model.discriminator_parameters();
    double accuracy = 0.0;
    for (Index epoch = 0; epoch < config.discriminator_pretrain_epochs; ++epoch) {
        BatchStreams streams = build_streams(model, corpora, config.batch_size, rng);
        Index hits = 0, seen = 0;
        while (!streams.exhausted()) {
            for (Index k = 0; k < model.task_count(); ++k) {
                if (streams.cursor[k] >= streams.per_task[k].size()) continue;
                const Batch& batch = streams.per_task[k][streams.cursor[k]++];
                Tape tape;
                std::mt19937_64 no_dropout(0);
                ForwardResult fwd = forward_task(tape, batch, model.tasks[k].task_id,
                                                 model, ForwardMode::infer, no_dropout);
                Tensor loss =
                    adversarial_loss(tape, fwd.shared_features, k, model, false);
                tape.backward(loss);
                adam_step(tape, disc, state);
                hits += discriminator_hits(model, Mat(fwd.shared_features.matrix()), k);
                seen += batch.rows;
            }
        }
        accuracy = seen > 0 ? double(hits) / double(seen) : 0.0;
        MTLRE_LOG_AT(LogLevel::info)
            << "discriminator pre-train epoch " << epoch << " accuracy " << accuracy;
    }
    return accuracy;
}

EpochStats train_epoch(MtlModel& model, std::span<const TaskCorpus> corpora,
                       const TrainConfig& config, AdamState& state,
                       std::mt19937_64& rng) {
    config.validate();
    check_tasks_match(model, corpora);
    auto started = std::chrono::steady_clock::now();

    EpochStats stats;
    const Index k_count = model.task_count();
    stats.task_loss.assign(k_count, 0.0);
    stats.task_examples.assign(k_count, 0);
    BatchStreams streams = build_streams(model, corpora, config.batch_size, rng);

    double adv_sum = 0.0, total_sum = 0.0;
    Index adv_examples = 0, disc_hits = 0, all_examples = 0;
    while (!streams.exhausted()) {
        for (Index k = 0; k < k_count; ++k) {
            if (streams.cursor[k] >= streams.per_task[k].size()) continue;
            const Batch& batch = streams.per_task[k][streams.cursor[k]++];
            Tape tape;
            ForwardResult fwd = forward_task(tape, batch, model.tasks[k].task_id,
                                             model, ForwardMode::train, rng);
            Tensor ce = task_loss(fwd.probabilities, batch.labels);
            std::optional<Tensor> adv;
            if (model.discriminator) {
                adv = adversarial_loss(tape, fwd.shared_features, k, model, true);
            }
            std::vector<Tensor> losses{ce};
            Tensor loss = total_loss(tape, losses, adv, model.config.alpha,
                                     model.config.beta);
            if (fwd.redundancy.valid()) {
                loss = add(loss, scale(fwd.redundancy,
                                       model.config.attention_redundancy_penalty));
            }
            tape.backward(loss);
            adam_step(tape, model.step_parameters(k), state);

            stats.task_loss[k] += ce.scalar();
            stats.task_examples[k] += batch.rows;
            total_sum += loss.scalar();
            all_examples += batch.rows;
            if (adv) {
                adv_sum += adv->scalar();
                adv_examples += batch.rows;
                disc_hits +=
                    discriminator_hits(model, Mat(fwd.shared_features.matrix()), k);
            }
        }
    }
    for (Index k = 0; k < k_count; ++k) {
        if (stats.task_examples[k] > 0) stats.task_loss[k] /= stats.task_examples[k];
    }
    if (adv_examples > 0) {
        stats.adversarial_loss = adv_sum / adv_examples;
        stats.discriminator_accuracy = double(disc_hits) / double(adv_examples);
    }
    if (all_examples > 0) stats.total_loss = total_sum / all_examples;
    stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
            .count();
    return stats;
}

double evaluation_loss(MtlModel& model, std::span<const TaskCorpus> corpora,
                       Index batch_size) {
    double sum = 0.0;
    Index examples = 0;
    for (const TaskCorpus& tc : corpora) {
        if (tc.examples.empty()) continue;
        Index k = model.task_index(tc.info.task_id);
        std::mt19937_64 order_rng(0);  // order is irrelevant to the loss
        std::vector<Batch> batches =
            make_batches(tc.examples, model.tasks[k].labels, model.vocab, batch_size,
                         model.config.max_sentence_length, order_rng);
        for (const Batch& batch : batches) {
            Tape tape;
            std::mt19937_64 no_dropout(0);
            ForwardResult fwd = forward_task(tape, batch, tc.info.task_id, model,
                                             ForwardMode::infer, no_dropout);
            Tensor ce = task_loss(fwd.probabilities, batch.labels);
            sum += ce.scalar();
            examples += batch.rows;
        }
    }
    if (examples == 0) return std::numeric_limits<double>::quiet_NaN();
    return sum / examples;
}

double task_accuracy(MtlModel& model, const TaskCorpus& corpus) {
    if (corpus.examples.empty()) {
        throw ValidationError("accuracy over an empty corpus is undefined");
    }
    model.task_index(corpus.info.task_id);  // throws LookupError when unknown
    Index hits = 0;
    for (const RelationExample& ex : corpus.examples) {
        if (predict_label(ex, corpus.info.task_id, model) == ex.label) hits += 1;
    }
    return double(hits) / double(corpus.examples.size());
}

ConfusionMatrix score_task(MtlModel& model, const std::string& task_id,
                           const Corpus& corpus) {
    Index k = model.task_index(task_id);
    const std::vector<std::string>& labels = model.heads[k].info.labels;
    ConfusionMatrix confusion(labels);
    auto label_index = [&](const std::string& label, const std::string& example_id) {
        auto it = std::find(labels.begin(), labels.end(), label);
        if (it == labels.end()) {
            throw ValidationError("example '" + example_id + "': label '" + label +
                                  "' is not in task '" + task_id + "'");
        }
        return static_cast<Index>(it - labels.begin());
    };
    for (const RelationExample& ex : corpus) {
        Index gold = label_index(ex.label, ex.example_id);
        Index pred = label_index(predict_label(ex, task_id, model), ex.example_id);
        confusion.add(gold, pred);
    }
    return confusion;
}

namespace {

std::vector<Vec> snapshot_values(std::vector<Parameter*> params) {
    std::vector<Vec> out;
    out.reserve(params.size());
    for (Parameter* p : params) out.push_back(p->value);
    return out;
}

void restore_values(std::vector<Parameter*> params, const std::vector<Vec>& values) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

}  // namespace

TrainOutcome train_model(MtlModel& model, std::span<const TaskCorpus> corpora,
                         const TrainConfig& config, std::ostream* log) {
    config.validate();
    check_tasks_match(model, corpora);

    // Carve the epoch-selection slice off each task's pool.
    std::vector<TaskCorpus> train_part, validation_part;
    for (const TaskCorpus& tc : corpora) {
        Corpus shuffled = tc.examples;
        Index k = model.task_index(tc.info.task_id);
        std::mt19937_64 split_rng(
            derive_seed(config.seed, {0x51, static_cast<std::uint64_t>(k)}));
        shuffle_inplace(shuffled, split_rng);
        auto n_val = static_cast<std::size_t>(
            std::floor(config.validation_fraction * double(shuffled.size())));
        TaskCorpus val{tc.info, Corpus(shuffled.begin(), shuffled.begin() + n_val)};
        TaskCorpus train{tc.info, Corpus(shuffled.begin() + n_val, shuffled.end())};
        validation_part.push_back(std::move(val));
        train_part.push_back(std::move(train));
    }

    TrainOutcome outcome;
    if (model.discriminator) {
        if (model.task_count() >= 2) {
            std::mt19937_64 pre_rng(derive_seed(config.seed, {0x52}));
            outcome.pretrain_accuracy =
                pretrain_discriminator(model, train_part, config, pre_rng);
        } else {
            MTLRE_LOG_AT(LogLevel::warn)
                << "single task: the adversarial objective is degenerate and the "
                   "discriminator pre-train phase is skipped";
        }
    }

    AdamState state(config);
    bool any_validation = false;
    for (const TaskCorpus& tc : validation_part) any_validation |= !tc.examples.empty();

    std::vector<Vec> best_values;
    for (Index epoch = 0; epoch < config.epochs_max; ++epoch) {
        std::mt19937_64 epoch_rng(
            derive_seed(config.seed, {0x53, static_cast<std::uint64_t>(epoch)}));
        EpochStats stats = train_epoch(model, train_part, config, state, epoch_rng);
        stats.epoch = epoch;
        if (any_validation) {
            stats.validation_loss =
                evaluation_loss(model, validation_part, config.batch_size);
        }
        if (log) {
            json j;
            j["epoch"] = epoch;
            json tl = json::object();
            for (Index k = 0; k < model.task_count(); ++k) {
                tl[model.tasks[k].task_id] = stats.task_loss[k];
            }
            j["task_loss"] = tl;
            j["adversarial_loss"] = stats.adversarial_loss;
            j["discriminator_accuracy"] = stats.discriminator_accuracy;
            j["total_loss"] = stats.total_loss;
            if (any_validation) j["validation_loss"] = stats.validation_loss;
            j["wall_seconds"] = stats.wall_seconds;
            *log << j.dump() << "\n";
        }
        bool better = any_validation
                          ? (!(outcome.best_validation_loss <= stats.validation_loss))
                          : true;  // without validation the latest epoch wins
        if (outcome.history.empty() || better) {
            if (any_validation && !std::isnan(stats.validation_loss)) {
                outcome.best_validation_loss = stats.validation_loss;
            }
            outcome.best_epoch = epoch;
            best_values = snapshot_values(model.parameters());
        }
        outcome.history.push_back(std::move(stats));
    }
    if (!best_values.empty()) restore_values(model.parameters(), best_values);
    return outcome;
}

FoldPlan make_fold_plan(const Corpus& corpus, Index folds, std::uint64_t seed) {
    if (folds < 2) throw ValidationError("cross-validation needs >= 2 folds");
    std::vector<std::string> documents;
    std::set<std::string> seen;
    for (const RelationExample& ex : corpus) {
        if (seen.insert(ex.document_id).second) documents.push_back(ex.document_id);
    }
    if (static_cast<Index>(documents.size()) < folds) {
        throw ValidationError(
            "cross-validation over " + std::to_string(folds) + " folds needs >= " +
            std::to_string(folds) + " distinct documents, got " +
            std::to_string(documents.size()) +
            "; lower the fold count for corpora this small");
    }
    std::mt19937_64 rng(derive_seed(seed, {0x54}));
    shuffle_inplace(documents, rng);

    const auto n = static_cast<Index>(documents.size());
    FoldPlan plan;
    Index start = 0;
    for (Index f = 0; f < folds; ++f) {
        Index size = n / folds + (f < n % folds ? 1 : 0);
        FoldPlan::Fold fold;
        fold.test_documents.assign(documents.begin() + start,
                                   documents.begin() + start + size);
        fold.train_documents.assign(documents.begin(), documents.begin() + start);
        fold.train_documents.insert(fold.train_documents.end(),
                                    documents.begin() + start + size,
                                    documents.end());
        std::sort(fold.test_documents.begin(), fold.test_documents.end());
        std::sort(fold.train_documents.begin(), fold.train_documents.end());
        plan.folds.push_back(std::move(fold));
        start += size;
    }
    return plan;
}

CrossValidationResult run_cross_validation(const TaskCorpus& target,
                                           std::span<const TaskCorpus> auxiliary,
                                           const ModelFactory& factory,
                                           const TrainConfig& config,
                                           Index folds) {
    config.validate();
    CrossValidationResult result;
    result.plan = make_fold_plan(target.examples, folds, config.seed);

    for (Index f = 0; f < folds; ++f) {
        const FoldPlan::Fold& fold = result.plan.folds[f];
        std::set<std::string> test_docs(fold.test_documents.begin(),
                                        fold.test_documents.end());
        Corpus train_split, test_split;
        for (const RelationExample& ex : target.examples) {
            (test_docs.count(ex.document_id) ? test_split : train_split).push_back(ex);
        }
        std::uint64_t fold_seed =
            derive_seed(config.seed, {0x55, static_cast<std::uint64_t>(f)});
        std::vector<TaskCorpus> corpora{{target.info, std::move(train_split)}};
        for (const TaskCorpus& aux : auxiliary) corpora.push_back(aux);
        MtlModel model = factory(fold_seed, corpora);
        TrainConfig fold_config = config;
        fold_config.seed = fold_seed;
        train_model(model, corpora, fold_config, nullptr);

        ConfusionMatrix confusion = score_task(model, target.info.task_id, test_split);
        FoldMetrics fm;
        fm.fold = f;
        fm.metrics = macro_prf(confusion);
        for (const RelationExample& ex : test_split) {
            fm.scored_example_ids.push_back(ex.example_id);
        }
        result.folds.push_back(std::move(fm));
    }
    for (const FoldMetrics& fm : result.folds) {
        result.aggregate.macro_precision += fm.metrics.macro_precision;
        result.aggregate.macro_recall += fm.metrics.macro_recall;
        result.aggregate.macro_f1 += fm.metrics.macro_f1;
        result.aggregate.weighted_f1 += fm.metrics.weighted_f1;
    }
    double n = double(result.folds.size());
    result.aggregate.macro_precision /= n;
    result.aggregate.macro_recall /= n;
    result.aggregate.macro_f1 /= n;
    result.aggregate.weighted_f1 /= n;
    return result;
}

double linear_probe_accuracy(const Mat& features, const std::vector<Index>& labels,
                             Index classes, std::uint64_t seed) {
    const Index n = features.rows();
    if (n < 5) throw ValidationError("probe needs >= 5 feature rows");
    if (static_cast<Index>(labels.size()) != n) {
        throw ValidationError("probe features and labels differ in length");
    }
    if (classes < 2) throw ValidationError("probe needs >= 2 classes");
    for (Index l : labels) {
        if (l < 0 || l >= classes) {
            throw ValidationError("probe label " + std::to_string(l) +
                                  " outside [0," + std::to_string(classes) + ")");
        }
    }
    std::vector<Index> order(n);
    std::iota(order.begin(), order.end(), Index{0});
    std::mt19937_64 rng(derive_seed(seed, {0x56}));
    shuffle_inplace(order, rng);
    Index n_train = (n * 4) / 5;
    if (n_train == 0 || n_train == n) {
        throw ValidationError("probe split left an empty side");
    }

    const Index d = features.cols();
    Mat x_train(n_train, d), x_test(n - n_train, d);
    Mat y_train = Mat::Zero(n_train, classes);
    std::vector<Index> y_test;
    for (Index i = 0; i < n; ++i) {
        if (i < n_train) {
            x_train.row(i) = features.row(order[i]);
            y_train(i, labels[order[i]]) = 1.0;
        } else {
            x_test.row(i - n_train) = features.row(order[i]);
            y_test.push_back(labels[order[i]]);
        }
    }

    Parameter W("probe.W", Shape::matrix(d, classes), Vec::Zero(d * classes));
    Parameter b("probe.b", Shape::vector(classes), Vec::Zero(classes));
    std::vector<Parameter*> params{&W, &b};
    AdamState state(0.05, 0.9, 0.999, 1e-8);
    for (int step = 0; step < 200; ++step) {
        Tape tape;
        Tensor x = tape.constant(x_train);
        Tensor logits = add(matmul(x, tape.watch(W)), tape.watch(b));
        Tensor loss = cross_entropy(softmax(logits, 1), tape.constant(y_train));
        tape.backward(loss);
        adam_step(tape, params, state);
    }

    Mat logits = (x_test * W.matrix()).rowwise() + b.matrix().row(0);
    Index hits = 0;
    for (Index r = 0; r < logits.rows(); ++r) {
        Index best = 0;
        for (Index c = 1; c < logits.cols(); ++c) {
            if (logits(r, c) > logits(r, best)) best = c;
        }
        if (best == y_test[static_cast<std::size_t>(r)]) hits += 1;
    }
    return double(hits) / double(y_test.size());
}

}  // namespace mtlre
