#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <unordered_map>

#include "mtlre/metrics.hpp"
#include "mtlre/model.hpp"

namespace mtlre {

struct TrainConfig {
    Index epochs_max = 30;
    Index batch_size = 32;
    double learning_rate = 0.001;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    Index discriminator_pretrain_epochs = 2;
    double validation_fraction = 0.1;  // held-out slice for epoch selection
    std::uint64_t seed = 0;

    void validate() const;  // throws ValidationError listing every violation
};

// Bias-corrected Adam.  Moment buffers appear lazily per parameter; each
// parameter advances its own step count.
struct AdamState {
    double learning_rate;
    double beta1;
    double beta2;
    double epsilon;

    struct Slot {
        Vec m, v;
        std::uint64_t step = 0;
    };
    std::unordered_map<const Parameter*, Slot> slots;

    AdamState(double learning_rate_, double beta1_, double beta2_, double epsilon_);
    explicit AdamState(const TrainConfig& config);
};

// One update per listed parameter using the gradients held by `tape` after
// its backward pass.  Frozen rows and non-trainable parameters stay
// bit-identical.  A non-finite gradient aborts, naming the parameter.
void adam_step(Tape& tape, std::span<Parameter* const> params, AdamState& state);

// One task's training pool.
struct TaskCorpus {
    TaskInfo info;
    Corpus examples;
};

struct EpochStats {
    Index epoch = 0;
    std::vector<double> task_loss;   // mean per-example CE, aligned with model.tasks
    std::vector<Index> task_examples;
    double adversarial_loss = 0.0;   // mean per-example discriminator CE (0 without one)
    double discriminator_accuracy = 0.0;
    double total_loss = 0.0;         // mean per-example combined objective
    double validation_loss = std::numeric_limits<double>::quiet_NaN();
    double wall_seconds = 0.0;
};

// Warm-up phase: trains only the discriminator (no gradient reversal) on
// task identification, for config.discriminator_pretrain_epochs epochs.
// Every non-discriminator parameter is bit-identical afterwards.  Returns
// the final epoch's discriminator accuracy.
double pretrain_discriminator(MtlModel& model, std::span<const TaskCorpus> corpora,
                              const TrainConfig& config, std::mt19937_64& rng);

// One pass over every task's batches, interleaved round-robin so no task
// monopolizes the update sequence; tasks with fewer batches simply drop out
// of the rotation early.  Each batch backpropagates
// alpha * task CE + beta * adversarial CE once and applies Adam to the
// embedding, shared tower, that task's head, and the discriminator.
EpochStats train_epoch(MtlModel& model, std::span<const TaskCorpus> corpora,
                       const TrainConfig& config, AdamState& state,
                       std::mt19937_64& rng);

// Mean per-example CE of infer-mode forward passes, across all listed
// corpora.  NaN when they are all empty.
double evaluation_loss(MtlModel& model, std::span<const TaskCorpus> corpora,
                       Index batch_size);

// Fraction of examples whose gold label wins the argmax, infer mode.
double task_accuracy(MtlModel& model, const TaskCorpus& corpus);

// Predicts every example and tallies a confusion matrix over the task's
// label list.
ConfusionMatrix score_task(MtlModel& model, const std::string& task_id,
                           const Corpus& corpus);

struct TrainOutcome {
    std::vector<EpochStats> history;
    Index best_epoch = -1;  // index into history; -1 when nothing trained
    double best_validation_loss = std::numeric_limits<double>::quiet_NaN();
    double pretrain_accuracy = std::numeric_limits<double>::quiet_NaN();
};

// Full training drive: slices validation_fraction off each task's pool for
// epoch selection, pre-trains the discriminator when the variant has one
// (two or more tasks), runs epochs_max epochs, and leaves the model holding
// the weights of the epoch with the lowest validation loss (final weights
// when no validation examples exist).  Writes one JSON record per epoch to
// `log` when given.
TrainOutcome train_model(MtlModel& model, std::span<const TaskCorpus> corpora,
                         const TrainConfig& config, std::ostream* log = nullptr);

// Document-level fold assignment: every document id lands in exactly one
// test set, sizes as equal as the count allows.
struct FoldPlan {
    struct Fold {
        std::vector<std::string> train_documents;  // sorted
        std::vector<std::string> test_documents;   // sorted
    };
    std::vector<Fold> folds;
};

FoldPlan make_fold_plan(const Corpus& corpus, Index folds, std::uint64_t seed);

struct FoldMetrics {
    Index fold = 0;
    TaskMetrics metrics;
    std::vector<std::string> scored_example_ids;
};

struct AggregateMetrics {
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    double weighted_f1 = 0.0;
};

struct CrossValidationResult {
    FoldPlan plan;
    std::vector<FoldMetrics> folds;
    AggregateMetrics aggregate;  // unweighted mean over folds
};

// Builds a fresh model for one fold.  The factory sees the fold's training
// corpora so it can build its vocabulary from training data only (held-out
// documents must stay unseen).
using ModelFactory =
    std::function<MtlModel(std::uint64_t fold_seed, std::span<const TaskCorpus>)>;

// Shuffles the target corpus's documents into `folds` test sets, then per
// fold trains a fresh factory model on the target's train split (plus the
// auxiliary tasks' full corpora) and scores the held-out split.  Needs at
// least `folds` distinct documents.
CrossValidationResult run_cross_validation(const TaskCorpus& target,
                                           std::span<const TaskCorpus> auxiliary,
                                           const ModelFactory& factory,
                                           const TrainConfig& config,
                                           Index folds = 10);

// Multinomial logistic probe on frozen feature rows: trains on 80% (seeded
// shuffle), returns held-out accuracy on the rest.  Used to measure how much
// task identity leaks through a feature space.
double linear_probe_accuracy(const Mat& features, const std::vector<Index>& labels,
                             Index classes, std::uint64_t seed);

}  // namespace mtlre
