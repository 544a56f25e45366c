#pragma once

#include <optional>

#include "mtlre/attention.hpp"
#include "mtlre/batch.hpp"
#include "mtlre/embedding.hpp"
#include "mtlre/gru.hpp"

namespace mtlre {

// Architecture presets.  "stl" trains one task with a private encoder and
// mean pooling; "stl_attention" adds single-aspect attention; "mtl_shared"
// routes every task through one shared encoder + attention + projection;
// "mtl_adversarial" is the full shared/private model with a task
// discriminator behind a gradient-reversal layer; the last two drop
// self-attention (mean pooling on both paths) or the adversary from it.
enum class ModelVariant {
    stl,
    stl_attention,
    mtl_shared,
    mtl_adversarial,
    mtl_adversarial_no_selfattn,
    mtl_no_adversarial,
};

ModelVariant parse_variant(const std::string& name);
const std::string& variant_name(ModelVariant v);

struct ModelConfig {
    ModelVariant variant = ModelVariant::mtl_adversarial;
    Index max_sentence_length = 60;
    Index embedding_dimension = 200;
    Index gru_hidden_state_dimension = 64;  // per direction; encoder rows are twice this
    Index attention_size = 350;             // d_a
    Index attention_aspect_size = 5;        // aspect count for multi-aspect variants
    Index feedforward_hidden_size = 100;    // projection (and discriminator) hidden width
    Index feature_width = 100;              // width of TF and SF
    double dropout_rate = 0.3;
    double alpha = 1.0;   // task-loss weight
    double beta = 0.05;   // adversarial-loss weight; must be 0 without an adversary
    double grl_lambda = 1.0;  // gradient-reversal multiplier
    // Off-by-default extra loss mu * sum(|V V^T - I|_F^2) discouraging
    // redundant attention aspects.  An extension, not part of the core loss.
    double attention_redundancy_penalty = 0.0;

    Index hidden_width() const { return 2 * gru_hidden_state_dimension; }
    bool has_shared_path() const;
    bool has_private_path() const;
    bool has_adversary() const;
    bool uses_attention() const;
    Index effective_aspects() const;       // 1 for single-aspect variants
    Index attended_width() const;          // width entering the projection
    Index classifier_input_width() const;  // width entering the classifier

    void validate() const;  // throws ValidationError listing every violation
};

struct TaskInfo {
    std::string task_id;
    std::vector<std::string> labels;
};

// Two-layer feed-forward block: in -> hidden (relu) -> out (linear).
struct ProjectionParameters {
    Parameter W1, b1, W2, b2;

    Index input_width() const { return W1.shape.rows(); }
    Index output_width() const { return W2.shape.cols(); }

    static ProjectionParameters create(const std::string& prefix, Index in,
                                       Index hidden, Index out, std::mt19937_64& rng);
    std::vector<Parameter*> parameters();
};

// Per-task tower: private encoder path (absent under mtl_shared) plus the
// task's softmax classifier.
struct TaskHead {
    TaskInfo info;
    std::optional<BiGruParameters> encoder;
    std::optional<AttentionParameters> attention;
    std::optional<ProjectionParameters> projection;
    Parameter Wc, bc;  // classifier over the task's labels

    std::vector<Parameter*> parameters();
};

// The one encoder tower every task shares.
struct SharedEncoder {
    BiGruParameters encoder;
    std::optional<AttentionParameters> attention;
    ProjectionParameters projection;

    std::vector<Parameter*> parameters();
};

struct MtlModel {
    ModelConfig config;
    std::vector<TaskInfo> tasks;
    Vocabulary vocab;
    EmbeddingTable embedding;
    std::optional<SharedEncoder> shared;
    std::vector<TaskHead> heads;
    std::optional<ProjectionParameters> discriminator;  // hidden -> K tasks

    // Builds all parameters from the seed.  Component draws come from
    // per-component derived streams, so supplying pretrained embeddings
    // leaves the encoder initialization unchanged.
    static MtlModel create(const ModelConfig& config, std::vector<TaskInfo> tasks,
                           Vocabulary vocab, std::uint64_t seed,
                           std::optional<EmbeddingTable> pretrained = std::nullopt);

    Index task_count() const { return static_cast<Index>(tasks.size()); }
    Index task_index(const std::string& task_id) const;  // LookupError if unknown

    // Checkpoint order: embedding, shared tower, heads in task order,
    // discriminator.  Stable across runs of the same configuration.
    std::vector<Parameter*> parameters();
    std::vector<Parameter*> head_parameters(Index task);
    std::vector<Parameter*> shared_parameters();
    std::vector<Parameter*> discriminator_parameters();
    // What one batch of the given task updates: embedding + shared tower +
    // that task's head + discriminator.
    std::vector<Parameter*> step_parameters(Index task);
};

enum class ForwardMode { train, infer };

struct ForwardResult {
    Tensor probabilities;    // B x C
    Tensor shared_features;  // B x feature_width; invalid() without a shared path
    // Per example: aspect-by-length attention weights from the private path
    // (shared path when no private attention exists); empty for pooled
    // variants.  Raw values for export, not tape nodes.
    std::vector<Mat> attention;
    Tensor redundancy;  // scalar penalty; invalid() unless the knob is on
};

// Runs the batch through the variant's architecture.  Dropout fires only in
// train mode, drawing from `rng`.
ForwardResult forward_task(Tape& tape, const Batch& batch, const std::string& task_id,
                           MtlModel& model, ForwardMode mode, std::mt19937_64& rng);

// Cross-entropy of predicted distributions against one-hot gold rows.
Tensor task_loss(const Tensor& probabilities, const Mat& gold_onehot);

// Discriminator cross-entropy on shared features that flowed through the
// gradient-reversal layer (reverse=true), so one backward pass trains the
// discriminator while pushing the shared encoder the other way.  Pass
// reverse=false to train the discriminator alone (pre-training).
Tensor adversarial_loss(Tape& tape, const Tensor& shared_features, Index task,
                        MtlModel& model, bool reverse = true);

// alpha * sum(task losses) + beta * adversarial.
Tensor total_loss(Tape& tape, std::span<const Tensor> task_losses,
                  std::optional<Tensor> adversarial, double alpha, double beta);

// Argmax with ties broken toward the lowest index.
Index argmax_index(const Vec& values);

// Single-example inference: masks entities, maps tokens, runs infer mode,
// returns the argmax label.
std::string predict_label(const RelationExample& example, const std::string& task_id,
                          MtlModel& model);

// Sidecar description of a trained model: everything needed to rebuild it
// (variant, hyperparameters, tasks and labels) plus the file names of the
// checkpoint and vocabulary written next to it.
struct ModelManifest {
    ModelConfig config;
    std::vector<TaskInfo> tasks;
    std::string checkpoint_file;
    std::string vocab_file;
};

void save_manifest(const std::string& path, const ModelManifest& manifest);
ModelManifest load_manifest(const std::string& path);

}  // namespace mtlre
