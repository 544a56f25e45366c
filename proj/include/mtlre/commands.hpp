#pragma once

#include <optional>
#include <string>

#include "mtlre/config.hpp"

namespace mtlre {

// CLI-facing operations.  Each reads its inputs, performs one unit of work,
// and writes its outputs under the configured (or overridden) output
// directory.  Errors surface as the library's exception types; the CLI
// turns them into categorized messages and exit codes.

// Generates the configured synthetic task corpora as JSONL files
// (<out>/<task_id>.jsonl).
void cmd_gen_synthetic(const std::string& config_path,
                       const std::string& out_override = "",
                       std::optional<std::uint64_t> seed_override = std::nullopt);

// Trains a model from scratch: reads and masks the task corpora, builds the
// vocabulary, trains, and writes model.ckpt + manifest.json + vocab.txt +
// train_log.jsonl into the output directory.
void cmd_train(const std::string& config_path, const std::string& out_override = "",
               std::optional<std::uint64_t> seed_override = std::nullopt);

// Loads a trained model (path to manifest.json or its directory) and scores
// each configured task on its evaluation corpus (the fixed test file when
// split = fixed-test, the training corpus otherwise).  Writes
// metrics_<task>.json per task and pr_<task>.csv for two-label tasks.
void cmd_evaluate(const std::string& config_path, const std::string& checkpoint,
                  const std::string& out_override = "");

// Document-level cross-validation for every task with split = cv, training
// a fresh model per fold (other tasks join as auxiliary training data).
// Writes cv_<task>.json with per-fold and aggregate blocks.
void cmd_cross_validate(const std::string& config_path,
                        const std::string& out_override = "",
                        std::optional<std::uint64_t> seed_override = std::nullopt);

// Labels every example of the corpus with the loaded model (each example's
// own task decides the head).  Writes predictions.jsonl with one record per
// example: id, task, gold, predicted.
void cmd_predict(const std::string& checkpoint, const std::string& corpus_path,
                 const std::string& out_override = "");

// Writes the attention heatmap of one example as attention_<id>.csv.
void cmd_export_attention(const std::string& checkpoint,
                          const std::string& corpus_path,
                          const std::string& example_id,
                          const std::string& out_override = "");

// Rebuilds a model from a manifest (written by cmd_train) and its sidecar
// vocabulary + checkpoint files.
MtlModel load_model(const std::string& checkpoint);

}  // namespace mtlre
