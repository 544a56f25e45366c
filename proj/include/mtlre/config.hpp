#pragma once

#include <string>
#include <vector>

#include "mtlre/kv.hpp"
#include "mtlre/model.hpp"
#include "mtlre/trainer.hpp"

namespace mtlre {

// One task block from a run config: where its corpus lives, its label set,
// and how it is evaluated (cross-validation or a fixed held-out test file).
struct TaskSpec {
    std::string task_id;
    std::string corpus_path;
    std::vector<std::string> labels;
    enum class Split { cv, fixed_test };
    Split split = Split::cv;
    std::string test_corpus_path;  // only with fixed_test
};

// Everything a command run needs, read from one key=value file.  Model
// hyperparameter keys follow the usual reporting names
// (max_sentence_length, embedding_dimension, gru_hidden_state_dimension,
// attention_size, attention_aspect_size, feedforward_hidden_size,
// dropout_rate, learning_rate, alpha, beta); the rest are artifact knobs.
struct RunConfig {
    ModelConfig model;
    TrainConfig train;
    std::vector<TaskSpec> tasks;
    std::string embedding_path;  // empty = random initialization
    std::string out_dir = "out";
    Index cv_folds = 10;

    static RunConfig from_file(const std::string& path);
    // Parses and validates; the error message lists every problem at once
    // (malformed values, unknown keys, violated invariants).
    static RunConfig from_kv(const KeyValueFile& kv);

    std::vector<TaskInfo> task_infos() const;
    const TaskSpec& task(const std::string& task_id) const;  // LookupError
};

}  // namespace mtlre
