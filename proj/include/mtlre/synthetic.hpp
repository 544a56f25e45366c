#pragma once

#include <random>

#include "mtlre/corpus.hpp"
#include "mtlre/kv.hpp"

namespace mtlre {

// One task in a generated benchmark.
struct SyntheticTaskSpec {
    std::string task_id;
    std::vector<std::string> labels;  // >= 2, no duplicates
    Index examples = 0;
    Index documents = 10;
};

// Configuration for the synthetic multi-task corpus generator.  Labels are
// signalled by cue tokens planted next to the entities: a *shared* cue is
// the same surface form for the same label position in every task (rewards
// cross-task transfer), a *private* cue is task-specific (gives a task
// discriminator something to detect).  Cue planting is probabilistic with
// the two strengths below.
struct GeneratorConfig {
    std::vector<SyntheticTaskSpec> tasks;
    Index vocab_size = 50;  // total vocabulary budget, reserved tokens included
    double shared_cue_strength = 0.8;
    double private_cue_strength = 0.5;
    Index sentence_length_min = 8;
    Index sentence_length_max = 14;
    std::uint64_t seed = 0;

    void validate() const;  // throws ValidationError listing every problem

    // Keys: seed, vocab_size, shared_cue_strength, private_cue_strength,
    // sentence_length_min, sentence_length_max, and per task
    // task.<id>.labels (comma-separated), task.<id>.examples,
    // task.<id>.documents.
    static GeneratorConfig from_kv(const KeyValueFile& kv);

    // The benchmark the documentation and tests refer to: two binary tasks.
    static GeneratorConfig example_benchmark();
};

// Deterministically generates one corpus per task (config order).  The same
// config yields byte-identical corpora on disk.
std::vector<Corpus> generate_synthetic_tasks(const GeneratorConfig& config);

// Surface forms the generator uses, exposed for tests and oracles.
std::string synthetic_shared_cue(Index label_index);
std::string synthetic_private_cue(const std::string& task_id, Index label_index);

}  // namespace mtlre
