#include "mtlre/synthetic.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "mtlre/init.hpp"

namespace mtlre {

void GeneratorConfig::validate() const {
    std::vector<std::string> problems;
    if (tasks.empty()) problems.push_back("at least one task is required");
    std::set<std::string> ids;
    Index cue_tokens = 0;
    Index max_labels = 0;
    for (const SyntheticTaskSpec& t : tasks) {
        if (t.task_id.empty()) problems.push_back("a task has an empty id");
        if (!ids.insert(t.task_id).second) {
            problems.push_back("duplicate task id '" + t.task_id + "'");
        }
        if (t.labels.size() < 2) {
            problems.push_back("task '" + t.task_id + "' needs >= 2 labels, has " +
                               std::to_string(t.labels.size()));
        }
        if (std::set<std::string>(t.labels.begin(), t.labels.end()).size() !=
            t.labels.size()) {
            problems.push_back("task '" + t.task_id + "' has duplicate labels");
        }
        if (t.examples < 0) {
            problems.push_back("task '" + t.task_id + "' has negative example count");
        }
        if (t.documents < 1) {
            problems.push_back("task '" + t.task_id + "' needs >= 1 document");
        }
        cue_tokens += static_cast<Index>(t.labels.size());
        max_labels = std::max(max_labels, static_cast<Index>(t.labels.size()));
    }
    for (auto [name, v] : {std::pair{"shared_cue_strength", shared_cue_strength},
                           std::pair{"private_cue_strength", private_cue_strength}}) {
        if (v < 0.0 || v > 1.0) {
            problems.push_back(std::string(name) + " must lie in [0,1], got " +
                               std::to_string(v));
        }
    }
    if (sentence_length_min < 6) {
        problems.push_back("sentence_length_min must be >= 6 (room for two entities and cues)");
    }
    if (sentence_length_max < sentence_length_min) {
        problems.push_back("sentence_length_max < sentence_length_min");
    }
    // Vocabulary: 3 reserved + shared cues + per-task private cues + fillers.
    Index fixed = 3 + max_labels + cue_tokens;
    if (vocab_size <= fixed) {
        problems.push_back("vocab_size " + std::to_string(vocab_size) +
                           " leaves no filler tokens (reserved+cues need " +
                           std::to_string(fixed) + ")");
    }
    if (!problems.empty()) {
        std::string msg = "generator config invalid:";
        for (const std::string& p : problems) msg += "\n  - " + p;
        throw ValidationError(msg);
    }
}

std::string synthetic_shared_cue(Index label_index) {
    return "sig" + std::to_string(label_index);
}

std::string synthetic_private_cue(const std::string& task_id, Index label_index) {
    return "cue_" + task_id + "_" + std::to_string(label_index);
}

std::vector<Corpus> generate_synthetic_tasks(const GeneratorConfig& config) {
    config.validate();
    Index cue_tokens = 0;
    Index max_labels = 0;
    for (const SyntheticTaskSpec& t : config.tasks) {
        cue_tokens += static_cast<Index>(t.labels.size());
        max_labels = std::max(max_labels, static_cast<Index>(t.labels.size()));
    }
    const Index filler_count = config.vocab_size - 3 - max_labels - cue_tokens;

    std::vector<Corpus> corpora;
    for (std::size_t ti = 0; ti < config.tasks.size(); ++ti) {
        const SyntheticTaskSpec& task = config.tasks[ti];
        // Each task draws from its own derived stream so corpora do not
        // change when sibling task sizes do.
        std::mt19937_64 rng(derive_seed(config.seed, {0x5e9e, ti}));
        Corpus corpus;
        const Index n_labels = static_cast<Index>(task.labels.size());
        for (Index i = 0; i < task.examples; ++i) {
            const Index label = static_cast<Index>(uniform_below(rng, n_labels));
            const Index target_len = config.sentence_length_min +
                static_cast<Index>(uniform_below(
                    rng, static_cast<std::uint64_t>(config.sentence_length_max -
                                                    config.sentence_length_min + 1)));
            auto filler = [&] { return "w" + std::to_string(uniform_below(rng, filler_count)); };
            auto entity_tok = [&] { return "prot" + std::to_string(uniform_below(rng, 10)); };

            RelationExample ex;
            ex.task_id = task.task_id;
            ex.example_id = task.task_id + "_e" + std::to_string(i);
            ex.document_id = task.task_id + "_d" + std::to_string(i % task.documents);
            ex.label = task.labels[label];

            const Index pre = 1 + static_cast<Index>(uniform_below(rng, 3));
            const Index e1_len = uniform01(rng) < 0.25 ? 2 : 1;
            const Index mid = 1 + static_cast<Index>(uniform_below(rng, 3));
            const Index e2_len = uniform01(rng) < 0.25 ? 2 : 1;
            const bool plant_shared = uniform01(rng) < config.shared_cue_strength;
            const bool plant_private = uniform01(rng) < config.private_cue_strength;

            for (Index k = 0; k < pre; ++k) ex.tokens.push_back(filler());
            ex.entity1.begin = static_cast<Index>(ex.tokens.size());
            for (Index k = 0; k < e1_len; ++k) ex.tokens.push_back(entity_tok());
            ex.entity1.end = static_cast<Index>(ex.tokens.size());
            ex.tokens.push_back(plant_shared ? synthetic_shared_cue(label) : filler());
            for (Index k = 0; k < mid; ++k) ex.tokens.push_back(filler());
            ex.entity2.begin = static_cast<Index>(ex.tokens.size());
            for (Index k = 0; k < e2_len; ++k) ex.tokens.push_back(entity_tok());
            ex.entity2.end = static_cast<Index>(ex.tokens.size());
            ex.tokens.push_back(plant_private ? synthetic_private_cue(task.task_id, label)
                                              : filler());
            while (static_cast<Index>(ex.tokens.size()) < target_len) {
                ex.tokens.push_back(filler());
            }
            validate_example(ex);
            corpus.push_back(std::move(ex));
        }
        corpora.push_back(std::move(corpus));
    }
    return corpora;
}

GeneratorConfig GeneratorConfig::from_kv(const KeyValueFile& kv) {
    GeneratorConfig c;
    c.seed = kv.get_uint("seed", c.seed);
    c.vocab_size = kv.get_int("vocab_size", c.vocab_size);
    c.shared_cue_strength = kv.get_double("shared_cue_strength", c.shared_cue_strength);
    c.private_cue_strength = kv.get_double("private_cue_strength", c.private_cue_strength);
    c.sentence_length_min = kv.get_int("sentence_length_min", c.sentence_length_min);
    c.sentence_length_max = kv.get_int("sentence_length_max", c.sentence_length_max);
    // Task blocks: task.<id>.labels defines a task; the other fields refine it.
    std::vector<std::string> ids;
    for (const std::string& key : kv.keys_with_prefix("task.")) {
        std::string rest = key.substr(5);
        std::size_t dot = rest.rfind('.');
        if (dot == std::string::npos) continue;
        std::string id = rest.substr(0, dot);
        if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
    }
    for (const std::string& id : ids) {
        SyntheticTaskSpec t;
        t.task_id = id;
        std::string base = "task." + id + ".";
        auto labels = kv.get(base + "labels");
        kv.mark_used(base + "labels");
        if (!labels) {
            throw ValidationError("generator config: missing '" + base + "labels'");
        }
        t.labels = split_csv(*labels);
        t.examples = kv.get_int(base + "examples", 0);
        t.documents = kv.get_int(base + "documents", t.documents);
        c.tasks.push_back(std::move(t));
    }
    c.validate();
    return c;
}

GeneratorConfig GeneratorConfig::example_benchmark() {
    GeneratorConfig c;
    c.tasks = {
        SyntheticTaskSpec{"alpha", {"negative", "positive"}, 500, 25},
        SyntheticTaskSpec{"beta", {"negative", "positive"}, 500, 25},
    };
    return c;
}

}  // namespace mtlre
