#include "mtlre/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "mtlre/checkpoint.hpp"
#include "mtlre/init.hpp"
#include "mtlre/log.hpp"
#include "mtlre/metrics.hpp"
#include "mtlre/synthetic.hpp"
#include "mtlre/trainer.hpp"

namespace mtlre {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

void require_no_unknown_keys(const KeyValueFile& kv) {
    std::vector<std::string> unknown = kv.unused_keys();
    if (unknown.empty()) return;
    std::string msg = "config has unknown keys:";
    for (const std::string& k : unknown) msg += "\n  - " + k;
    throw ValidationError(msg);
}

Corpus read_masked_corpus(const std::string& path, const std::string& expected_task) {
    Corpus raw = read_corpus(path);
    Corpus masked;
    masked.reserve(raw.size());
    for (const RelationExample& ex : raw) {
        if (!expected_task.empty() && ex.task_id != expected_task) {
            throw ValidationError("example '" + ex.example_id + "' in " + path +
                                  " belongs to task '" + ex.task_id +
                                  "' but the file is configured for task '" +
                                  expected_task + "'");
        }
        masked.push_back(mask_entities(ex));
    }
    return masked;
}

Vocabulary build_vocabulary(std::span<const TaskCorpus> corpora) {
    std::vector<const Corpus*> ptrs;
    for (const TaskCorpus& tc : corpora) ptrs.push_back(&tc.examples);
    return Vocabulary::build(ptrs);
}

MtlModel build_model(const RunConfig& rc, std::span<const TaskCorpus> corpora,
                     std::uint64_t seed) {
    Vocabulary vocab = build_vocabulary(corpora);
    std::optional<EmbeddingTable> pretrained;
    if (!rc.embedding_path.empty()) {
        std::mt19937_64 rng(derive_seed(seed, {0x10}));
        pretrained = EmbeddingTable::load_pretrained(
            rc.embedding_path, vocab, rc.model.embedding_dimension, rng);
    }
    return MtlModel::create(rc.model, rc.task_infos(), std::move(vocab), seed,
                            std::move(pretrained));
}

RunConfig load_run_config(const std::string& config_path,
                          const std::string& out_override,
                          std::optional<std::uint64_t> seed_override) {
    RunConfig rc = RunConfig::from_file(config_path);
    if (!out_override.empty()) rc.out_dir = out_override;
    if (seed_override) rc.train.seed = *seed_override;
    return rc;
}

std::string sanitize_filename(const std::string& raw) {
    std::string out;
    for (char ch : raw) {
        bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
                  (ch >= '0' && ch <= '9') || ch == '_' || ch == '-' || ch == '.';
        out += ok ? ch : '_';
    }
    return out.empty() ? std::string("unnamed") : out;
}

// One infer-mode probability row per example, corpus order.
Mat prediction_probabilities(MtlModel& model, const std::string& task_id,
                             const Corpus& corpus) {
    Index k = model.task_index(task_id);
    const std::vector<std::string>& labels = model.heads[k].info.labels;
    Mat probs(static_cast<Index>(corpus.size()), static_cast<Index>(labels.size()));
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        RelationExample masked = mask_entities(corpus[i]);
        masked.label = labels[0];  // gold plays no role in the forward pass
        std::mt19937_64 batch_rng(0);
        std::vector<Batch> batches =
            make_batches({masked}, labels, model.vocab, 1,
                         model.config.max_sentence_length, batch_rng);
        if (batches.empty()) {
            throw ValidationError("example '" + corpus[i].example_id +
                                  "': entity spans too far apart for max sentence "
                                  "length " +
                                  std::to_string(model.config.max_sentence_length));
        }
        Tape tape;
        std::mt19937_64 unused(0);
        ForwardResult fwd = forward_task(tape, batches[0], task_id, model,
                                         ForwardMode::infer, unused);
        probs.row(static_cast<Index>(i)) =
            Eigen::Map<const Eigen::RowVectorXd>(fwd.probabilities.value().data(),
                                                 fwd.probabilities.value().size());
    }
    return probs;
}

void check_variant_match(const MtlModel& model, const RunConfig& rc) {
    if (model.config.variant != rc.model.variant) {
        throw ValidationError("checkpoint was trained as variant '" +
                              variant_name(model.config.variant) +
                              "' but the config requests variant '" +
                              variant_name(rc.model.variant) + "'");
    }
}

void check_task_match(const MtlModel& model, const TaskSpec& spec) {
    Index k = model.task_index(spec.task_id);  // LookupError when absent
    const std::vector<std::string>& have = model.heads[k].info.labels;
    if (have != spec.labels) {
        auto join = [](const std::vector<std::string>& v) {
            std::string s;
            for (const std::string& x : v) s += (s.empty() ? "" : ",") + x;
            return s;
        };
        throw ValidationError("task '" + spec.task_id + "': checkpoint labels [" +
                              join(have) + "] differ from config labels [" +
                              join(spec.labels) + "]");
    }
}

}  // namespace

void cmd_gen_synthetic(const std::string& config_path,
                       const std::string& out_override,
                       std::optional<std::uint64_t> seed_override) {
    KeyValueFile kv = KeyValueFile::parse_file(config_path);
    GeneratorConfig gc = GeneratorConfig::from_kv(kv);
    std::string out_dir = out_override.empty() ? kv.get_or("out_dir", "out")
                                               : out_override;
    require_no_unknown_keys(kv);
    if (seed_override) gc.seed = *seed_override;
    gc.validate();

    fs::create_directories(out_dir);
    std::vector<Corpus> corpora = generate_synthetic_tasks(gc);
    for (std::size_t i = 0; i < corpora.size(); ++i) {
        std::string path =
            (fs::path(out_dir) / (sanitize_filename(gc.tasks[i].task_id) + ".jsonl"))
                .string();
        write_corpus(path, corpora[i]);
        std::cout << "wrote " << path << " (" << corpora[i].size() << " examples)\n";
    }
}

void cmd_train(const std::string& config_path, const std::string& out_override,
               std::optional<std::uint64_t> seed_override) {
    RunConfig rc = load_run_config(config_path, out_override, seed_override);
    std::vector<TaskCorpus> corpora;
    for (const TaskSpec& t : rc.tasks) {
        corpora.push_back(
            {{t.task_id, t.labels}, read_masked_corpus(t.corpus_path, t.task_id)});
    }
    MtlModel model = build_model(rc, corpora, rc.train.seed);

    fs::create_directories(rc.out_dir);
    fs::path out(rc.out_dir);
    std::ofstream log((out / "train_log.jsonl").string(), std::ios::trunc);
    if (!log) throw IoError("cannot open training log: " + (out / "train_log.jsonl").string());
    TrainOutcome outcome = train_model(model, corpora, rc.train, &log);
    log.close();

    save_checkpoint((out / "model.ckpt").string(), model.parameters());
    model.vocab.save((out / "vocab.txt").string());
    ModelManifest manifest{model.config, model.tasks, "model.ckpt", "vocab.txt"};
    save_manifest((out / "manifest.json").string(), manifest);
    std::cout << "wrote " << (out / "model.ckpt").string() << " (best epoch "
              << outcome.best_epoch << ")\n";
}

MtlModel load_model(const std::string& checkpoint) {
    fs::path given(checkpoint);
    fs::path manifest_path =
        fs::is_directory(given) ? given / "manifest.json" : given;
    ModelManifest manifest = load_manifest(manifest_path.string());
    fs::path dir = manifest_path.parent_path();
    Vocabulary vocab = Vocabulary::load((dir / manifest.vocab_file).string());
    MtlModel model =
        MtlModel::create(manifest.config, manifest.tasks, std::move(vocab), 0);
    std::vector<Parameter*> params = model.parameters();
    load_checkpoint_into((dir / manifest.checkpoint_file).string(), params);
    return model;
}

void cmd_evaluate(const std::string& config_path, const std::string& checkpoint,
                  const std::string& out_override) {
    RunConfig rc = load_run_config(config_path, out_override, std::nullopt);
    MtlModel model = load_model(checkpoint);
    check_variant_match(model, rc);

    fs::create_directories(rc.out_dir);
    fs::path out(rc.out_dir);
    for (const TaskSpec& t : rc.tasks) {
        check_task_match(model, t);
        const std::string& corpus_path = t.split == TaskSpec::Split::fixed_test
                                             ? t.test_corpus_path
                                             : t.corpus_path;
        Corpus corpus = read_masked_corpus(corpus_path, t.task_id);
        if (corpus.empty()) {
            throw ValidationError("task '" + t.task_id + "': evaluation corpus " +
                                  corpus_path + " is empty");
        }
        Mat probs = prediction_probabilities(model, t.task_id, corpus);

        ConfusionMatrix confusion(t.labels);
        auto gold_index = [&](const RelationExample& ex) {
            auto it = std::find(t.labels.begin(), t.labels.end(), ex.label);
            if (it == t.labels.end()) {
                throw ValidationError("example '" + ex.example_id + "': label '" +
                                      ex.label + "' is not in task '" + t.task_id +
                                      "'");
            }
            return static_cast<Index>(it - t.labels.begin());
        };
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            Vec row = probs.row(static_cast<Index>(i));
            confusion.add(gold_index(corpus[i]), argmax_index(row));
        }
        TaskMetrics metrics = macro_prf(confusion);
        std::string metrics_path =
            (out / ("metrics_" + sanitize_filename(t.task_id) + ".json")).string();
        write_metrics_json(metrics_path, metrics, confusion);
        std::cout << "task " << t.task_id << ": macro-F1 "
                  << format_double(metrics.macro_f1) << " -> " << metrics_path
                  << "\n";

        if (t.labels.size() == 2) {
            // positive class = second label of the task's list
            std::vector<double> scores;
            std::vector<int> gold;
            for (std::size_t i = 0; i < corpus.size(); ++i) {
                scores.push_back(probs(static_cast<Index>(i), 1));
                gold.push_back(gold_index(corpus[i]) == 1 ? 1 : 0);
            }
            try {
                std::vector<PrPoint> points = pr_curve_points(scores, gold);
                std::string pr_path =
                    (out / ("pr_" + sanitize_filename(t.task_id) + ".csv")).string();
                write_pr_points_csv(pr_path, points);
                std::cout << "task " << t.task_id << ": " << points.size()
                          << " precision-recall points -> " << pr_path << "\n";
            } catch (const ValidationError& e) {
                MTLRE_LOG_AT(LogLevel::warn)
                    << "task '" << t.task_id << "': no precision-recall curve ("
                    << e.what() << ")";
            }
        }
    }
}

void cmd_cross_validate(const std::string& config_path,
                        const std::string& out_override,
                        std::optional<std::uint64_t> seed_override) {
    RunConfig rc = load_run_config(config_path, out_override, seed_override);
    std::vector<TaskCorpus> corpora;
    for (const TaskSpec& t : rc.tasks) {
        corpora.push_back(
            {{t.task_id, t.labels}, read_masked_corpus(t.corpus_path, t.task_id)});
    }
    fs::create_directories(rc.out_dir);
    fs::path out(rc.out_dir);

    bool any_cv = false;
    for (std::size_t ti = 0; ti < rc.tasks.size(); ++ti) {
        if (rc.tasks[ti].split != TaskSpec::Split::cv) continue;
        any_cv = true;
        std::vector<TaskCorpus> auxiliary;
        for (std::size_t o = 0; o < corpora.size(); ++o) {
            if (o != ti) auxiliary.push_back(corpora[o]);
        }
        ModelFactory factory = [&rc](std::uint64_t fold_seed,
                                     std::span<const TaskCorpus> fold_corpora) {
            return build_model(rc, fold_corpora, fold_seed);
        };
        CrossValidationResult result = run_cross_validation(
            corpora[ti], auxiliary, factory, rc.train, rc.cv_folds);

        json j;
        j["format_version"] = 1;
        j["task"] = rc.tasks[ti].task_id;
        j["folds"] = json::array();
        for (const FoldMetrics& fm : result.folds) {
            json fj;
            fj["fold"] = fm.fold;
            fj["test_documents"] = result.plan.folds[fm.fold].test_documents;
            fj["scored_examples"] = fm.scored_example_ids.size();
            fj["macro"] = {{"precision", fm.metrics.macro_precision},
                           {"recall", fm.metrics.macro_recall},
                           {"f1", fm.metrics.macro_f1}};
            fj["weighted"] = {{"f1", fm.metrics.weighted_f1}};
            j["folds"].push_back(fj);
        }
        j["aggregate"] = {{"precision", result.aggregate.macro_precision},
                          {"recall", result.aggregate.macro_recall},
                          {"f1", result.aggregate.macro_f1},
                          {"weighted_f1", result.aggregate.weighted_f1}};
        std::string path =
            (out / ("cv_" + sanitize_filename(rc.tasks[ti].task_id) + ".json"))
                .string();
        std::ofstream os(path, std::ios::trunc);
        if (!os) throw IoError("cannot open for writing: " + path);
        os << j.dump(2) << "\n";
        os.flush();
        if (!os) throw IoError("write failed: " + path);
        std::cout << "task " << rc.tasks[ti].task_id << ": aggregate macro-F1 "
                  << format_double(result.aggregate.macro_f1) << " -> " << path
                  << "\n";
    }
    if (!any_cv) {
        throw ValidationError("no task uses split 'cv'; nothing to cross-validate");
    }
}

void cmd_predict(const std::string& checkpoint, const std::string& corpus_path,
                 const std::string& out_override) {
    MtlModel model = load_model(checkpoint);
    Corpus corpus = read_corpus(corpus_path);
    std::string out_dir = out_override.empty() ? "out" : out_override;
    fs::create_directories(out_dir);
    std::string path = (fs::path(out_dir) / "predictions.jsonl").string();
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + path);
    for (const RelationExample& ex : corpus) {
        std::string predicted = predict_label(ex, ex.task_id, model);
        json j;
        j["id"] = ex.example_id;
        j["task"] = ex.task_id;
        j["gold"] = ex.label;
        j["predicted"] = predicted;
        os << j.dump() << "\n";
    }
    os.flush();
    if (!os) throw IoError("write failed: " + path);
    std::cout << "wrote " << path << " (" << corpus.size() << " predictions)\n";
}

void cmd_export_attention(const std::string& checkpoint,
                          const std::string& corpus_path,
                          const std::string& example_id,
                          const std::string& out_override) {
    MtlModel model = load_model(checkpoint);
    Corpus corpus = read_corpus(corpus_path);
    const RelationExample* found = nullptr;
    for (const RelationExample& ex : corpus) {
        if (ex.example_id == example_id) {
            found = &ex;
            break;
        }
    }
    if (!found) {
        throw LookupError("corpus " + corpus_path + " has no example '" +
                          example_id + "'");
    }
    std::string out_dir = out_override.empty() ? "out" : out_override;
    fs::create_directories(out_dir);
    std::string path =
        (fs::path(out_dir) / ("attention_" + sanitize_filename(example_id) + ".csv"))
            .string();
    export_attention(*found, model, found->task_id, path);
    std::cout << "wrote " << path << "\n";
}

}  // namespace mtlre
