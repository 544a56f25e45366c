#include "mtlre/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace mtlre {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueFile KeyValueFile::parse_string(const std::string& text,
                                        const std::string& origin) {
    KeyValueFile kv;
    kv.origin_ = origin;
    std::istringstream is(text);
    std::string line;
    int line_no = 0;
    std::set<std::string> seen;
    while (std::getline(is, line)) {
        ++line_no;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::string stripped = trim(line);
        if (stripped.empty()) continue;
        std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ParseError(origin + ":" + std::to_string(line_no) +
                             ": expected 'key = value', got '" + stripped + "'");
        }
        std::string key = trim(stripped.substr(0, eq));
        std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) {
            throw ParseError(origin + ":" + std::to_string(line_no) + ": empty key");
        }
        if (!seen.insert(key).second) {
            throw ParseError(origin + ":" + std::to_string(line_no) +
                             ": duplicate key '" + key + "'");
        }
        kv.entries_.emplace_back(std::move(key), std::move(value));
    }
    kv.used_.assign(kv.entries_.size(), false);
    return kv;
}

KeyValueFile KeyValueFile::parse_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config file: " + path);
    std::ostringstream buffer;
    buffer << is.rdbuf();
    return parse_string(buffer.str(), path);
}

bool KeyValueFile::has(const std::string& key) const {
    for (const auto& [k, v] : entries_) {
        if (k == key) return true;
    }
    return false;
}

std::optional<std::string> KeyValueFile::get(const std::string& key) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].first == key) {
            used_[i] = true;
            return entries_[i].second;
        }
    }
    return std::nullopt;
}

std::string KeyValueFile::get_or(const std::string& key,
                                 const std::string& fallback) const {
    auto v = get(key);
    return v ? *v : fallback;
}

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const char* want) {
    throw ValidationError("config key '" + key + "': cannot read '" + value +
                          "' as " + want);
}

}  // namespace

std::int64_t KeyValueFile::get_int(const std::string& key,
                                   std::int64_t fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    errno = 0;
    char* end = nullptr;
    long long parsed = std::strtoll(v->c_str(), &end, 10);
    if (errno != 0 || end == v->c_str() || *end != '\0') {
        bad_value(key, *v, "an integer");
    }
    return parsed;
}

std::uint64_t KeyValueFile::get_uint(const std::string& key,
                                     std::uint64_t fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    if (!v->empty() && (*v)[0] == '-') bad_value(key, *v, "a non-negative integer");
    errno = 0;
    char* end = nullptr;
    unsigned long long parsed = std::strtoull(v->c_str(), &end, 10);
    if (errno != 0 || end == v->c_str() || *end != '\0') {
        bad_value(key, *v, "a non-negative integer");
    }
    return parsed;
}

double KeyValueFile::get_double(const std::string& key, double fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    errno = 0;
    char* end = nullptr;
    double parsed = std::strtod(v->c_str(), &end);
    if (errno != 0 || end == v->c_str() || *end != '\0') {
        bad_value(key, *v, "a number");
    }
    return parsed;
}

bool KeyValueFile::get_bool(const std::string& key, bool fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    bad_value(key, *v, "a boolean (true/false)");
}

std::vector<std::string> KeyValueFile::keys_with_prefix(
    const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries_) {
        if (k.rfind(prefix, 0) == 0) out.push_back(k);
    }
    return out;
}

void KeyValueFile::mark_used(const std::string& key) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].first == key) used_[i] = true;
    }
}

std::vector<std::string> KeyValueFile::unused_keys() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (!used_[i]) out.push_back(entries_[i].first);
    }
    return out;
}

std::vector<std::string> split_csv(const std::string& text) {
    std::vector<std::string> out;
    std::string piece;
    std::istringstream is(text);
    while (std::getline(is, piece, ',')) {
        std::string t = trim(piece);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

RunConfig RunConfig::from_file(const std::string& path) {
    return from_kv(KeyValueFile::parse_file(path));
}

RunConfig RunConfig::from_kv(const KeyValueFile& kv) {
    RunConfig rc;
    std::vector<std::string> problems;
    auto attempt = [&](auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            problems.push_back(e.what());
        }
    };

    attempt([&] {
        rc.model.variant = parse_variant(kv.get_or("variant", "mtl_adversarial"));
    });
    attempt([&] {
        rc.model.max_sentence_length =
            kv.get_int("max_sentence_length", rc.model.max_sentence_length);
    });
    attempt([&] {
        rc.model.embedding_dimension =
            kv.get_int("embedding_dimension", rc.model.embedding_dimension);
    });
    attempt([&] {
        rc.model.gru_hidden_state_dimension = kv.get_int(
            "gru_hidden_state_dimension", rc.model.gru_hidden_state_dimension);
    });
    attempt([&] {
        rc.model.attention_size = kv.get_int("attention_size", rc.model.attention_size);
    });
    attempt([&] {
        rc.model.attention_aspect_size =
            kv.get_int("attention_aspect_size", rc.model.attention_aspect_size);
    });
    attempt([&] {
        rc.model.feedforward_hidden_size =
            kv.get_int("feedforward_hidden_size", rc.model.feedforward_hidden_size);
    });
    attempt([&] {
        rc.model.feature_width = kv.get_int("feature_width", rc.model.feature_width);
    });
    attempt([&] {
        rc.model.dropout_rate = kv.get_double("dropout_rate", rc.model.dropout_rate);
    });
    attempt([&] { rc.model.alpha = kv.get_double("alpha", rc.model.alpha); });
    attempt([&] {
        // With no adversary in the variant the adversarial weight silently
        // defaults to 0 instead of tripping the beta/variant consistency rule.
        double fallback = rc.model.has_adversary() ? rc.model.beta : 0.0;
        rc.model.beta = kv.get_double("beta", fallback);
    });
    attempt([&] {
        rc.model.grl_lambda = kv.get_double("grl_lambda", rc.model.grl_lambda);
    });
    attempt([&] {
        rc.model.attention_redundancy_penalty = kv.get_double(
            "attention_redundancy_penalty", rc.model.attention_redundancy_penalty);
    });

    attempt([&] { rc.train.epochs_max = kv.get_int("epochs_max", rc.train.epochs_max); });
    attempt([&] { rc.train.batch_size = kv.get_int("batch_size", rc.train.batch_size); });
    attempt([&] {
        rc.train.learning_rate = kv.get_double("learning_rate", rc.train.learning_rate);
    });
    attempt([&] {
        rc.train.discriminator_pretrain_epochs = kv.get_int(
            "discriminator_pretrain_epochs", rc.train.discriminator_pretrain_epochs);
    });
    attempt([&] {
        rc.train.validation_fraction =
            kv.get_double("validation_fraction", rc.train.validation_fraction);
    });
    attempt([&] { rc.train.seed = kv.get_uint("seed", rc.train.seed); });

    attempt([&] { rc.embedding_path = kv.get_or("embedding_path", ""); });
    attempt([&] { rc.out_dir = kv.get_or("out_dir", rc.out_dir); });
    attempt([&] { rc.cv_folds = kv.get_int("cv_folds", rc.cv_folds); });
    if (rc.cv_folds < 2) problems.push_back("cv_folds must be >= 2");

    // task.<id>.corpus / labels / split / test_corpus blocks
    std::vector<std::string> task_ids;
    for (const std::string& key : kv.keys_with_prefix("task.")) {
        std::size_t dot = key.rfind('.');
        std::string id = key.substr(5, dot - 5);
        if (id.empty()) {
            problems.push_back("config key '" + key + "' has an empty task id");
            continue;
        }
        if (std::find(task_ids.begin(), task_ids.end(), id) == task_ids.end()) {
            task_ids.push_back(id);
        }
    }
    for (const std::string& id : task_ids) {
        TaskSpec spec;
        spec.task_id = id;
        std::string base = "task." + id + ".";
        auto corpus = kv.get(base + "corpus");
        if (corpus) spec.corpus_path = *corpus;
        else problems.push_back("task '" + id + "': missing key '" + base + "corpus'");
        auto labels = kv.get(base + "labels");
        if (labels) spec.labels = split_csv(*labels);
        else problems.push_back("task '" + id + "': missing key '" + base + "labels'");
        if (labels && spec.labels.size() < 2) {
            problems.push_back("task '" + id + "': needs >= 2 labels, got " +
                               std::to_string(spec.labels.size()));
        }
        std::string split = kv.get_or(base + "split", "cv");
        if (split == "cv") {
            spec.split = TaskSpec::Split::cv;
        } else if (split == "fixed-test") {
            spec.split = TaskSpec::Split::fixed_test;
        } else {
            problems.push_back("task '" + id + "': split must be 'cv' or 'fixed-test', got '" +
                               split + "'");
        }
        auto test_corpus = kv.get(base + "test_corpus");
        if (test_corpus) spec.test_corpus_path = *test_corpus;
        if (spec.split == TaskSpec::Split::fixed_test && spec.test_corpus_path.empty()) {
            problems.push_back("task '" + id + "': split 'fixed-test' needs '" + base +
                               "test_corpus'");
        }
        if (spec.split == TaskSpec::Split::cv && test_corpus) {
            problems.push_back("task '" + id + "': '" + base +
                               "test_corpus' only applies to split 'fixed-test'");
        }
        rc.tasks.push_back(std::move(spec));
    }
    if (rc.tasks.empty()) problems.push_back("config defines no task.<id>.* block");

    for (const std::string& key : kv.unused_keys()) {
        problems.push_back("unknown config key '" + key + "'");
    }
    try {
        rc.model.validate();
    } catch (const Error& e) {
        problems.push_back(e.what());
    }
    try {
        rc.train.validate();
    } catch (const Error& e) {
        problems.push_back(e.what());
    }

    if (!problems.empty()) {
        std::string msg = "run config invalid:";
        for (const std::string& p : problems) msg += "\n  - " + p;
        throw ValidationError(msg);
    }
    return rc;
}

std::vector<TaskInfo> RunConfig::task_infos() const {
    std::vector<TaskInfo> out;
    for (const TaskSpec& t : tasks) out.push_back({t.task_id, t.labels});
    return out;
}

const TaskSpec& RunConfig::task(const std::string& task_id) const {
    for (const TaskSpec& t : tasks) {
        if (t.task_id == task_id) return t;
    }
    throw LookupError("config has no task '" + task_id + "'");
}

}  // namespace mtlre
