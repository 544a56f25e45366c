#include "mtlre/model.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "mtlre/init.hpp"
#include "mtlre/log.hpp"

namespace mtlre {

using json = nlohmann::ordered_json;

namespace {
const std::vector<std::pair<ModelVariant, std::string>>& variant_table() {
    static const std::vector<std::pair<ModelVariant, std::string>> table = {
        {ModelVariant::stl, "stl"},
        {ModelVariant::stl_attention, "stl_attention"},
        {ModelVariant::mtl_shared, "mtl_shared"},
        {ModelVariant::mtl_adversarial, "mtl_adversarial"},
        {ModelVariant::mtl_adversarial_no_selfattn, "mtl_adversarial_no_selfattn"},
        {ModelVariant::mtl_no_adversarial, "mtl_no_adversarial"},
    };
    return table;
}
}  // namespace

ModelVariant parse_variant(const std::string& name) {
    for (const auto& [v, n] : variant_table()) {
        if (n == name) return v;
    }
    std::string known;
    for (const auto& [v, n] : variant_table()) known += (known.empty() ? "" : ", ") + n;
    throw ValidationError("unknown model variant '" + name + "' (known: " + known + ")");
}

const std::string& variant_name(ModelVariant v) {
    for (const auto& [var, n] : variant_table()) {
        if (var == v) return n;
    }
    throw LookupError("unnamed model variant");
}

bool ModelConfig::has_shared_path() const {
    return variant == ModelVariant::mtl_shared ||
           variant == ModelVariant::mtl_adversarial ||
           variant == ModelVariant::mtl_adversarial_no_selfattn ||
           variant == ModelVariant::mtl_no_adversarial;
}

bool ModelConfig::has_private_path() const {
    return variant != ModelVariant::mtl_shared;
}

bool ModelConfig::has_adversary() const {
    return variant == ModelVariant::mtl_adversarial ||
           variant == ModelVariant::mtl_adversarial_no_selfattn;
}

bool ModelConfig::uses_attention() const {
    return variant != ModelVariant::stl &&
           variant != ModelVariant::mtl_adversarial_no_selfattn;
}

Index ModelConfig::effective_aspects() const {
    if (!uses_attention()) return 1;
    // The two word-level-attention presets are single-aspect by definition.
    if (variant == ModelVariant::stl_attention || variant == ModelVariant::mtl_shared) {
        return 1;
    }
    return attention_aspect_size;
}

Index ModelConfig::attended_width() const {
    return uses_attention() ? effective_aspects() * hidden_width() : hidden_width();
}

Index ModelConfig::classifier_input_width() const {
    return (has_private_path() ? feature_width : 0) +
           (has_shared_path() ? feature_width : 0);
}

void ModelConfig::validate() const {
    std::vector<std::string> problems;
    auto positive = [&](const char* name, Index v) {
        if (v < 1) problems.push_back(std::string(name) + " must be >= 1, got " +
                                      std::to_string(v));
    };
    positive("max_sentence_length", max_sentence_length);
    positive("embedding_dimension", embedding_dimension);
    positive("gru_hidden_state_dimension", gru_hidden_state_dimension);
    positive("attention_size", attention_size);
    positive("attention_aspect_size", attention_aspect_size);
    positive("feedforward_hidden_size", feedforward_hidden_size);
    positive("feature_width", feature_width);
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
        problems.push_back("dropout_rate must lie in [0,1), got " +
                           std::to_string(dropout_rate));
    }
    if (!(alpha > 0.0)) {
        problems.push_back("alpha must be positive, got " + std::to_string(alpha));
    }
    if (beta < 0.0) {
        problems.push_back("beta must be >= 0, got " + std::to_string(beta));
    }
    if (has_adversary() && beta == 0.0) {
        problems.push_back("variant " + variant_name(variant) +
                           " trains adversarially and needs beta > 0");
    }
    if (!has_adversary() && beta != 0.0) {
        problems.push_back("variant " + variant_name(variant) +
                           " has no adversary; beta must be 0, got " +
                           std::to_string(beta));
    }
    if (!std::isfinite(grl_lambda)) problems.push_back("grl_lambda must be finite");
    if (attention_redundancy_penalty < 0.0) {
        problems.push_back("attention_redundancy_penalty must be >= 0");
    }
    if (attention_redundancy_penalty > 0.0 && !uses_attention()) {
        problems.push_back("attention_redundancy_penalty is set but variant " +
                           variant_name(variant) + " has no attention");
    }
    if (!problems.empty()) {
        std::string msg = "model config invalid:";
        for (const std::string& p : problems) msg += "\n  - " + p;
        throw ValidationError(msg);
    }
}

ProjectionParameters ProjectionParameters::create(const std::string& prefix, Index in,
                                                  Index hidden, Index out,
                                                  std::mt19937_64& rng) {
    ProjectionParameters p;
    p.W1 = Parameter(prefix + ".W1", Shape::matrix(in, hidden),
                     glorot_uniform(in, hidden, in * hidden, rng));
    p.b1 = Parameter(prefix + ".b1", Shape::vector(hidden), Vec::Zero(hidden));
    p.W2 = Parameter(prefix + ".W2", Shape::matrix(hidden, out),
                     glorot_uniform(hidden, out, hidden * out, rng));
    p.b2 = Parameter(prefix + ".b2", Shape::vector(out), Vec::Zero(out));
    return p;
}

std::vector<Parameter*> ProjectionParameters::parameters() {
    return {&W1, &b1, &W2, &b2};
}

std::vector<Parameter*> TaskHead::parameters() {
    std::vector<Parameter*> out;
    if (encoder) {
        auto e = encoder->parameters();
        out.insert(out.end(), e.begin(), e.end());
    }
    if (attention) {
        auto a = attention->parameters();
        out.insert(out.end(), a.begin(), a.end());
    }
    if (projection) {
        auto p = projection->parameters();
        out.insert(out.end(), p.begin(), p.end());
    }
    out.push_back(&Wc);
    out.push_back(&bc);
    return out;
}

std::vector<Parameter*> SharedEncoder::parameters() {
    std::vector<Parameter*> out = encoder.parameters();
    if (attention) {
        auto a = attention->parameters();
        out.insert(out.end(), a.begin(), a.end());
    }
    auto p = projection.parameters();
    out.insert(out.end(), p.begin(), p.end());
    return out;
}

MtlModel MtlModel::create(const ModelConfig& config, std::vector<TaskInfo> tasks,
                          Vocabulary vocab, std::uint64_t seed,
                          std::optional<EmbeddingTable> pretrained) {
    config.validate();
    if (tasks.empty()) throw ValidationError("model needs at least one task");
    std::set<std::string> ids;
    for (const TaskInfo& t : tasks) {
        if (!ids.insert(t.task_id).second) {
            throw ValidationError("duplicate task id '" + t.task_id + "'");
        }
        if (t.labels.size() < 2) {
            throw ValidationError("task '" + t.task_id + "' needs >= 2 labels");
        }
        if (std::set<std::string>(t.labels.begin(), t.labels.end()).size() !=
            t.labels.size()) {
            throw ValidationError("task '" + t.task_id + "' has duplicate labels");
        }
    }

    MtlModel m;
    m.config = config;
    m.tasks = std::move(tasks);
    m.vocab = std::move(vocab);

    // Separate derived streams per component: swapping in pretrained
    // embeddings must not shift the network draws.
    std::mt19937_64 rng_emb(derive_seed(seed, {0x10}));
    std::mt19937_64 rng_net(derive_seed(seed, {0x20}));

    if (pretrained) {
        if (pretrained->dim != config.embedding_dimension ||
            pretrained->vocab_size() != m.vocab.size()) {
            throw ValidationError("pretrained embedding table is " +
                                  pretrained->weights.shape.str() +
                                  " but the model needs [" +
                                  std::to_string(m.vocab.size()) + "x" +
                                  std::to_string(config.embedding_dimension) + "]");
        }
        m.embedding = std::move(*pretrained);
    } else {
        m.embedding =
            EmbeddingTable::random_init(m.vocab, config.embedding_dimension, rng_emb);
    }

    const Index d = config.embedding_dimension;
    const Index d_dir = config.gru_hidden_state_dimension;
    const Index d_h = config.hidden_width();
    const Index d_a = config.attention_size;
    const Index aspects = config.effective_aspects();
    const Index hidden = config.feedforward_hidden_size;
    const Index feat = config.feature_width;

    if (config.has_shared_path()) {
        SharedEncoder s;
        s.encoder = BiGruParameters::create("shared.gru", d, d_dir, rng_net);
        if (config.uses_attention()) {
            s.attention = AttentionParameters::create("shared.attn", d_h, d_a, aspects, rng_net);
        }
        s.projection = ProjectionParameters::create("shared.proj", config.attended_width(),
                                                    hidden, feat, rng_net);
        m.shared = std::move(s);
    }
    for (const TaskInfo& t : m.tasks) {
        TaskHead head;
        head.info = t;
        std::string prefix = "task." + t.task_id;
        if (config.has_private_path()) {
            head.encoder = BiGruParameters::create(prefix + ".gru", d, d_dir, rng_net);
            if (config.uses_attention()) {
                head.attention = AttentionParameters::create(prefix + ".attn", d_h, d_a,
                                                             aspects, rng_net);
            }
            head.projection = ProjectionParameters::create(
                prefix + ".proj", config.attended_width(), hidden, feat, rng_net);
        }
        Index c = static_cast<Index>(t.labels.size());
        Index in = config.classifier_input_width();
        head.Wc = Parameter(prefix + ".classifier.W", Shape::matrix(in, c),
                            glorot_uniform(in, c, in * c, rng_net));
        head.bc = Parameter(prefix + ".classifier.b", Shape::vector(c), Vec::Zero(c));
        m.heads.push_back(std::move(head));
    }
    if (config.has_adversary()) {
        m.discriminator = ProjectionParameters::create(
            "discriminator", feat, hidden, m.task_count(), rng_net);
    }
    return m;
}

Index MtlModel::task_index(const std::string& task_id) const {
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (tasks[i].task_id == task_id) return static_cast<Index>(i);
    }
    throw LookupError("unknown task '" + task_id + "'");
}

std::vector<Parameter*> MtlModel::parameters() {
    std::vector<Parameter*> out{&embedding.weights};
    if (shared) {
        auto s = shared->parameters();
        out.insert(out.end(), s.begin(), s.end());
    }
    for (TaskHead& h : heads) {
        auto p = h.parameters();
        out.insert(out.end(), p.begin(), p.end());
    }
    if (discriminator) {
        auto d = discriminator->parameters();
        out.insert(out.end(), d.begin(), d.end());
    }
    return out;
}

std::vector<Parameter*> MtlModel::head_parameters(Index task) {
    if (task < 0 || task >= task_count()) {
        throw LookupError("task index " + std::to_string(task) + " out of range");
    }
    return heads[task].parameters();
}

std::vector<Parameter*> MtlModel::shared_parameters() {
    return shared ? shared->parameters() : std::vector<Parameter*>{};
}

std::vector<Parameter*> MtlModel::discriminator_parameters() {
    return discriminator ? discriminator->parameters() : std::vector<Parameter*>{};
}

std::vector<Parameter*> MtlModel::step_parameters(Index task) {
    std::vector<Parameter*> out{&embedding.weights};
    auto s = shared_parameters();
    out.insert(out.end(), s.begin(), s.end());
    auto h = head_parameters(task);
    out.insert(out.end(), h.begin(), h.end());
    auto d = discriminator_parameters();
    out.insert(out.end(), d.begin(), d.end());
    return out;
}

namespace {

// x -> relu(x W1 + b1) W2 + b2; works for one vector or a batch of rows.
Tensor feed_forward(Tape& tape, const Tensor& x, ProjectionParameters& p) {
    Tensor h = relu(add(matmul(x, tape.watch(p.W1)), tape.watch(p.b1)));
    return add(matmul(h, tape.watch(p.W2)), tape.watch(p.b2));
}

Tensor mean_pool(Tape& tape, const Tensor& H) {
    Index n = H.shape().extent(0);
    Tensor weights = tape.constant(Shape::vector(n), Vec::Constant(n, 1.0 / n));
    return matmul(weights, H);
}

struct EncodedExample {
    Tensor features;   // rank-1 feature_width
    Tensor weights;    // aspects x n attention, invalid() when pooled
};

EncodedExample encode_example(Tape& tape, const Tensor& X, BiGruParameters& gru,
                              AttentionParameters* attn, ProjectionParameters& proj) {
    std::vector<std::uint8_t> all_real(X.shape().extent(0), 1);
    Tensor H = bigru_encode(tape, X, all_real, gru);
    EncodedExample out;
    Tensor s;
    if (attn) {
        out.weights = multi_aspect_weights(tape, H, *attn);
        s = attend(H, out.weights);
    } else {
        s = mean_pool(tape, H);
    }
    out.features = feed_forward(tape, s, proj);
    return out;
}

// |V V^T - I|_F^2 for one attention matrix.
Tensor redundancy_term(Tape& tape, const Tensor& V) {
    Index a = V.shape().extent(0);
    Mat eye = Mat::Identity(a, a);
    Tensor d = sub(matmul(V, transpose(V)), tape.constant(eye));
    return sum(mul(d, d));
}

}  // namespace

ForwardResult forward_task(Tape& tape, const Batch& batch, const std::string& task_id,
                           MtlModel& model, ForwardMode mode, std::mt19937_64& rng) {
    Index k = model.task_index(task_id);
    TaskHead& head = model.heads[k];
    if (!batch.task_id.empty() && batch.task_id != task_id) {
        throw ValidationError("batch belongs to task '" + batch.task_id +
                              "' but was given to task '" + task_id + "'");
    }
    if (batch.rows < 1) throw ValidationError("empty batch");
    Index c_count = static_cast<Index>(head.info.labels.size());
    if (batch.labels.cols() != c_count) {
        throw DimensionError("batch carries " + std::to_string(batch.labels.cols()) +
                             " label columns but task '" + task_id + "' has " +
                             std::to_string(c_count) + " labels");
    }
    for (Index tok : batch.tokens) {
        if (tok < 0 || tok >= model.vocab.size()) {
            throw ValidationError("batch token index " + std::to_string(tok) +
                                  " outside vocabulary of size " +
                                  std::to_string(model.vocab.size()));
        }
    }

    Tensor emb = tape.watch(model.embedding.weights);
    const bool training = mode == ForwardMode::train;
    const bool want_redundancy = model.config.attention_redundancy_penalty > 0.0;

    ForwardResult result;
    std::vector<Tensor> prob_rows, sf_rows, redundancy_terms;
    for (Index r = 0; r < batch.rows; ++r) {
        Index len = batch.length(r);
        if (len < 1) throw ValidationError("batch row " + std::to_string(r) +
                                           " has no unmasked tokens");
        std::vector<Index> token_rows;
        token_rows.reserve(len);
        for (Index t = 0; t < len; ++t) token_rows.push_back(batch.token_at(r, t));
        // Padding is trailing-only, so the graph is built on the true length
        // and padded positions never exist in it.
        Tensor X = gather_rows(emb, token_rows);

        std::optional<EncodedExample> priv, shar;
        if (head.encoder) {
            priv = encode_example(tape, X, *head.encoder,
                                  head.attention ? &*head.attention : nullptr,
                                  *head.projection);
        }
        if (model.shared) {
            shar = encode_example(tape, X, model.shared->encoder,
                                  model.shared->attention ? &*model.shared->attention : nullptr,
                                  model.shared->projection);
        }
        Tensor hbar;
        if (priv && shar) hbar = concat({priv->features, shar->features}, 0);
        else if (priv) hbar = priv->features;
        else hbar = shar->features;

        hbar = dropout(hbar, model.config.dropout_rate, rng, training);
        Tensor logits = add(matmul(hbar, tape.watch(head.Wc)), tape.watch(head.bc));
        prob_rows.push_back(softmax(logits, 0));
        if (shar) sf_rows.push_back(shar->features);

        const Tensor* cache = priv && priv->weights.valid() ? &priv->weights
                              : shar && shar->weights.valid() ? &shar->weights
                                                              : nullptr;
        if (cache) result.attention.push_back(Mat(cache->matrix()));
        if (want_redundancy) {
            if (priv && priv->weights.valid()) {
                redundancy_terms.push_back(redundancy_term(tape, priv->weights));
            }
            if (shar && shar->weights.valid()) {
                redundancy_terms.push_back(redundancy_term(tape, shar->weights));
            }
        }
    }
    result.probabilities = stack_rows(prob_rows);
    if (!sf_rows.empty()) result.shared_features = stack_rows(sf_rows);
    if (!redundancy_terms.empty()) {
        Tensor acc = redundancy_terms[0];
        for (std::size_t i = 1; i < redundancy_terms.size(); ++i) {
            acc = add(acc, redundancy_terms[i]);
        }
        result.redundancy = acc;
    }
    return result;
}

Tensor task_loss(const Tensor& probabilities, const Mat& gold_onehot) {
    Tape& tape = probabilities.tape();
    return cross_entropy(probabilities, tape.constant(gold_onehot));
}

Tensor adversarial_loss(Tape& tape, const Tensor& shared_features, Index task,
                        MtlModel& model, bool reverse) {
    if (!model.discriminator) {
        throw ValidationError("variant " + variant_name(model.config.variant) +
                              " has no task discriminator");
    }
    if (!shared_features.valid()) {
        throw ValidationError("adversarial loss requires shared features");
    }
    Index k_count = model.task_count();
    if (task < 0 || task >= k_count) {
        throw ValidationError("task label " + std::to_string(task) +
                              " outside [0," + std::to_string(k_count) + ")");
    }
    Tensor x = reverse ? gradient_reversal(shared_features, model.config.grl_lambda)
                       : shared_features;
    Tensor probs = softmax(feed_forward(tape, x, *model.discriminator), 1);
    Mat gold = Mat::Zero(shared_features.shape().extent(0), k_count);
    gold.col(task).setOnes();
    return cross_entropy(probs, tape.constant(gold));
}

Tensor total_loss(Tape& tape, std::span<const Tensor> task_losses,
                  std::optional<Tensor> adversarial, double alpha, double beta) {
    if (task_losses.empty()) throw ValidationError("total_loss: no task losses");
    if (!(alpha > 0.0)) throw ValidationError("total_loss: alpha must be positive");
    if (beta < 0.0) throw ValidationError("total_loss: beta must be >= 0");
    Tensor acc = task_losses[0];
    for (std::size_t i = 1; i < task_losses.size(); ++i) acc = add(acc, task_losses[i]);
    acc = scale(acc, alpha);
    if (adversarial && adversarial->valid()) {
        acc = add(acc, scale(*adversarial, beta));
    }
    (void)tape;
    return acc;
}

Index argmax_index(const Vec& values) {
    if (values.size() == 0) throw ValidationError("argmax of an empty vector");
    Index best = 0;
    for (Index i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

std::string predict_label(const RelationExample& example, const std::string& task_id,
                          MtlModel& model) {
    Index k = model.task_index(task_id);
    const std::vector<std::string>& labels = model.heads[k].info.labels;
    RelationExample masked = mask_entities(example);
    masked.label = labels[0];  // gold is irrelevant for prediction
    std::mt19937_64 rng(0);
    std::vector<Batch> batches = make_batches({masked}, labels, model.vocab, 1,
                                              model.config.max_sentence_length, rng);
    if (batches.empty()) {
        throw ValidationError("example '" + example.example_id +
                              "': entity spans too far apart for max sentence length " +
                              std::to_string(model.config.max_sentence_length));
    }
    Tape tape;
    std::mt19937_64 unused(0);
    ForwardResult fwd = forward_task(tape, batches[0], task_id, model,
                                     ForwardMode::infer, unused);
    Vec row0 = fwd.probabilities.value();
    return labels[static_cast<std::size_t>(argmax_index(row0))];
}

namespace {

json config_to_json(const ModelConfig& c) {
    json j;
    j["variant"] = variant_name(c.variant);
    j["max_sentence_length"] = c.max_sentence_length;
    j["embedding_dimension"] = c.embedding_dimension;
    j["gru_hidden_state_dimension"] = c.gru_hidden_state_dimension;
    j["attention_size"] = c.attention_size;
    j["attention_aspect_size"] = c.attention_aspect_size;
    j["feedforward_hidden_size"] = c.feedforward_hidden_size;
    j["feature_width"] = c.feature_width;
    j["dropout_rate"] = c.dropout_rate;
    j["alpha"] = c.alpha;
    j["beta"] = c.beta;
    j["grl_lambda"] = c.grl_lambda;
    j["attention_redundancy_penalty"] = c.attention_redundancy_penalty;
    return j;
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.variant = parse_variant(j.at("variant").get<std::string>());
    c.max_sentence_length = j.at("max_sentence_length").get<Index>();
    c.embedding_dimension = j.at("embedding_dimension").get<Index>();
    c.gru_hidden_state_dimension = j.at("gru_hidden_state_dimension").get<Index>();
    c.attention_size = j.at("attention_size").get<Index>();
    c.attention_aspect_size = j.at("attention_aspect_size").get<Index>();
    c.feedforward_hidden_size = j.at("feedforward_hidden_size").get<Index>();
    c.feature_width = j.at("feature_width").get<Index>();
    c.dropout_rate = j.at("dropout_rate").get<double>();
    c.alpha = j.at("alpha").get<double>();
    c.beta = j.at("beta").get<double>();
    c.grl_lambda = j.at("grl_lambda").get<double>();
    c.attention_redundancy_penalty = j.at("attention_redundancy_penalty").get<double>();
    return c;
}

}  // namespace

void save_manifest(const std::string& path, const ModelManifest& manifest) {
    json j;
    j["format_version"] = 1;
    j["model"] = config_to_json(manifest.config);
    json tasks = json::array();
    for (const TaskInfo& t : manifest.tasks) {
        json tj;
        tj["id"] = t.task_id;
        tj["labels"] = t.labels;
        tasks.push_back(tj);
    }
    j["tasks"] = tasks;
    j["checkpoint_file"] = manifest.checkpoint_file;
    j["vocab_file"] = manifest.vocab_file;
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open manifest for writing: " + path);
    os << j.dump(2) << "\n";
    os.flush();
    if (!os) throw IoError("write failed for manifest: " + path);
}

ModelManifest load_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open manifest: " + path);
    json j;
    try {
        is >> j;
    } catch (const json::parse_error& e) {
        throw ParseError("manifest " + path + ": " + e.what());
    }
    try {
        if (j.at("format_version").get<int>() != 1) {
            throw ParseError("manifest " + path + ": unsupported format version");
        }
        ModelManifest m;
        m.config = config_from_json(j.at("model"));
        for (const json& tj : j.at("tasks")) {
            TaskInfo t;
            t.task_id = tj.at("id").get<std::string>();
            t.labels = tj.at("labels").get<std::vector<std::string>>();
            m.tasks.push_back(std::move(t));
        }
        m.checkpoint_file = j.at("checkpoint_file").get<std::string>();
        m.vocab_file = j.at("vocab_file").get<std::string>();
        return m;
    } catch (const json::exception& e) {
        throw ParseError("manifest " + path + ": " + e.what());
    }
}

}  // namespace mtlre
