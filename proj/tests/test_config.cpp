#include <doctest.h>

#include <string>
#include <vector>

#include "mtlre/config.hpp"
#include "mtlre/error.hpp"
#include "mtlre/fixtures.hpp"

using namespace mtlre;

namespace {

std::string full_config_text() {
    return R"(# model shape
variant = mtl_adversarial
max_sentence_length = 60
embedding_dimension = 200
gru_hidden_state_dimension = 64
attention_size = 350
attention_aspect_size = 5
feedforward_hidden_size = 100
feature_width = 100
dropout_rate = 0.3
alpha = 1.0
beta = 0.05
grl_lambda = 1.0

# optimization
epochs_max = 30
batch_size = 32
learning_rate = 0.001
discriminator_pretrain_epochs = 2
validation_fraction = 0.1
seed = 42

# artifacts
out_dir = runs/demo
embedding_path = vectors.txt
cv_folds = 10

task.ddi.corpus = data/ddi.jsonl
task.ddi.labels = negative, advise, effect, mechanism, int
task.ppi.corpus = data/ppi.jsonl
task.ppi.labels = no_interaction, interaction
task.ppi.split = fixed-test
task.ppi.test_corpus = data/ppi_test.jsonl
)";
}

std::string error_message(const std::string& text) {
    try {
        RunConfig::from_kv(KeyValueFile::parse_string(text, "test.conf"));
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("key-value files keep order, trim edges, and drop comments") {
    KeyValueFile kv = KeyValueFile::parse_string(
        "# leading comment\n"
        "  alpha =  1.5  \n"
        "\n"
        "name = two  words # trailing comment\n"
        "empty_value =\n",
        "demo.conf");
    REQUIRE(kv.entries().size() == 3);
    CHECK(kv.entries()[0].first == "alpha");
    CHECK(kv.entries()[0].second == "1.5");
    CHECK(kv.entries()[1].first == "name");
    CHECK(kv.entries()[1].second == "two  words");  // internal spacing survives
    CHECK(kv.entries()[2].second == "");
    CHECK(kv.has("alpha"));
    CHECK_FALSE(kv.has("beta"));
    CHECK(kv.get_or("missing", "fallback") == "fallback");
}

TEST_CASE("malformed lines fail with their origin and line number") {
    try {
        KeyValueFile::parse_string("a = 1\nno equals sign here\n", "broken.conf");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        std::string msg = e.what();
        CHECK(msg.find("broken.conf:2") != std::string::npos);
        CHECK(msg.find("key = value") != std::string::npos);
    }
    CHECK_THROWS_AS(KeyValueFile::parse_string("= orphan\n", "x"), ParseError);
    try {
        KeyValueFile::parse_string("k = 1\nk = 2\n", "dup.conf");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        std::string msg = e.what();
        CHECK(msg.find("dup.conf:2") != std::string::npos);
        CHECK(msg.find("duplicate key 'k'") != std::string::npos);
    }
}

TEST_CASE("typed getters parse values and fall back when keys are absent") {
    KeyValueFile kv = KeyValueFile::parse_string(
        "count = 12\nnegative = -3\nrate = 0.25\nscience = 6.02e23\n"
        "yes1 = true\nyes2 = 1\nyes3 = yes\nno1 = false\nno2 = 0\nno3 = no\n",
        "typed.conf");
    CHECK(kv.get_int("count", 0) == 12);
    CHECK(kv.get_int("negative", 0) == -3);
    CHECK(kv.get_int("absent", 7) == 7);
    CHECK(kv.get_uint("count", 0) == 12);
    CHECK(kv.get_uint("absent", 9) == 9);
    CHECK(kv.get_double("rate", 0.0) == 0.25);
    CHECK(kv.get_double("science", 0.0) == 6.02e23);
    CHECK(kv.get_double("absent", 1.5) == 1.5);
    CHECK(kv.get_bool("yes1", false));
    CHECK(kv.get_bool("yes2", false));
    CHECK(kv.get_bool("yes3", false));
    CHECK_FALSE(kv.get_bool("no1", true));
    CHECK_FALSE(kv.get_bool("no2", true));
    CHECK_FALSE(kv.get_bool("no3", true));
    CHECK(kv.get_bool("absent", true));
}

TEST_CASE("malformed typed values raise errors naming the key") {
    KeyValueFile kv = KeyValueFile::parse_string(
        "count = twelve\nrate = fast\nflag = maybe\nsigned = -4\n", "bad.conf");
    for (const char* probe : {"count", "rate", "flag"}) {
        try {
            if (std::string(probe) == "count") kv.get_int(probe, 0);
            if (std::string(probe) == "rate") kv.get_double(probe, 0);
            if (std::string(probe) == "flag") kv.get_bool(probe, false);
            FAIL("expected ValidationError");
        } catch (const ValidationError& e) {
            CHECK(std::string(e.what()).find(probe) != std::string::npos);
        }
    }
    CHECK_THROWS_AS(kv.get_uint("signed", 0), ValidationError);
    CHECK_THROWS_AS(kv.get_int("count", 0), ValidationError);
}

TEST_CASE("unused keys are tracked so typos can be reported") {
    KeyValueFile kv =
        KeyValueFile::parse_string("a = 1\nb = 2\nc = 3\n", "use.conf");
    CHECK(kv.unused_keys() == std::vector<std::string>{"a", "b", "c"});
    kv.get("a");
    kv.mark_used("c");
    CHECK(kv.unused_keys() == std::vector<std::string>{"b"});
}

TEST_CASE("prefix scans preserve file order") {
    KeyValueFile kv = KeyValueFile::parse_string(
        "task.z.corpus = 1\nother = x\ntask.a.corpus = 2\n", "p.conf");
    CHECK(kv.keys_with_prefix("task.") ==
          std::vector<std::string>{"task.z.corpus", "task.a.corpus"});
}

TEST_CASE("comma splitting trims pieces and drops empties") {
    CHECK(split_csv("a, b ,c") == std::vector<std::string>{"a", "b", "c"});
    CHECK(split_csv("a,,b,") == std::vector<std::string>{"a", "b"});
    CHECK(split_csv("  ") == std::vector<std::string>{});
    CHECK(split_csv("") == std::vector<std::string>{});
    CHECK(split_csv("one") == std::vector<std::string>{"one"});
}

TEST_CASE("a full run config file lands in every field") {
    RunConfig rc =
        RunConfig::from_kv(KeyValueFile::parse_string(full_config_text(), "full.conf"));

    CHECK(rc.model.variant == ModelVariant::mtl_adversarial);
    CHECK(rc.model.max_sentence_length == 60);
    CHECK(rc.model.embedding_dimension == 200);
    CHECK(rc.model.gru_hidden_state_dimension == 64);
    CHECK(rc.model.attention_size == 350);
    CHECK(rc.model.attention_aspect_size == 5);
    CHECK(rc.model.feedforward_hidden_size == 100);
    CHECK(rc.model.feature_width == 100);
    CHECK(rc.model.dropout_rate == 0.3);
    CHECK(rc.model.alpha == 1.0);
    CHECK(rc.model.beta == 0.05);
    CHECK(rc.model.grl_lambda == 1.0);

    CHECK(rc.train.epochs_max == 30);
    CHECK(rc.train.batch_size == 32);
    CHECK(rc.train.learning_rate == 0.001);
    CHECK(rc.train.discriminator_pretrain_epochs == 2);
    CHECK(rc.train.validation_fraction == 0.1);
    CHECK(rc.train.seed == 42);

    CHECK(rc.out_dir == "runs/demo");
    CHECK(rc.embedding_path == "vectors.txt");
    CHECK(rc.cv_folds == 10);

    REQUIRE(rc.tasks.size() == 2);
    CHECK(rc.tasks[0].task_id == "ddi");
    CHECK(rc.tasks[0].corpus_path == "data/ddi.jsonl");
    CHECK(rc.tasks[0].labels ==
          std::vector<std::string>{"negative", "advise", "effect", "mechanism", "int"});
    CHECK(rc.tasks[0].split == TaskSpec::Split::cv);
    CHECK(rc.tasks[1].task_id == "ppi");
    CHECK(rc.tasks[1].split == TaskSpec::Split::fixed_test);
    CHECK(rc.tasks[1].test_corpus_path == "data/ppi_test.jsonl");

    std::vector<TaskInfo> infos = rc.task_infos();
    REQUIRE(infos.size() == 2);
    CHECK(infos[1].task_id == "ppi");
    CHECK(infos[1].labels == std::vector<std::string>{"no_interaction", "interaction"});
    CHECK(rc.task("ddi").corpus_path == "data/ddi.jsonl");
    CHECK_THROWS_AS(rc.task("absent"), LookupError);
}

TEST_CASE("defaults fill everything a minimal config omits") {
    RunConfig rc = RunConfig::from_kv(KeyValueFile::parse_string(
        "task.t.corpus = t.jsonl\ntask.t.labels = a, b\n", "minimal.conf"));
    CHECK(rc.model.variant == ModelVariant::mtl_adversarial);
    CHECK(rc.model.beta == 0.05);  // the adversarial default survives
    CHECK(rc.train.epochs_max == 30);
    CHECK(rc.out_dir == "out");
    CHECK(rc.embedding_path.empty());
    CHECK(rc.cv_folds == 10);
}

TEST_CASE("the adversarial weight defaults to zero for adversary-free variants") {
    for (const char* variant : {"stl", "stl_attention", "mtl_shared",
                                "mtl_no_adversarial"}) {
        RunConfig rc = RunConfig::from_kv(KeyValueFile::parse_string(
            std::string("variant = ") + variant +
                "\ntask.t.corpus = t.jsonl\ntask.t.labels = a, b\n",
            "v.conf"));
        CHECK(rc.model.beta == 0.0);
    }
}

TEST_CASE("a fixed-test split demands a test corpus and cv refuses one") {
    std::string msg = error_message(
        "task.a.corpus = a.jsonl\ntask.a.labels = x, y\ntask.a.split = fixed-test\n"
        "task.b.corpus = b.jsonl\ntask.b.labels = x, y\n"
        "task.b.test_corpus = b_test.jsonl\n");
    CHECK(msg.find("task 'a'") != std::string::npos);
    CHECK(msg.find("needs 'task.a.test_corpus'") != std::string::npos);
    CHECK(msg.find("task 'b'") != std::string::npos);
    CHECK(msg.find("only applies to split 'fixed-test'") != std::string::npos);
}

TEST_CASE("every config problem is reported in one message") {
    std::string msg = error_message(
        "variant = banana\n"
        "batch_size = many\n"
        "cv_folds = 1\n"
        "learning_rte = 0.001\n"
        "task.t.corpus = t.jsonl\n"
        "task.t.labels = only_one\n"
        "task.t.split = sideways\n");
    CHECK(msg.find("banana") != std::string::npos);
    CHECK(msg.find("batch_size") != std::string::npos);
    CHECK(msg.find("cv_folds must be >= 2") != std::string::npos);
    CHECK(msg.find("unknown config key 'learning_rte'") != std::string::npos);
    CHECK(msg.find(">= 2 labels") != std::string::npos);
    CHECK(msg.find("split must be 'cv' or 'fixed-test'") != std::string::npos);
}

TEST_CASE("configs without any task block are refused") {
    std::string msg = error_message("variant = stl\n");
    CHECK(msg.find("no task.<id>.* block") != std::string::npos);
}

TEST_CASE("task blocks missing required keys are itemized") {
    std::string msg = error_message("task.t.labels = a, b\n");
    CHECK(msg.find("missing key 'task.t.corpus'") != std::string::npos);

    msg = error_message("task.t.corpus = t.jsonl\n");
    CHECK(msg.find("missing key 'task.t.labels'") != std::string::npos);
}

TEST_CASE("model-level invariants surface through run config validation") {
    // An adversarial variant with beta forced to zero violates the
    // weight/variant consistency rule.
    std::string msg = error_message(
        "variant = mtl_adversarial\nbeta = 0\n"
        "task.t.corpus = t.jsonl\ntask.t.labels = a, b\n");
    CHECK(msg.find("beta") != std::string::npos);
}

TEST_CASE("reference corpus statistics carry the published counts") {
    REQUIRE(corpus_fixtures().size() == 4);

    const CorpusFixture& aimed = fixture("aimed");
    CHECK(aimed.total() == 5834);
    CHECK(aimed.label_set() ==
          std::vector<std::string>{"interaction", "no_interaction"});

    CHECK(fixture("bioinfer").total() == 9666);

    const CorpusFixture& ddi = fixture("ddi");
    CHECK(ddi.label_set() ==
          std::vector<std::string>{"false", "effect", "mechanism", "advice", "int"});
    CHECK(ddi.total() == 26935 + 2045 + 1618 + 1047 + 284);

    const CorpusFixture& i2b2 = fixture("i2b2");
    CHECK(i2b2.label_set() == std::vector<std::string>{"TeRP", "TrAP", "PIP", "TeCP",
                                                       "TrCP", "NONE"});
    CHECK(i2b2.total() == 63943);  // removed classes still count toward the total

    CHECK_THROWS_AS(fixture("unknown-corpus"), LookupError);
}
