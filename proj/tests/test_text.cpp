#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "mtlre/corpus.hpp"
#include "mtlre/embedding.hpp"
#include "mtlre/error.hpp"
#include "mtlre/init.hpp"
#include "mtlre/vocab.hpp"

using namespace mtlre;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("mtlre-text-" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

RelationExample sample_example() {
    RelationExample ex;
    ex.example_id = "ex1";
    ex.document_id = "doc1";
    ex.task_id = "taskA";
    ex.tokens = {"interaction", "of", "p38", "with", "cyclin", "d1", "observed"};
    ex.entity1 = {2, 3};
    ex.entity2 = {4, 6};
    ex.label = "positive";
    return ex;
}

}  // namespace

TEST_CASE("tokenize lowercases and splits punctuation") {
    std::vector<std::string> toks = tokenize("Interaction with P38, cloned.");
    std::vector<std::string> expect = {"interaction", "with", "p38", ",", "cloned", "."};
    CHECK(toks == expect);
}

TEST_CASE("tokenize keeps alphanumeric runs together") {
    std::vector<std::string> toks = tokenize("IL-2  activates  NF-kB!");
    std::vector<std::string> expect = {"il", "-", "2", "activates", "nf", "-", "kb", "!"};
    CHECK(toks == expect);
}

TEST_CASE("tokenize of whitespace is empty") {
    CHECK(tokenize("   \t  ").empty());
    CHECK(tokenize("").empty());
}

TEST_CASE("mask_entities replaces a single-token mention with the placeholder") {
    RelationExample ex = sample_example();
    RelationExample masked = mask_entities(ex);
    CHECK(masked.tokens[2] == "ENTITY");
    CHECK(masked.entity1 == Span{2, 3});
    CHECK(masked.label == ex.label);
    CHECK(masked.example_id == ex.example_id);
}

TEST_CASE("mask_entities collapses a multi-token mention to one token") {
    RelationExample ex = sample_example();  // entity2 covers two tokens
    RelationExample masked = mask_entities(ex);
    CHECK(masked.tokens.size() == ex.tokens.size() - 1);
    CHECK(masked.tokens[4] == "ENTITY");
    CHECK(masked.entity2 == Span{4, 5});
    CHECK(masked.tokens.back() == "observed");
}

TEST_CASE("mask_entities is idempotent") {
    RelationExample once = mask_entities(sample_example());
    RelationExample twice = mask_entities(once);
    CHECK(once == twice);
}

TEST_CASE("masking an early three-token span shifts the later span left") {
    // Ten tokens, first entity covers [2, 5).  After masking, the sentence
    // loses two tokens and the second entity must shift by the same amount.
    RelationExample ex;
    ex.example_id = "shift";
    ex.document_id = "d";
    ex.task_id = "t";
    ex.tokens = {"t0", "t1", "t2", "t3", "t4", "t5", "t6", "t7", "t8", "t9"};
    ex.entity1 = {2, 5};
    ex.entity2 = {7, 8};
    ex.label = "l";
    RelationExample masked = mask_entities(ex);
    CHECK(masked.tokens.size() == 8);
    CHECK(masked.entity1 == Span{2, 3});
    CHECK(masked.entity2 == Span{5, 6});
    CHECK(masked.tokens[2] == "ENTITY");
    CHECK(masked.tokens[5] == "ENTITY");
    CHECK(masked.tokens[7] == "t9");
}

TEST_CASE("mask_entities honors custom per-role placeholders") {
    RelationExample ex = sample_example();
    RelationExample masked = mask_entities(ex, "DRUGA", "DRUGB");
    CHECK(masked.tokens[2] == "DRUGA");
    CHECK(masked.tokens[4] == "DRUGB");
}

TEST_CASE("mask arithmetic holds for random span placements") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        Index n = 6 + static_cast<Index>(uniform_below(rng, 10));
        RelationExample ex;
        ex.example_id = "r" + std::to_string(trial);
        ex.document_id = "d";
        ex.task_id = "t";
        for (Index i = 0; i < n; ++i) ex.tokens.push_back("w" + std::to_string(i));
        // Two disjoint spans in random order.
        Index a_begin = static_cast<Index>(uniform_below(rng, static_cast<std::uint64_t>(n - 4)));
        Index a_len = 1 + static_cast<Index>(uniform_below(rng, 2));
        Index b_begin = a_begin + a_len +
                        static_cast<Index>(uniform_below(
                            rng, static_cast<std::uint64_t>(n - a_begin - a_len - 1)));
        Index b_len = std::min<Index>(1 + static_cast<Index>(uniform_below(rng, 2)), n - b_begin);
        bool swap_roles = uniform_below(rng, 2) == 1;
        Span first{a_begin, a_begin + a_len};
        Span second{b_begin, b_begin + b_len};
        ex.entity1 = swap_roles ? second : first;
        ex.entity2 = swap_roles ? first : second;
        ex.label = "l";
        validate_example(ex);

        RelationExample masked = mask_entities(ex);
        validate_example(masked);
        CHECK(masked.tokens.size() ==
              ex.tokens.size() - static_cast<std::size_t>((a_len - 1) + (b_len - 1)));
        CHECK(masked.entity1.length() == 1);
        CHECK(masked.entity2.length() == 1);
        // The earlier span keeps its begin; the later one shifts by the
        // tokens removed before it.
        Span m_first = swap_roles ? masked.entity2 : masked.entity1;
        Span m_second = swap_roles ? masked.entity1 : masked.entity2;
        CHECK(m_first.begin == a_begin);
        CHECK(m_second.begin == b_begin - (a_len - 1));
        CHECK(masked.tokens[static_cast<std::size_t>(m_first.begin)] == "ENTITY");
        CHECK(masked.tokens[static_cast<std::size_t>(m_second.begin)] == "ENTITY");
    }
}

TEST_CASE("validate_example rejects malformed spans") {
    RelationExample ex = sample_example();

    RelationExample out_of_range = ex;
    out_of_range.entity2 = {5, 9};
    CHECK_THROWS_AS(validate_example(out_of_range), ValidationError);

    RelationExample empty_span = ex;
    empty_span.entity1 = {3, 3};
    CHECK_THROWS_AS(validate_example(empty_span), ValidationError);

    RelationExample overlapping = ex;
    overlapping.entity1 = {2, 5};
    overlapping.entity2 = {4, 6};
    CHECK_THROWS_AS(validate_example(overlapping), ValidationError);

    RelationExample no_label = ex;
    no_label.label.clear();
    CHECK_THROWS_AS(validate_example(no_label), ValidationError);

    RelationExample no_tokens = ex;
    no_tokens.tokens.clear();
    no_tokens.entity1 = {0, 1};
    no_tokens.entity2 = {1, 2};
    CHECK_THROWS_AS(validate_example(no_tokens), ValidationError);
}

TEST_CASE("mask_entities refuses overlapping spans") {
    RelationExample ex = sample_example();
    ex.entity1 = {2, 5};
    ex.entity2 = {4, 6};
    CHECK_THROWS_AS(mask_entities(ex), ValidationError);
}

TEST_CASE("corpus json lines round trip exactly") {
    TempDir dir;
    Corpus corpus = {sample_example()};
    corpus.push_back(sample_example());
    corpus[1].example_id = "ex2";
    corpus[1].label = "negative";
    std::string path = dir.file("corpus.jsonl");
    write_corpus(path, corpus);
    Corpus back = read_corpus(path);
    CHECK(back == corpus);

    // Writing what was read reproduces the file byte for byte.
    std::string again = dir.file("again.jsonl");
    write_corpus(again, back);
    CHECK(slurp(path) == slurp(again));
}

TEST_CASE("corpus reader reports the offending line") {
    TempDir dir;
    std::string path = dir.file("bad.jsonl");
    Corpus one = {sample_example()};
    write_corpus(path, one);
    std::string contents = slurp(path);
    write_text(path, contents + "{not json at all\n");
    try {
        read_corpus(path);
        FAIL("expected a ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
}

TEST_CASE("corpus reader rejects records with missing fields") {
    TempDir dir;
    std::string path = dir.file("missing.jsonl");
    write_text(path, R"({"id":"x","doc":"d","task":"t","tokens":["a","b"],"e1":[0,1]})"
                     "\n");
    CHECK_THROWS_AS(read_corpus(path), ParseError);
}

TEST_CASE("corpus reader validates span arithmetic") {
    TempDir dir;
    std::string path = dir.file("spans.jsonl");
    write_text(path,
               R"({"id":"x","doc":"d","task":"t","tokens":["a","b"],"e1":[0,1],"e2":[1,5],"label":"l"})"
               "\n");
    CHECK_THROWS_AS(read_corpus(path), ParseError);
}

TEST_CASE("vocabulary reserves pad, unk and entity") {
    Vocabulary v;
    CHECK(v.size() == 3);
    CHECK(v.token(Vocabulary::kPad) == "<pad>");
    CHECK(v.token(Vocabulary::kUnk) == "<unk>");
    CHECK(v.token(Vocabulary::kEntity) == "ENTITY");
    CHECK(v.index_of("<pad>") == Vocabulary::kPad);
    CHECK(v.index_of("ENTITY") == Vocabulary::kEntity);
}

TEST_CASE("vocabulary assigns indices in first-seen order") {
    Corpus corpus = {sample_example()};
    Vocabulary v = Vocabulary::build(corpus);
    CHECK(v.index_of("interaction") == 3);
    CHECK(v.index_of("of") == 4);
    CHECK(v.index_of("p38") == 5);
    CHECK(v.size() == 3 + 7);
    CHECK(v.index_of("never-seen") == Vocabulary::kUnk);
    CHECK_FALSE(v.contains("never-seen"));
    CHECK(v.contains("cyclin"));
}

TEST_CASE("vocabulary built from several corpora covers all of them") {
    Corpus a = {sample_example()};
    Corpus b = {sample_example()};
    b[0].tokens = {"fresh", "words", "here"};
    b[0].entity1 = {0, 1};
    b[0].entity2 = {2, 3};
    std::vector<const Corpus*> corpora = {&a, &b};
    Vocabulary v = Vocabulary::build(corpora);
    CHECK(v.contains("interaction"));
    CHECK(v.contains("fresh"));
    // Second corpus tokens come after the first corpus ran out.
    CHECK(v.index_of("fresh") > v.index_of("observed"));
}

TEST_CASE("vocabulary token lookup is bounds checked") {
    Vocabulary v;
    CHECK_THROWS_AS(v.token(3), LookupError);
    CHECK_THROWS_AS(v.token(-1), LookupError);
}

TEST_CASE("vocabulary save and load round trip") {
    TempDir dir;
    Corpus corpus = {sample_example()};
    Vocabulary v = Vocabulary::build(corpus);
    std::string path = dir.file("vocab.txt");
    v.save(path);
    Vocabulary back = Vocabulary::load(path);
    REQUIRE(back.size() == v.size());
    for (Index i = 0; i < v.size(); ++i) CHECK(back.token(i) == v.token(i));

    std::string again = dir.file("vocab2.txt");
    back.save(again);
    CHECK(slurp(path) == slurp(again));
}

TEST_CASE("vocabulary load rejects duplicate lines") {
    TempDir dir;
    std::string path = dir.file("dup.txt");
    write_text(path, "<pad>\n<unk>\nENTITY\nword\nword\n");
    CHECK_THROWS_AS(Vocabulary::load(path), ParseError);
}

TEST_CASE("vocabulary load demands the reserved prefix") {
    TempDir dir;
    std::string path = dir.file("norsvd.txt");
    write_text(path, "word\nother\nthird\n");
    CHECK_THROWS_AS(Vocabulary::load(path), ParseError);
}

TEST_CASE("random embeddings freeze pad and entity rows") {
    Vocabulary v;  // reserved only
    std::mt19937_64 rng(7);
    EmbeddingTable table = EmbeddingTable::random_init(v, 4, rng);
    CHECK(table.weights.shape == Shape::matrix(3, 4));
    CHECK(table.dim == 4);
    MatMap rows = table.weights.matrix();
    CHECK(rows.row(Vocabulary::kPad).isZero());
    for (Index c = 0; c < 4; ++c) CHECK(rows(Vocabulary::kEntity, c) == 0.1);
    // UNK row is random but bounded.
    CHECK(rows.row(Vocabulary::kUnk).cwiseAbs().maxCoeff() <= 0.05);
    CHECK(rows.row(Vocabulary::kUnk).cwiseAbs().maxCoeff() > 0.0);
    REQUIRE(table.weights.frozen_rows.size() == 2);
    CHECK(table.weights.frozen_rows[0] == Vocabulary::kPad);
    CHECK(table.weights.frozen_rows[1] == Vocabulary::kEntity);
}

TEST_CASE("random embeddings are reproducible from the seed") {
    Vocabulary v;
    v.add("alpha");
    v.add("beta");
    std::mt19937_64 r1(99), r2(99);
    EmbeddingTable a = EmbeddingTable::random_init(v, 6, r1);
    EmbeddingTable b = EmbeddingTable::random_init(v, 6, r2);
    CHECK((a.weights.value - b.weights.value).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pretrained file covers listed tokens and falls back for the rest") {
    TempDir dir;
    std::string path = dir.file("vecs.txt");
    write_text(path, "1 3\ncat 0.25 -0.5 0.75\n");
    Vocabulary v;
    v.add("cat");
    v.add("dog");

    std::mt19937_64 rng(1234);
    EmbeddingTable table = EmbeddingTable::load_pretrained(path, v, 3, rng);
    MatMap rows = table.weights.matrix();

    Index cat = v.index_of("cat");
    CHECK(rows(cat, 0) == 0.25);
    CHECK(rows(cat, 1) == -0.5);
    CHECK(rows(cat, 2) == 0.75);
    CHECK(rows.row(Vocabulary::kPad).isZero());
    for (Index c = 0; c < 3; ++c) CHECK(rows(Vocabulary::kEntity, c) == 0.1);

    // Uncovered rows are drawn from the fallback stream in index order:
    // UNK (index 1) first, then dog.  Replaying the stream reproduces them.
    std::mt19937_64 replay(1234);
    Vec unk_expect(3), dog_expect(3);
    for (Index c = 0; c < 3; ++c) unk_expect[c] = uniform_range(replay, -0.05, 0.05);
    for (Index c = 0; c < 3; ++c) dog_expect[c] = uniform_range(replay, -0.05, 0.05);
    Index dog = v.index_of("dog");
    for (Index c = 0; c < 3; ++c) {
        CHECK(rows(Vocabulary::kUnk, c) == unk_expect[c]);
        CHECK(rows(dog, c) == dog_expect[c]);
    }
}

TEST_CASE("pretrained load is deterministic for a fixed seed") {
    TempDir dir;
    std::string path = dir.file("vecs.txt");
    write_text(path, "1 2\ncat 1.0 2.0\n");
    Vocabulary v;
    v.add("cat");
    v.add("dog");
    std::mt19937_64 r1(5), r2(5);
    EmbeddingTable a = EmbeddingTable::load_pretrained(path, v, 2, r1);
    EmbeddingTable b = EmbeddingTable::load_pretrained(path, v, 2, r2);
    CHECK((a.weights.value - b.weights.value).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("embedding rows with too few values name the line") {
    TempDir dir;
    std::string path = dir.file("short.txt");
    // Header promises 200 dimensions; the row carries only 199 values.
    std::string line = "w";
    for (int i = 0; i < 199; ++i) line += " 0.1";
    write_text(path, "2 200\n" + line + "\n");
    Vocabulary v;
    v.add("w");
    std::mt19937_64 rng(3);
    try {
        EmbeddingTable::load_pretrained(path, v, 200, rng);
        FAIL("expected a ParseError");
    } catch (const ParseError& e) {
        std::string msg = e.what();
        CHECK(msg.find("line 2") != std::string::npos);
        CHECK(msg.find("200") != std::string::npos);
    }
}

TEST_CASE("embedding dimension mismatch against the config is rejected") {
    TempDir dir;
    std::string path = dir.file("dim.txt");
    write_text(path, "1 4\ncat 1 2 3 4\n");
    Vocabulary v;
    v.add("cat");
    std::mt19937_64 rng(3);
    CHECK_THROWS_AS(EmbeddingTable::load_pretrained(path, v, 8, rng), ValidationError);
}

TEST_CASE("embedding header with trailing tokens is rejected") {
    TempDir dir;
    std::string path = dir.file("hdr.txt");
    write_text(path, "1 4 extra\ncat 1 2 3 4\n");
    Vocabulary v;
    std::mt19937_64 rng(3);
    CHECK_THROWS_AS(EmbeddingTable::load_pretrained(path, v, 4, rng), ParseError);
}
