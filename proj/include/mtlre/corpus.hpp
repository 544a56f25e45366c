#pragma once

#include <string>
#include <vector>

#include "mtlre/tensor.hpp"

namespace mtlre {

// Half-open token index range [begin, end).
struct Span {
    Index begin = 0;
    Index end = 0;
    Index length() const { return end - begin; }
    bool overlaps(const Span& other) const {
        return begin < other.end && other.begin < end;
    }
    bool operator==(const Span&) const = default;
};

// One labeled sentence with two marked entities.
struct RelationExample {
    std::string example_id;
    std::string document_id;
    std::string task_id;
    std::vector<std::string> tokens;
    Span entity1;
    Span entity2;
    std::string label;

    bool operator==(const RelationExample&) const = default;
};

using Corpus = std::vector<RelationExample>;

// The reserved token substituted for entity mentions.
inline constexpr const char* kEntityToken = "ENTITY";

// Checks span bounds, non-emptiness, and non-overlap; throws ValidationError
// naming the example on failure.
void validate_example(const RelationExample& ex);

// Replaces each entity span with a single placeholder token, collapsing
// multi-token mentions and shifting the other span accordingly.  Idempotent.
// The placeholders default to ENTITY for both roles; distinct per-role
// markers (e.g. DRUGA/DRUGB) are accepted for corpora annotated that way.
RelationExample mask_entities(const RelationExample& ex,
                              const std::string& placeholder1 = kEntityToken,
                              const std::string& placeholder2 = kEntityToken);

// Lowercasing word/punctuation splitter for raw text: letter-digit runs
// form one token, every other non-space character stands alone.
std::vector<std::string> tokenize(const std::string& text);

// Line-delimited interchange format: one object per line with fields
// id, doc, task, tokens, e1, e2, label; spans encoded as [begin, end).
Corpus read_corpus(const std::string& path);
void write_corpus(const std::string& path, const Corpus& corpus);

}  // namespace mtlre
