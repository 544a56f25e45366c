#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mtlre/corpus.hpp"

namespace mtlre {

// Token-to-index table with three reserved entries that exist in every
// vocabulary: PAD at 0, UNK at 1, ENTITY at 2.  Indices are dense and
// assigned in first-seen corpus order, so construction is deterministic.
class Vocabulary {
public:
    static constexpr Index kPad = 0;
    static constexpr Index kUnk = 1;
    static constexpr Index kEntity = 2;
    static constexpr const char* kPadToken = "<pad>";
    static constexpr const char* kUnkToken = "<unk>";

    Vocabulary();

    // Adds every token of every example, in order.
    static Vocabulary build(std::span<const Corpus* const> corpora);
    static Vocabulary build(const Corpus& corpus);

    // Index for a token; unknown tokens map to UNK.
    Index index_of(const std::string& token) const;
    bool contains(const std::string& token) const;
    const std::string& token(Index i) const;
    Index size() const { return static_cast<Index>(tokens_.size()); }

    // Adds a token if absent; returns its index either way.
    Index add(const std::string& token);

    // One token per line; line number = index.  Used to persist the mapping
    // next to checkpoints.
    void save(const std::string& path) const;
    static Vocabulary load(const std::string& path);

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, Index> index_;
};

}  // namespace mtlre
