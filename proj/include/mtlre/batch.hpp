#pragma once

#include <cstdint>
#include <random>

#include "mtlre/vocab.hpp"

namespace mtlre {

// One mini-batch of token indices with padding masks and one-hot gold rows.
// Width is the longest surviving sentence in the batch (capped at the
// configured maximum), so short batches stay small.
struct Batch {
    std::string task_id;
    Index rows = 0;  // B
    Index cols = 0;  // L
    std::vector<Index> tokens;         // B*L, row-major, PAD-filled
    std::vector<std::uint8_t> mask;    // B*L, 1 = real token
    Mat labels;                        // B x C one-hot
    std::vector<Index> label_indices;  // gold class per row
    std::vector<std::string> example_ids;

    Index token_at(Index r, Index c) const { return tokens[r * cols + c]; }
    bool is_real(Index r, Index c) const { return mask[r * cols + c] != 0; }
    // True sentence length of a row (padding is always trailing).
    Index length(Index r) const;
};

// Shuffles the corpus, truncates over-length sentences (falling back to a
// window centered on the two entity spans when plain truncation would cut
// one off; skipping with a warning when the spans cannot both fit), pads,
// and packs into batches of `batch_size` with one smaller remainder batch.
// Every surviving example appears exactly once.  Labels must come from
// `labels`; unknown ones raise ValidationError.
std::vector<Batch> make_batches(const Corpus& corpus,
                                const std::vector<std::string>& labels,
                                const Vocabulary& vocab, Index batch_size,
                                Index max_len, std::mt19937_64& rng);

}  // namespace mtlre
