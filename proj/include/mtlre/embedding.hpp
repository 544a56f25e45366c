#pragma once

#include <random>
#include <string>

#include "mtlre/vocab.hpp"

namespace mtlre {

// |V| x d embedding matrix held as one named parameter.  The PAD and ENTITY
// rows are frozen: PAD stays all-zero, ENTITY keeps a fixed all-0.1 vector,
// and the optimizer never touches either.  All other rows train normally.
struct EmbeddingTable {
    Parameter weights;  // shape |V| x d, frozen_rows = {PAD, ENTITY}
    Index dim = 0;

    Index vocab_size() const { return weights.shape.rows(); }

    // Every non-reserved row ~ Uniform(-0.05, 0.05).
    static EmbeddingTable random_init(const Vocabulary& vocab, Index dim,
                                      std::mt19937_64& rng);

    // Word-vector text format: header line "count dim", then one line per
    // token: "token v1 ... v_dim".  Tokens absent from the file fall back to
    // the random_init distribution (seeded via rng); reserved rows behave as
    // in random_init.
    static EmbeddingTable load_pretrained(const std::string& path,
                                          const Vocabulary& vocab,
                                          Index expected_dim,
                                          std::mt19937_64& rng);
};

}  // namespace mtlre
