#pragma once

#include <cstdint>
#include <random>
#include <span>

#include "mtlre/ops.hpp"

namespace mtlre {

// Structured self-attention over a hidden-state matrix H (n x d_h):
//   p = tanh(U H^T)            (d_a x n)
//   single aspect: v = softmax(w p)          (n)
//   multi aspect:  V = row-softmax(Wa p)     (a x n)
// Wa stacks the per-aspect weight vectors; with one aspect its single row
// *is* the single-aspect vector w.  No biases — the formulation has none.
struct AttentionParameters {
    Parameter U;   // d_a x d_h
    Parameter Wa;  // aspects x d_a

    Index aspects() const { return Wa.shape.rows(); }
    Index attention_size() const { return U.shape.rows(); }
    Index hidden_width() const { return U.shape.cols(); }

    static AttentionParameters create(const std::string& prefix, Index d_h,
                                      Index d_a, Index aspects,
                                      std::mt19937_64& rng);
    std::vector<Parameter*> parameters();
};

// Position weights over the n rows of H.  A non-empty mask marks real
// positions with 1; masked positions get -1e9 added to their logits, which
// drives their weight (and its gradient) to exactly zero.  Raises
// ValidationError when every position is masked.
Tensor single_aspect_weights(Tape& tape, const Tensor& H, AttentionParameters& params,
                             std::span<const std::uint8_t> mask = {});
Tensor multi_aspect_weights(Tape& tape, const Tensor& H, AttentionParameters& params,
                            std::span<const std::uint8_t> mask = {});

// M = V H stacked row-wise into one vector of length a*d_h.
Tensor attend(const Tensor& H, const Tensor& V);

}  // namespace mtlre
