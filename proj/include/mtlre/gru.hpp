#pragma once

#include <cstdint>
#include <random>
#include <span>

#include "mtlre/ops.hpp"

namespace mtlre {

// The nine arrays of one GRU direction: update gate z, reset gate r, and
// candidate c, each with an input weight (d x d_dir), a recurrent weight
// (d_dir x d_dir) and a bias (d_dir).
struct GruParameters {
    Parameter Wz, Wr, Wc;  // input weights
    Parameter Vz, Vr, Vc;  // recurrent weights
    Parameter bz, br, bc;  // biases

    Index input_dim() const { return Wz.shape.rows(); }
    Index hidden_dim() const { return Wz.shape.cols(); }

    // Input weights Glorot-uniform, recurrent weights orthogonal, biases
    // zero; names are "<prefix>.Wz" etc. for checkpointing.
    static GruParameters create(const std::string& prefix, Index input_dim,
                                Index hidden_dim, std::mt19937_64& rng);
    std::vector<Parameter*> parameters();
};

struct BiGruParameters {
    GruParameters fwd;
    GruParameters bwd;

    Index input_dim() const { return fwd.input_dim(); }
    Index output_dim() const { return 2 * fwd.hidden_dim(); }

    static BiGruParameters create(const std::string& prefix, Index input_dim,
                                  Index hidden_dim, std::mt19937_64& rng);
    std::vector<Parameter*> parameters();
};

// One recurrence step:
//   z = sigmoid(x Wz + h Vz + bz)
//   r = sigmoid(x Wr + h Vr + br)
//   c = tanh(x Wc + (r .* h) Vc + bc)
//   h' = z .* c + (1 - z) .* h
// x_t is a length-d vector, h_prev and the result length-d_dir vectors.
Tensor gru_cell(Tape& tape, const Tensor& x_t, const Tensor& h_prev,
                GruParameters& params);

// Bidirectional encoding of an n x d sequence into an n x (2*d_dir) matrix:
// rows are [forward_t ; backward_t].  Masked positions (mask 0) carry the
// previous hidden state through the recurrence unchanged and contribute
// all-zero rows to the output, so trailing padding cannot perturb the rest.
Tensor bigru_encode(Tape& tape, const Tensor& x_seq,
                    std::span<const std::uint8_t> mask, BiGruParameters& params);

}  // namespace mtlre
