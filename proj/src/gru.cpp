#include "mtlre/gru.hpp"

#include "mtlre/init.hpp"

namespace mtlre {

GruParameters GruParameters::create(const std::string& prefix, Index input_dim,
                                    Index hidden_dim, std::mt19937_64& rng) {
    if (input_dim < 1 || hidden_dim < 1) {
        throw ValidationError("gru '" + prefix + "': dimensions must be positive");
    }
    auto input_w = [&](const char* name) {
        return Parameter(prefix + "." + name, Shape::matrix(input_dim, hidden_dim),
                         glorot_uniform(input_dim, hidden_dim, input_dim * hidden_dim, rng));
    };
    auto recurrent_w = [&](const char* name) {
        return Parameter(prefix + "." + name, Shape::matrix(hidden_dim, hidden_dim),
                         orthogonal(hidden_dim, hidden_dim, rng));
    };
    auto bias = [&](const char* name) {
        return Parameter(prefix + "." + name, Shape::vector(hidden_dim),
                         Vec::Zero(hidden_dim));
    };
    GruParameters p;
    // Creation order is fixed so a seed fully determines every draw.
    p.Wz = input_w("Wz");
    p.Wr = input_w("Wr");
    p.Wc = input_w("Wc");
    p.Vz = recurrent_w("Vz");
    p.Vr = recurrent_w("Vr");
    p.Vc = recurrent_w("Vc");
    p.bz = bias("bz");
    p.br = bias("br");
    p.bc = bias("bc");
    return p;
}

std::vector<Parameter*> GruParameters::parameters() {
    return {&Wz, &Wr, &Wc, &Vz, &Vr, &Vc, &bz, &br, &bc};
}

BiGruParameters BiGruParameters::create(const std::string& prefix, Index input_dim,
                                        Index hidden_dim, std::mt19937_64& rng) {
    BiGruParameters p;
    p.fwd = GruParameters::create(prefix + ".fwd", input_dim, hidden_dim, rng);
    p.bwd = GruParameters::create(prefix + ".bwd", input_dim, hidden_dim, rng);
    return p;
}

std::vector<Parameter*> BiGruParameters::parameters() {
    std::vector<Parameter*> out = fwd.parameters();
    std::vector<Parameter*> b = bwd.parameters();
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

Tensor gru_cell(Tape& tape, const Tensor& x_t, const Tensor& h_prev,
                GruParameters& params) {
    if (x_t.shape().rank() != 1 || x_t.shape().extent(0) != params.input_dim()) {
        throw DimensionError("gru_cell: input shape " + x_t.shape().str() +
                             " does not match parameter input dimension " +
                             std::to_string(params.input_dim()));
    }
    if (h_prev.shape().rank() != 1 ||
        h_prev.shape().extent(0) != params.hidden_dim()) {
        throw DimensionError("gru_cell: hidden shape " + h_prev.shape().str() +
                             " does not match parameter hidden dimension " +
                             std::to_string(params.hidden_dim()));
    }
    Tensor Wz = tape.watch(params.Wz), Wr = tape.watch(params.Wr), Wc = tape.watch(params.Wc);
    Tensor Vz = tape.watch(params.Vz), Vr = tape.watch(params.Vr), Vc = tape.watch(params.Vc);
    Tensor bz = tape.watch(params.bz), br = tape.watch(params.br), bc = tape.watch(params.bc);

    Tensor z = sigmoid(add(add(matmul(x_t, Wz), matmul(h_prev, Vz)), bz));
    Tensor r = sigmoid(add(add(matmul(x_t, Wr), matmul(h_prev, Vr)), br));
    Tensor c = tanh(add(add(matmul(x_t, Wc), matmul(mul(r, h_prev), Vc)), bc));
    Tensor one = tape.constant(1.0);
    return add(mul(z, c), mul(sub(one, z), h_prev));
}

Tensor bigru_encode(Tape& tape, const Tensor& x_seq,
                    std::span<const std::uint8_t> mask, BiGruParameters& params) {
    if (x_seq.shape().rank() != 2) {
        throw DimensionError("bigru_encode: expected a sequence matrix, got " +
                             x_seq.shape().str());
    }
    Index n = x_seq.shape().extent(0);
    if (n < 1) throw ValidationError("bigru_encode: empty sequence");
    if (static_cast<Index>(mask.size()) != n) {
        throw DimensionError("bigru_encode: mask length " +
                             std::to_string(mask.size()) + " for " +
                             std::to_string(n) + " positions");
    }
    if (x_seq.shape().extent(1) != params.input_dim()) {
        throw DimensionError("bigru_encode: token width " +
                             std::to_string(x_seq.shape().extent(1)) +
                             " does not match parameter input dimension " +
                             std::to_string(params.input_dim()));
    }
    Index d_dir = params.fwd.hidden_dim();
    Tensor h0 = tape.zeros(Shape::vector(d_dir));
    Tensor zero_row = tape.zeros(Shape::vector(d_dir));

    std::vector<Tensor> fwd_states(n), bwd_states(n);
    Tensor h = h0;
    for (Index t = 0; t < n; ++t) {
        if (mask[t]) {
            h = gru_cell(tape, row(x_seq, t), h, params.fwd);
            fwd_states[t] = h;
        } else {
            // Padded step: recurrence carries h unchanged, output row is zero.
            fwd_states[t] = zero_row;
        }
    }
    h = h0;
    for (Index t = n - 1; t >= 0; --t) {
        if (mask[t]) {
            h = gru_cell(tape, row(x_seq, t), h, params.bwd);
            bwd_states[t] = h;
        } else {
            bwd_states[t] = zero_row;
        }
    }
    std::vector<Tensor> rows;
    rows.reserve(n);
    for (Index t = 0; t < n; ++t) {
        rows.push_back(concat({fwd_states[t], bwd_states[t]}, 0));
    }
    return stack_rows(rows);
}

}  // namespace mtlre
