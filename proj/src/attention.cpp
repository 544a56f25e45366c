#include "mtlre/attention.hpp"

#include "mtlre/init.hpp"

namespace mtlre {

namespace {

constexpr double kMaskPenalty = -1e9;

// Shared front half of both weighting ops: validates, watches U, and
// returns p = tanh(U H^T).
Tensor projected(Tape& tape, const Tensor& H, AttentionParameters& params,
                 std::span<const std::uint8_t> mask) {
    if (H.shape().rank() != 2) {
        throw DimensionError("attention: H must be a matrix, got " + H.shape().str());
    }
    if (H.shape().extent(1) != params.hidden_width()) {
        throw DimensionError("attention: H width " +
                             std::to_string(H.shape().extent(1)) +
                             " does not match parameter width " +
                             std::to_string(params.hidden_width()));
    }
    Index n = H.shape().extent(0);
    if (!mask.empty()) {
        if (static_cast<Index>(mask.size()) != n) {
            throw DimensionError("attention: mask length " + std::to_string(mask.size()) +
                                 " for " + std::to_string(n) + " positions");
        }
        bool any = false;
        for (std::uint8_t m : mask) any = any || (m != 0);
        if (!any) throw ValidationError("attention: every position is masked");
    }
    return tanh(matmul(tape.watch(params.U), transpose(H)));
}

// Additive logit mask: 0 at real positions, a large negative value at
// padded ones, broadcast across aspect rows.
Tensor logit_mask(Tape& tape, std::span<const std::uint8_t> mask) {
    const Index n = static_cast<Index>(mask.size());
    Vec penalties(n);
    for (Index i = 0; i < n; ++i) penalties[i] = mask[i] ? 0.0 : kMaskPenalty;
    return tape.constant(Shape::vector(n), std::move(penalties));
}

}  // namespace

AttentionParameters AttentionParameters::create(const std::string& prefix, Index d_h,
                                                Index d_a, Index aspects,
                                                std::mt19937_64& rng) {
    if (d_h < 1 || d_a < 1 || aspects < 1) {
        throw ValidationError("attention '" + prefix +
                              "': dimensions and aspect count must be positive");
    }
    AttentionParameters p;
    p.U = Parameter(prefix + ".U", Shape::matrix(d_a, d_h),
                    glorot_uniform(d_h, d_a, d_a * d_h, rng));
    p.Wa = Parameter(prefix + ".Wa", Shape::matrix(aspects, d_a),
                     glorot_uniform(d_a, aspects, aspects * d_a, rng));
    return p;
}

std::vector<Parameter*> AttentionParameters::parameters() { return {&U, &Wa}; }

Tensor single_aspect_weights(Tape& tape, const Tensor& H, AttentionParameters& params,
                             std::span<const std::uint8_t> mask) {
    if (params.aspects() != 1) {
        throw ValidationError("single_aspect_weights: parameters carry " +
                              std::to_string(params.aspects()) +
                              " aspects; exactly 1 is required");
    }
    Tensor p = projected(tape, H, params, mask);
    Tensor w = row(tape.watch(params.Wa), 0);
    Tensor logits = matmul(w, p);  // length n
    if (!mask.empty()) logits = add(logits, logit_mask(tape, mask));
    return softmax(logits, 0);
}

Tensor multi_aspect_weights(Tape& tape, const Tensor& H, AttentionParameters& params,
                            std::span<const std::uint8_t> mask) {
    Tensor p = projected(tape, H, params, mask);
    Tensor logits = matmul(tape.watch(params.Wa), p);  // aspects x n
    if (!mask.empty()) logits = add(logits, logit_mask(tape, mask));
    return softmax(logits, 1);
}

Tensor attend(const Tensor& H, const Tensor& V) {
    if (H.shape().rank() != 2 || V.shape().rank() != 2 ||
        V.shape().extent(1) != H.shape().extent(0)) {
        throw DimensionError("attend: V " + V.shape().str() + " and H " +
                             H.shape().str() + " do not align");
    }
    Tensor m = matmul(V, H);
    return reshape(m, Shape::vector(m.shape().size()));
}

}  // namespace mtlre
