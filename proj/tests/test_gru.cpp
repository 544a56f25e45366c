#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mtlre/error.hpp"
#include "mtlre/gradcheck.hpp"
#include "mtlre/gru.hpp"
#include "mtlre/init.hpp"

using namespace mtlre;

namespace {

GruParameters zero_gru(Index d, Index d_dir) {
    std::mt19937_64 rng(1);
    GruParameters p = GruParameters::create("g", d, d_dir, rng);
    for (Parameter* param : p.parameters()) param->value.setZero();
    return p;
}

void randomize(std::vector<Parameter*> params, std::uint64_t seed, double range = 0.8) {
    std::mt19937_64 rng(seed);
    for (Parameter* p : params) {
        for (Index i = 0; i < p->value.size(); ++i) {
            p->value[i] = uniform_range(rng, -range, range);
        }
    }
}

// Plain-double reference for one recurrence step, written with scalar loops
// so it shares no code with the tensor implementation.
Vec reference_cell(const Vec& x, const Vec& h, const GruParameters& p) {
    Index d = x.size(), dd = h.size();
    auto affine = [&](const Parameter& W, const Parameter& V, const Parameter& b,
                      const Vec& hh) {
        Vec out(dd);
        for (Index j = 0; j < dd; ++j) {
            double s = b.value[j];
            for (Index i = 0; i < d; ++i) s += x[i] * W.value[i * dd + j];
            for (Index i = 0; i < dd; ++i) s += hh[i] * V.value[i * dd + j];
            out[j] = s;
        }
        return out;
    };
    Vec z = affine(p.Wz, p.Vz, p.bz, h);
    Vec r = affine(p.Wr, p.Vr, p.br, h);
    for (Index j = 0; j < dd; ++j) {
        z[j] = 1.0 / (1.0 + std::exp(-z[j]));
        r[j] = 1.0 / (1.0 + std::exp(-r[j]));
    }
    Vec rh(dd);
    for (Index j = 0; j < dd; ++j) rh[j] = r[j] * h[j];
    Vec c = affine(p.Wc, p.Vc, p.bc, rh);
    for (Index j = 0; j < dd; ++j) c[j] = std::tanh(c[j]);
    Vec out(dd);
    for (Index j = 0; j < dd; ++j) out[j] = z[j] * c[j] + (1.0 - z[j]) * h[j];
    return out;
}

}  // namespace

TEST_CASE("zero parameters leave half the previous state in place") {
    // With all weights zero: z = r = sigmoid(0) = 0.5, candidate = tanh(0)
    // = 0, so the new state is 0.5 * h_prev.
    GruParameters p = zero_gru(3, 2);
    Tape tape;
    Vec x = Vec::Ones(3);
    Vec h(2);
    h << 1.0, -1.0;
    Tensor out = gru_cell(tape, tape.constant(Shape::vector(3), x),
                          tape.constant(Shape::vector(2), h), p);
    REQUIRE(out.shape() == Shape::vector(2));
    CHECK(out.value()[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(out.value()[1] == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("saturating the update gate hands the state to the candidate") {
    GruParameters p = zero_gru(3, 2);
    randomize({&p.Wc, &p.bc}, 5);
    p.bz.value.setConstant(40.0);  // sigmoid(40) ~ 1 to double precision
    std::mt19937_64 rng(6);
    Vec x(3), h(2);
    for (Index i = 0; i < 3; ++i) x[i] = uniform_range(rng, -1, 1);
    for (Index i = 0; i < 2; ++i) h[i] = uniform_range(rng, -1, 1);

    Tape tape;
    Tensor out = gru_cell(tape, tape.constant(Shape::vector(3), x),
                          tape.constant(Shape::vector(2), h), p);
    // Expected: exactly the tanh candidate (reset gate is 0.5 on zero
    // parameters, and the candidate sees r .* h through its own weights).
    Vec expect = reference_cell(x, h, p);
    for (Index j = 0; j < 2; ++j) {
        CHECK(std::abs(out.value()[j] - expect[j]) < 1e-9);
        // and the candidate dominates: out == tanh(x Wc + (0.5 h) Vc + bc)
        double rh0 = 0.5 * h[0], rh1 = 0.5 * h[1];
        double s = p.bc.value[j];
        for (Index i = 0; i < 3; ++i) s += x[i] * p.Wc.value[i * 2 + j];
        s += rh0 * p.Vc.value[0 * 2 + j] + rh1 * p.Vc.value[1 * 2 + j];
        CHECK(std::abs(out.value()[j] - std::tanh(s)) < 1e-9);
    }
}

TEST_CASE("random cells match the scalar reference to near machine precision") {
    for (std::uint64_t seed = 60; seed < 70; ++seed) {
        GruParameters p = zero_gru(3, 3);
        randomize(p.parameters(), seed);
        std::mt19937_64 rng(seed + 1000);
        Vec x(3), h(3);
        for (Index i = 0; i < 3; ++i) x[i] = uniform_range(rng, -2, 2);
        for (Index i = 0; i < 3; ++i) h[i] = uniform_range(rng, -2, 2);
        Tape tape;
        Tensor out = gru_cell(tape, tape.constant(Shape::vector(3), x),
                              tape.constant(Shape::vector(3), h), p);
        Vec expect = reference_cell(x, h, p);
        for (Index j = 0; j < 3; ++j) CHECK(std::abs(out.value()[j] - expect[j]) < 1e-12);
    }
}

TEST_CASE("gru cell gradients agree with finite differences") {
    GruParameters p = zero_gru(3, 2);
    randomize(p.parameters(), 77);
    std::mt19937_64 rng(78);
    Vec x(3), h(2);
    for (Index i = 0; i < 3; ++i) x[i] = uniform_range(rng, -1, 1);
    for (Index i = 0; i < 2; ++i) h[i] = uniform_range(rng, -1, 1);
    LossBuilder f = [&](Tape& tape) {
        Tensor out = gru_cell(tape, tape.constant(Shape::vector(3), x),
                              tape.constant(Shape::vector(2), h), p);
        Vec w(2);
        w << 0.7, -1.3;
        return sum(mul(out, tape.constant(Shape::vector(2), w)));
    };
    GradCheckReport report = finite_difference_check_all(f, p.parameters(), 1e-5);
    CHECK(report.max_rel_error < 1e-6);
}

TEST_CASE("cell rejects mismatched input or state widths") {
    GruParameters p = zero_gru(3, 2);
    Tape tape;
    CHECK_THROWS_AS(gru_cell(tape, tape.zeros(Shape::vector(4)),
                             tape.zeros(Shape::vector(2)), p),
                    DimensionError);
    CHECK_THROWS_AS(gru_cell(tape, tape.zeros(Shape::vector(3)),
                             tape.zeros(Shape::vector(3)), p),
                    DimensionError);
}

TEST_CASE("a single-step sequence encodes to both single-direction states") {
    std::mt19937_64 rng(80);
    BiGruParameters p = BiGruParameters::create("b", 4, 3, rng);
    Vec x(4);
    for (Index i = 0; i < 4; ++i) x[i] = uniform_range(rng, -1, 1);

    Tape tape;
    Tensor xs = tape.constant(Shape::matrix(1, 4), x);
    std::vector<std::uint8_t> mask = {1};
    Tensor H = bigru_encode(tape, xs, mask, p);
    REQUIRE(H.shape() == Shape::matrix(1, 6));

    // Either direction sees the same single step from a zero state.
    Tape t2;
    Tensor fwd = gru_cell(t2, t2.constant(Shape::vector(4), x),
                          t2.zeros(Shape::vector(3)), p.fwd);
    Tensor bwd = gru_cell(t2, t2.constant(Shape::vector(4), x),
                          t2.zeros(Shape::vector(3)), p.bwd);
    for (Index j = 0; j < 3; ++j) {
        CHECK(H.matrix()(0, j) == doctest::Approx(fwd.value()[j]).epsilon(1e-14));
        CHECK(H.matrix()(0, 3 + j) == doctest::Approx(bwd.value()[j]).epsilon(1e-14));
    }
}

TEST_CASE("reversing the input swaps the roles of the two directions") {
    // H(reverse(x); fwd=P, bwd=Q) read bottom-to-top equals
    // H(x; fwd=Q, bwd=P) with its forward/backward halves swapped.
    std::mt19937_64 rng(81);
    BiGruParameters pq = BiGruParameters::create("b", 3, 2, rng);
    randomize(pq.parameters(), 82);
    BiGruParameters qp = BiGruParameters::create("c", 3, 2, rng);
    qp.fwd = pq.bwd;
    qp.bwd = pq.fwd;

    const Index n = 5;
    Mat x(n, 3), x_rev(n, 3);
    std::mt19937_64 data_rng(83);
    for (Index i = 0; i < x.size(); ++i) x.data()[i] = uniform_range(data_rng, -1, 1);
    for (Index t = 0; t < n; ++t) x_rev.row(t) = x.row(n - 1 - t);
    std::vector<std::uint8_t> mask(n, 1);

    Tape tape;
    Tensor h_rev = bigru_encode(tape, tape.constant(x_rev), mask, pq);
    Tensor h_swp = bigru_encode(tape, tape.constant(x), mask, qp);
    for (Index t = 0; t < n; ++t) {
        for (Index j = 0; j < 2; ++j) {
            CHECK(h_rev.matrix()(n - 1 - t, j) ==
                  doctest::Approx(h_swp.matrix()(t, 2 + j)).epsilon(1e-14));
            CHECK(h_rev.matrix()(n - 1 - t, 2 + j) ==
                  doctest::Approx(h_swp.matrix()(t, j)).epsilon(1e-14));
        }
    }
}

TEST_CASE("trailing padding changes nothing and encodes to zero rows") {
    std::mt19937_64 rng(84);
    BiGruParameters p = BiGruParameters::create("b", 3, 2, rng);
    randomize(p.parameters(), 85);

    const Index n = 4;
    Mat x(n, 3);
    std::mt19937_64 data_rng(86);
    for (Index i = 0; i < x.size(); ++i) x.data()[i] = uniform_range(data_rng, -1, 1);

    Mat x_padded = Mat::Zero(n + 3, 3);
    x_padded.topRows(n) = x;
    x_padded.bottomRows(3).setConstant(123.0);  // garbage the mask must hide

    std::vector<std::uint8_t> mask_short(n, 1);
    std::vector<std::uint8_t> mask_long(n + 3, 1);
    mask_long[n] = mask_long[n + 1] = mask_long[n + 2] = 0;

    Tape tape;
    Tensor h_short = bigru_encode(tape, tape.constant(x), mask_short, p);
    Tensor h_long = bigru_encode(tape, tape.constant(x_padded), mask_long, p);
    REQUIRE(h_long.shape() == Shape::matrix(n + 3, 4));
    for (Index t = 0; t < n; ++t) {
        for (Index j = 0; j < 4; ++j) {
            // Bit-identical: the recurrence must not touch padded steps.
            CHECK(h_long.matrix()(t, j) == h_short.matrix()(t, j));
        }
    }
    CHECK(h_long.matrix().bottomRows(3).isZero());
}

TEST_CASE("bigru gradients agree with finite differences") {
    std::mt19937_64 rng(87);
    BiGruParameters p = BiGruParameters::create("b", 3, 2, rng);
    randomize(p.parameters(), 88);
    Mat x(4, 3);
    std::mt19937_64 data_rng(89);
    for (Index i = 0; i < x.size(); ++i) x.data()[i] = uniform_range(data_rng, -1, 1);
    std::vector<std::uint8_t> mask = {1, 1, 1, 0};
    LossBuilder f = [&](Tape& tape) {
        Tensor H = bigru_encode(tape, tape.constant(x), mask, p);
        Index sz = H.shape().size();
        Vec w(sz);
        for (Index i = 0; i < sz; ++i) w[i] = 0.1 + 0.05 * static_cast<double>(i);
        return sum(mul(reshape(H, Shape::vector(sz)),
                       tape.constant(Shape::vector(sz), std::move(w))));
    };
    GradCheckReport report = finite_difference_check_all(f, p.parameters(), 1e-5);
    CHECK(report.max_rel_error < 1e-6);
}

TEST_CASE("mask length must match the sequence") {
    std::mt19937_64 rng(90);
    BiGruParameters p = BiGruParameters::create("b", 3, 2, rng);
    Tape tape;
    std::vector<std::uint8_t> mask = {1, 1};
    CHECK_THROWS_AS(bigru_encode(tape, tape.zeros(Shape::matrix(3, 3)), mask, p),
                    DimensionError);
}

TEST_CASE("parameter creation wires names, shapes and init families") {
    std::mt19937_64 rng(91);
    GruParameters p = GruParameters::create("enc.fwd", 5, 3, rng);
    CHECK(p.Wz.name == "enc.fwd.Wz");
    CHECK(p.Vc.name == "enc.fwd.Vc");
    CHECK(p.bz.name == "enc.fwd.bz");
    CHECK(p.Wz.shape == Shape::matrix(5, 3));
    CHECK(p.Vz.shape == Shape::matrix(3, 3));
    CHECK(p.bz.shape == Shape::vector(3));
    CHECK(p.bz.value.isZero());
    CHECK(p.input_dim() == 5);
    CHECK(p.hidden_dim() == 3);
    // Recurrent init is orthogonal: V^T V = I for square V.
    Mat v = p.Vz.matrix();
    CHECK(((v.transpose() * v) - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(p.parameters().size() == 9);

    BiGruParameters b = BiGruParameters::create("enc", 5, 3, rng);
    CHECK(b.fwd.Wz.name == "enc.fwd.Wz");
    CHECK(b.bwd.Wz.name == "enc.bwd.Wz");
    CHECK(b.output_dim() == 6);
    CHECK(b.parameters().size() == 18);
}
