#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mtlre/attention.hpp"
#include "mtlre/error.hpp"
#include "mtlre/gradcheck.hpp"
#include "mtlre/init.hpp"

using namespace mtlre;

namespace {

AttentionParameters random_attention(Index d_h, Index d_a, Index aspects,
                                     std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    AttentionParameters p = AttentionParameters::create("attn", d_h, d_a, aspects, rng);
    for (Parameter* param : p.parameters()) {
        for (Index i = 0; i < param->value.size(); ++i) {
            param->value[i] = uniform_range(rng, -0.9, 0.9);
        }
    }
    return p;
}

Mat random_hidden(Index n, Index d_h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Mat H(n, d_h);
    for (Index i = 0; i < H.size(); ++i) H.data()[i] = uniform_range(rng, -1.5, 1.5);
    return H;
}

// Scalar-loop reference: p = tanh(U H^T), scores = Wa p, rows softmaxed.
Mat reference_weights(const Mat& H, const AttentionParameters& params) {
    Index n = H.rows(), d_h = H.cols();
    Index d_a = params.attention_size(), a = params.aspects();
    Mat p(d_a, n);
    for (Index i = 0; i < d_a; ++i) {
        for (Index t = 0; t < n; ++t) {
            double s = 0.0;
            for (Index j = 0; j < d_h; ++j) s += params.U.value[i * d_h + j] * H(t, j);
            p(i, t) = std::tanh(s);
        }
    }
    Mat scores(a, n);
    for (Index k = 0; k < a; ++k) {
        for (Index t = 0; t < n; ++t) {
            double s = 0.0;
            for (Index i = 0; i < d_a; ++i) s += params.Wa.value[k * d_a + i] * p(i, t);
            scores(k, t) = s;
        }
    }
    Mat V(a, n);
    for (Index k = 0; k < a; ++k) {
        double mx = scores.row(k).maxCoeff();
        double denom = 0.0;
        for (Index t = 0; t < n; ++t) denom += std::exp(scores(k, t) - mx);
        for (Index t = 0; t < n; ++t) V(k, t) = std::exp(scores(k, t) - mx) / denom;
    }
    return V;
}

}  // namespace

TEST_CASE("a single position receives all the attention") {
    AttentionParameters p = random_attention(4, 3, 1, 11);
    Mat H = random_hidden(1, 4, 12);
    Tape tape;
    Tensor v = single_aspect_weights(tape, tape.constant(H), p);
    REQUIRE(v.shape() == Shape::vector(1));
    CHECK(v.value()[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("identical rows get uniform weights in both code paths") {
    AttentionParameters single = random_attention(4, 3, 1, 13);
    AttentionParameters multi = random_attention(4, 3, 2, 14);
    const Index n = 5;
    Mat H(n, 4);
    Mat one_row = random_hidden(1, 4, 15);
    for (Index t = 0; t < n; ++t) H.row(t) = one_row.row(0);

    Tape tape;
    Tensor v = single_aspect_weights(tape, tape.constant(H), single);
    for (Index t = 0; t < n; ++t) {
        CHECK(v.value()[t] == doctest::Approx(1.0 / n).epsilon(1e-12));
    }

    Tensor V = multi_aspect_weights(tape, tape.constant(H), multi);
    REQUIRE(V.shape() == Shape::matrix(2, n));
    for (Index k = 0; k < 2; ++k) {
        for (Index t = 0; t < n; ++t) {
            CHECK(V.matrix()(k, t) == doctest::Approx(1.0 / n).epsilon(1e-12));
        }
    }
}

TEST_CASE("two-step weights match a scalar reference") {
    AttentionParameters p = random_attention(3, 4, 1, 16);
    Mat H = random_hidden(2, 3, 17);
    Tape tape;
    Tensor v = single_aspect_weights(tape, tape.constant(H), p);
    Mat expect = reference_weights(H, p);
    CHECK(std::abs(v.value()[0] - expect(0, 0)) < 1e-12);
    CHECK(std::abs(v.value()[1] - expect(0, 1)) < 1e-12);
    CHECK(v.value().sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("one-aspect multi attention equals the single-aspect path") {
    AttentionParameters p = random_attention(5, 3, 1, 18);
    Mat H = random_hidden(6, 5, 19);
    Tape tape;
    Tensor v = single_aspect_weights(tape, tape.constant(H), p);
    Tensor V = multi_aspect_weights(tape, tape.constant(H), p);
    REQUIRE(V.shape() == Shape::matrix(1, 6));
    for (Index t = 0; t < 6; ++t) {
        CHECK(V.matrix()(0, t) == doctest::Approx(v.value()[t]).epsilon(1e-14));
    }
}

TEST_CASE("multi-aspect weights match the scalar reference") {
    AttentionParameters p = random_attention(4, 5, 2, 20);
    Mat H = random_hidden(3, 4, 21);
    Tape tape;
    Tensor V = multi_aspect_weights(tape, tape.constant(H), p);
    Mat expect = reference_weights(H, p);
    REQUIRE(V.shape() == Shape::matrix(2, 3));
    for (Index k = 0; k < 2; ++k) {
        for (Index t = 0; t < 3; ++t) {
            CHECK(std::abs(V.matrix()(k, t) - expect(k, t)) < 1e-12);
        }
        CHECK(V.matrix().row(k).sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("masked positions receive zero weight and the rest renormalize") {
    AttentionParameters p = random_attention(4, 3, 2, 22);
    Mat H = random_hidden(5, 4, 23);
    std::vector<std::uint8_t> mask = {1, 1, 0, 1, 0};
    Tape tape;
    Tensor V = multi_aspect_weights(tape, tape.constant(H), p, mask);
    for (Index k = 0; k < 2; ++k) {
        CHECK(V.matrix()(k, 2) < 1e-30);
        CHECK(V.matrix()(k, 4) < 1e-30);
        CHECK(V.matrix().row(k).sum() == doctest::Approx(1.0).epsilon(1e-9));
    }
    // Single-aspect path honors the mask the same way.
    AttentionParameters sp = random_attention(4, 3, 1, 24);
    Tensor v = single_aspect_weights(tape, tape.constant(H), sp, mask);
    CHECK(v.value()[2] < 1e-30);
    CHECK(v.value()[4] < 1e-30);
}

TEST_CASE("an all-masked sequence is rejected") {
    AttentionParameters p = random_attention(4, 3, 1, 25);
    Mat H = random_hidden(3, 4, 26);
    std::vector<std::uint8_t> mask = {0, 0, 0};
    Tape tape;
    CHECK_THROWS_AS(single_aspect_weights(tape, tape.constant(H), p, mask),
                    ValidationError);
    CHECK_THROWS_AS(multi_aspect_weights(tape, tape.constant(H), p, mask),
                    ValidationError);
}

TEST_CASE("single-aspect path refuses multi-aspect parameters") {
    AttentionParameters p = random_attention(4, 3, 2, 27);
    Mat H = random_hidden(3, 4, 28);
    Tape tape;
    CHECK_THROWS_AS(single_aspect_weights(tape, tape.constant(H), p), ValidationError);
}

TEST_CASE("uniform attention averages the hidden rows") {
    const Index n = 4, d_h = 3;
    Mat H = random_hidden(n, d_h, 29);
    Mat V(1, n);
    V.setConstant(1.0 / n);
    Tape tape;
    Tensor m = attend(tape.constant(H), tape.constant(V));
    REQUIRE(m.shape() == Shape::vector(d_h));
    for (Index j = 0; j < d_h; ++j) {
        CHECK(m.value()[j] == doctest::Approx(H.col(j).mean()).epsilon(1e-12));
    }
}

TEST_CASE("one-hot attention selects a single hidden row") {
    const Index n = 5, d_h = 4;
    Mat H = random_hidden(n, d_h, 30);
    Mat V = Mat::Zero(2, n);
    V(0, 3) = 1.0;
    V(1, 0) = 1.0;
    Tape tape;
    Tensor m = attend(tape.constant(H), tape.constant(V));
    REQUIRE(m.shape() == Shape::vector(2 * d_h));
    for (Index j = 0; j < d_h; ++j) {
        CHECK(m.value()[j] == doctest::Approx(H(3, j)).epsilon(1e-14));
        CHECK(m.value()[d_h + j] == doctest::Approx(H(0, j)).epsilon(1e-14));
    }
}

TEST_CASE("attend matches a plain matrix product") {
    const Index n = 6, d_h = 3, a = 2;
    Mat H = random_hidden(n, d_h, 31);
    std::mt19937_64 rng(32);
    Mat V(a, n);
    for (Index i = 0; i < V.size(); ++i) V.data()[i] = uniform_range(rng, 0, 1);
    Tape tape;
    Tensor m = attend(tape.constant(H), tape.constant(V));
    Mat expect = V * H;  // a x d_h
    REQUIRE(m.shape() == Shape::vector(a * d_h));
    for (Index k = 0; k < a; ++k) {
        for (Index j = 0; j < d_h; ++j) {
            CHECK(std::abs(m.value()[k * d_h + j] - expect(k, j)) < 1e-12);
        }
    }
}

TEST_CASE("attention gradients agree with finite differences") {
    AttentionParameters p = random_attention(4, 3, 2, 33);
    Mat H = random_hidden(5, 4, 34);
    LossBuilder f = [&](Tape& tape) {
        Tensor V = multi_aspect_weights(tape, tape.constant(H), p);
        Tensor m = attend(tape.constant(H), V);
        Index sz = m.shape().size();
        Vec w(sz);
        for (Index i = 0; i < sz; ++i) w[i] = 0.2 + 0.3 * static_cast<double>(i);
        return sum(mul(m, tape.constant(Shape::vector(sz), std::move(w))));
    };
    GradCheckReport report = finite_difference_check_all(f, p.parameters(), 1e-5);
    CHECK(report.max_rel_error < 1e-6);
}

TEST_CASE("attention parameter creation wires names and shapes") {
    std::mt19937_64 rng(35);
    AttentionParameters p = AttentionParameters::create("task.x.attn", 8, 5, 3, rng);
    CHECK(p.U.name == "task.x.attn.U");
    CHECK(p.Wa.name == "task.x.attn.Wa");
    CHECK(p.U.shape == Shape::matrix(5, 8));
    CHECK(p.Wa.shape == Shape::matrix(3, 5));
    CHECK(p.aspects() == 3);
    CHECK(p.attention_size() == 5);
    CHECK(p.hidden_width() == 8);
    CHECK(p.parameters().size() == 2);
}

TEST_CASE("hidden width mismatches are rejected") {
    AttentionParameters p = random_attention(4, 3, 1, 36);
    Tape tape;
    CHECK_THROWS_AS(single_aspect_weights(tape, tape.zeros(Shape::matrix(3, 5)), p),
                    DimensionError);
}
