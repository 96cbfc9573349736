#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "tsal/attention.hpp"
#include "tsal/errors.hpp"

using namespace tsal;
using tsal_test::random_tensor;

namespace {

// Scalar-by-scalar route for score_j = u_j * h^T W_a s_j.
std::vector<double> paragen_oracle(const Tensor& h, const Tensor& states, const Tensor& w_a,
                                   const std::vector<double>& u) {
    int n = states.shape()[0], enc = states.shape()[1], dec = h.shape()[0];
    std::vector<double> scores(n, 0.0);
    for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int a = 0; a < dec; ++a)
            for (int b = 0; b < enc; ++b) acc += h(a) * w_a(a, b) * states(j, b);
        scores[j] = u[static_cast<std::size_t>(j)] * acc;
    }
    return scores;
}

// Scalar-by-scalar route for score_j = u_j * v_a^T tanh(W_a [h; s_j]).
std::vector<double> textcomp_oracle(const Tensor& h, const Tensor& states, const Tensor& w_a,
                                    const Tensor& v_a, const std::vector<double>& u) {
    int n = states.shape()[0], enc = states.shape()[1], dec = h.shape()[0];
    int vdim = v_a.shape()[0];
    std::vector<double> scores(n, 0.0);
    for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int r = 0; r < vdim; ++r) {
            double pre = 0.0;
            for (int a = 0; a < dec; ++a) pre += w_a(r, a) * h(a);
            for (int b = 0; b < enc; ++b) pre += w_a(r, dec + b) * states(j, b);
            acc += v_a(r) * std::tanh(pre);
        }
        scores[j] = u[static_cast<std::size_t>(j)] * acc;
    }
    return scores;
}

TsmConfig tiny_tsm_config() {
    TsmConfig c;
    c.embed_dim = 6;
    c.hidden_size = 6;
    c.transformer_layers = 1;
    c.attention_heads = 2;
    c.feedforward_dim = 12;
    c.dropout_p = 0.0;
    return c;
}

Checkpoint tiny_tsm_checkpoint(std::uint64_t seed) {
    Vocabulary vocab = Vocabulary::from_tokens({"the", "cat", "sat", "mat"});
    TsmConfig config = tiny_tsm_config();
    EmbeddingTable table = random_embeddings(vocab, config.embed_dim, seed);
    TsmModel model(config, vocab, table, seed);
    return model.to_checkpoint();
}

}  // namespace

TEST_CASE("score_general identity cases") {
    // W_a = I, h = s_1, orthonormal states
    Tensor eye = Tensor::from({2, 2}, {1, 0, 0, 1});
    Tensor states = Tensor::from({2, 2}, {1, 0, 0, 1});
    Tensor h = Tensor::from({2}, {1, 0});
    Tensor scores = score_general(h, states, eye);
    CHECK(scores.values()[0] == doctest::Approx(1.0));  // |h|^2
    CHECK(scores.values()[1] == doctest::Approx(0.0));

    Tensor zero_w = Tensor::zeros({2, 2});
    Tensor zero_scores = score_general(h, states, zero_w);
    for (double v : zero_scores.values()) CHECK(v == 0.0);

    Tensor diag = Tensor::from({2, 2}, {2, 0, 0, 3});
    Tensor scores2 = score_general(h, diag, eye);
    CHECK(scores2.values() == std::vector<double>{2.0, 0.0});
}

TEST_CASE("score_paragen hand case and softmax weights") {
    // u = [1, 0] modulating general scores [2, 3]
    Tensor h = Tensor::from({1}, {1.0});
    Tensor w = Tensor::from({1, 1}, {1.0});
    Tensor states = Tensor::from({2, 1}, {2.0, 3.0});
    Tensor u = Tensor::from({2}, {1.0, 0.0});
    Tensor scores = score_paragen(h, states, w, u);
    CHECK(scores.values() == std::vector<double>{2.0, 0.0});
    AttentionRow row = attend(scores, states);
    CHECK(row.weights.values()[0] == doctest::Approx(0.8808).epsilon(2e-4));
    CHECK(row.weights.values()[1] == doctest::Approx(0.1192).epsilon(2e-3));
    // zeroed saliency does not zero attention
    CHECK(row.weights.values()[1] > 0.0);
}

TEST_CASE("score_paragen with all-ones saliency equals score_general") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        int n = 1 + rng.uniform_int(5), enc = 1 + rng.uniform_int(4), dec = 1 + rng.uniform_int(4);
        Tensor h = random_tensor({dec}, rng);
        Tensor states = random_tensor({n, enc}, rng);
        Tensor w = random_tensor({dec, enc}, rng);
        Tensor ones = Tensor::full({n}, 1.0);
        auto modulated = score_paragen(h, states, w, ones).values();
        auto general = score_general(h, states, w).values();
        for (std::size_t j = 0; j < modulated.size(); ++j)
            CHECK(modulated[j] == doctest::Approx(general[j]).epsilon(1e-15));
    }
}

TEST_CASE("uniform saliency scales raw scores by 1/n") {
    Rng rng(5);
    Tensor h = random_tensor({3}, rng);
    Tensor states = random_tensor({4, 3}, rng);
    Tensor w = random_tensor({3, 3}, rng);
    Tensor uniform = Tensor::full({4}, 0.25);
    auto modulated = score_paragen(h, states, w, uniform).values();
    auto general = score_general(h, states, w).values();
    for (std::size_t j = 0; j < modulated.size(); ++j)
        CHECK(modulated[j] == doctest::Approx(general[j] * 0.25).epsilon(1e-12));
}

TEST_CASE("score_textcomp structural zeros and scalar hand case") {
    Tensor h = Tensor::from({1}, {0.5});
    Tensor states = Tensor::from({1, 1}, {0.5});
    Tensor u = Tensor::from({1}, {1.0});

    Tensor w = Tensor::from({1, 2}, {1.0, 1.0});
    Tensor v = Tensor::from({1}, {1.0});
    auto scores = score_textcomp(h, states, w, v, u).values();
    CHECK(scores[0] == doctest::Approx(std::tanh(1.0)).epsilon(1e-12));
    CHECK(scores[0] == doctest::Approx(0.76159).epsilon(1e-5));

    Tensor zero_v = Tensor::zeros({1});
    CHECK(score_textcomp(h, states, w, zero_v, u).values()[0] == 0.0);
    Tensor zero_w = Tensor::zeros({1, 2});
    CHECK(score_textcomp(h, states, zero_w, v, u).values()[0] == 0.0);
}

TEST_CASE("equation oracles: 100 random instances match to 1e-12") {
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        int n = 1 + rng.uniform_int(6);
        int enc = 1 + rng.uniform_int(5);
        int dec = 1 + rng.uniform_int(5);
        int vdim = 1 + rng.uniform_int(4);
        Tensor h = random_tensor({dec}, rng);
        Tensor states = random_tensor({n, enc}, rng);
        std::vector<double> u(static_cast<std::size_t>(n));
        for (double& x : u) x = rng.uniform();
        Tensor u_t = Tensor::from({n}, u);

        Tensor w_mult = random_tensor({dec, enc}, rng);
        auto mine = score_paragen(h, states, w_mult, u_t).values();
        auto oracle = paragen_oracle(h, states, w_mult, u);
        for (int j = 0; j < n; ++j)
            CHECK(std::abs(mine[static_cast<std::size_t>(j)] -
                           oracle[static_cast<std::size_t>(j)]) < 1e-12);

        Tensor w_add = random_tensor({vdim, dec + enc}, rng);
        Tensor v_a = random_tensor({vdim}, rng);
        auto mine2 = score_textcomp(h, states, w_add, v_a, u_t).values();
        auto oracle2 = textcomp_oracle(h, states, w_add, v_a, u);
        for (int j = 0; j < n; ++j)
            CHECK(std::abs(mine2[static_cast<std::size_t>(j)] -
                           oracle2[static_cast<std::size_t>(j)]) < 1e-12);
    }
}

TEST_CASE("attend: symmetry, saturation, hand softmax") {
    Tensor states = Tensor::from({2, 2}, {1.0, 0.0, 0.0, 1.0});
    AttentionRow uniform = attend(Tensor::from({2}, {0.7, 0.7}), states);
    CHECK(uniform.weights.values()[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(uniform.context.values()[0] == doctest::Approx(0.5).epsilon(1e-12));

    AttentionRow saturated = attend(Tensor::from({2}, {1000.0, 0.0}), states);
    CHECK(saturated.weights.values()[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(saturated.context.values()[0] == doctest::Approx(1.0).epsilon(1e-9));

    AttentionRow hand = attend(Tensor::from({2}, {std::log(3.0), 0.0}), states);
    CHECK(hand.weights.values()[0] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(hand.weights.values()[1] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("attend weight rows always sum to one") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        int n = 1 + rng.uniform_int(8);
        Tensor scores = random_tensor({n}, rng, -5.0, 5.0);
        Tensor states = random_tensor({n, 3}, rng);
        AttentionRow row = attend(scores, states);
        double total = 0.0;
        for (double wgt : row.weights.values()) total += wgt;
        CHECK(std::abs(total - 1.0) < 1e-9);
    }
}

TEST_CASE("attend rejects empty or misaligned inputs") {
    Tensor states = Tensor::from({2, 2}, {1, 0, 0, 1});
    CHECK_THROWS_AS(attend(Tensor::from({3}, {1, 2, 3}), states), ContractError);
    Tensor h = Tensor::from({2}, {1, 0});
    Tensor w = Tensor::from({2, 2}, {1, 0, 0, 1});
    Tensor bad_u = Tensor::from({3}, {1, 1, 1});
    CHECK_THROWS_AS(score_paragen(h, states, w, bad_u), ContractError);
}

TEST_CASE("make_u mode dispatch") {
    Checkpoint ckpt = tiny_tsm_checkpoint(13);
    std::vector<std::string> sentence{"the", "cat", "sat"};

    auto none = make_u(AblationMode::NoFixation, nullptr, sentence, 1);
    CHECK_FALSE(none.has_value());

    auto full = make_u(AblationMode::Full, &ckpt, sentence, 1);
    REQUIRE(full.has_value());
    double total = 0.0;
    for (double v : full->u) total += v;
    CHECK(std::abs(total - 1.0) < 1e-6);

    // random-init differs from the trained checkpoint's prediction
    auto random_init = make_u(AblationMode::RandomInit, &ckpt, sentence, 99);
    REQUIRE(random_init.has_value());
    bool differs = false;
    for (std::size_t i = 0; i < full->u.size(); ++i)
        if (std::abs(full->u[i] - random_init->u[i]) > 1e-12) differs = true;
    CHECK(differs);

    CHECK_THROWS_AS(make_u(AblationMode::Full, nullptr, sentence, 1), ConfigError);
    CHECK_THROWS_AS(make_u(AblationMode::Frozen, nullptr, sentence, 1), ConfigError);
}

TEST_CASE("frozen saliency is detached from the TSM graph") {
    Checkpoint ckpt = tiny_tsm_checkpoint(17);
    SaliencySource frozen(AblationMode::Frozen, &ckpt, 1);
    auto u = frozen.saliency({"the", "cat"}, false, 0);
    REQUIRE(u.has_value());
    CHECK_FALSE(u->requires_grad());
    CHECK_FALSE(frozen.tsm_trains());

    SaliencySource full(AblationMode::Full, &ckpt, 1);
    auto v = full.saliency({"the", "cat"}, false, 0);
    REQUIRE(v.has_value());
    CHECK(v->requires_grad());
    CHECK(full.tsm_trains());
}

TEST_CASE("no-fixation scores equal unmodified Luong scores exactly") {
    Rng rng(19);
    SaliencySource source(AblationMode::NoFixation, nullptr, 1);
    Tensor h = random_tensor({4}, rng);
    Tensor states = random_tensor({5, 4}, rng);
    Tensor w = random_tensor({4, 4}, rng);
    auto u = source.saliency({"a", "b", "c", "d", "e"}, false, 0);
    REQUIRE_FALSE(u.has_value());
    // the training path falls back to score_general when u is absent
    auto fallback = score_general(h, states, w).values();
    auto direct = score_general(h, states, w).values();
    for (std::size_t j = 0; j < fallback.size(); ++j)
        CHECK(std::abs(fallback[j] - direct[j]) < 1e-12);
}

TEST_CASE("upstream gradient reaches TSM parameters through the modulation") {
    Checkpoint ckpt = tiny_tsm_checkpoint(23);
    SaliencySource source(AblationMode::Full, &ckpt, 1);
    Rng rng(29);
    std::vector<std::string> sentence{"the", "cat", "sat"};
    Tensor h = random_tensor({4}, rng);
    Tensor states = random_tensor({3, 4}, rng);
    Tensor w = random_tensor({4, 4}, rng);

    auto loss_value = [&]() {
        Tensor u = *source.saliency(sentence, false, 0);
        AttentionRow row = attend(score_paragen(h, states, w, u), states);
        return sum(mul(row.context, row.context));
    };

    Tensor loss = loss_value();
    source.tsm().params().zero_grad();
    backward(loss);

    // finite-difference check on one TSM scalar parameter
    Tensor& param = source.tsm().params().at("head.b");
    REQUIRE(param.grad().size() == param.size());
    double analytic = param.grad()[0];
    CHECK(analytic != 0.0);
    const double eps = 1e-6;
    double orig = param.values()[0];
    param.mutable_values()[0] = orig + eps;
    double up = loss_value().item();
    param.mutable_values()[0] = orig - eps;
    double down = loss_value().item();
    param.mutable_values()[0] = orig;
    double numeric = (up - down) / (2 * eps);
    CHECK(std::abs(analytic - numeric) / std::max(1e-12, std::abs(analytic) + std::abs(numeric)) <
          1e-3);
}
