#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tsal/errors.hpp"
#include "tsal/gaze_synth.hpp"

using namespace tsal;

namespace {

Lexicon two_word_lexicon(double count_a, double count_b) {
    Lexicon lex;
    lex.add("aaaa", count_a);
    lex.add("bbbb", count_b);
    return lex;
}

}  // namespace

TEST_CASE("single token with skipping disabled gets one duration >= 50 ms") {
    Lexicon lex;
    lex.add("word", 100);
    SimulatorParams params;
    params.skip_bias = -1e9;  // sigmoid -> 0, never skip
    auto record = simulate_reading({"word"}, lex, 1, params);
    REQUIRE(record.durations.size() == 1);
    CHECK(record.durations[0] >= SimulatorParams::kMinDurationMs);
}

TEST_CASE("empty sentence is a contract error") {
    Lexicon lex;
    CHECK_THROWS_AS(simulate_reading({}, lex, 1), ContractError);
}

TEST_CASE("same seed reproduces the record exactly") {
    Lexicon lex = two_word_lexicon(3000, 20);
    auto a = simulate_reading({"aaaa", "bbbb", "aaaa"}, lex, 77);
    auto b = simulate_reading({"aaaa", "bbbb", "aaaa"}, lex, 77);
    CHECK(a.durations == b.durations);
    auto c = simulate_reading({"aaaa", "bbbb", "aaaa"}, lex, 78);
    CHECK(a.durations != c.durations);
}

TEST_CASE("rare words of equal length are fixated longer on average") {
    // log-freq 8 vs 2 at equal length; Monte-Carlo over 1000 seeds.
    Lexicon lex;
    lex.add("aaaa", std::exp(8.0));
    lex.add("bbbb", std::exp(2.0));
    double total_frequent = 0.0, total_rare = 0.0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        auto record = simulate_reading({"aaaa", "bbbb"}, lex, seed);
        total_frequent += record.durations[0];
        total_rare += record.durations[1];
    }
    CHECK(total_rare / 1000.0 > total_frequent / 1000.0);
}

TEST_CASE("longer words of equal frequency are fixated longer on average") {
    Lexicon lex;
    lex.add("ab", 1000);
    lex.add("abcdefgh", 1000);
    double total_short = 0.0, total_long = 0.0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        auto record = simulate_reading({"ab", "abcdefgh"}, lex, seed);
        total_short += record.durations[0];
        total_long += record.durations[1];
    }
    CHECK(total_long > total_short);
}

TEST_CASE("skip probability is clamped to at most 0.6") {
    SimulatorParams params;
    params.skip_bias = 50.0;
    LexiconEntry entry{"a", 10.0, 1};
    CHECK(skip_probability(params, entry) == SimulatorParams::kMaxSkipProb);
}

TEST_CASE("synth_gaze with runs=1 is a normalized single run") {
    Lexicon lex = two_word_lexicon(500, 500);
    auto normalized = synth_gaze({"aaaa", "bbbb"}, lex, 1, 5);
    CHECK(normalized.normalized);
    double total = 0.0;
    for (double d : normalized.durations) total += d;
    CHECK(std::abs(total - 1.0) < 1e-6);
}

TEST_CASE("synth_gaze always sums to one") {
    Lexicon lex = two_word_lexicon(100, 90000);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto record = synth_gaze({"aaaa", "bbbb", "aaaa", "bbbb"}, lex, 10, seed);
        double total = 0.0;
        for (double d : record.durations) {
            CHECK(d >= 0.0);
            total += d;
        }
        CHECK(std::abs(total - 1.0) < 1e-6);
    }
}

TEST_CASE("variance-collapsing shape yields near-uniform weights") {
    // identical tokens, skipping and regressions disabled, k = 1e6
    Lexicon lex;
    lex.add("word", 100);
    SimulatorParams params;
    params.skip_bias = -1e9;
    params.regression_prob = 0.0;
    params.gamma_shape = 1e6;
    const int n = 5;
    auto record = synth_gaze(std::vector<std::string>(n, "word"), lex, 10, 3, params);
    for (double d : record.durations) CHECK(std::abs(d - 1.0 / n) < 0.01);
}

TEST_CASE("per-token standard error shrinks with run count") {
    Lexicon lex = two_word_lexicon(800, 50);
    std::vector<std::string> sentence{"aaaa", "bbbb", "aaaa"};
    auto spread = [&](int runs) {
        // spread of the first token's normalized mean across 30 seeds
        double mean = 0.0, sq = 0.0;
        const int trials = 30;
        for (int s = 0; s < trials; ++s) {
            auto record = synth_gaze(sentence, lex, runs, 1000 + s);
            mean += record.durations[0];
            sq += record.durations[0] * record.durations[0];
        }
        mean /= trials;
        return std::sqrt(std::max(0.0, sq / trials - mean * mean));
    };
    CHECK(spread(1000) < spread(10));
}

TEST_CASE("generate_pretraining_corpus is per-sentence normalized and seed-stable") {
    Lexicon lex = two_word_lexicon(700, 60);
    std::vector<std::vector<std::string>> sentences(
        100, std::vector<std::string>{"aaaa", "bbbb", "aaaa"});
    auto corpus = generate_pretraining_corpus(sentences, lex, 10, 9);
    REQUIRE(corpus.size() == 100);
    for (const auto& [tokens, record] : corpus) {
        double total = 0.0;
        for (double d : record.durations) total += d;
        CHECK(std::abs(total - 1.0) < 1e-6);
    }
    auto again = generate_pretraining_corpus(sentences, lex, 10, 9);
    for (std::size_t i = 0; i < corpus.size(); ++i)
        CHECK(corpus[i].second.durations == again[i].second.durations);
    CHECK(generate_pretraining_corpus({}, lex, 10, 9).empty());
}
