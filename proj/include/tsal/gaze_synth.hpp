#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tsal/rng.hpp"

namespace tsal {

// Word-difficulty factors the simulator conditions on.
struct LexiconEntry {
    std::string token;
    double log_frequency = 0.0;  // natural log of corpus count, >= 0
    int length = 0;              // characters
};

// Frequency/length lexicon backing the simulator. Unknown tokens resolve to
// a fallback entry with the token's own length and a low frequency.
class Lexicon {
  public:
    void add(const std::string& token, double count);
    LexiconEntry resolve(const std::string& token) const;
    bool contains(const std::string& token) const { return log_freq_.count(token) != 0; }
    std::size_t size() const { return log_freq_.size(); }

    static Lexicon read_tsv(const std::string& path);
    void write_tsv(const std::string& path) const;

    const std::map<std::string, double>& counts() const { return counts_; }

  private:
    std::map<std::string, double> log_freq_;
    std::map<std::string, double> counts_;
};

// Per-token fixation durations for one (sentence, reader-or-run) pair.
// Raw records are in milliseconds; normalized records sum to 1 with
// zero-duration skipped words allowed.
struct GazeRecord {
    std::string sentence_id;
    std::string run_or_reader_id;
    std::vector<double> durations;
    bool normalized = false;

    void normalize();  // divide by the sum; uniform fallback when all zero
};

// Serial reading simulator: a left-to-right pass where each word is either
// skipped or fixated with a gamma-distributed duration whose mean grows with
// word length and shrinks with log-frequency; occasional regressions add a
// second, shorter fixation on a uniformly chosen earlier word.
//
//   p_skip(w) = clamp(sigmoid(a0 - a1*length + a2*log_frequency), 0, 0.6)
//   mean(w)   = max(50, b0 + b1*length - b2*log_frequency), gamma shape k
//
// Sampled durations are floored at 50 ms; regression fixations use half the
// target word's mean.
struct SimulatorParams {
    double skip_bias = 1.5;        // a0
    double skip_length = 0.35;     // a1
    double skip_frequency = 0.25;  // a2
    double base_ms = 180.0;        // b0
    double length_ms = 12.0;       // b1
    double frequency_ms = 18.0;    // b2
    double gamma_shape = 9.0;      // k
    double regression_prob = 0.1;  // r

    static constexpr double kMinDurationMs = 50.0;
    static constexpr double kMaxSkipProb = 0.6;
};

double skip_probability(const SimulatorParams& params, const LexiconEntry& entry);
double mean_duration_ms(const SimulatorParams& params, const LexiconEntry& entry);

// One simulated reading of the sentence; raw millisecond durations, one slot
// per token (0 for skipped words). Deterministic under seed.
GazeRecord simulate_reading(const std::vector<std::string>& sentence, const Lexicon& lexicon,
                            std::uint64_t seed, const SimulatorParams& params = {});

// Mean of `runs` simulated readings, normalized to sum 1.
GazeRecord synth_gaze(const std::vector<std::string>& sentence, const Lexicon& lexicon, int runs,
                      std::uint64_t seed, const SimulatorParams& params = {});

// One normalized record per sentence, each from a per-sentence derived seed.
std::vector<std::pair<std::vector<std::string>, GazeRecord>> generate_pretraining_corpus(
    const std::vector<std::vector<std::string>>& sentences, const Lexicon& lexicon, int runs,
    std::uint64_t seed, const SimulatorParams& params = {});

}  // namespace tsal
