#include "tsal/gaze_synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tsal/errors.hpp"

namespace tsal {

void Lexicon::add(const std::string& token, double count) {
    if (count < 1.0) throw DomainError("Lexicon: count for '" + token + "' must be >= 1");
    counts_[token] = count;
    log_freq_[token] = std::log(count);
}

LexiconEntry Lexicon::resolve(const std::string& token) const {
    LexiconEntry entry;
    entry.token = token;
    entry.length = static_cast<int>(token.size());
    auto it = log_freq_.find(token);
    entry.log_frequency = it == log_freq_.end() ? 0.0 : it->second;
    return entry;
}

Lexicon Lexicon::read_tsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("Lexicon: cannot open " + path);
    Lexicon lex;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw FormatError("Lexicon: " + path + " line " + std::to_string(line_no) +
                              ": missing tab");
        std::string token = line.substr(0, tab);
        double count;
        std::istringstream cs(line.substr(tab + 1));
        if (!(cs >> count))
            throw FormatError("Lexicon: " + path + " line " + std::to_string(line_no) +
                              ": bad count");
        lex.add(token, count);
    }
    return lex;
}

void Lexicon::write_tsv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("Lexicon: cannot write " + path);
    for (const auto& [token, count] : counts_) out << token << '\t' << count << '\n';
}

void GazeRecord::normalize() {
    double total = 0.0;
    for (double d : durations) total += d;
    if (total <= 0.0) {
        // all-skipped degenerate sentence
        double u = durations.empty() ? 0.0 : 1.0 / static_cast<double>(durations.size());
        std::fill(durations.begin(), durations.end(), u);
    } else {
        for (double& d : durations) d /= total;
    }
    normalized = true;
}

double skip_probability(const SimulatorParams& params, const LexiconEntry& entry) {
    double z = params.skip_bias - params.skip_length * entry.length +
               params.skip_frequency * entry.log_frequency;
    double s = 1.0 / (1.0 + std::exp(-z));
    return std::clamp(s, 0.0, SimulatorParams::kMaxSkipProb);
}

double mean_duration_ms(const SimulatorParams& params, const LexiconEntry& entry) {
    double mu = params.base_ms + params.length_ms * entry.length -
                params.frequency_ms * entry.log_frequency;
    return std::max(SimulatorParams::kMinDurationMs, mu);
}

GazeRecord simulate_reading(const std::vector<std::string>& sentence, const Lexicon& lexicon,
                            std::uint64_t seed, const SimulatorParams& params) {
    if (sentence.empty()) throw ContractError("simulate_reading: empty sentence");
    Rng rng(seed);
    GazeRecord record;
    record.run_or_reader_id = "run-" + std::to_string(seed);
    record.durations.assign(sentence.size(), 0.0);
    for (std::size_t i = 0; i < sentence.size(); ++i) {
        LexiconEntry entry = lexicon.resolve(sentence[i]);
        if (rng.uniform() < skip_probability(params, entry)) continue;
        double mu = mean_duration_ms(params, entry);
        double d = rng.gamma(params.gamma_shape, mu / params.gamma_shape);
        record.durations[i] += std::max(SimulatorParams::kMinDurationMs, d);
        if (i > 0 && rng.uniform() < params.regression_prob) {
            std::size_t target = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(i)));
            LexiconEntry back = lexicon.resolve(sentence[target]);
            double back_mu = 0.5 * mean_duration_ms(params, back);
            record.durations[target] += rng.gamma(params.gamma_shape, back_mu / params.gamma_shape);
        }
    }
    return record;
}

GazeRecord synth_gaze(const std::vector<std::string>& sentence, const Lexicon& lexicon, int runs,
                      std::uint64_t seed, const SimulatorParams& params) {
    if (runs < 1) throw ContractError("synth_gaze: runs must be >= 1");
    Rng base(seed);
    GazeRecord mean_record;
    mean_record.durations.assign(sentence.size(), 0.0);
    for (int r = 0; r < runs; ++r) {
        GazeRecord run = simulate_reading(sentence, lexicon,
                                          base.split(static_cast<std::uint64_t>(r)).next_u64(),
                                          params);
        for (std::size_t i = 0; i < run.durations.size(); ++i)
            mean_record.durations[i] += run.durations[i];
    }
    for (double& d : mean_record.durations) d /= runs;
    mean_record.normalize();
    return mean_record;
}

std::vector<std::pair<std::vector<std::string>, GazeRecord>> generate_pretraining_corpus(
    const std::vector<std::vector<std::string>>& sentences, const Lexicon& lexicon, int runs,
    std::uint64_t seed, const SimulatorParams& params) {
    Rng base(seed);
    std::vector<std::pair<std::vector<std::string>, GazeRecord>> corpus;
    corpus.reserve(sentences.size());
    for (std::size_t s = 0; s < sentences.size(); ++s) {
        GazeRecord record =
            synth_gaze(sentences[s], lexicon, runs, base.split(s).next_u64(), params);
        record.sentence_id = "s" + std::to_string(s);
        corpus.emplace_back(sentences[s], std::move(record));
    }
    return corpus;
}

}  // namespace tsal
