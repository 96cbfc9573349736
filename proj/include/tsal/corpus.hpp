#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tsal/embeddings.hpp"
#include "tsal/gaze_synth.hpp"

namespace tsal {

// Source/target token sequences for paraphrase training.
struct SentencePair {
    std::vector<std::string> source;
    std::vector<std::string> target;
};

// Tokens plus a per-token keep mask (true = kept) for deletion-based
// compression.
struct DeletionExample {
    std::vector<std::string> tokens;
    std::vector<bool> keep_mask;
};

enum class PosTag { Noun, Verb, Adj, Adv, Pron, Det, Adp, Conj, Num, Part, Other };

const char* pos_tag_name(PosTag tag);
PosTag parse_pos_tag(const std::string& name);

struct TaggedSentence {
    std::vector<std::string> tokens;
    std::vector<PosTag> tags;
};

// Sentence tokens with one normalized gaze record, as read from disk.
struct GazeSample {
    std::vector<std::string> tokens;
    GazeRecord record;
};

// --- readers / writers -------------------------------------------------------
// All formats are UTF-8 TSV with LF line endings, literal tabs, no quoting.

// "source<TAB>target", both sides pre-tokenized by spaces. Blank lines are
// skipped; a missing tab is a format error naming the line.
std::vector<SentencePair> read_pairs(const std::string& path);
void write_pairs(const std::string& path, const std::vector<SentencePair>& pairs);

// "sentence_id<TAB>reader_id<TAB>token_index<TAB>token<TAB>duration_ms",
// token_index contiguous from 0 within each (sentence, reader) group.
// Durations are normalized per record to sum 1; an all-zero record falls back
// to uniform with a warning on stderr. Every (sentence, reader) pair is an
// independent sample.
std::vector<GazeSample> read_gaze(const std::string& path);
void write_gaze(const std::string& path, const std::vector<GazeSample>& samples);

// "token<TAB>keep_flag" blocks separated by blank lines, keep_flag in {0,1}.
std::vector<DeletionExample> read_compression(const std::string& path);
void write_compression(const std::string& path, const std::vector<DeletionExample>& examples);

// "token<TAB>TAG" blocks separated by blank lines; overrides the rule tagger.
std::vector<TaggedSentence> read_tagged(const std::string& path);

// --- vocabulary ---------------------------------------------------------------

// Tokens with count >= min_count, ordered by (count desc, token asc) after the
// reserved entries; deterministic for a given stream.
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& token_streams, int min_count);

// --- POS tagging ----------------------------------------------------------------

// Rule-based tagger: closed-class lexicon lookup, then suffix heuristics
// (-ly adverb; -ing/-ed/-s on a known verb stem; -tion/-ness/-ment noun;
// -ous/-ful/-ive/-able adjective), defaulting to noun. Total and
// deterministic.
TaggedSentence pos_tag(const std::vector<std::string>& tokens);

// --- synthetic corpora -----------------------------------------------------------

struct SyntheticSizes {
    int paraphrase_pairs = 64;
    int compression_examples = 64;
    int gaze_sentences = 64;
    int gaze_runs = 10;
};

struct SyntheticCorpora {
    std::vector<SentencePair> paraphrases;
    std::vector<DeletionExample> compressions;
    std::vector<GazeSample> gaze;  // "human" gaze from a perturbed simulator
    Lexicon lexicon;
    SimulatorParams human_params;
};

// Perturbed simulator parameterization standing in for human readers, so the
// pretrain and fine-tune distributions differ.
SimulatorParams human_like_params();

// Desk-scale corpora from a small template grammar: paraphrases by synonym
// substitution (every pair differs from its source in at least one token),
// compressions by adjunct deletion (every gold mask keeps at least one
// token), gaze via the simulator under human_like_params(). Byte-identical
// under the same seed.
SyntheticCorpora make_synthetic_task_corpora(std::uint64_t seed, const SyntheticSizes& sizes = {});

// Sentences drawn from the same template grammar, for pretraining corpora.
std::vector<std::vector<std::string>> sample_template_sentences(int count, std::uint64_t seed);

}  // namespace tsal
