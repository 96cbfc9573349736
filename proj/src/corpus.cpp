#include "tsal/corpus.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "tsal/errors.hpp"

namespace tsal {

namespace {

std::vector<std::string> split_tab(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

std::vector<std::string> split_space(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream is(text);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

std::string join(const std::vector<std::string>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += tokens[i];
    }
    return out;
}

[[noreturn]] void format_error(const std::string& path, int line_no, const std::string& what) {
    throw FormatError(path + " line " + std::to_string(line_no) + ": " + what);
}

// Shortest representation that round-trips exactly.
std::string format_double(double v) {
    std::array<char, 32> buf;
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

}  // namespace

// --- pairs ------------------------------------------------------------------

std::vector<SentencePair> read_pairs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("read_pairs: cannot open " + path);
    std::vector<SentencePair> pairs;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) format_error(path, line_no, "missing tab");
        SentencePair pair;
        pair.source = split_space(line.substr(0, tab));
        pair.target = split_space(line.substr(tab + 1));
        if (pair.source.empty() || pair.target.empty())
            format_error(path, line_no, "empty side of pair");
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

void write_pairs(const std::string& path, const std::vector<SentencePair>& pairs) {
    std::ofstream out(path);
    if (!out) throw IoError("write_pairs: cannot write " + path);
    for (const auto& p : pairs) out << join(p.source) << '\t' << join(p.target) << '\n';
}

// --- gaze --------------------------------------------------------------------

std::vector<GazeSample> read_gaze(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("read_gaze: cannot open " + path);
    std::vector<GazeSample> samples;
    std::map<std::pair<std::string, std::string>, std::size_t> group_of;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto cols = split_tab(line);
        if (cols.size() != 5) format_error(path, line_no, "expected 5 columns");
        const std::string& sid = cols[0];
        const std::string& rid = cols[1];
        int index;
        double duration;
        try {
            index = std::stoi(cols[2]);
            duration = std::stod(cols[4]);
        } catch (const std::exception&) {
            format_error(path, line_no, "bad token_index or duration");
        }
        if (duration < 0.0)
            throw DomainError(path + " line " + std::to_string(line_no) + ": negative duration");
        auto key = std::make_pair(sid, rid);
        auto it = group_of.find(key);
        if (it == group_of.end()) {
            if (index != 0) format_error(path, line_no, "token_index must start at 0");
            GazeSample sample;
            sample.record.sentence_id = sid;
            sample.record.run_or_reader_id = rid;
            group_of.emplace(key, samples.size());
            samples.push_back(std::move(sample));
            it = group_of.find(key);
        }
        GazeSample& sample = samples[it->second];
        if (index != static_cast<int>(sample.tokens.size()))
            format_error(path, line_no,
                         "gap in token_index (expected " + std::to_string(sample.tokens.size()) +
                             ", got " + std::to_string(index) + ")");
        sample.tokens.push_back(cols[3]);
        sample.record.durations.push_back(duration);
    }
    for (auto& sample : samples) {
        double total = 0.0;
        for (double d : sample.record.durations) total += d;
        if (total <= 0.0)
            std::cerr << "read_gaze: all-zero durations for sentence '" << sample.record.sentence_id
                      << "' reader '" << sample.record.run_or_reader_id
                      << "', falling back to uniform\n";
        sample.record.normalize();
    }
    return samples;
}

void write_gaze(const std::string& path, const std::vector<GazeSample>& samples) {
    std::ofstream out(path);
    if (!out) throw IoError("write_gaze: cannot write " + path);
    for (const auto& sample : samples) {
        for (std::size_t i = 0; i < sample.tokens.size(); ++i) {
            out << sample.record.sentence_id << '\t' << sample.record.run_or_reader_id << '\t' << i
                << '\t' << sample.tokens[i] << '\t' << format_double(sample.record.durations[i])
                << '\n';
        }
    }
}

// --- compression ----------------------------------------------------------------

std::vector<DeletionExample> read_compression(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("read_compression: cannot open " + path);
    std::vector<DeletionExample> examples;
    DeletionExample current;
    std::string line;
    int line_no = 0;
    auto flush = [&] {
        if (!current.tokens.empty()) {
            examples.push_back(std::move(current));
            current = {};
        }
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            flush();
            continue;
        }
        auto cols = split_tab(line);
        if (cols.size() != 2) format_error(path, line_no, "expected token<TAB>flag");
        if (cols[1] != "0" && cols[1] != "1")
            format_error(path, line_no, "keep_flag must be 0 or 1, got '" + cols[1] + "'");
        current.tokens.push_back(cols[0]);
        current.keep_mask.push_back(cols[1] == "1");
    }
    flush();
    return examples;
}

void write_compression(const std::string& path, const std::vector<DeletionExample>& examples) {
    std::ofstream out(path);
    if (!out) throw IoError("write_compression: cannot write " + path);
    for (std::size_t e = 0; e < examples.size(); ++e) {
        if (e) out << '\n';
        for (std::size_t i = 0; i < examples[e].tokens.size(); ++i)
            out << examples[e].tokens[i] << '\t' << (examples[e].keep_mask[i] ? 1 : 0) << '\n';
    }
}

std::vector<TaggedSentence> read_tagged(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("read_tagged: cannot open " + path);
    std::vector<TaggedSentence> sentences;
    TaggedSentence current;
    std::string line;
    int line_no = 0;
    auto flush = [&] {
        if (!current.tokens.empty()) {
            sentences.push_back(std::move(current));
            current = {};
        }
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            flush();
            continue;
        }
        auto cols = split_tab(line);
        if (cols.size() != 2) format_error(path, line_no, "expected token<TAB>TAG");
        current.tokens.push_back(cols[0]);
        try {
            current.tags.push_back(parse_pos_tag(cols[1]));
        } catch (const FormatError&) {
            format_error(path, line_no, "unknown POS tag '" + cols[1] + "'");
        }
    }
    flush();
    return sentences;
}

// --- vocabulary --------------------------------------------------------------------

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& token_streams, int min_count) {
    if (min_count < 1) throw ContractError("build_vocab: min_count must be >= 1");
    std::map<std::string, long long> counts;
    for (const auto& stream : token_streams)
        for (const auto& token : stream) ++counts[token];
    std::vector<std::pair<std::string, long long>> ordered(counts.begin(), counts.end());
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    Vocabulary vocab;
    for (const auto& [token, count] : ordered)
        if (count >= min_count) vocab.add(token);
    return vocab;
}

// --- POS tagging ----------------------------------------------------------------------

const char* pos_tag_name(PosTag tag) {
    switch (tag) {
        case PosTag::Noun: return "NOUN";
        case PosTag::Verb: return "VERB";
        case PosTag::Adj: return "ADJ";
        case PosTag::Adv: return "ADV";
        case PosTag::Pron: return "PRON";
        case PosTag::Det: return "DET";
        case PosTag::Adp: return "ADP";
        case PosTag::Conj: return "CONJ";
        case PosTag::Num: return "NUM";
        case PosTag::Part: return "PART";
        case PosTag::Other: return "OTHER";
    }
    return "OTHER";
}

PosTag parse_pos_tag(const std::string& name) {
    static const std::map<std::string, PosTag> table = {
        {"NOUN", PosTag::Noun}, {"VERB", PosTag::Verb}, {"ADJ", PosTag::Adj},
        {"ADV", PosTag::Adv},   {"PRON", PosTag::Pron}, {"DET", PosTag::Det},
        {"ADP", PosTag::Adp},   {"CONJ", PosTag::Conj}, {"NUM", PosTag::Num},
        {"PART", PosTag::Part}, {"OTHER", PosTag::Other}};
    auto it = table.find(name);
    if (it == table.end()) throw FormatError("unknown POS tag '" + name + "'");
    return it->second;
}

namespace {

const std::set<std::string>& det_words() {
    static const std::set<std::string> words = {"the",   "a",     "an",    "this", "that",
                                                "these", "those", "each",  "every", "some",
                                                "any",   "no",    "either", "neither"};
    return words;
}

const std::set<std::string>& pron_words() {
    static const std::set<std::string> words = {
        "i",    "you",  "he",    "she",   "it",    "we",     "they",    "me",
        "him",  "her",  "us",    "them",  "my",    "your",   "his",     "its",
        "our",  "their", "mine", "yours", "who",   "whom",   "whose",   "which",
        "what", "himself", "herself", "itself", "themselves"};
    return words;
}

const std::set<std::string>& adp_words() {
    static const std::set<std::string> words = {
        "in",   "on",      "at",      "by",      "for",     "with",   "from",  "to",
        "of",   "about",   "over",    "under",   "between", "through", "during", "against",
        "into", "onto",    "upon",    "within",  "without", "near",   "across", "behind",
        "below", "above",  "after",   "before",  "beside",  "past"};
    return words;
}

const std::set<std::string>& conj_words() {
    static const std::set<std::string> words = {"and",      "or",    "but",  "because", "although",
                                                "though",   "while", "if",   "unless",  "since",
                                                "nor",      "so",    "yet",  "when",    "whereas"};
    return words;
}

const std::set<std::string>& part_words() {
    static const std::set<std::string> words = {"not", "n't", "'s"};
    return words;
}

const std::set<std::string>& num_words() {
    static const std::set<std::string> words = {"zero", "one", "two",   "three", "four",
                                                "five", "six", "seven", "eight", "nine",
                                                "ten",  "hundred", "thousand", "million"};
    return words;
}

const std::set<std::string>& verb_stems() {
    static const std::set<std::string> words = {
        "walk",  "talk",  "jump",  "look",   "watch", "chase",  "follow", "visit", "help",
        "call",  "carry", "paint", "clean",  "cross", "like",   "fear",   "grab",  "pull",
        "push",  "open",  "close", "start",  "stop",  "work",   "play",   "move",  "turn",
        "show",  "ask",   "stay",  "wait",   "travel", "observe", "pursue", "trail", "tour",
        "aid",   "phone", "haul",  "scrub",  "traverse", "enjoy", "dread", "seize", "decorate",
        "want",  "need",  "learn", "listen", "climb"};
    return words;
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool is_number(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isdigit(static_cast<unsigned char>(c)) && c != '.' && c != ',') return false;
    return std::isdigit(static_cast<unsigned char>(s[0])) != 0;
}

bool has_verb_stem(const std::string& token, const std::string& suffix) {
    std::string stem = token.substr(0, token.size() - suffix.size());
    if (verb_stems().count(stem)) return true;
    // doubled final consonant, e.g. stopped -> stopp -> stop
    if (stem.size() >= 2 && stem[stem.size() - 1] == stem[stem.size() - 2] &&
        verb_stems().count(stem.substr(0, stem.size() - 1)))
        return true;
    // dropped final e, e.g. chasing -> chas -> chase
    if (verb_stems().count(stem + "e")) return true;
    return false;
}

PosTag tag_one(const std::string& token) {
    if (det_words().count(token)) return PosTag::Det;
    if (pron_words().count(token)) return PosTag::Pron;
    if (adp_words().count(token)) return PosTag::Adp;
    if (conj_words().count(token)) return PosTag::Conj;
    if (part_words().count(token)) return PosTag::Part;
    if (num_words().count(token) || is_number(token)) return PosTag::Num;
    if (verb_stems().count(token)) return PosTag::Verb;
    if (ends_with(token, "ly") && token.size() > 3) return PosTag::Adv;
    for (const std::string suffix : {"ing", "ed", "s"})
        if (ends_with(token, suffix) && token.size() > suffix.size() + 1 &&
            has_verb_stem(token, suffix))
            return PosTag::Verb;
    for (const std::string suffix : {"tion", "ness", "ment"})
        if (ends_with(token, suffix) && token.size() > suffix.size() + 1) return PosTag::Noun;
    for (const std::string suffix : {"ous", "ful", "ive", "able"})
        if (ends_with(token, suffix) && token.size() > suffix.size() + 1) return PosTag::Adj;
    return PosTag::Noun;
}

}  // namespace

TaggedSentence pos_tag(const std::vector<std::string>& tokens) {
    if (tokens.empty()) throw ContractError("pos_tag: empty sentence");
    TaggedSentence out;
    out.tokens = tokens;
    out.tags.reserve(tokens.size());
    for (const auto& token : tokens) out.tags.push_back(tag_one(token));
    return out;
}

// --- synthetic corpora ---------------------------------------------------------------

namespace {

struct GrammarWord {
    std::string text;
    std::string synonym;  // empty when not substitutable
    PosTag tag;
};

struct Grammar {
    std::vector<GrammarWord> adjectives;
    std::vector<GrammarWord> nouns;
    std::vector<GrammarWord> verbs;
    std::vector<GrammarWord> adverbs;
    std::vector<std::string> preps;
};

const Grammar& grammar() {
    static const Grammar g = [] {
        Grammar g;
        auto pair_list = [](std::initializer_list<std::pair<const char*, const char*>> items,
                            PosTag tag) {
            std::vector<GrammarWord> out;
            for (const auto& [a, b] : items) {
                out.push_back({a, b, tag});
                out.push_back({b, a, tag});
            }
            return out;
        };
        g.adjectives = pair_list({{"quick", "rapid"},
                                  {"happy", "jolly"},
                                  {"bright", "shiny"},
                                  {"calm", "quiet"},
                                  {"eager", "keen"},
                                  {"gentle", "tender"},
                                  {"noisy", "loud"},
                                  {"tiny", "small"},
                                  {"warm", "cozy"},
                                  {"brave", "bold"},
                                  {"clever", "smart"},
                                  {"gloomy", "dreary"},
                                  {"humble", "modest"},
                                  {"weary", "tired"}},
                                 PosTag::Adj);
        g.verbs = pair_list({{"chased", "pursued"},
                             {"watched", "observed"},
                             {"followed", "trailed"},
                             {"helped", "aided"},
                             {"carried", "hauled"},
                             {"cleaned", "scrubbed"},
                             {"crossed", "traversed"},
                             {"liked", "enjoyed"},
                             {"feared", "dreaded"},
                             {"grabbed", "seized"}},
                            PosTag::Verb);
        g.adverbs = pair_list({{"quickly", "rapidly"},
                               {"calmly", "quietly"},
                               {"eagerly", "keenly"},
                               {"gently", "tenderly"},
                               {"loudly", "noisily"},
                               {"bravely", "boldly"},
                               {"happily", "gladly"},
                               {"proudly", "grandly"}},
                              PosTag::Adv);
        for (const char* n : {"fox",   "dog",    "cat",   "bird",  "horse",  "mouse", "rabbit",
                              "wolf",  "otter",  "crow",  "river", "garden", "village", "castle",
                              "market", "bridge", "letter", "story", "basket", "lantern"})
            g.nouns.push_back({n, "", PosTag::Noun});
        for (const auto& [a, b] : std::initializer_list<std::pair<const char*, const char*>>{
                 {"writer", "author"}, {"doctor", "physician"}, {"kid", "child"},
                 {"road", "street"},   {"boat", "ship"},        {"forest", "woods"}}) {
            g.nouns.push_back({a, b, PosTag::Noun});
            g.nouns.push_back({b, a, PosTag::Noun});
        }
        g.preps = {"near", "beside", "behind", "under", "over", "across"};
        return g;
    }();
    return g;
}

struct BuiltToken {
    std::string text;
    std::string synonym;
    bool core;  // survives compression
};

// One sentence from the template grammar: subject-verb-object with optional
// adjective, adverb and prepositional-phrase adjuncts.
std::vector<BuiltToken> build_sentence(Rng& rng) {
    const Grammar& g = grammar();
    auto pick = [&rng](const std::vector<GrammarWord>& words) {
        return words[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(words.size())))];
    };
    std::vector<BuiltToken> out;
    bool subject_adj = rng.uniform() < 0.7;
    bool trailing_adv = rng.uniform() < 0.5;
    bool pp = rng.uniform() < 0.4;
    out.push_back({"the", "", true});
    if (subject_adj) {
        GrammarWord adj = pick(g.adjectives);
        out.push_back({adj.text, adj.synonym, false});
    }
    GrammarWord subject = pick(g.nouns);
    out.push_back({subject.text, subject.synonym, true});
    GrammarWord verb = pick(g.verbs);
    out.push_back({verb.text, verb.synonym, true});
    out.push_back({"the", "", true});
    if (!subject_adj || rng.uniform() < 0.3) {
        GrammarWord adj = pick(g.adjectives);
        out.push_back({adj.text, adj.synonym, false});
    }
    GrammarWord object = pick(g.nouns);
    out.push_back({object.text, object.synonym, true});
    if (trailing_adv) {
        GrammarWord adv = pick(g.adverbs);
        out.push_back({adv.text, adv.synonym, false});
    }
    if (pp) {
        out.push_back({g.preps[static_cast<std::size_t>(
                           rng.uniform_int(static_cast<int>(g.preps.size())))],
                       "", false});
        out.push_back({"the", "", false});
        GrammarWord pn = pick(g.nouns);
        out.push_back({pn.text, pn.synonym, false});
    }
    return out;
}

std::vector<std::string> texts_of(const std::vector<BuiltToken>& sentence) {
    std::vector<std::string> out;
    out.reserve(sentence.size());
    for (const auto& t : sentence) out.push_back(t.text);
    return out;
}

}  // namespace

SimulatorParams human_like_params() {
    SimulatorParams p;
    p.skip_bias = 1.2;
    p.skip_frequency = 0.32;
    p.base_ms = 205.0;
    p.length_ms = 16.0;
    p.frequency_ms = 14.0;
    p.gamma_shape = 7.0;
    p.regression_prob = 0.15;
    return p;
}

std::vector<std::vector<std::string>> sample_template_sentences(int count, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<std::string>> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        Rng srng = rng.split(static_cast<std::uint64_t>(i));
        out.push_back(texts_of(build_sentence(srng)));
    }
    return out;
}

SyntheticCorpora make_synthetic_task_corpora(std::uint64_t seed, const SyntheticSizes& sizes) {
    if (sizes.paraphrase_pairs <= 0 || sizes.compression_examples <= 0 ||
        sizes.gaze_sentences <= 0 || sizes.gaze_runs <= 0)
        throw ContractError("make_synthetic_task_corpora: sizes must be positive");
    Rng rng(seed);
    SyntheticCorpora out;

    // Lexicon: function words frequent, content words spread over magnitudes.
    auto add_content = [&](const std::vector<GrammarWord>& words, double base) {
        int i = 0;
        for (const auto& w : words) {
            double count = base * std::pow(1.45, i % 11) + 17.0 * i;
            out.lexicon.add(w.text, std::floor(count));
            ++i;
        }
    };
    out.lexicon.add("the", 120000);
    out.lexicon.add("a", 90000);
    for (const auto& p : grammar().preps) out.lexicon.add(p, 15000 + 500.0 * p.size());
    add_content(grammar().adjectives, 120);
    add_content(grammar().nouns, 300);
    add_content(grammar().verbs, 200);
    add_content(grammar().adverbs, 80);

    Rng para_rng = rng.split(1);
    for (int i = 0; i < sizes.paraphrase_pairs; ++i) {
        Rng srng = para_rng.split(static_cast<std::uint64_t>(i));
        auto sentence = build_sentence(srng);
        SentencePair pair;
        pair.source = texts_of(sentence);
        std::vector<int> substitutable;
        for (std::size_t t = 0; t < sentence.size(); ++t)
            if (!sentence[t].synonym.empty()) substitutable.push_back(static_cast<int>(t));
        pair.target = pair.source;
        bool changed = false;
        for (int t : substitutable)
            if (srng.uniform() < 0.6) {
                pair.target[static_cast<std::size_t>(t)] = sentence[static_cast<std::size_t>(t)].synonym;
                changed = true;
            }
        if (!changed && !substitutable.empty()) {
            int t = substitutable[0];
            pair.target[static_cast<std::size_t>(t)] = sentence[static_cast<std::size_t>(t)].synonym;
        }
        out.paraphrases.push_back(std::move(pair));
    }

    Rng comp_rng = rng.split(2);
    for (int i = 0; i < sizes.compression_examples; ++i) {
        Rng srng = comp_rng.split(static_cast<std::uint64_t>(i));
        auto sentence = build_sentence(srng);
        DeletionExample example;
        example.tokens = texts_of(sentence);
        for (const auto& t : sentence) example.keep_mask.push_back(t.core);
        out.compressions.push_back(std::move(example));
    }

    out.human_params = human_like_params();
    Rng gaze_rng = rng.split(3);
    auto sentences = sample_template_sentences(sizes.gaze_sentences, gaze_rng.next_u64());
    auto corpus = generate_pretraining_corpus(sentences, out.lexicon, sizes.gaze_runs,
                                              gaze_rng.next_u64(), out.human_params);
    for (auto& [tokens, record] : corpus) {
        GazeSample sample;
        sample.tokens = tokens;
        sample.record = record;
        sample.record.run_or_reader_id = "human-0";
        out.gaze.push_back(std::move(sample));
    }
    return out;
}

}  // namespace tsal
