#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tsal/tensor.hpp"

namespace tsal {

// Token table with four reserved entries at fixed indices. Non-reserved
// tokens and indices are in bijection.
class Vocabulary {
  public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kBos = 2;
    static constexpr int kEos = 3;

    Vocabulary();

    // Adds the token if absent; returns its index either way.
    int add(const std::string& token);
    // Index of the token, or kUnk when unknown.
    int index_of(const std::string& token) const;
    bool contains(const std::string& token) const { return token_to_index_.count(token) != 0; }
    const std::string& token_of(int index) const;

    std::vector<int> encode(const std::vector<std::string>& tokens) const;
    std::vector<std::string> decode(const std::vector<int>& indices) const;

    int size() const { return static_cast<int>(index_to_token_.size()); }
    const std::vector<std::string>& tokens() const { return index_to_token_; }

    static Vocabulary from_tokens(const std::vector<std::string>& tokens);

  private:
    std::map<std::string, int> token_to_index_;
    std::vector<std::string> index_to_token_;
};

// Default normalizer: lowercase, split on whitespace.
std::vector<std::string> tokenize(const std::string& text);

// A |V| x dim matrix of word vectors. Rows follow vocabulary indices.
struct EmbeddingTable {
    int dimension = 0;
    Tensor matrix;  // [V, dimension]
    bool trainable = false;

    // Row gather for a token-index sequence; differentiable into the table
    // only when trainable.
    Tensor lookup(const std::vector<int>& token_indices) const;
};

// Reads "token v1 ... vd" lines and builds a table over `vocabulary`. Rows
// for tokens present in the file are copied; rows absent from the file are
// drawn from seeded uniform(-0.05, 0.05); PAD and UNK rows are zero. The
// dimension comes from the first data line, or `fallback_dim` for an empty
// file.
EmbeddingTable load_embeddings(const std::string& path, const Vocabulary& vocabulary,
                               int fallback_dim, std::uint64_t seed, bool trainable = false);

// Same initialization scheme without a file: every row random except PAD/UNK.
EmbeddingTable random_embeddings(const Vocabulary& vocabulary, int dim, std::uint64_t seed,
                                 bool trainable = false);

}  // namespace tsal
