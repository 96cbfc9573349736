#include "tsal/embeddings.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "tsal/errors.hpp"
#include "tsal/rng.hpp"

namespace tsal {

Vocabulary::Vocabulary() {
    for (const char* reserved : {"<pad>", "<unk>", "<bos>", "<eos>"}) add(reserved);
}

int Vocabulary::add(const std::string& token) {
    auto it = token_to_index_.find(token);
    if (it != token_to_index_.end()) return it->second;
    int index = static_cast<int>(index_to_token_.size());
    token_to_index_.emplace(token, index);
    index_to_token_.push_back(token);
    return index;
}

int Vocabulary::index_of(const std::string& token) const {
    auto it = token_to_index_.find(token);
    return it == token_to_index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token_of(int index) const {
    if (index < 0 || index >= size())
        throw BoundsError("Vocabulary: index " + std::to_string(index) + " out of " +
                          std::to_string(size()));
    return index_to_token_[static_cast<std::size_t>(index)];
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
    std::vector<int> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(index_of(t));
    return out;
}

std::vector<std::string> Vocabulary::decode(const std::vector<int>& indices) const {
    std::vector<std::string> out;
    out.reserve(indices.size());
    for (int i : indices) out.push_back(token_of(i));
    return out;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
    Vocabulary v;
    // Reserved tokens may appear in the list; add() keeps their indices.
    for (const auto& t : tokens) v.add(t);
    return v;
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string current;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!current.empty()) {
                out.push_back(current);
                current.clear();
            }
        } else {
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    if (!current.empty()) out.push_back(current);
    return out;
}

Tensor EmbeddingTable::lookup(const std::vector<int>& token_indices) const {
    return embedding_lookup(matrix, token_indices);
}

namespace {

EmbeddingTable build_table(const Vocabulary& vocabulary, int dim, std::uint64_t seed,
                           bool trainable) {
    Rng rng(seed);
    const int v = vocabulary.size();
    std::vector<double> values(static_cast<std::size_t>(v) * dim);
    for (int row = 0; row < v; ++row) {
        Rng row_rng = rng.split(static_cast<std::uint64_t>(row));
        for (int j = 0; j < dim; ++j)
            values[static_cast<std::size_t>(row) * dim + j] = row_rng.uniform(-0.05, 0.05);
    }
    for (int row : {Vocabulary::kPad, Vocabulary::kUnk})
        std::fill_n(values.begin() + static_cast<std::size_t>(row) * dim, dim, 0.0);
    EmbeddingTable table;
    table.dimension = dim;
    table.matrix = Tensor::from({v, dim}, std::move(values), trainable);
    table.trainable = trainable;
    return table;
}

}  // namespace

EmbeddingTable random_embeddings(const Vocabulary& vocabulary, int dim, std::uint64_t seed,
                                 bool trainable) {
    return build_table(vocabulary, dim, seed, trainable);
}

EmbeddingTable load_embeddings(const std::string& path, const Vocabulary& vocabulary,
                               int fallback_dim, std::uint64_t seed, bool trainable) {
    std::ifstream in(path);
    if (!in) throw IoError("load_embeddings: cannot open " + path);

    int dim = -1;
    std::vector<std::pair<int, std::vector<double>>> file_rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string token;
        ls >> token;
        std::vector<double> row;
        double v;
        while (ls >> v) row.push_back(v);
        if (!ls.eof())
            throw FormatError("load_embeddings: " + path + " line " + std::to_string(line_no) +
                              ": non-numeric vector entry");
        if (row.empty())
            throw FormatError("load_embeddings: " + path + " line " + std::to_string(line_no) +
                              ": no vector values");
        if (dim < 0)
            dim = static_cast<int>(row.size());
        else if (static_cast<int>(row.size()) != dim)
            throw FormatError("load_embeddings: " + path + " line " + std::to_string(line_no) +
                              ": dimension " + std::to_string(row.size()) + " != " +
                              std::to_string(dim));
        if (vocabulary.contains(token)) {
            int idx = vocabulary.index_of(token);
            if (idx != Vocabulary::kUnk) file_rows.emplace_back(idx, std::move(row));
        }
    }
    if (dim < 0) dim = fallback_dim;
    if (dim <= 0) throw ContractError("load_embeddings: no dimension available");

    EmbeddingTable table = build_table(vocabulary, dim, seed, trainable);
    auto& values = table.matrix.mutable_values();
    for (const auto& [idx, row] : file_rows)
        std::copy(row.begin(), row.end(), values.begin() + static_cast<std::size_t>(idx) * dim);
    return table;
}

}  // namespace tsal
