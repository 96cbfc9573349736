#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "tsal/embeddings.hpp"
#include "tsal/errors.hpp"
#include "tsal/tensor.hpp"

using namespace tsal;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& content) {
        path = (std::filesystem::temp_directory_path() / name).string();
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("vocabulary reserves the first four indices") {
    Vocabulary v;
    CHECK(v.size() == 4);
    CHECK(v.index_of("<pad>") == Vocabulary::kPad);
    CHECK(v.index_of("<unk>") == Vocabulary::kUnk);
    CHECK(v.index_of("<bos>") == Vocabulary::kBos);
    CHECK(v.index_of("<eos>") == Vocabulary::kEos);
    int cat = v.add("cat");
    CHECK(cat == 4);
    CHECK(v.add("cat") == 4);
    CHECK(v.index_of("dog") == Vocabulary::kUnk);
}

TEST_CASE("vocabulary round-trips every entry") {
    Vocabulary v = Vocabulary::from_tokens({"alpha", "beta", "gamma"});
    for (int i = 0; i < v.size(); ++i) CHECK(v.index_of(v.token_of(i)) == i);
}

TEST_CASE("tokenize lowercases and splits on whitespace") {
    auto toks = tokenize("The  Cat\tsat\n");
    CHECK(toks == std::vector<std::string>{"the", "cat", "sat"});
}

TEST_CASE("load_embeddings copies rows present in the file") {
    TempFile file("tsal_emb_copy.txt", "cat 1.0 0.0\n");
    Vocabulary v = Vocabulary::from_tokens({"cat"});
    auto table = load_embeddings(file.path, v, 16, 1);
    CHECK(table.dimension == 2);
    int cat = v.index_of("cat");
    CHECK(table.matrix(cat, 0) == 1.0);
    CHECK(table.matrix(cat, 1) == 0.0);
}

TEST_CASE("missing tokens get seeded uniform rows, reproducibly") {
    TempFile file("tsal_emb_missing.txt", "cat 1.0 0.0\n");
    Vocabulary v = Vocabulary::from_tokens({"cat", "dog"});
    auto a = load_embeddings(file.path, v, 16, 42);
    auto b = load_embeddings(file.path, v, 16, 42);
    int dog = v.index_of("dog");
    for (int j = 0; j < 2; ++j) {
        CHECK(a.matrix(dog, j) == b.matrix(dog, j));
        CHECK(std::abs(a.matrix(dog, j)) <= 0.05);
    }
    auto c = load_embeddings(file.path, v, 16, 43);
    CHECK(a.matrix(dog, 0) != c.matrix(dog, 0));
}

TEST_CASE("PAD and UNK rows are zero") {
    TempFile file("tsal_emb_pad.txt", "cat 1.0 0.5\n");
    Vocabulary v = Vocabulary::from_tokens({"cat"});
    auto table = load_embeddings(file.path, v, 16, 7);
    for (int j = 0; j < table.dimension; ++j) {
        CHECK(table.matrix(Vocabulary::kPad, j) == 0.0);
        CHECK(table.matrix(Vocabulary::kUnk, j) == 0.0);
    }
}

TEST_CASE("empty embedding file initializes every row without error") {
    TempFile file("tsal_emb_empty.txt", "");
    Vocabulary v = Vocabulary::from_tokens({"cat", "dog"});
    auto table = load_embeddings(file.path, v, 8, 3);
    CHECK(table.dimension == 8);
    CHECK(table.matrix.shape() == std::vector<int>{v.size(), 8});
}

TEST_CASE("inconsistent dimensions raise a format error with the line number") {
    TempFile file("tsal_emb_bad.txt", "cat 1.0 0.0\ndog 1.0\n");
    Vocabulary v = Vocabulary::from_tokens({"cat", "dog"});
    CHECK_THROWS_WITH_AS(load_embeddings(file.path, v, 16, 1), doctest::Contains("line 2"),
                         FormatError);
}

TEST_CASE("unreadable file raises an io error") {
    Vocabulary v;
    CHECK_THROWS_AS(load_embeddings("/nonexistent/embeddings.txt", v, 16, 1), IoError);
}

TEST_CASE("lookup of PAD yields a zero row and duplicate ids identical rows") {
    Vocabulary v = Vocabulary::from_tokens({"cat"});
    auto table = random_embeddings(v, 4, 11);
    int cat = v.index_of("cat");
    Tensor out = table.lookup({Vocabulary::kPad, cat, cat});
    for (int j = 0; j < 4; ++j) {
        CHECK(out(0, j) == 0.0);
        CHECK(out(1, j) == out(2, j));
    }
}

TEST_CASE("lookup gradient is a one-hot row when trainable") {
    Vocabulary v = Vocabulary::from_tokens({"cat", "dog"});
    auto table = random_embeddings(v, 3, 5, /*trainable=*/true);
    int dog = v.index_of("dog");
    backward(sum(table.lookup({dog})));
    const auto& g = table.matrix.grad();
    for (int row = 0; row < v.size(); ++row)
        for (int j = 0; j < 3; ++j)
            CHECK(g[static_cast<std::size_t>(row) * 3 + j] == (row == dog ? 1.0 : 0.0));
}

TEST_CASE("frozen table receives no gradient") {
    Vocabulary v = Vocabulary::from_tokens({"cat"});
    auto table = random_embeddings(v, 3, 5, /*trainable=*/false);
    Tensor out = table.lookup({v.index_of("cat")});
    CHECK_FALSE(out.requires_grad());
}

TEST_CASE("lookup rejects out-of-range indices") {
    Vocabulary v;
    auto table = random_embeddings(v, 3, 5);
    CHECK_THROWS_AS(table.lookup({v.size()}), BoundsError);
}
