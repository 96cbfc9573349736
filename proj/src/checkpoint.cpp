#include "tsal/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "tsal/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are little-endian");

namespace tsal {

namespace {

constexpr char kMagic[8] = {'T', 'S', 'A', 'L', 'C', 'K', 'P', '1'};

using nlohmann::json;

void append_blob(std::string& blobs, const std::vector<double>& values) {
    std::size_t offset = blobs.size();
    blobs.resize(offset + values.size() * sizeof(double));
    std::memcpy(blobs.data() + offset, values.data(), values.size() * sizeof(double));
}

std::vector<double> read_blob(const std::string& blobs, std::size_t offset, std::size_t count) {
    if (offset + count * sizeof(double) > blobs.size())
        throw FormatError("checkpoint: blob out of range");
    std::vector<double> values(count);
    std::memcpy(values.data(), blobs.data() + offset, count * sizeof(double));
    return values;
}

json provenance_to_json(const Provenance& p) {
    return json{{"stage", p.stage},
                {"task", p.task},
                {"ablation", p.ablation},
                {"epochs", p.epochs},
                {"seed", p.seed},
                {"config_hash", p.config_hash},
                {"per_epoch_losses", p.per_epoch_losses},
                {"probe_tokens", p.probe_tokens},
                {"probe_saliency", p.probe_saliency}};
}

Provenance provenance_from_json(const json& j) {
    Provenance p;
    p.stage = j.value("stage", "");
    p.task = j.value("task", "");
    p.ablation = j.value("ablation", "");
    p.epochs = j.value("epochs", 0);
    p.seed = j.value("seed", std::uint64_t{0});
    p.config_hash = j.value("config_hash", "");
    if (j.contains("per_epoch_losses"))
        p.per_epoch_losses = j["per_epoch_losses"].get<std::vector<double>>();
    if (j.contains("probe_tokens"))
        p.probe_tokens = j["probe_tokens"].get<std::vector<std::string>>();
    if (j.contains("probe_saliency"))
        p.probe_saliency = j["probe_saliency"].get<std::vector<std::vector<double>>>();
    return p;
}

}  // namespace

void Checkpoint::save(const std::string& path) const {
    std::string blobs;
    json manifest;
    manifest["format_version"] = format_version;

    json tensor_list = json::array();
    for (const auto& [name, tensor] : tensors) {
        json entry;
        entry["name"] = name;
        entry["shape"] = tensor.shape();
        entry["offset"] = blobs.size();
        entry["count"] = tensor.size();
        tensor_list.push_back(std::move(entry));
        append_blob(blobs, tensor.values());
    }
    manifest["tensors"] = std::move(tensor_list);

    json opt;
    opt["step_count"] = optimizer.step_count;
    opt["beta1"] = optimizer.config.beta1;
    opt["beta2"] = optimizer.config.beta2;
    opt["epsilon"] = optimizer.config.epsilon;
    json slots = json::array();
    for (const char* which : {"m", "v"}) {
        const auto& moments =
            std::string(which) == "m" ? optimizer.first_moment : optimizer.second_moment;
        for (const auto& [name, values] : moments) {
            json entry;
            entry["name"] = name;
            entry["slot"] = which;
            entry["offset"] = blobs.size();
            entry["count"] = values.size();
            slots.push_back(std::move(entry));
            append_blob(blobs, values);
        }
    }
    opt["slots"] = std::move(slots);
    manifest["optimizer"] = std::move(opt);

    manifest["vocab"] = vocab_tokens;
    manifest["config"] = config;
    manifest["provenance"] = provenance_to_json(provenance);

    std::string header = manifest.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("checkpoint: cannot write " + path);
    out.write(kMagic, sizeof(kMagic));
    std::uint64_t header_len = header.size();
    out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(blobs.data(), static_cast<std::streamsize>(blobs.size()));
    if (!out) throw IoError("checkpoint: write failed for " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw FormatError("checkpoint: bad magic in " + path);
    std::uint64_t header_len = 0;
    in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
    if (!in) throw FormatError("checkpoint: truncated header in " + path);
    std::string header(header_len, '\0');
    in.read(header.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw FormatError("checkpoint: truncated manifest in " + path);
    std::string blobs((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    json manifest;
    try {
        manifest = json::parse(header);
    } catch (const json::exception& e) {
        throw FormatError("checkpoint: bad manifest in " + path + ": " + e.what());
    }

    Checkpoint ckpt;
    ckpt.format_version = manifest.value("format_version", 0);
    if (ckpt.format_version != 1)
        throw FormatError("checkpoint: unsupported format_version " +
                          std::to_string(ckpt.format_version));
    for (const auto& entry : manifest["tensors"]) {
        std::string name = entry["name"];
        std::vector<int> shape = entry["shape"].get<std::vector<int>>();
        auto values = read_blob(blobs, entry["offset"], entry["count"]);
        ckpt.tensors.emplace(name, Tensor::from(shape, std::move(values)));
    }
    const auto& opt = manifest["optimizer"];
    ckpt.optimizer.step_count = opt.value("step_count", std::int64_t{0});
    ckpt.optimizer.config.beta1 = opt.value("beta1", 0.9);
    ckpt.optimizer.config.beta2 = opt.value("beta2", 0.999);
    ckpt.optimizer.config.epsilon = opt.value("epsilon", 1e-8);
    for (const auto& entry : opt["slots"]) {
        std::string name = entry["name"];
        auto values = read_blob(blobs, entry["offset"], entry["count"]);
        if (entry["slot"] == "m")
            ckpt.optimizer.first_moment[name] = std::move(values);
        else
            ckpt.optimizer.second_moment[name] = std::move(values);
    }
    ckpt.vocab_tokens = manifest["vocab"].get<std::vector<std::string>>();
    ckpt.config = manifest["config"].get<ConfigMap>();
    ckpt.provenance = provenance_from_json(manifest["provenance"]);
    return ckpt;
}

bool Checkpoint::same_tensors(const Checkpoint& a, const Checkpoint& b) {
    if (a.tensors.size() != b.tensors.size()) return false;
    auto ita = a.tensors.begin();
    auto itb = b.tensors.begin();
    for (; ita != a.tensors.end(); ++ita, ++itb) {
        if (ita->first != itb->first) return false;
        if (ita->second.shape() != itb->second.shape()) return false;
        if (ita->second.values() != itb->second.values()) return false;
    }
    return true;
}

}  // namespace tsal
