#include "tsal/trace.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tsal/errors.hpp"

namespace tsal {

using nlohmann::json;

void AttentionTrace::validate() const {
    for (const auto& row : saliency_per_epoch) {
        if (row.size() != probe_tokens.size())
            throw ContractError("trace: saliency row length != probe length");
        double total = 0.0;
        for (double v : row) total += v;
        if (std::abs(total - 1.0) > 1e-6)
            throw ContractError("trace: saliency row sums to " + std::to_string(total));
    }
    for (const auto& row : attention) {
        if (row.size() != probe_tokens.size())
            throw ContractError("trace: attention row length != probe length");
        double total = 0.0;
        for (double v : row) total += v;
        if (std::abs(total - 1.0) > 1e-9)
            throw ContractError("trace: attention row sums to " + std::to_string(total));
    }
}

std::string trace_to_json(const AttentionTrace& trace) {
    json j;
    j["probe_tokens"] = trace.probe_tokens;
    j["saliency_per_epoch"] = trace.saliency_per_epoch;
    j["attention"] = trace.attention;
    j["output_tokens"] = trace.output_tokens;
    j["truncated"] = trace.truncated;
    return j.dump(2);
}

AttentionTrace trace_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("trace: bad json: ") + e.what());
    }
    AttentionTrace trace;
    trace.probe_tokens = j.at("probe_tokens").get<std::vector<std::string>>();
    trace.saliency_per_epoch = j.at("saliency_per_epoch").get<std::vector<std::vector<double>>>();
    trace.attention = j.at("attention").get<std::vector<std::vector<double>>>();
    trace.output_tokens = j.at("output_tokens").get<std::vector<std::string>>();
    trace.truncated = j.value("truncated", false);
    return trace;
}

void write_trace_json(const std::string& path, const AttentionTrace& trace) {
    std::ofstream out(path);
    if (!out) throw IoError("trace: cannot write " + path);
    out << trace_to_json(trace) << '\n';
}

AttentionTrace read_trace_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("trace: cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return trace_from_json(buffer.str());
}

namespace {

constexpr int kCell = 28;
constexpr int kGap = 2;
constexpr int kLabel = 90;

// Blue shade scaled by weight relative to the row maximum.
std::string blue(double weight, double row_max) {
    double t = row_max > 0.0 ? weight / row_max : 0.0;
    int level = static_cast<int>(255.0 * (1.0 - 0.9 * t));
    std::ostringstream os;
    os << "rgb(" << level << "," << level << ",255)";
    return os.str();
}

void open_svg(std::ostringstream& os, int width, int height) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
       << height << "\" font-family=\"monospace\" font-size=\"11\">\n";
}

void token_labels(std::ostringstream& os, const std::vector<std::string>& tokens, int x0, int y) {
    for (std::size_t j = 0; j < tokens.size(); ++j) {
        int x = x0 + static_cast<int>(j) * (kCell + kGap) + kCell / 2;
        os << "  <text x=\"" << x << "\" y=\"" << y << "\" text-anchor=\"end\" transform=\"rotate(-60 "
           << x << " " << y << ")\">" << tokens[j] << "</text>\n";
    }
}

}  // namespace

std::string saliency_svg(const AttentionTrace& trace) {
    const int n = static_cast<int>(trace.probe_tokens.size());
    const int epochs = static_cast<int>(trace.saliency_per_epoch.size());
    const int width = kLabel + n * (kCell + kGap) + 20;
    const int height = epochs * (kCell + kGap) + 80;
    std::ostringstream os;
    open_svg(os, width, height);
    for (int e = 0; e < epochs; ++e) {
        const auto& row = trace.saliency_per_epoch[static_cast<std::size_t>(e)];
        double row_max = 0.0;
        for (double v : row) row_max = std::max(row_max, v);
        int y = 10 + e * (kCell + kGap);
        os << "  <text x=\"" << kLabel - 8 << "\" y=\"" << y + kCell / 2 + 4
           << "\" text-anchor=\"end\">epoch " << e + 1 << "</text>\n";
        for (int j = 0; j < n; ++j) {
            os << "  <rect class=\"saliency\" x=\"" << kLabel + j * (kCell + kGap) << "\" y=\"" << y
               << "\" width=\"" << kCell << "\" height=\"" << kCell << "\" fill=\""
               << blue(row[static_cast<std::size_t>(j)], row_max) << "\"/>\n";
        }
    }
    token_labels(os, trace.probe_tokens, kLabel, 10 + epochs * (kCell + kGap) + 14);
    os << "</svg>\n";
    return os.str();
}

std::string attention_svg(const AttentionTrace& trace) {
    const int n = static_cast<int>(trace.probe_tokens.size());
    const int steps = static_cast<int>(trace.attention.size());
    const int width = kLabel + n * (kCell + kGap) + 120;
    const int height = steps * (kCell + kGap) + 90;
    std::ostringstream os;
    open_svg(os, width, height);
    for (int i = 0; i < steps; ++i) {
        const auto& row = trace.attention[static_cast<std::size_t>(i)];
        double row_max = 0.0;
        for (double v : row) row_max = std::max(row_max, v);
        int y = 10 + i * (kCell + kGap);
        if (i < static_cast<int>(trace.output_tokens.size()))
            os << "  <text x=\"" << kLabel + n * (kCell + kGap) + 8 << "\" y=\"" << y + kCell / 2 + 4
               << "\">" << trace.output_tokens[static_cast<std::size_t>(i)] << "</text>\n";
        for (int j = 0; j < n; ++j) {
            os << "  <rect class=\"cell\" x=\"" << kLabel + j * (kCell + kGap) << "\" y=\"" << y
               << "\" width=\"" << kCell << "\" height=\"" << kCell << "\" fill=\""
               << blue(row[static_cast<std::size_t>(j)], row_max) << "\"/>\n";
        }
    }
    token_labels(os, trace.probe_tokens, kLabel, 10 + steps * (kCell + kGap) + 14);
    os << "</svg>\n";
    return os.str();
}

}  // namespace tsal
