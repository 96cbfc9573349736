#pragma once

#include <string>
#include <vector>

namespace tsal {

// Attention-map data for one probe sentence: per-epoch saliency snapshots
// from joint training plus the final decoder-step x encoder-position
// attention matrix. Feeds the JSON and SVG emitters.
struct AttentionTrace {
    std::vector<std::string> probe_tokens;
    std::vector<std::vector<double>> saliency_per_epoch;  // rows sum to 1 (1e-6)
    std::vector<std::vector<double>> attention;           // rows sum to 1 (1e-9)
    std::vector<std::string> output_tokens;
    bool truncated = false;  // generation hit the length cap

    void validate() const;
};

std::string trace_to_json(const AttentionTrace& trace);
AttentionTrace trace_from_json(const std::string& text);

void write_trace_json(const std::string& path, const AttentionTrace& trace);
AttentionTrace read_trace_json(const std::string& path);

// One horizontal heat strip per epoch, blue scale, tokens along the bottom.
std::string saliency_svg(const AttentionTrace& trace);

// 2-D grid: input sequence on the horizontal axis, predicted sequence on the
// vertical axis. Grid cells carry class="cell".
std::string attention_svg(const AttentionTrace& trace);

}  // namespace tsal
