#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cednet/arch.hpp"

// Static analysis over ArchGraphs: learnable-parameter counts, MAC counts at
// a concrete input size, the fusion-time ratio, and theoretical receptive
// fields. All functions are pure.

namespace cednet::analyzer {

struct NodeShape {
    std::int64_t channels = 0;
    std::int64_t h = 0; // 0 once spatial axes are gone
    std::int64_t w = 0;
};

// Concrete output shape per node for a (1, 3, H, W) input.
std::vector<NodeShape> infer_shapes(const arch::ArchGraph& graph, int input_h, int input_w);

std::int64_t count_node_params(const arch::LayerNode& node);

// Exact count of learnable scalars, total plus per-node breakdown.
std::int64_t count_params(const arch::ArchGraph& graph,
                          std::map<int, std::int64_t>* per_node = nullptr);

// Headline figure: multiply-accumulate ops of conv and linear nodes at the
// given input size. Element-wise costs (upsample, layer norm, GELU, add,
// pooling) are tallied separately and never folded into the MAC figure.
struct FlopCount {
    std::int64_t macs = 0;
    std::int64_t elementwise = 0;
};

FlopCount count_flops(const arch::ArchGraph& graph, int input_h, int input_w,
                      std::map<int, std::int64_t>* macs_per_node = nullptr);

// Parameters of the sub-network ancestral to the first cross-scale merge
// divided by total parameters. Throws NumericError("no fusion node") when
// the graph never fuses scales.
double fusion_time_ratio(const arch::ArchGraph& graph);

// Theoretical receptive field of one node, in input pixels, along the
// maximal-RF path.
std::pair<std::int64_t, std::int64_t> receptive_field(const arch::ArchGraph& graph,
                                                      int node_id, int input_h, int input_w);

struct AnalysisReport {
    std::string graph_name;
    int input_h = 0;
    int input_w = 0;
    std::int64_t total_params = 0;
    std::map<int, std::int64_t> params_by_node;
    std::int64_t macs = 0;
    std::int64_t elementwise_flops = 0;
    std::optional<double> fusion_ratio; // empty when the graph has no fusion
    // output name -> (rf_h, rf_w)
    std::vector<std::pair<std::string, std::pair<std::int64_t, std::int64_t>>> receptive_fields;
    // insertion-ordered top-level modules (stem, stage_i, head, fpn)
    std::vector<std::string> module_order;
    std::map<std::string, std::int64_t> params_by_module;
    std::map<std::string, std::int64_t> macs_by_module;

    bool operator==(const AnalysisReport&) const = default;
};

AnalysisReport emit_report(const arch::ArchGraph& graph, int input_h, int input_w);

std::string report_to_json(const AnalysisReport& report);
AnalysisReport report_from_json(const std::string& text);

// One row per top-level module: module,params,macs.
std::string report_to_csv(const AnalysisReport& report);

} // namespace cednet::analyzer
