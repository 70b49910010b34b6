#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "cednet/common.hpp"

// Declarative layer DAGs for the cascade encoder-decoder family and the
// ConvNeXt(+FPN) baselines. The graph is the single source of truth for
// both static analysis and execution.

namespace cednet::arch {

enum class NodeKind {
    Input,
    Conv2d,
    LayerNorm,
    Gelu,
    Linear,
    Add,
    Upsample,
    GlobalAvgPool,
    Output,
};

const char* kind_name(NodeKind k);
NodeKind kind_from_name(const std::string& name);

enum class StageStyle { Hourglass, UNet, Fpn };
enum class GraphMode { Dense, Classification };

const char* style_name(StageStyle s);
StageStyle style_from_name(const std::string& name);
const char* mode_name(GraphMode m);
GraphMode mode_from_name(const std::string& name);

struct LayerNode {
    int id = -1;
    NodeKind kind = NodeKind::Input;
    std::string name;    // unique; parameter scope
    std::string module;  // top-level grouping: stem, stage_<i>, head, fpn
    std::vector<int> inputs;

    // conv2d / linear / layer_norm channel bookkeeping
    int in_ch = 0;
    int out_ch = 0;
    // conv2d only
    int kernel = 0;
    int stride = 1;
    int padding = 0;
    int dilation = 1;
    int groups = 1;
    bool has_bias = true;
    // upsample only
    int scale = 0;
    // stride exponent: 0 = input resolution, 3 = H/8, 5 = H/32; -1 once the
    // spatial axes are gone (after global pooling)
    int scale_level = 0;
};

struct ArchGraph {
    std::string name;
    std::vector<LayerNode> nodes; // nodes[i].id == i; ids are a topological order
    int input_id = -1;
    std::vector<std::pair<std::string, int>> outputs;
    int first_fusion_id = -1; // -1 when the graph never merges scales

    const LayerNode& node(int id) const { return nodes.at(static_cast<std::size_t>(id)); }
};

// Hyperparameters of one CEDNet variant. channels = (c0 stem, c1..c3 stage
// levels); blocks = (n0 stem, n1..n3 per-level counts).
struct ArchConfig {
    std::array<int, 4> channels{96, 192, 352, 512};
    std::array<int, 4> blocks{3, 2, 4, 2};
    int stages = 3;
    StageStyle style = StageStyle::Fpn;
    int dilation = 3;
    int mlp_ratio = 4;
    std::optional<std::vector<std::array<int, 3>>> per_stage_override;
    GraphMode mode = GraphMode::Dense;
    int num_classes = 1000;
    bool lr_blocks = true; // false builds the ablation variant without LR blocks

    bool operator==(const ArchConfig&) const = default;
};

ArchConfig cednet_next_t();
ArchConfig cednet_next_s();
ArchConfig cednet_next_b();

// JSON config schema (schema_version 1). Throws ConfigError naming the
// offending field.
ArchConfig parse_config(const std::string& text);
std::string serialize_config(const ArchConfig& config);

// --- Builders ---------------------------------------------------------------

// Appends nodes to an open graph; the ced/lr-ced/stem/stage builders below
// take a builder so subgraphs can be composed and inspected in isolation.
class GraphBuilder {
public:
    explicit GraphBuilder(std::string graph_name);

    int input(int channels, const std::string& name = "input");
    int conv(int in, int out_ch, int kernel, int stride, int padding, int dilation, int groups,
             const std::string& name);
    int layer_norm(int in, const std::string& name);
    int gelu(int in, const std::string& name);
    int linear(int in, int out_features, const std::string& name);
    int add(int a, int b, const std::string& name);
    int upsample(int in, int scale, const std::string& name);
    int global_avg_pool(int in, const std::string& name);
    int output(int in, const std::string& name);

    void set_module(std::string module) { module_ = std::move(module); }
    int channels_of(int id) const;
    int level_of(int id) const;

    ArchGraph finish(std::vector<std::pair<std::string, int>> outputs);

private:
    LayerNode& append(NodeKind kind, const std::string& name, std::vector<int> inputs);
    ArchGraph graph_;
    std::string module_ = "";
};

// Residual block: depthwise 7x7 mixer, layer norm, two-layer MLP. Returns
// the block output node.
int append_ced_block(GraphBuilder& b, int in, int channels, int mlp_ratio,
                     const std::string& scope);

// CED block preceded by a residual dilated depthwise 7x7 convolution.
int append_lr_ced_block(GraphBuilder& b, int in, int channels, int dilation, int mlp_ratio,
                        const std::string& scope);

// Two 3x3 stride-2 convs (each + LN + GELU), n0 CED blocks, then the 2x2
// stride-2 transition to the first stage width. Returns the H/8 node.
int append_stem(GraphBuilder& b, int in, int c0, int c1, int n0, int mlp_ratio);

struct StageTaps {
    int p8 = -1;  // decoder output (== stage input shape) when built
    int p16 = -1;
    int p32 = -1;
    int e32 = -1; // encoder's lowest-resolution features
};

struct StageSpec {
    std::array<int, 3> channels{}; // c1, c2, c3
    std::array<int, 3> blocks{};   // n1, n2, n3
    StageStyle style = StageStyle::Fpn;
    int dilation = 3;
    int mlp_ratio = 4;
    bool lr_blocks = true;
    bool with_decoder = true;
};

StageTaps append_stage(GraphBuilder& b, int in, const StageSpec& spec,
                       const std::string& scope);

ArchGraph build_cednet(const ArchConfig& config);

// ConvNeXt classifier (used as the size baseline). depths/widths follow the
// original four-stage layout.
ArchGraph build_convnext_classifier(const std::array<int, 4>& depths,
                                    const std::array<int, 4>& widths, int num_classes,
                                    const std::string& name);
ArchGraph build_convnext_t_classifier();
ArchGraph build_convnext_s_classifier();

// ConvNeXt-S + FPN graph used by the fusion-time metric: 1x1 laterals to 256
// channels at strides 8/16/32, top-down adds, 3x3 output convs, and the two
// extra stride-64/128 pyramid convs of the detection FPN.
ArchGraph build_convnext_fpn_baseline();

// --- Validation and serialization --------------------------------------------

// Structural diagnostics (empty = valid): DAG-ness, channel/scale arithmetic,
// add-shape agreement, first-fusion annotation, output reachability.
std::vector<std::string> validate_graph(const ArchGraph& graph);

// Recomputes the first node that merges content originating at different
// scale levels; -1 when no such node exists.
int recompute_first_fusion(const ArchGraph& graph);

std::string graph_to_json(const ArchGraph& graph);
ArchGraph graph_from_json(const std::string& text);

} // namespace cednet::arch
