#include "cednet/arch.hpp"

#include <algorithm>
#include <unordered_set>

#include "json.hpp"

namespace cednet::arch {

using nlohmann::json;

const char* kind_name(NodeKind k) {
    switch (k) {
        case NodeKind::Input: return "input";
        case NodeKind::Conv2d: return "conv2d";
        case NodeKind::LayerNorm: return "layer_norm";
        case NodeKind::Gelu: return "gelu";
        case NodeKind::Linear: return "linear";
        case NodeKind::Add: return "add";
        case NodeKind::Upsample: return "upsample";
        case NodeKind::GlobalAvgPool: return "global_avg_pool";
        case NodeKind::Output: return "output";
    }
    return "?";
}

NodeKind kind_from_name(const std::string& name) {
    for (NodeKind k : {NodeKind::Input, NodeKind::Conv2d, NodeKind::LayerNorm, NodeKind::Gelu,
                       NodeKind::Linear, NodeKind::Add, NodeKind::Upsample,
                       NodeKind::GlobalAvgPool, NodeKind::Output})
        if (name == kind_name(k)) return k;
    throw ConfigError("unknown node kind '" + name + "'");
}

const char* style_name(StageStyle s) {
    switch (s) {
        case StageStyle::Hourglass: return "hourglass";
        case StageStyle::UNet: return "unet";
        case StageStyle::Fpn: return "fpn";
    }
    return "?";
}

StageStyle style_from_name(const std::string& name) {
    for (StageStyle s : {StageStyle::Hourglass, StageStyle::UNet, StageStyle::Fpn})
        if (name == style_name(s)) return s;
    throw ConfigError("style must be one of hourglass|unet|fpn, got '" + name + "'");
}

const char* mode_name(GraphMode m) {
    return m == GraphMode::Dense ? "dense" : "classification";
}

GraphMode mode_from_name(const std::string& name) {
    if (name == "dense") return GraphMode::Dense;
    if (name == "classification") return GraphMode::Classification;
    throw ConfigError("mode must be dense|classification, got '" + name + "'");
}

ArchConfig cednet_next_t() {
    ArchConfig c;
    c.channels = {96, 192, 352, 512};
    c.blocks = {3, 2, 4, 2};
    c.stages = 3;
    return c;
}

ArchConfig cednet_next_s() {
    ArchConfig c;
    c.channels = {96, 192, 352, 512};
    c.blocks = {3, 2, 7, 2};
    c.stages = 4;
    return c;
}

ArchConfig cednet_next_b() {
    ArchConfig c;
    c.channels = {128, 256, 448, 704};
    c.blocks = {3, 2, 7, 2};
    c.stages = 4;
    return c;
}

// --- Config parsing -----------------------------------------------------------

namespace {

std::array<int, 4> parse_quad(const json& j, const char* field) {
    if (!j.is_array() || j.size() != 4)
        throw ConfigError(std::string(field) + " must have 4 entries");
    std::array<int, 4> out{};
    for (std::size_t i = 0; i < 4; ++i) {
        if (!j[i].is_number_integer() || j[i].get<int>() < 1)
            throw ConfigError(std::string(field) + " entries must be positive integers");
        out[i] = j[i].get<int>();
    }
    return out;
}

} // namespace

ArchConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    if (j.value("schema_version", 0) != 1)
        throw ConfigError("schema_version must be 1");

    ArchConfig c;
    if (!j.contains("C")) throw ConfigError("C is required");
    c.channels = parse_quad(j["C"], "C");
    if (!j.contains("B")) throw ConfigError("B is required");
    c.blocks = parse_quad(j["B"], "B");

    if (!j.contains("m") || !j["m"].is_number_integer() || j["m"].get<int>() < 1)
        throw ConfigError("m must be an integer >= 1");
    c.stages = j["m"].get<int>();

    c.style = style_from_name(j.value("style", "fpn"));
    c.dilation = j.value("r", 3);
    if (c.dilation < 1) throw ConfigError("r must be an integer >= 1");
    c.mlp_ratio = j.value("mlp_ratio", 4);
    if (c.mlp_ratio < 1) throw ConfigError("mlp_ratio must be a positive integer");
    c.mode = mode_from_name(j.value("mode", "dense"));
    c.num_classes = j.value("num_classes", 1000);
    if (c.num_classes < 2) throw ConfigError("num_classes must be >= 2");
    c.lr_blocks = j.value("lr_blocks", true);

    if (j.contains("per_stage_override") && !j["per_stage_override"].is_null()) {
        const json& o = j["per_stage_override"];
        if (!o.is_array() || static_cast<int>(o.size()) != c.stages)
            throw ConfigError("per_stage_override must list one (n1,n2,n3) tuple per stage");
        std::vector<std::array<int, 3>> tuples;
        for (const json& t : o) {
            if (!t.is_array() || t.size() != 3)
                throw ConfigError("per_stage_override entries must have 3 block counts");
            std::array<int, 3> e{};
            for (std::size_t i = 0; i < 3; ++i) {
                if (!t[i].is_number_integer() || t[i].get<int>() < 0)
                    throw ConfigError("per_stage_override block counts must be >= 0");
                e[i] = t[i].get<int>();
            }
            tuples.push_back(e);
        }
        c.per_stage_override = std::move(tuples);
    }
    return c;
}

std::string serialize_config(const ArchConfig& c) {
    json j;
    j["schema_version"] = 1;
    j["C"] = c.channels;
    j["B"] = c.blocks;
    j["m"] = c.stages;
    j["style"] = style_name(c.style);
    j["r"] = c.dilation;
    j["mlp_ratio"] = c.mlp_ratio;
    j["mode"] = mode_name(c.mode);
    j["num_classes"] = c.num_classes;
    j["lr_blocks"] = c.lr_blocks;
    if (c.per_stage_override) j["per_stage_override"] = *c.per_stage_override;
    return j.dump(2);
}

// --- GraphBuilder --------------------------------------------------------------

GraphBuilder::GraphBuilder(std::string graph_name) { graph_.name = std::move(graph_name); }

LayerNode& GraphBuilder::append(NodeKind kind, const std::string& name, std::vector<int> inputs) {
    for (int in : inputs)
        if (in < 0 || in >= static_cast<int>(graph_.nodes.size()))
            throw ConfigError("node '" + name + "' references unknown input " +
                              std::to_string(in));
    LayerNode node;
    node.id = static_cast<int>(graph_.nodes.size());
    node.kind = kind;
    node.name = name;
    node.module = module_;
    node.inputs = std::move(inputs);
    graph_.nodes.push_back(std::move(node));
    return graph_.nodes.back();
}

int GraphBuilder::channels_of(int id) const { return graph_.node(id).out_ch; }
int GraphBuilder::level_of(int id) const { return graph_.node(id).scale_level; }

int GraphBuilder::input(int channels, const std::string& name) {
    if (graph_.input_id >= 0) throw ConfigError("graph already has an input node");
    LayerNode& n = append(NodeKind::Input, name, {});
    n.in_ch = n.out_ch = channels;
    n.scale_level = 0;
    graph_.input_id = n.id;
    return n.id;
}

int GraphBuilder::conv(int in, int out_ch, int kernel, int stride, int padding, int dilation,
                       int groups, const std::string& name) {
    const int in_ch = channels_of(in);
    if (in_ch % groups != 0 || out_ch % groups != 0)
        throw ConfigError("conv '" + name + "': channels not divisible by groups");
    int level_delta = 0;
    for (int s = stride; s > 1; s /= 2) {
        if (s % 2 != 0)
            throw ConfigError("conv '" + name + "': stride must be a power of two");
        ++level_delta;
    }
    LayerNode& n = append(NodeKind::Conv2d, name, {in});
    n.in_ch = in_ch;
    n.out_ch = out_ch;
    n.kernel = kernel;
    n.stride = stride;
    n.padding = padding;
    n.dilation = dilation;
    n.groups = groups;
    n.scale_level = graph_.node(in).scale_level + level_delta;
    return n.id;
}

int GraphBuilder::layer_norm(int in, const std::string& name) {
    LayerNode& n = append(NodeKind::LayerNorm, name, {in});
    n.in_ch = n.out_ch = channels_of(in);
    n.scale_level = graph_.node(in).scale_level;
    return n.id;
}

int GraphBuilder::gelu(int in, const std::string& name) {
    LayerNode& n = append(NodeKind::Gelu, name, {in});
    n.in_ch = n.out_ch = channels_of(in);
    n.scale_level = graph_.node(in).scale_level;
    return n.id;
}

int GraphBuilder::linear(int in, int out_features, const std::string& name) {
    LayerNode& n = append(NodeKind::Linear, name, {in});
    n.in_ch = channels_of(in);
    n.out_ch = out_features;
    n.scale_level = graph_.node(in).scale_level;
    return n.id;
}

int GraphBuilder::add(int a, int b, const std::string& name) {
    if (channels_of(a) != channels_of(b))
        throw ShapeError("add '" + name + "': channel mismatch " +
                         std::to_string(channels_of(a)) + " vs " +
                         std::to_string(channels_of(b)));
    if (level_of(a) != level_of(b))
        throw ShapeError("add '" + name + "': scale mismatch /" +
                         std::to_string(1 << level_of(a)) + " vs /" +
                         std::to_string(1 << level_of(b)));
    LayerNode& n = append(NodeKind::Add, name, {a, b});
    n.in_ch = n.out_ch = channels_of(a);
    n.scale_level = level_of(a);
    return n.id;
}

int GraphBuilder::upsample(int in, int scale, const std::string& name) {
    if (scale < 2) throw ConfigError("upsample '" + name + "': scale must be >= 2");
    int level_delta = 0;
    for (int s = scale; s > 1; s /= 2) {
        if (s % 2 != 0)
            throw ConfigError("upsample '" + name + "': scale must be a power of two");
        ++level_delta;
    }
    LayerNode& n = append(NodeKind::Upsample, name, {in});
    n.in_ch = n.out_ch = channels_of(in);
    n.scale = scale;
    n.scale_level = graph_.node(in).scale_level - level_delta;
    return n.id;
}

int GraphBuilder::global_avg_pool(int in, const std::string& name) {
    LayerNode& n = append(NodeKind::GlobalAvgPool, name, {in});
    n.in_ch = n.out_ch = channels_of(in);
    n.scale_level = -1;
    return n.id;
}

int GraphBuilder::output(int in, const std::string& name) {
    LayerNode& n = append(NodeKind::Output, name, {in});
    n.in_ch = n.out_ch = channels_of(in);
    n.scale_level = graph_.node(in).scale_level;
    return n.id;
}

ArchGraph GraphBuilder::finish(std::vector<std::pair<std::string, int>> outputs) {
    graph_.outputs = std::move(outputs);
    graph_.first_fusion_id = recompute_first_fusion(graph_);
    return std::move(graph_);
}

// --- Block and stage builders ---------------------------------------------------

int append_ced_block(GraphBuilder& b, int in, int channels, int mlp_ratio,
                     const std::string& scope) {
    const int dw = b.conv(in, channels, 7, 1, 3, 1, channels, scope + ".dw");
    const int ln = b.layer_norm(dw, scope + ".norm");
    const int fc1 = b.linear(ln, mlp_ratio * channels, scope + ".fc1");
    const int act = b.gelu(fc1, scope + ".gelu");
    const int fc2 = b.linear(act, channels, scope + ".fc2");
    return b.add(in, fc2, scope + ".add");
}

int append_lr_ced_block(GraphBuilder& b, int in, int channels, int dilation, int mlp_ratio,
                        const std::string& scope) {
    const int dil = b.conv(in, channels, 7, 1, 3 * dilation, dilation, channels,
                           scope + ".dilated");
    const int merged = b.add(in, dil, scope + ".dilated_add");
    return append_ced_block(b, merged, channels, mlp_ratio, scope);
}

int append_stem(GraphBuilder& b, int in, int c0, int c1, int n0, int mlp_ratio) {
    b.set_module("stem");
    int cur = b.conv(in, c0, 3, 2, 1, 1, 1, "stem.conv1");
    cur = b.layer_norm(cur, "stem.norm1");
    cur = b.gelu(cur, "stem.gelu1");
    cur = b.conv(cur, c0, 3, 2, 1, 1, 1, "stem.conv2");
    cur = b.layer_norm(cur, "stem.norm2");
    cur = b.gelu(cur, "stem.gelu2");
    for (int i = 0; i < n0; ++i)
        cur = append_ced_block(b, cur, c0, mlp_ratio, "stem.block" + std::to_string(i));
    cur = b.layer_norm(cur, "stem.down.norm");
    return b.conv(cur, c1, 2, 2, 0, 1, 1, "stem.down.conv");
}

StageTaps append_stage(GraphBuilder& b, int in, const StageSpec& spec,
                       const std::string& scope) {
    const int c1 = spec.channels[0], c2 = spec.channels[1], c3 = spec.channels[2];

    // encoder
    int cur = in;
    for (int i = 0; i < spec.blocks[0]; ++i)
        cur = append_ced_block(b, cur, c1, spec.mlp_ratio,
                               scope + ".enc8.block" + std::to_string(i));
    const int e8 = cur;
    cur = b.layer_norm(cur, scope + ".down16.norm");
    cur = b.conv(cur, c2, 2, 2, 0, 1, 1, scope + ".down16.conv");
    for (int i = 0; i < spec.blocks[1]; ++i)
        cur = append_ced_block(b, cur, c2, spec.mlp_ratio,
                               scope + ".enc16.block" + std::to_string(i));
    const int e16 = cur;
    cur = b.layer_norm(cur, scope + ".down32.norm");
    cur = b.conv(cur, c3, 2, 2, 0, 1, 1, scope + ".down32.conv");
    for (int i = 0; i < spec.blocks[2]; ++i) {
        const std::string name = scope + ".enc32.block" + std::to_string(i);
        cur = spec.lr_blocks
                  ? append_lr_ced_block(b, cur, c3, spec.dilation, spec.mlp_ratio, name)
                  : append_ced_block(b, cur, c3, spec.mlp_ratio, name);
    }
    const int e32 = cur;

    StageTaps taps;
    taps.e32 = e32;
    if (!spec.with_decoder) return taps;

    // decoder: merge top-down into the stride-8 map
    taps.p32 = e32;
    const int lat32 = b.conv(e32, c2, 1, 1, 0, 1, 1, scope + ".dec.lat32");
    const int up32 = b.upsample(lat32, 2, scope + ".dec.up32");
    int skip16 = e16;
    if (spec.style == StageStyle::Hourglass)
        skip16 = append_ced_block(b, e16, c2, spec.mlp_ratio, scope + ".dec.skip16");
    int p16 = b.add(skip16, up32, scope + ".dec.merge16");
    if (spec.style == StageStyle::UNet)
        p16 = append_ced_block(b, p16, c2, spec.mlp_ratio, scope + ".dec.block16");
    taps.p16 = p16;

    const int lat16 = b.conv(p16, c1, 1, 1, 0, 1, 1, scope + ".dec.lat16");
    const int up16 = b.upsample(lat16, 2, scope + ".dec.up16");
    int skip8 = e8;
    if (spec.style == StageStyle::Hourglass)
        skip8 = append_ced_block(b, e8, c1, spec.mlp_ratio, scope + ".dec.skip8");
    int p8 = b.add(skip8, up16, scope + ".dec.merge8");
    if (spec.style == StageStyle::UNet)
        p8 = append_ced_block(b, p8, c1, spec.mlp_ratio, scope + ".dec.block8");
    taps.p8 = p8;
    return taps;
}

ArchGraph build_cednet(const ArchConfig& config) {
    for (int v : config.channels)
        if (v < 1) throw ConfigError("C entries must be positive");
    for (int v : config.blocks)
        if (v < 1) throw ConfigError("B entries must be positive");
    if (config.per_stage_override &&
        static_cast<int>(config.per_stage_override->size()) != config.stages)
        throw ConfigError("per_stage_override must list one tuple per stage");

    std::string name = "cednet-" + std::string(style_name(config.style)) + "-m" +
                       std::to_string(config.stages);
    GraphBuilder b(name);
    const int in = b.input(3);
    int cur = append_stem(b, in, config.channels[0], config.channels[1], config.blocks[0],
                          config.mlp_ratio);

    StageTaps last;
    for (int s = 0; s < config.stages; ++s) {
        StageSpec spec;
        spec.channels = {config.channels[1], config.channels[2], config.channels[3]};
        spec.blocks = config.per_stage_override
                          ? (*config.per_stage_override)[static_cast<std::size_t>(s)]
                          : std::array<int, 3>{config.blocks[1], config.blocks[2],
                                               config.blocks[3]};
        spec.style = config.style;
        spec.dilation = config.dilation;
        spec.mlp_ratio = config.mlp_ratio;
        spec.lr_blocks = config.lr_blocks;
        // classification removes the last decoder and reads e32
        spec.with_decoder =
            config.mode == GraphMode::Dense || s + 1 < config.stages;
        b.set_module("stage_" + std::to_string(s + 1));
        last = append_stage(b, cur, spec, "stage" + std::to_string(s + 1));
        if (spec.with_decoder) cur = last.p8;
    }

    std::vector<std::pair<std::string, int>> outputs;
    if (config.mode == GraphMode::Dense) {
        outputs.emplace_back("p8", b.output(last.p8, "p8"));
        outputs.emplace_back("p16", b.output(last.p16, "p16"));
        outputs.emplace_back("p32", b.output(last.p32, "p32"));
    } else {
        b.set_module("head");
        int head = b.global_avg_pool(last.e32, "head.pool");
        head = b.layer_norm(head, "head.norm");
        head = b.linear(head, config.num_classes, "head.fc");
        outputs.emplace_back("logits", b.output(head, "logits"));
    }
    return b.finish(std::move(outputs));
}

// --- ConvNeXt baselines ----------------------------------------------------------

namespace {

// Shared ConvNeXt trunk: patchify stem + four block stages with 2x2
// downsample transitions. Returns the per-stage output nodes.
std::array<int, 4> append_convnext_trunk(GraphBuilder& b, int in,
                                         const std::array<int, 4>& depths,
                                         const std::array<int, 4>& widths) {
    b.set_module("stem");
    int cur = b.conv(in, widths[0], 4, 4, 0, 1, 1, "stem.patchify");
    cur = b.layer_norm(cur, "stem.norm");
    std::array<int, 4> stage_out{};
    for (int s = 0; s < 4; ++s) {
        b.set_module("stage_" + std::to_string(s + 1));
        const std::string scope = "stage" + std::to_string(s + 1);
        if (s > 0) {
            cur = b.layer_norm(cur, scope + ".down.norm");
            cur = b.conv(cur, widths[static_cast<std::size_t>(s)], 2, 2, 0, 1, 1,
                         scope + ".down.conv");
        }
        for (int i = 0; i < depths[static_cast<std::size_t>(s)]; ++i)
            cur = append_ced_block(b, cur, widths[static_cast<std::size_t>(s)], 4,
                                   scope + ".block" + std::to_string(i));
        stage_out[static_cast<std::size_t>(s)] = cur;
    }
    return stage_out;
}

} // namespace

ArchGraph build_convnext_classifier(const std::array<int, 4>& depths,
                                    const std::array<int, 4>& widths, int num_classes,
                                    const std::string& name) {
    GraphBuilder b(name);
    const int in = b.input(3);
    const std::array<int, 4> stages = append_convnext_trunk(b, in, depths, widths);
    b.set_module("head");
    int head = b.global_avg_pool(stages[3], "head.pool");
    head = b.layer_norm(head, "head.norm");
    head = b.linear(head, num_classes, "head.fc");
    const int logits = b.output(head, "logits");
    return b.finish({{"logits", logits}});
}

ArchGraph build_convnext_t_classifier() {
    return build_convnext_classifier({3, 3, 9, 3}, {96, 192, 384, 768}, 1000, "convnext-t");
}

ArchGraph build_convnext_s_classifier() {
    return build_convnext_classifier({3, 3, 27, 3}, {96, 192, 384, 768}, 1000, "convnext-s");
}

ArchGraph build_convnext_fpn_baseline() {
    GraphBuilder b("convnext-s-fpn");
    const int in = b.input(3);
    const std::array<int, 4> stages =
        append_convnext_trunk(b, in, {3, 3, 27, 3}, {96, 192, 384, 768});

    b.set_module("fpn");
    const int width = 256;
    const int l8 = b.conv(stages[1], width, 1, 1, 0, 1, 1, "fpn.lateral8");
    const int l16 = b.conv(stages[2], width, 1, 1, 0, 1, 1, "fpn.lateral16");
    const int l32 = b.conv(stages[3], width, 1, 1, 0, 1, 1, "fpn.lateral32");
    const int m16 = b.add(l16, b.upsample(l32, 2, "fpn.up32"), "fpn.merge16");
    const int m8 = b.add(l8, b.upsample(m16, 2, "fpn.up16"), "fpn.merge8");
    const int o32 = b.conv(l32, width, 3, 1, 1, 1, 1, "fpn.out32");
    const int o16 = b.conv(m16, width, 3, 1, 1, 1, 1, "fpn.out16");
    const int o8 = b.conv(m8, width, 3, 1, 1, 1, 1, "fpn.out8");
    // stride-64/128 levels of the detection pyramid
    const int p6 = b.conv(stages[3], width, 3, 2, 1, 1, 1, "fpn.p6");
    const int p7 = b.conv(b.gelu(p6, "fpn.p6_act"), width, 3, 2, 1, 1, 1, "fpn.p7");

    return b.finish({{"p8", b.output(o8, "p8")},
                     {"p16", b.output(o16, "p16")},
                     {"p32", b.output(o32, "p32")},
                     {"p64", b.output(p6, "p64")},
                     {"p128", b.output(p7, "p128")}});
}

// --- Validation --------------------------------------------------------------------

namespace {

// Scale level at which a node's content originated: stride>1 convs create
// new coarse content, upsampling carries its source's origin along, and an
// add of mixed origins is a fusion point.
struct OriginInfo {
    std::vector<int> origin;
    int first_fusion = -1;
};

OriginInfo compute_origins(const ArchGraph& g) {
    OriginInfo info;
    info.origin.assign(g.nodes.size(), 0);
    for (const LayerNode& n : g.nodes) {
        const auto idx = static_cast<std::size_t>(n.id);
        // nodes with forward references are reported by validate_graph; skip
        bool ok = true;
        for (int i : n.inputs)
            if (i < 0 || i >= n.id) ok = false;
        if (!ok) continue;
        switch (n.kind) {
            case NodeKind::Input:
                info.origin[idx] = n.scale_level;
                break;
            case NodeKind::Conv2d:
                info.origin[idx] = n.stride > 1
                                       ? n.scale_level
                                       : info.origin[static_cast<std::size_t>(n.inputs[0])];
                break;
            case NodeKind::Add: {
                const int a = info.origin[static_cast<std::size_t>(n.inputs[0])];
                const int bo = info.origin[static_cast<std::size_t>(n.inputs[1])];
                if (a != bo) {
                    if (info.first_fusion < 0) info.first_fusion = n.id;
                    info.origin[idx] = n.scale_level;
                } else {
                    info.origin[idx] = a;
                }
                break;
            }
            default:
                info.origin[idx] =
                    n.inputs.empty() ? n.scale_level
                                     : info.origin[static_cast<std::size_t>(n.inputs[0])];
                break;
        }
    }
    return info;
}

} // namespace

int recompute_first_fusion(const ArchGraph& graph) {
    return compute_origins(graph).first_fusion;
}

std::vector<std::string> validate_graph(const ArchGraph& graph) {
    std::vector<std::string> diags;
    const int n = static_cast<int>(graph.nodes.size());

    for (int i = 0; i < n; ++i)
        if (graph.nodes[static_cast<std::size_t>(i)].id != i)
            diags.push_back("node at index " + std::to_string(i) + " has id " +
                            std::to_string(graph.nodes[static_cast<std::size_t>(i)].id));

    for (const LayerNode& node : graph.nodes)
        for (int in : node.inputs)
            if (in < 0 || in >= n)
                diags.push_back("node " + node.name + " references unknown input " +
                                std::to_string(in));

    // cycle check (ids may be in arbitrary order in hand-edited graphs)
    {
        std::vector<int> color(static_cast<std::size_t>(n), 0);
        std::vector<int> stack;
        for (int start = 0; start < n; ++start) {
            if (color[static_cast<std::size_t>(start)] != 0) continue;
            stack.push_back(start);
            while (!stack.empty()) {
                const int id = stack.back();
                auto& c = color[static_cast<std::size_t>(id)];
                if (c == 0) {
                    c = 1;
                    for (int in : graph.nodes[static_cast<std::size_t>(id)].inputs) {
                        if (in < 0 || in >= n) continue;
                        if (color[static_cast<std::size_t>(in)] == 1) {
                            diags.push_back("cycle through node " +
                                            graph.nodes[static_cast<std::size_t>(in)].name);
                        } else if (color[static_cast<std::size_t>(in)] == 0) {
                            stack.push_back(in);
                        }
                    }
                } else {
                    c = 2;
                    stack.pop_back();
                }
            }
        }
        if (!diags.empty() &&
            diags.back().rfind("cycle", 0) == 0) {
            // graph with cycles: the arithmetic checks below assume a DAG
            return diags;
        }
    }

    for (const LayerNode& node : graph.nodes) {
        bool forward_ref = false;
        for (int in : node.inputs)
            if (in >= node.id) forward_ref = true;
        if (forward_ref) {
            diags.push_back("node " + node.name + " is not in topological id order");
            continue;
        }
        const auto in_node = [&](std::size_t i) -> const LayerNode& {
            return graph.nodes[static_cast<std::size_t>(node.inputs[i])];
        };
        switch (node.kind) {
            case NodeKind::Input:
                if (!node.inputs.empty()) diags.push_back("input node has inputs");
                break;
            case NodeKind::Conv2d:
                if (node.inputs.size() != 1 || in_node(0).out_ch != node.in_ch)
                    diags.push_back("conv " + node.name + " input channels inconsistent");
                break;
            case NodeKind::Linear:
            case NodeKind::LayerNorm:
            case NodeKind::Gelu:
            case NodeKind::Upsample:
            case NodeKind::GlobalAvgPool:
            case NodeKind::Output:
                if (node.inputs.size() != 1)
                    diags.push_back("node " + node.name + " must have exactly one input");
                else if (in_node(0).out_ch != node.in_ch)
                    diags.push_back("node " + node.name + " input channels inconsistent");
                break;
            case NodeKind::Add:
                if (node.inputs.size() != 2)
                    diags.push_back("add " + node.name + " must have two inputs");
                else if (in_node(0).out_ch != in_node(1).out_ch ||
                         in_node(0).scale_level != in_node(1).scale_level)
                    diags.push_back("add " + node.name + " merges incompatible shapes");
                break;
        }
    }

    if (graph.input_id < 0 || graph.input_id >= n) {
        diags.push_back("graph has no input node");
    } else {
        // every output must be reachable from the input
        std::vector<char> reaches_input(static_cast<std::size_t>(n), 0);
        for (const LayerNode& node : graph.nodes) {
            if (node.id == graph.input_id) {
                reaches_input[static_cast<std::size_t>(node.id)] = 1;
                continue;
            }
            for (int in : node.inputs)
                if (in >= 0 && in < node.id && reaches_input[static_cast<std::size_t>(in)])
                    reaches_input[static_cast<std::size_t>(node.id)] = 1;
        }
        for (const auto& [name, id] : graph.outputs)
            if (id < 0 || id >= n || !reaches_input[static_cast<std::size_t>(id)])
                diags.push_back("output " + name + " is not reachable from the input");
    }

    if (recompute_first_fusion(graph) != graph.first_fusion_id)
        diags.push_back("stored first-fusion annotation (" +
                        std::to_string(graph.first_fusion_id) +
                        ") disagrees with recomputed value (" +
                        std::to_string(recompute_first_fusion(graph)) + ")");

    return diags;
}

// --- Graph JSON ---------------------------------------------------------------------

std::string graph_to_json(const ArchGraph& g) {
    json j;
    j["schema_version"] = 1;
    j["name"] = g.name;
    j["input"] = g.input_id;
    j["first_fusion"] = g.first_fusion_id;
    json outs = json::array();
    for (const auto& [name, id] : g.outputs) outs.push_back({{"name", name}, {"node", id}});
    j["outputs"] = outs;
    json nodes = json::array();
    for (const LayerNode& n : g.nodes) {
        json jn;
        jn["id"] = n.id;
        jn["kind"] = kind_name(n.kind);
        jn["name"] = n.name;
        jn["module"] = n.module;
        jn["inputs"] = n.inputs;
        jn["in_ch"] = n.in_ch;
        jn["out_ch"] = n.out_ch;
        jn["scale_level"] = n.scale_level;
        if (n.kind == NodeKind::Conv2d) {
            jn["kernel"] = n.kernel;
            jn["stride"] = n.stride;
            jn["padding"] = n.padding;
            jn["dilation"] = n.dilation;
            jn["groups"] = n.groups;
            jn["bias"] = n.has_bias;
        }
        if (n.kind == NodeKind::Upsample) jn["scale"] = n.scale;
        nodes.push_back(std::move(jn));
    }
    j["nodes"] = std::move(nodes);
    return j.dump(2);
}

ArchGraph graph_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("graph is not valid JSON: ") + e.what());
    }
    if (j.value("schema_version", 0) != 1) throw ConfigError("schema_version must be 1");
    ArchGraph g;
    g.name = j.value("name", "");
    g.input_id = j.value("input", -1);
    g.first_fusion_id = j.value("first_fusion", -1);
    for (const json& o : j.at("outputs"))
        g.outputs.emplace_back(o.at("name").get<std::string>(), o.at("node").get<int>());
    for (const json& jn : j.at("nodes")) {
        LayerNode n;
        n.id = jn.at("id").get<int>();
        n.kind = kind_from_name(jn.at("kind").get<std::string>());
        n.name = jn.value("name", "");
        n.module = jn.value("module", "");
        n.inputs = jn.at("inputs").get<std::vector<int>>();
        n.in_ch = jn.value("in_ch", 0);
        n.out_ch = jn.value("out_ch", 0);
        n.scale_level = jn.value("scale_level", 0);
        n.kernel = jn.value("kernel", 0);
        n.stride = jn.value("stride", 1);
        n.padding = jn.value("padding", 0);
        n.dilation = jn.value("dilation", 1);
        n.groups = jn.value("groups", 1);
        n.has_bias = jn.value("bias", true);
        n.scale = jn.value("scale", 0);
        g.nodes.push_back(std::move(n));
    }
    return g;
}

} // namespace cednet::arch
