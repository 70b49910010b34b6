#include "cednet/analyzer.hpp"

#include <algorithm>
#include <sstream>

#include "json.hpp"

namespace cednet::analyzer {

using arch::ArchGraph;
using arch::LayerNode;
using arch::NodeKind;
using nlohmann::json;

std::vector<NodeShape> infer_shapes(const ArchGraph& graph, int input_h, int input_w) {
    if (input_h <= 0 || input_w <= 0) throw ConfigError("input size must be positive");
    std::vector<NodeShape> shapes(graph.nodes.size());
    for (const LayerNode& n : graph.nodes) {
        const auto idx = static_cast<std::size_t>(n.id);
        const auto in_shape = [&](std::size_t i) -> const NodeShape& {
            return shapes[static_cast<std::size_t>(n.inputs.at(i))];
        };
        switch (n.kind) {
            case NodeKind::Input:
                shapes[idx] = {n.out_ch, input_h, input_w};
                break;
            case NodeKind::Conv2d: {
                const NodeShape& s = in_shape(0);
                if (s.h <= 0)
                    throw ShapeError("conv " + n.name + " applied to non-spatial input");
                const std::int64_t eff = static_cast<std::int64_t>(n.dilation) * (n.kernel - 1);
                const std::int64_t h = (s.h + 2 * n.padding - eff - 1) / n.stride + 1;
                const std::int64_t w = (s.w + 2 * n.padding - eff - 1) / n.stride + 1;
                if (h <= 0 || w <= 0)
                    throw ConfigError("conv " + n.name + ": non-positive output size at input " +
                                      std::to_string(input_h) + "x" + std::to_string(input_w));
                shapes[idx] = {n.out_ch, h, w};
                break;
            }
            case NodeKind::Upsample: {
                const NodeShape& s = in_shape(0);
                shapes[idx] = {s.channels, s.h * n.scale, s.w * n.scale};
                break;
            }
            case NodeKind::GlobalAvgPool:
                shapes[idx] = {in_shape(0).channels, 0, 0};
                break;
            case NodeKind::Linear: {
                const NodeShape& s = in_shape(0);
                shapes[idx] = {n.out_ch, s.h, s.w};
                break;
            }
            case NodeKind::Add: {
                const NodeShape& a = in_shape(0);
                const NodeShape& b = in_shape(1);
                if (a.channels != b.channels || a.h != b.h || a.w != b.w)
                    throw ShapeError("add " + n.name + " merges mismatched shapes");
                shapes[idx] = a;
                break;
            }
            default:
                shapes[idx] = in_shape(0);
                break;
        }
    }
    return shapes;
}

std::int64_t count_node_params(const LayerNode& n) {
    switch (n.kind) {
        case NodeKind::Conv2d: {
            const std::int64_t w = static_cast<std::int64_t>(n.out_ch) *
                                   (n.in_ch / n.groups) * n.kernel * n.kernel;
            return w + (n.has_bias ? n.out_ch : 0);
        }
        case NodeKind::Linear:
            return static_cast<std::int64_t>(n.out_ch) * n.in_ch + n.out_ch;
        case NodeKind::LayerNorm:
            return 2 * static_cast<std::int64_t>(n.out_ch);
        default:
            return 0;
    }
}

std::int64_t count_params(const ArchGraph& graph, std::map<int, std::int64_t>* per_node) {
    std::int64_t total = 0;
    for (const LayerNode& n : graph.nodes) {
        const std::int64_t p = count_node_params(n);
        if (per_node && p > 0) (*per_node)[n.id] = p;
        total += p;
    }
    return total;
}

FlopCount count_flops(const ArchGraph& graph, int input_h, int input_w,
                      std::map<int, std::int64_t>* macs_per_node) {
    if (input_h % 32 != 0 || input_w % 32 != 0)
        throw ConfigError("count_flops: input size must be divisible by 32, got " +
                          std::to_string(input_h) + "x" + std::to_string(input_w));
    const std::vector<NodeShape> shapes = infer_shapes(graph, input_h, input_w);

    // stated per-element costs for the non-MAC ops, reported separately
    const auto elems = [&](int id) {
        const NodeShape& s = shapes[static_cast<std::size_t>(id)];
        return s.channels * std::max<std::int64_t>(s.h, 1) * std::max<std::int64_t>(s.w, 1);
    };

    FlopCount fc;
    for (const LayerNode& n : graph.nodes) {
        const NodeShape& out = shapes[static_cast<std::size_t>(n.id)];
        switch (n.kind) {
            case NodeKind::Conv2d: {
                const std::int64_t out_elems = out.channels * out.h * out.w;
                const std::int64_t m =
                    out_elems * n.kernel * n.kernel * (n.in_ch / n.groups);
                fc.macs += m;
                if (macs_per_node) (*macs_per_node)[n.id] = m;
                if (n.has_bias) fc.elementwise += out_elems;
                break;
            }
            case NodeKind::Linear: {
                const std::int64_t positions =
                    std::max<std::int64_t>(out.h, 1) * std::max<std::int64_t>(out.w, 1);
                const std::int64_t m =
                    positions * static_cast<std::int64_t>(n.in_ch) * n.out_ch;
                fc.macs += m;
                if (macs_per_node) (*macs_per_node)[n.id] = m;
                fc.elementwise += positions * n.out_ch; // bias
                break;
            }
            case NodeKind::Add:
                fc.elementwise += elems(n.id);
                break;
            case NodeKind::Gelu:
                fc.elementwise += 6 * elems(n.id);
                break;
            case NodeKind::LayerNorm:
                fc.elementwise += 8 * elems(n.id);
                break;
            case NodeKind::Upsample:
                fc.elementwise += 11 * elems(n.id);
                break;
            case NodeKind::GlobalAvgPool:
                fc.elementwise += elems(n.inputs[0]);
                break;
            default:
                break;
        }
    }
    return fc;
}

double fusion_time_ratio(const ArchGraph& graph) {
    const int fusion = graph.first_fusion_id >= 0 ? graph.first_fusion_id
                                                  : arch::recompute_first_fusion(graph);
    if (fusion < 0) throw NumericError("no fusion node");

    // ancestor closure of the fusion node's inputs (the laterals feeding the
    // merge count as pre-fusion; the add itself holds no parameters)
    std::vector<char> pre(graph.nodes.size(), 0);
    std::vector<int> stack(graph.node(fusion).inputs);
    while (!stack.empty()) {
        const int id = stack.back();
        stack.pop_back();
        if (pre[static_cast<std::size_t>(id)]) continue;
        pre[static_cast<std::size_t>(id)] = 1;
        for (int in : graph.node(id).inputs) stack.push_back(in);
    }

    std::int64_t pre_params = 0;
    std::int64_t total = 0;
    for (const LayerNode& n : graph.nodes) {
        const std::int64_t p = count_node_params(n);
        total += p;
        if (pre[static_cast<std::size_t>(n.id)]) pre_params += p;
    }
    if (total == 0) return 0.0;
    return static_cast<double>(pre_params) / static_cast<double>(total);
}

std::pair<std::int64_t, std::int64_t> receptive_field(const ArchGraph& graph, int node_id,
                                                      int input_h, int input_w) {
    if (node_id < 0 || node_id >= static_cast<int>(graph.nodes.size()))
        throw ConfigError("receptive_field: unknown node " + std::to_string(node_id));

    // rf/jump recursion over the DAG; jump = input pixels between adjacent
    // samples of the node's feature map, identical along both axes here
    struct RfState {
        std::int64_t rf = 0; // 0 marks "unreached"
        std::int64_t jump = 1;
    };
    std::vector<RfState> st(graph.nodes.size());
    for (const LayerNode& n : graph.nodes) {
        if (n.id > node_id) break;
        const auto idx = static_cast<std::size_t>(n.id);
        if (n.kind == NodeKind::Input) {
            st[idx] = {1, 1};
            continue;
        }
        RfState best;
        bool reached = false;
        for (int in : n.inputs) {
            const RfState& s = st[static_cast<std::size_t>(in)];
            if (s.rf == 0) continue;
            RfState cand = s;
            switch (n.kind) {
                case NodeKind::Conv2d:
                    cand.rf += static_cast<std::int64_t>(n.dilation) * (n.kernel - 1) * s.jump;
                    cand.jump = s.jump * n.stride;
                    break;
                case NodeKind::Upsample:
                    cand.rf += s.jump; // bilinear taps two neighbours per axis
                    if (s.jump % n.scale != 0)
                        throw NumericError("receptive_field: fractional jump at " + n.name);
                    cand.jump = s.jump / n.scale;
                    break;
                case NodeKind::GlobalAvgPool:
                    cand.rf = std::max<std::int64_t>(input_h, input_w);
                    cand.jump = 1;
                    break;
                default:
                    break; // element-wise and channel-wise ops keep rf/jump
            }
            if (!reached || cand.rf > best.rf) best = cand;
            reached = true;
        }
        if (reached) st[idx] = best;
    }
    const RfState& out = st[static_cast<std::size_t>(node_id)];
    if (out.rf == 0)
        throw NumericError("receptive_field: node " + std::to_string(node_id) +
                           " is unreachable from the input");
    return {out.rf, out.rf};
}

AnalysisReport emit_report(const ArchGraph& graph, int input_h, int input_w) {
    AnalysisReport rep;
    rep.graph_name = graph.name;
    rep.input_h = input_h;
    rep.input_w = input_w;
    rep.total_params = count_params(graph, &rep.params_by_node);

    std::map<int, std::int64_t> macs_by_node;
    const FlopCount fc = count_flops(graph, input_h, input_w, &macs_by_node);
    rep.macs = fc.macs;
    rep.elementwise_flops = fc.elementwise;

    try {
        rep.fusion_ratio = fusion_time_ratio(graph);
    } catch (const NumericError&) {
        rep.fusion_ratio.reset();
    }

    for (const auto& [name, id] : graph.outputs)
        rep.receptive_fields.emplace_back(name, receptive_field(graph, id, input_h, input_w));

    for (const LayerNode& n : graph.nodes) {
        if (n.module.empty()) continue;
        if (!rep.params_by_module.count(n.module)) rep.module_order.push_back(n.module);
        rep.params_by_module[n.module] += count_node_params(n);
        auto it = macs_by_node.find(n.id);
        rep.macs_by_module[n.module] += it == macs_by_node.end() ? 0 : it->second;
    }
    return rep;
}

std::string report_to_json(const AnalysisReport& r) {
    json j;
    j["schema_version"] = 1;
    j["graph"] = r.graph_name;
    j["input_size"] = {r.input_h, r.input_w};
    j["total_params"] = r.total_params;
    j["macs"] = r.macs;
    j["elementwise_flops"] = r.elementwise_flops;
    if (r.fusion_ratio)
        j["fusion_time_ratio"] = *r.fusion_ratio;
    else
        j["fusion_time_ratio"] = nullptr;
    json rf = json::array();
    for (const auto& [name, hw] : r.receptive_fields)
        rf.push_back({{"output", name}, {"rf", {hw.first, hw.second}}});
    j["receptive_field"] = rf;
    json per_node = json::object();
    for (const auto& [id, p] : r.params_by_node) per_node[std::to_string(id)] = p;
    j["params_by_node"] = per_node;
    j["modules"] = json::array();
    for (const std::string& m : r.module_order)
        j["modules"].push_back({{"module", m},
                                {"params", r.params_by_module.at(m)},
                                {"macs", r.macs_by_module.at(m)}});
    return j.dump(2);
}

AnalysisReport report_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("report is not valid JSON: ") + e.what());
    }
    if (j.value("schema_version", 0) != 1) throw ConfigError("schema_version must be 1");
    AnalysisReport r;
    r.graph_name = j.value("graph", "");
    r.input_h = j.at("input_size")[0].get<int>();
    r.input_w = j.at("input_size")[1].get<int>();
    r.total_params = j.at("total_params").get<std::int64_t>();
    r.macs = j.at("macs").get<std::int64_t>();
    r.elementwise_flops = j.at("elementwise_flops").get<std::int64_t>();
    if (!j.at("fusion_time_ratio").is_null())
        r.fusion_ratio = j.at("fusion_time_ratio").get<double>();
    for (const json& e : j.at("receptive_field"))
        r.receptive_fields.emplace_back(
            e.at("output").get<std::string>(),
            std::make_pair(e.at("rf")[0].get<std::int64_t>(), e.at("rf")[1].get<std::int64_t>()));
    for (const auto& [key, val] : j.at("params_by_node").items())
        r.params_by_node[std::stoi(key)] = val.get<std::int64_t>();
    for (const json& e : j.at("modules")) {
        const std::string m = e.at("module").get<std::string>();
        r.module_order.push_back(m);
        r.params_by_module[m] = e.at("params").get<std::int64_t>();
        r.macs_by_module[m] = e.at("macs").get<std::int64_t>();
    }
    return r;
}

std::string report_to_csv(const AnalysisReport& r) {
    std::ostringstream os;
    os << "module,params,macs\n";
    for (const std::string& m : r.module_order)
        os << m << ',' << r.params_by_module.at(m) << ',' << r.macs_by_module.at(m) << '\n';
    return os.str();
}

} // namespace cednet::analyzer
