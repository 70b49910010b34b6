#include "cednet/executor.hpp"

#include <fstream>
#include <sstream>

#include <zlib.h>

#include "json.hpp"

namespace cednet::exec {

using arch::ArchGraph;
using arch::LayerNode;
using arch::NodeKind;
using nlohmann::json;

template <typename T>
Tensor<T>& ParamStore<T>::at(const std::string& name) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ConfigError("ParamStore: no parameter named " + name);
    return entries[it->second].tensor;
}

template <typename T>
const Tensor<T>& ParamStore<T>::at(const std::string& name) const {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ConfigError("ParamStore: no parameter named " + name);
    return entries[it->second].tensor;
}

template <typename T>
void ParamStore<T>::add(int node_id, const std::string& name, Tensor<T> tensor) {
    if (by_name.count(name)) throw ConfigError("ParamStore: duplicate parameter " + name);
    entries.push_back({node_id, name, std::move(tensor)});
    by_name[name] = entries.size() - 1;
    by_node[node_id].push_back(entries.size() - 1);
}

template <typename T>
void ParamStore<T>::set_requires_grad(bool on) {
    for (auto& e : entries) e.tensor.set_requires_grad(on);
}

template <typename T>
void ParamStore<T>::zero_grads() {
    for (auto& e : entries) e.tensor.zero_grad();
}

namespace {

template <typename T>
Tensor<T> trunc_normal_tensor(Shape shape, double sigma, Rng& rng) {
    Tensor<T> t = Tensor<T>::zeros(std::move(shape));
    T* p = t.data();
    for (std::int64_t i = 0; i < t.numel(); ++i)
        p[i] = static_cast<T>(rng.truncated_normal(sigma));
    return t;
}

} // namespace

template <typename T>
ParamStore<T> init_params(const ArchGraph& graph, std::uint64_t seed) {
    constexpr double kSigma = 0.02;
    ParamStore<T> store;
    store.seed = seed;
    Rng rng(seed);
    for (const LayerNode& n : graph.nodes) {
        switch (n.kind) {
            case NodeKind::Conv2d: {
                Shape w{n.out_ch, n.in_ch / n.groups, n.kernel, n.kernel};
                store.add(n.id, n.name + ".weight", trunc_normal_tensor<T>(std::move(w), kSigma, rng));
                if (n.has_bias)
                    store.add(n.id, n.name + ".bias", Tensor<T>::zeros({n.out_ch}));
                break;
            }
            case NodeKind::Linear:
                store.add(n.id, n.name + ".weight",
                          trunc_normal_tensor<T>({n.out_ch, n.in_ch}, kSigma, rng));
                store.add(n.id, n.name + ".bias", Tensor<T>::zeros({n.out_ch}));
                break;
            case NodeKind::LayerNorm:
                store.add(n.id, n.name + ".gamma", Tensor<T>::full({n.out_ch}, T(1)));
                store.add(n.id, n.name + ".beta", Tensor<T>::zeros({n.out_ch}));
                break;
            default:
                break;
        }
    }
    return store;
}

template <typename T>
std::map<std::string, Tensor<T>> forward(const ArchGraph& graph, const ParamStore<T>& params,
                                         const Tensor<T>& input) {
    if (graph.input_id < 0) throw ConfigError("forward: graph has no input node");
    if (input.rank() != 4)
        throw ShapeError("forward: input must be rank 4, got " + shape_to_string(input.shape()));
    const LayerNode& in_node = graph.node(graph.input_id);
    if (input.dim(1) != in_node.out_ch)
        throw ShapeError("forward: graph expects " + std::to_string(in_node.out_ch) +
                         " input channels, got " + std::to_string(input.dim(1)));
    if (input.dim(2) % 32 != 0 || input.dim(3) % 32 != 0)
        throw ShapeError("forward: input spatial dims must be divisible by 32, got " +
                         shape_to_string(input.shape()));

    std::vector<Tensor<T>> vals(graph.nodes.size());
    for (const LayerNode& n : graph.nodes) {
        const auto idx = static_cast<std::size_t>(n.id);
        const auto in = [&](std::size_t i) -> const Tensor<T>& {
            return vals[static_cast<std::size_t>(n.inputs.at(i))];
        };
        switch (n.kind) {
            case NodeKind::Input:
                vals[idx] = input;
                break;
            case NodeKind::Conv2d: {
                const Tensor<T>& w = params.at(n.name + ".weight");
                const Tensor<T>* b = n.has_bias ? &params.at(n.name + ".bias") : nullptr;
                vals[idx] = conv2d(in(0), w, b, n.stride, n.padding, n.dilation, n.groups);
                break;
            }
            case NodeKind::LayerNorm:
                vals[idx] = layer_norm(in(0), params.at(n.name + ".gamma"),
                                       params.at(n.name + ".beta"));
                break;
            case NodeKind::Gelu:
                vals[idx] = gelu(in(0));
                break;
            case NodeKind::Linear:
                vals[idx] = linear(in(0), params.at(n.name + ".weight"),
                                   params.at(n.name + ".bias"));
                break;
            case NodeKind::Add:
                vals[idx] = add(in(0), in(1));
                break;
            case NodeKind::Upsample:
                vals[idx] = bilinear_upsample(in(0), n.scale);
                break;
            case NodeKind::GlobalAvgPool:
                vals[idx] = global_avg_pool(in(0));
                break;
            case NodeKind::Output:
                vals[idx] = in(0);
                break;
        }
    }
    std::map<std::string, Tensor<T>> out;
    for (const auto& [name, id] : graph.outputs) out[name] = vals[static_cast<std::size_t>(id)];
    return out;
}

// --- Checkpoints --------------------------------------------------------------

namespace {

constexpr char kCkptMagic[8] = {'C', 'E', 'D', 'C', 'K', 'P', 'T', '\n'};

template <typename T>
const char* dtype_name() {
    return sizeof(T) == 4 ? "f32" : "f64";
}

std::uint32_t crc_of(const std::string& bytes) {
    return static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()),
                static_cast<uInt>(bytes.size())));
}

} // namespace

template <typename T>
void save_checkpoint(const ParamStore<T>& store, const std::string& path) {
    json manifest;
    manifest["version"] = 1;
    manifest["dtype"] = dtype_name<T>();
    manifest["seed"] = store.seed;

    std::string blobs;
    json tensors = json::array();
    for (const auto& e : store.entries) {
        std::ostringstream os(std::ios::binary);
        export_tensor(os, e.tensor);
        const std::string blob = os.str();
        json t;
        t["name"] = e.name;
        t["node"] = e.node_id;
        t["shape"] = e.tensor.shape();
        t["offset"] = blobs.size();
        t["nbytes"] = blob.size();
        t["crc32"] = crc_of(blob);
        tensors.push_back(std::move(t));
        blobs += blob;
    }
    manifest["tensors"] = std::move(tensors);

    const std::string ms = manifest.dump();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("save_checkpoint: cannot open " + path);
    f.write(kCkptMagic, sizeof(kCkptMagic));
    const std::uint64_t mlen = ms.size();
    f.write(reinterpret_cast<const char*>(&mlen), sizeof(mlen));
    f.write(ms.data(), static_cast<std::streamsize>(ms.size()));
    f.write(blobs.data(), static_cast<std::streamsize>(blobs.size()));
    if (!f) throw IoError("save_checkpoint: write failed for " + path);
}

template <typename T>
ParamStore<T> load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("load_checkpoint: cannot open " + path);
    char magic[sizeof(kCkptMagic)];
    f.read(magic, sizeof(magic));
    if (!f || std::memcmp(magic, kCkptMagic, sizeof(magic)) != 0)
        throw IoError("load_checkpoint: not a checkpoint file");
    std::uint64_t mlen = 0;
    f.read(reinterpret_cast<char*>(&mlen), sizeof(mlen));
    if (!f) throw IoError("load_checkpoint: truncated manifest length");
    std::string ms(mlen, '\0');
    f.read(ms.data(), static_cast<std::streamsize>(mlen));
    if (!f) throw IoError("load_checkpoint: truncated manifest");
    json manifest;
    try {
        manifest = json::parse(ms);
    } catch (const json::exception& e) {
        throw IoError(std::string("load_checkpoint: bad manifest: ") + e.what());
    }
    if (manifest.value("version", 0) != 1)
        throw IoError("load_checkpoint: unsupported checkpoint version");
    if (manifest.value("dtype", "") != dtype_name<T>())
        throw IoError("load_checkpoint: dtype mismatch, checkpoint holds " +
                      manifest.value("dtype", std::string("?")));

    std::string blobs((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    ParamStore<T> store;
    store.seed = manifest.value("seed", std::uint64_t{0});
    for (const json& t : manifest.at("tensors")) {
        const std::string name = t.at("name").get<std::string>();
        const std::size_t offset = t.at("offset").get<std::size_t>();
        const std::size_t nbytes = t.at("nbytes").get<std::size_t>();
        if (offset + nbytes > blobs.size())
            throw IoError("load_checkpoint: truncated blob for " + name);
        const std::string blob = blobs.substr(offset, nbytes);
        if (crc_of(blob) != t.at("crc32").get<std::uint32_t>())
            throw IoError("load_checkpoint: checksum mismatch for " + name);
        std::istringstream is(blob, std::ios::binary);
        store.add(t.at("node").get<int>(), name, import_tensor<T>(is));
    }
    return store;
}

#define CEDNET_INSTANTIATE_EXEC(T)                                                           \
    template struct ParamStore<T>;                                                           \
    template ParamStore<T> init_params<T>(const arch::ArchGraph&, std::uint64_t);            \
    template std::map<std::string, Tensor<T>> forward<T>(                                    \
        const arch::ArchGraph&, const ParamStore<T>&, const Tensor<T>&);                     \
    template void save_checkpoint<T>(const ParamStore<T>&, const std::string&);              \
    template ParamStore<T> load_checkpoint<T>(const std::string&);

CEDNET_INSTANTIATE_EXEC(float)
CEDNET_INSTANTIATE_EXEC(double)

#undef CEDNET_INSTANTIATE_EXEC

} // namespace cednet::exec
