#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cednet/arch.hpp"
#include "cednet/tensor.hpp"

// Runs ArchGraphs on concrete tensors. Owns parameter storage,
// initialization, and the checkpoint container.

namespace cednet::exec {

// One named learnable tensor; entries are ordered by (node id, slot) so
// initialization and checkpoint layout are deterministic.
template <typename T>
struct ParamEntry {
    int node_id = -1;
    std::string name; // "<node name>.<slot>", e.g. "stem.conv1.weight"
    Tensor<T> tensor;
};

template <typename T>
struct ParamStore {
    std::uint64_t seed = 0;
    std::vector<ParamEntry<T>> entries;
    std::map<std::string, std::size_t> by_name;
    std::map<int, std::vector<std::size_t>> by_node;

    Tensor<T>& at(const std::string& name);
    const Tensor<T>& at(const std::string& name) const;
    bool contains(const std::string& name) const { return by_name.count(name) > 0; }

    void add(int node_id, const std::string& name, Tensor<T> tensor);
    void set_requires_grad(bool on);
    void zero_grads();
};

// Truncated-normal(0.02) conv/linear weights, zero biases, unit/zero layer
// norm affine. Deterministic for a given seed.
template <typename T>
ParamStore<T> init_params(const arch::ArchGraph& graph, std::uint64_t seed);

// Forward pass; returns the graph's named outputs. Records on the active
// Tape (if any), so backward works through whole graphs.
template <typename T>
std::map<std::string, Tensor<T>> forward(const arch::ArchGraph& graph,
                                         const ParamStore<T>& params,
                                         const Tensor<T>& input);

// Checkpoint container: magic, JSON manifest (names, shapes, offsets,
// per-blob CRC32), then one tensor container per parameter. Round-trips
// bit-exactly; load verifies checksums and the container version.
template <typename T>
void save_checkpoint(const ParamStore<T>& store, const std::string& path);

template <typename T>
ParamStore<T> load_checkpoint(const std::string& path);

} // namespace cednet::exec
