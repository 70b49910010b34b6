#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cednet/arch.hpp"
#include "cednet/executor.hpp"
#include "cednet/tensor.hpp"

// Toy-scale verification ground: a synthetic shapes segmentation task, a
// small training loop, metrics, and input-gradient (saliency) analysis.

namespace cednet::lab {

// Classes: 0 background, 1 circle, 2 rectangle, 3 triangle.
constexpr int kNumClasses = 4;

struct DatasetSpec {
    int h = 64;
    int w = 64;
    int min_shapes = 2;
    int max_shapes = 4;
    double min_size = 8.0; // half-extent in pixels
    double max_size = 18.0;
    double noise = 0.03;

    bool operator==(const DatasetSpec&) const = default;
};

DatasetSpec parse_dataset_spec(const std::string& text);
std::string serialize_dataset_spec(const DatasetSpec& spec);

struct SyntheticScene {
    std::uint64_t seed = 0;
    int h = 0;
    int w = 0;
    std::vector<float> image;    // 3*h*w, values in [0, 1]
    std::vector<int> mask;       // h*w class labels
    std::vector<int> shape_list; // classes drawn, in paint order
};

// Deterministic per seed. Shapes are anti-aliased in the image (supersampled
// coverage) and hard-labeled in the mask (pixel-center test).
SyntheticScene generate_scene(std::uint64_t seed, const DatasetSpec& spec);

// Batch of scenes as one (n, 3, h, w) tensor plus flattened labels.
template <typename T>
Tensor<T> scenes_to_tensor(const std::vector<SyntheticScene>& scenes);
std::vector<int> scenes_to_labels(const std::vector<SyntheticScene>& scenes);

// Minimal dense head: per-level 1x1 conv to a common width, bilinear
// upsample to stride 8, sum, 1x1 conv to classes, upsample x8.
template <typename T>
struct SegHead {
    int width = 32;
    int num_classes = kNumClasses;
    Tensor<T> lat8_w, lat8_b;
    Tensor<T> lat16_w, lat16_b;
    Tensor<T> lat32_w, lat32_b;
    Tensor<T> cls_w, cls_b;

    static SegHead init(int c1, int c2, int c3, int width, int num_classes, Rng& rng);

    Tensor<T> forward(const Tensor<T>& p8, const Tensor<T>& p16, const Tensor<T>& p32) const;

    // (name, tensor) pairs, stable order; names carry the "seghead." prefix.
    std::vector<std::pair<std::string, Tensor<T>>> params();
    void store_into(exec::ParamStore<T>& store);
    static SegHead from_store(const exec::ParamStore<T>& store, int width, int num_classes);
};

struct TrainConfig {
    double lr = 1e-3;
    double weight_decay = 0.05;
    int steps = 500;
    int batch = 8;
    std::uint64_t seed = 0;
    int eval_interval = 100;
    int eval_scenes = 16;
    int head_width = 32;

    bool operator==(const TrainConfig&) const = default;
};

struct EvalResult {
    double pixel_acc = 0.0;
    double miou = 0.0;
    std::vector<double> per_class_iou;
};

struct MetricPoint {
    int step = 0;
    double pixel_acc = 0.0;
    double miou = 0.0;
};

struct TrainRun {
    TrainConfig config;
    std::vector<double> loss_history;      // one entry per step
    std::vector<MetricPoint> metric_history;
    exec::ParamStore<float> params;        // backbone + seghead.* entries
};

// Decoupled-weight-decay Adam with cosine lr decay; deterministic per seed.
// Throws NumericError when the loss exceeds 10x its initial value.
TrainRun train(const arch::ArchGraph& graph, const DatasetSpec& data, const TrainConfig& config);

// Pixel accuracy and per-class IoU (classes with empty union are skipped in
// the mean).
EvalResult segmentation_metrics(const std::vector<int>& predictions,
                                const std::vector<int>& labels, int num_classes);

EvalResult evaluate(const arch::ArchGraph& graph, const exec::ParamStore<float>& params,
                    const DatasetSpec& data, std::uint64_t eval_seed, int scenes,
                    int head_width = 32);

// mIoU of the predict-background-everywhere baseline on the same scenes.
double constant_background_miou(const DatasetSpec& data, std::uint64_t eval_seed, int scenes);

// Seeds for the held-out evaluation stream, disjoint from training seeds.
std::uint64_t eval_scene_seed(std::uint64_t run_seed, int index);

struct SaliencyResult {
    int h = 0;
    int w = 0;
    std::vector<float> gradient_map;    // max over RGB of |dL/dinput|, h*w
    std::vector<double> thresholds;
    std::vector<double> important_area; // fraction of pixels with |g| > t
};

// Fraction of map entries strictly above each threshold; thresholds must be
// sorted ascending.
std::vector<double> important_region_areas(const std::vector<float>& gradient_map,
                                           const std::vector<double>& thresholds);

// |dLoss/dInput| of the task loss on one scene; thresholds must ascend.
SaliencyResult saliency(const arch::ArchGraph& graph, const exec::ParamStore<float>& params,
                        const SyntheticScene& scene, const std::vector<double>& thresholds,
                        int head_width = 32);

} // namespace cednet::lab
