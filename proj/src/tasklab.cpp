#include "cednet/tasklab.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace cednet::lab {

using nlohmann::json;

DatasetSpec parse_dataset_spec(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("dataset spec is not valid JSON: ") + e.what());
    }
    DatasetSpec s;
    s.h = j.value("h", 64);
    s.w = j.value("w", 64);
    s.min_shapes = j.value("min_shapes", 2);
    s.max_shapes = j.value("max_shapes", 4);
    s.min_size = j.value("min_size", 8.0);
    s.max_size = j.value("max_size", 18.0);
    s.noise = j.value("noise", 0.03);
    if (s.h % 32 != 0 || s.w % 32 != 0)
        throw ConfigError("dataset spec: h and w must be divisible by 32");
    if (s.min_shapes < 0 || s.max_shapes < s.min_shapes)
        throw ConfigError("dataset spec: invalid min_shapes/max_shapes");
    if (s.min_size <= 0 || s.max_size < s.min_size)
        throw ConfigError("dataset spec: invalid min_size/max_size");
    if (s.noise < 0) throw ConfigError("dataset spec: noise must be >= 0");
    return s;
}

std::string serialize_dataset_spec(const DatasetSpec& s) {
    json j;
    j["h"] = s.h;
    j["w"] = s.w;
    j["min_shapes"] = s.min_shapes;
    j["max_shapes"] = s.max_shapes;
    j["min_size"] = s.min_size;
    j["max_size"] = s.max_size;
    j["noise"] = s.noise;
    return j.dump(2);
}

namespace {

struct ShapeSpec {
    int cls = 0; // 1 circle, 2 rectangle, 3 triangle
    double cx = 0, cy = 0, size = 0, aspect = 1;
    float color[3] = {0, 0, 0};
};

bool point_in_shape(const ShapeSpec& s, double x, double y) {
    const double dx = x - s.cx;
    const double dy = y - s.cy;
    switch (s.cls) {
        case 1:
            return dx * dx + dy * dy <= s.size * s.size;
        case 2:
            return std::abs(dx) <= s.size && std::abs(dy) <= s.size * s.aspect;
        case 3: {
            const double x0 = s.cx, y0 = s.cy - s.size;
            const double x1 = s.cx - 0.9 * s.size, y1 = s.cy + 0.75 * s.size;
            const double x2 = s.cx + 0.9 * s.size, y2 = s.cy + 0.75 * s.size;
            const double d0 = (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0);
            const double d1 = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1);
            const double d2 = (x0 - x2) * (y - y2) - (y0 - y2) * (x - x2);
            const bool neg = (d0 < 0) || (d1 < 0) || (d2 < 0);
            const bool pos = (d0 > 0) || (d1 > 0) || (d2 > 0);
            return !(neg && pos);
        }
        default:
            return false;
    }
}

// 4x4 supersampled coverage of one pixel.
double pixel_coverage(const ShapeSpec& s, int px, int py) {
    int hits = 0;
    for (int sy = 0; sy < 4; ++sy)
        for (int sx = 0; sx < 4; ++sx)
            if (point_in_shape(s, px + (sx + 0.5) / 4.0, py + (sy + 0.5) / 4.0)) ++hits;
    return hits / 16.0;
}

} // namespace

SyntheticScene generate_scene(std::uint64_t seed, const DatasetSpec& spec) {
    const double margin = spec.max_size + 1.0;
    if (2.0 * margin >= std::min(spec.h, spec.w))
        throw ConfigError("generate_scene: shapes too large for canvas (max_size " +
                          std::to_string(spec.max_size) + " on " + std::to_string(spec.h) +
                          "x" + std::to_string(spec.w) + ")");

    Rng rng(seed);
    SyntheticScene scene;
    scene.seed = seed;
    scene.h = spec.h;
    scene.w = spec.w;
    scene.image.assign(static_cast<std::size_t>(3 * spec.h * spec.w), 0.0f);
    scene.mask.assign(static_cast<std::size_t>(spec.h * spec.w), 0);

    float bg[3];
    for (float& v : bg) v = static_cast<float>(rng.uniform(0.10, 0.45));
    for (int c = 0; c < 3; ++c)
        std::fill_n(scene.image.begin() + static_cast<std::ptrdiff_t>(c) * spec.h * spec.w,
                    spec.h * spec.w, bg[c]);

    const int count = static_cast<int>(rng.uniform_int(spec.min_shapes, spec.max_shapes));
    std::vector<ShapeSpec> shapes;
    for (int i = 0; i < count; ++i) {
        ShapeSpec s;
        s.cls = static_cast<int>(rng.uniform_int(1, kNumClasses - 1));
        s.size = rng.uniform(spec.min_size, spec.max_size);
        s.cx = rng.uniform(margin, spec.w - margin);
        s.cy = rng.uniform(margin, spec.h - margin);
        s.aspect = rng.uniform(0.55, 1.0);
        // class-coded dominant channel keeps the toy task learnable
        const int dominant = s.cls - 1;
        for (int c = 0; c < 3; ++c)
            s.color[c] = static_cast<float>(c == dominant ? rng.uniform(0.65, 0.95)
                                                          : rng.uniform(0.05, 0.30));
        shapes.push_back(s);
        scene.shape_list.push_back(s.cls);
    }

    for (const ShapeSpec& s : shapes) {
        const int x_lo = std::max(0, static_cast<int>(std::floor(s.cx - 1.5 * s.size - 1)));
        const int x_hi = std::min(spec.w, static_cast<int>(std::ceil(s.cx + 1.5 * s.size + 1)));
        const int y_lo = std::max(0, static_cast<int>(std::floor(s.cy - 1.5 * s.size - 1)));
        const int y_hi = std::min(spec.h, static_cast<int>(std::ceil(s.cy + 1.5 * s.size + 1)));
        for (int py = y_lo; py < y_hi; ++py)
            for (int px = x_lo; px < x_hi; ++px) {
                const double cov = pixel_coverage(s, px, py);
                if (cov <= 0.0) continue;
                for (int c = 0; c < 3; ++c) {
                    float& v = scene.image[static_cast<std::size_t>((c * spec.h + py) * spec.w + px)];
                    v = static_cast<float>(v * (1.0 - cov) + s.color[c] * cov);
                }
                if (point_in_shape(s, px + 0.5, py + 0.5))
                    scene.mask[static_cast<std::size_t>(py * spec.w + px)] = s.cls;
            }
    }

    if (spec.noise > 0) {
        for (float& v : scene.image) {
            v = static_cast<float>(v + rng.uniform(-spec.noise, spec.noise));
            v = std::clamp(v, 0.0f, 1.0f);
        }
    }
    return scene;
}

template <typename T>
Tensor<T> scenes_to_tensor(const std::vector<SyntheticScene>& scenes) {
    if (scenes.empty()) throw ConfigError("scenes_to_tensor: empty batch");
    const int h = scenes[0].h, w = scenes[0].w;
    Tensor<T> t = Tensor<T>::zeros({static_cast<std::int64_t>(scenes.size()), 3, h, w});
    T* p = t.data();
    for (const SyntheticScene& s : scenes) {
        if (s.h != h || s.w != w) throw ShapeError("scenes_to_tensor: mixed scene sizes");
        for (float v : s.image) *p++ = static_cast<T>(v);
    }
    return t;
}

std::vector<int> scenes_to_labels(const std::vector<SyntheticScene>& scenes) {
    std::vector<int> labels;
    for (const SyntheticScene& s : scenes)
        labels.insert(labels.end(), s.mask.begin(), s.mask.end());
    return labels;
}

// --- SegHead ------------------------------------------------------------------

namespace {

template <typename T>
Tensor<T> head_weight(int out_ch, int in_ch, Rng& rng) {
    Tensor<T> t = Tensor<T>::zeros({out_ch, in_ch, 1, 1});
    T* p = t.data();
    for (std::int64_t i = 0; i < t.numel(); ++i)
        p[i] = static_cast<T>(rng.truncated_normal(0.02));
    return t;
}

} // namespace

template <typename T>
SegHead<T> SegHead<T>::init(int c1, int c2, int c3, int width, int num_classes, Rng& rng) {
    SegHead<T> h;
    h.width = width;
    h.num_classes = num_classes;
    h.lat8_w = head_weight<T>(width, c1, rng);
    h.lat8_b = Tensor<T>::zeros({width});
    h.lat16_w = head_weight<T>(width, c2, rng);
    h.lat16_b = Tensor<T>::zeros({width});
    h.lat32_w = head_weight<T>(width, c3, rng);
    h.lat32_b = Tensor<T>::zeros({width});
    h.cls_w = head_weight<T>(num_classes, width, rng);
    h.cls_b = Tensor<T>::zeros({num_classes});
    return h;
}

template <typename T>
Tensor<T> SegHead<T>::forward(const Tensor<T>& p8, const Tensor<T>& p16,
                              const Tensor<T>& p32) const {
    const Tensor<T> l8 = conv2d(p8, lat8_w, &lat8_b, 1, 0, 1, 1);
    const Tensor<T> l16 = conv2d(p16, lat16_w, &lat16_b, 1, 0, 1, 1);
    const Tensor<T> l32 = conv2d(p32, lat32_w, &lat32_b, 1, 0, 1, 1);
    const Tensor<T> fused =
        add(add(l8, bilinear_upsample(l16, 2)), bilinear_upsample(l32, 4));
    const Tensor<T> logits8 = conv2d(fused, cls_w, &cls_b, 1, 0, 1, 1);
    return bilinear_upsample(logits8, 8);
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>>> SegHead<T>::params() {
    return {{"seghead.lat8.weight", lat8_w},   {"seghead.lat8.bias", lat8_b},
            {"seghead.lat16.weight", lat16_w}, {"seghead.lat16.bias", lat16_b},
            {"seghead.lat32.weight", lat32_w}, {"seghead.lat32.bias", lat32_b},
            {"seghead.cls.weight", cls_w},     {"seghead.cls.bias", cls_b}};
}

template <typename T>
void SegHead<T>::store_into(exec::ParamStore<T>& store) {
    for (auto& [name, tensor] : params()) store.add(-1, name, tensor);
}

template <typename T>
SegHead<T> SegHead<T>::from_store(const exec::ParamStore<T>& store, int width,
                                  int num_classes) {
    SegHead<T> h;
    h.lat8_w = store.at("seghead.lat8.weight");
    h.lat8_b = store.at("seghead.lat8.bias");
    h.lat16_w = store.at("seghead.lat16.weight");
    h.lat16_b = store.at("seghead.lat16.bias");
    h.lat32_w = store.at("seghead.lat32.weight");
    h.lat32_b = store.at("seghead.lat32.bias");
    h.cls_w = store.at("seghead.cls.weight");
    h.cls_b = store.at("seghead.cls.bias");
    h.width = static_cast<int>(h.cls_w.dim(1));
    h.num_classes = static_cast<int>(h.cls_w.dim(0));
    if (width != 0 && h.width != width)
        throw ConfigError("SegHead: checkpoint head width " + std::to_string(h.width) +
                          " does not match requested " + std::to_string(width));
    if (num_classes != 0 && h.num_classes != num_classes)
        throw ConfigError("SegHead: checkpoint classes mismatch");
    return h;
}

// --- Optimizer ------------------------------------------------------------------

namespace {

// Adam with decoupled weight decay; moments kept per parameter tensor.
class AdamW {
public:
    AdamW(double beta1, double beta2, double eps) : b1_(beta1), b2_(beta2), eps_(eps) {}

    void step(std::vector<Tensor<float>>& params, double lr, double weight_decay) {
        if (slots_.size() != params.size()) {
            slots_.resize(params.size());
            for (std::size_t i = 0; i < params.size(); ++i) {
                slots_[i].m.assign(static_cast<std::size_t>(params[i].numel()), 0.0f);
                slots_[i].v.assign(static_cast<std::size_t>(params[i].numel()), 0.0f);
            }
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(b1_, t_);
        const double bc2 = 1.0 - std::pow(b2_, t_);
        for (std::size_t i = 0; i < params.size(); ++i) {
            Tensor<float>& p = params[i];
            if (!p.has_grad()) continue;
            const std::vector<float>& g = p.grad();
            float* w = p.data();
            auto& m = slots_[i].m;
            auto& v = slots_[i].v;
            for (std::size_t k = 0; k < g.size(); ++k) {
                m[k] = static_cast<float>(b1_ * m[k] + (1.0 - b1_) * g[k]);
                v[k] = static_cast<float>(b2_ * v[k] + (1.0 - b2_) * g[k] * g[k]);
                const double mhat = m[k] / bc1;
                const double vhat = v[k] / bc2;
                const double update = mhat / (std::sqrt(vhat) + eps_) + weight_decay * w[k];
                w[k] = static_cast<float>(w[k] - lr * update);
            }
        }
    }

private:
    struct Slot {
        std::vector<float> m, v;
    };
    double b1_, b2_, eps_;
    int t_ = 0;
    std::vector<Slot> slots_;
};

double cosine_lr(double base, int step, int total) {
    if (total <= 1) return base;
    const double t = static_cast<double>(step) / static_cast<double>(total);
    return base * 0.5 * (1.0 + std::cos(3.14159265358979323846 * t));
}

} // namespace

std::uint64_t eval_scene_seed(std::uint64_t run_seed, int index) {
    return mix_seed(run_seed, (1ull << 40) + static_cast<std::uint64_t>(index));
}

TrainRun train(const arch::ArchGraph& graph, const DatasetSpec& data,
               const TrainConfig& config) {
    if (config.steps < 1 || config.batch < 1)
        throw ConfigError("train: steps and batch must be positive");

    bool has_p8 = false;
    for (const auto& [name, id] : graph.outputs) has_p8 |= name == "p8";
    if (!has_p8) throw ConfigError("train: graph must be built in dense mode");

    TrainRun run;
    run.config = config;
    run.params = exec::init_params<float>(graph, config.seed);

    int c1 = 0, c2 = 0, c3 = 0;
    for (const auto& [name, id] : graph.outputs) {
        if (name == "p8") c1 = graph.node(id).out_ch;
        if (name == "p16") c2 = graph.node(id).out_ch;
        if (name == "p32") c3 = graph.node(id).out_ch;
    }
    Rng head_rng(mix_seed(config.seed, 0x5e6));
    SegHead<float> head =
        SegHead<float>::init(c1, c2, c3, config.head_width, kNumClasses, head_rng);
    head.store_into(run.params);
    run.params.set_requires_grad(true);

    AdamW opt(0.9, 0.999, 1e-8);
    std::vector<Tensor<float>> opt_params;
    for (auto& e : run.params.entries) opt_params.push_back(e.tensor);

    double initial_loss = 0.0;
    for (int step = 0; step < config.steps; ++step) {
        std::vector<SyntheticScene> batch;
        for (int i = 0; i < config.batch; ++i)
            batch.push_back(generate_scene(
                mix_seed(config.seed,
                         static_cast<std::uint64_t>(step) * config.batch + i),
                data));
        const Tensor<float> x = scenes_to_tensor<float>(batch);
        const std::vector<int> labels = scenes_to_labels(batch);

        double loss_value = 0.0;
        {
            Tape<float> tape;
            auto outs = exec::forward(graph, run.params, x);
            const Tensor<float> logits =
                head.forward(outs.at("p8"), outs.at("p16"), outs.at("p32"));
            const Tensor<float> loss = softmax_cross_entropy(logits, labels);
            loss_value = static_cast<double>(loss.item());
            tape.backward(loss);
        }

        if (step == 0) initial_loss = loss_value;
        if (!std::isfinite(loss_value) || loss_value > 10.0 * initial_loss)
            throw NumericError("train: diverged at step " + std::to_string(step) + " (loss " +
                               std::to_string(loss_value) + ", initial " +
                               std::to_string(initial_loss) + ")");

        opt.step(opt_params, cosine_lr(config.lr, step, config.steps), config.weight_decay);
        run.params.zero_grads();
        run.loss_history.push_back(loss_value);

        if ((step + 1) % config.eval_interval == 0 || step + 1 == config.steps) {
            const EvalResult ev = evaluate(graph, run.params, data, config.seed,
                                           config.eval_scenes, config.head_width);
            run.metric_history.push_back({step + 1, ev.pixel_acc, ev.miou});
        }
    }
    run.params.set_requires_grad(false);
    return run;
}

EvalResult segmentation_metrics(const std::vector<int>& predictions,
                                const std::vector<int>& labels, int num_classes) {
    if (predictions.size() != labels.size())
        throw ShapeError("segmentation_metrics: prediction/label size mismatch");
    std::vector<std::int64_t> tp(num_classes, 0), fp(num_classes, 0), fn(num_classes, 0);
    std::int64_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int p = predictions[i];
        const int g = labels[i];
        if (p < 0 || p >= num_classes || g < 0 || g >= num_classes)
            throw ConfigError("segmentation_metrics: class id out of range");
        if (p == g) {
            ++correct;
            ++tp[p];
        } else {
            ++fp[p];
            ++fn[g];
        }
    }
    EvalResult r;
    r.pixel_acc = labels.empty() ? 0.0
                                 : static_cast<double>(correct) /
                                       static_cast<double>(labels.size());
    double iou_sum = 0.0;
    int counted = 0;
    for (int c = 0; c < num_classes; ++c) {
        const std::int64_t uni = tp[c] + fp[c] + fn[c];
        const double iou = uni == 0 ? 0.0 : static_cast<double>(tp[c]) / static_cast<double>(uni);
        r.per_class_iou.push_back(iou);
        if (uni > 0) {
            iou_sum += iou;
            ++counted;
        }
    }
    r.miou = counted == 0 ? 0.0 : iou_sum / counted;
    return r;
}

namespace {

std::vector<int> predict(const arch::ArchGraph& graph, const exec::ParamStore<float>& params,
                         const std::vector<SyntheticScene>& scenes, int head_width) {
    const SegHead<float> head = SegHead<float>::from_store(params, head_width, 0);
    const Tensor<float> x = scenes_to_tensor<float>(scenes);
    auto outs = exec::forward(graph, params, x);
    const Tensor<float> logits = head.forward(outs.at("p8"), outs.at("p16"), outs.at("p32"));
    const std::int64_t n = logits.dim(0), k = logits.dim(1);
    const std::int64_t spatial = logits.dim(2) * logits.dim(3);
    std::vector<int> preds(static_cast<std::size_t>(n * spatial));
    const float* z = logits.data();
    for (std::int64_t b = 0; b < n; ++b)
        for (std::int64_t s = 0; s < spatial; ++s) {
            int best = 0;
            float best_v = z[b * k * spatial + s];
            for (std::int64_t c = 1; c < k; ++c) {
                const float v = z[(b * k + c) * spatial + s];
                if (v > best_v) {
                    best_v = v;
                    best = static_cast<int>(c);
                }
            }
            preds[static_cast<std::size_t>(b * spatial + s)] = best;
        }
    return preds;
}

std::vector<SyntheticScene> eval_scenes(const DatasetSpec& data, std::uint64_t eval_seed,
                                        int count) {
    std::vector<SyntheticScene> scenes;
    for (int i = 0; i < count; ++i)
        scenes.push_back(generate_scene(eval_scene_seed(eval_seed, i), data));
    return scenes;
}

} // namespace

EvalResult evaluate(const arch::ArchGraph& graph, const exec::ParamStore<float>& params,
                    const DatasetSpec& data, std::uint64_t eval_seed, int scenes,
                    int head_width) {
    const std::vector<SyntheticScene> set = eval_scenes(data, eval_seed, scenes);
    const std::vector<int> preds = predict(graph, params, set, head_width);
    return segmentation_metrics(preds, scenes_to_labels(set), kNumClasses);
}

double constant_background_miou(const DatasetSpec& data, std::uint64_t eval_seed, int scenes) {
    const std::vector<SyntheticScene> set = eval_scenes(data, eval_seed, scenes);
    const std::vector<int> labels = scenes_to_labels(set);
    const std::vector<int> preds(labels.size(), 0);
    return segmentation_metrics(preds, labels, kNumClasses).miou;
}

std::vector<double> important_region_areas(const std::vector<float>& gradient_map,
                                           const std::vector<double>& thresholds) {
    for (std::size_t i = 1; i < thresholds.size(); ++i)
        if (thresholds[i] < thresholds[i - 1])
            throw ConfigError("important_region_areas: thresholds must be sorted ascending");
    std::vector<double> areas;
    const double total = static_cast<double>(gradient_map.size());
    for (const double t : thresholds) {
        std::int64_t hits = 0;
        for (const float v : gradient_map)
            if (static_cast<double>(v) > t) ++hits;
        areas.push_back(total == 0 ? 0.0 : static_cast<double>(hits) / total);
    }
    return areas;
}

SaliencyResult saliency(const arch::ArchGraph& graph, const exec::ParamStore<float>& params,
                        const SyntheticScene& scene, const std::vector<double>& thresholds,
                        int head_width) {

    const SegHead<float> head = SegHead<float>::from_store(params, head_width, 0);
    Tensor<float> x = scenes_to_tensor<float>({scene});
    x.set_requires_grad(true);

    {
        Tape<float> tape;
        auto outs = exec::forward(graph, params, x);
        const Tensor<float> logits =
            head.forward(outs.at("p8"), outs.at("p16"), outs.at("p32"));
        const Tensor<float> loss = softmax_cross_entropy(logits, scene.mask);
        tape.backward(loss);
    }

    SaliencyResult r;
    r.h = scene.h;
    r.w = scene.w;
    r.thresholds = thresholds;
    r.gradient_map.assign(static_cast<std::size_t>(scene.h * scene.w), 0.0f);
    const std::vector<float>& g = x.grad();
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < scene.h * scene.w; ++i)
            r.gradient_map[static_cast<std::size_t>(i)] =
                std::max(r.gradient_map[static_cast<std::size_t>(i)],
                         std::abs(g[static_cast<std::size_t>(c * scene.h * scene.w + i)]));

    r.important_area = important_region_areas(r.gradient_map, thresholds);
    return r;
}

template Tensor<float> scenes_to_tensor<float>(const std::vector<SyntheticScene>&);
template Tensor<double> scenes_to_tensor<double>(const std::vector<SyntheticScene>&);
template struct SegHead<float>;
template struct SegHead<double>;

} // namespace cednet::lab
