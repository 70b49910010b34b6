#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "cednet/analyzer.hpp"
#include "cednet/arch.hpp"
#include "cednet/executor.hpp"
#include "cednet/gradcheck.hpp"
#include "cednet/tasklab.hpp"
#include "cednet/tensor.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

// exit codes: 0 ok, 2 config error, 3 numerical failure, 4 I/O error
int run_guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const cednet::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const cednet::ShapeError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const cednet::NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const cednet::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw cednet::IoError("cannot open " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw cednet::IoError("cannot open " + path.string() + " for writing");
    f << content;
    if (!f) throw cednet::IoError("write failed for " + path.string());
}

std::pair<int, int> parse_input_size(const std::string& text) {
    const auto x = text.find('x');
    if (x == std::string::npos)
        throw cednet::ConfigError("input-size must look like 224x224, got '" + text + "'");
    try {
        return {std::stoi(text.substr(0, x)), std::stoi(text.substr(x + 1))};
    } catch (const std::exception&) {
        throw cednet::ConfigError("input-size must look like 224x224, got '" + text + "'");
    }
}

struct GraphSpec {
    cednet::arch::ArchGraph graph;
    std::optional<cednet::arch::ArchConfig> config; // empty for baseline presets
    json resolved; // what went into the manifest
};

GraphSpec load_graph_spec(const std::string& path) {
    const std::string text = read_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw cednet::ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    GraphSpec spec;
    if (j.is_object() && j.contains("preset")) {
        const std::string preset = j["preset"].get<std::string>();
        if (preset == "convnext-t")
            spec.graph = cednet::arch::build_convnext_t_classifier();
        else if (preset == "convnext-s")
            spec.graph = cednet::arch::build_convnext_s_classifier();
        else if (preset == "convnext-s-fpn")
            spec.graph = cednet::arch::build_convnext_fpn_baseline();
        else
            throw cednet::ConfigError("unknown preset '" + preset +
                                      "' (expected convnext-t|convnext-s|convnext-s-fpn)");
        spec.resolved = j;
        return spec;
    }
    cednet::arch::ArchConfig config = cednet::arch::parse_config(text);
    spec.graph = cednet::arch::build_cednet(config);
    spec.config = config;
    spec.resolved = json::parse(cednet::arch::serialize_config(config));
    return spec;
}

fs::path prepare_out_dir(const std::string& out) {
    fs::path dir(out);
    fs::create_directories(dir);
    return dir;
}

void write_manifest(const fs::path& dir, const std::string& subcommand, std::uint64_t seed,
                    json extra) {
    json m;
    m["tool"] = "cednet-lab";
    m["version"] = kToolVersion;
    m["subcommand"] = subcommand;
    m["seed"] = seed;
    for (auto& [k, v] : extra.items()) m[k] = v;
    write_file(dir / "manifest.json", m.dump(2));
}

std::string human_count(std::int64_t v) {
    std::ostringstream os;
    if (v >= 1000000000)
        os << std::fixed << std::setprecision(2) << static_cast<double>(v) / 1e9 << "G";
    else if (v >= 1000000)
        os << std::fixed << std::setprecision(2) << static_cast<double>(v) / 1e6 << "M";
    else
        os << v;
    return os.str();
}

// --- analyze -------------------------------------------------------------------

int cmd_analyze(const std::string& config_path, const std::string& input_size,
                const std::string& format, const std::string& out, bool export_graph) {
    const auto [h, w] = parse_input_size(input_size);
    GraphSpec spec = load_graph_spec(config_path);
    const auto diags = cednet::arch::validate_graph(spec.graph);
    if (!diags.empty()) throw cednet::ConfigError("invalid graph: " + diags.front());

    const cednet::analyzer::AnalysisReport report =
        cednet::analyzer::emit_report(spec.graph, h, w);

    const fs::path dir = prepare_out_dir(out);
    write_file(dir / "report.json", cednet::analyzer::report_to_json(report));
    write_file(dir / "report.csv", cednet::analyzer::report_to_csv(report));
    if (export_graph) write_file(dir / "graph.json", cednet::arch::graph_to_json(spec.graph));
    write_manifest(dir, "analyze", 0,
                   {{"config", spec.resolved},
                    {"config_path", config_path},
                    {"input_size", {h, w}},
                    {"format", format}});

    if (format == "json") {
        std::cout << cednet::analyzer::report_to_json(report) << "\n";
    } else if (format == "csv") {
        std::cout << cednet::analyzer::report_to_csv(report);
    } else {
        std::cout << "graph:            " << report.graph_name << "\n";
        std::cout << "input size:       " << h << "x" << w << "\n";
        std::cout << "params:           " << report.total_params << " ("
                  << human_count(report.total_params) << ")\n";
        std::cout << "macs:             " << report.macs << " (" << human_count(report.macs)
                  << ")\n";
        std::cout << "elementwise ops:  " << report.elementwise_flops << "\n";
        if (report.fusion_ratio)
            std::cout << "fusion ratio:     " << std::fixed << std::setprecision(4)
                      << *report.fusion_ratio << "\n";
        else
            std::cout << "fusion ratio:     n/a (no fusion node)\n";
        for (const auto& [name, rf] : report.receptive_fields)
            std::cout << "rf[" << name << "]:          " << rf.first << "x" << rf.second << "\n";
    }
    return 0;
}

// --- gradcheck -----------------------------------------------------------------

int cmd_gradcheck(const std::string& config_path, double eps, double tolerance,
                  const std::string& input_size, std::uint64_t seed, const std::string& out) {
    const auto [h, w] = parse_input_size(input_size);
    GraphSpec spec = load_graph_spec(config_path);

    auto params = cednet::exec::init_params<double>(spec.graph, seed);
    cednet::Rng rng(cednet::mix_seed(seed, 7));
    cednet::Tensor<double> input = cednet::Tensor<double>::zeros({1, 3, h, w});
    for (std::int64_t i = 0; i < input.numel(); ++i) input.data()[i] = rng.uniform(-1.0, 1.0);

    const auto loss_fn = [&]() {
        auto outs = cednet::exec::forward(spec.graph, params, input);
        return cednet::gradcheck::weighted_probe(outs, seed);
    };
    std::vector<cednet::gradcheck::ParamRef> refs;
    for (auto& e : params.entries) refs.push_back({e.name, e.tensor});

    const cednet::gradcheck::Result res = cednet::gradcheck::check(loss_fn, refs, eps);

    const fs::path dir = prepare_out_dir(out);
    json jr;
    jr["max_rel_err"] = res.max_rel_err;
    jr["worst_param"] = res.worst_param;
    jr["worst_index"] = res.worst_index;
    jr["checked_elements"] = res.checked;
    jr["eps"] = eps;
    jr["tolerance"] = tolerance;
    jr["passed"] = res.passed(tolerance);
    write_file(dir / "gradcheck.json", jr.dump(2));
    write_manifest(dir, "gradcheck", seed,
                   {{"config", spec.resolved},
                    {"config_path", config_path},
                    {"input_size", {h, w}},
                    {"eps", eps},
                    {"tolerance", tolerance}});

    std::cout << "checked " << res.checked << " parameter elements, max relative error "
              << std::scientific << res.max_rel_err << "\n";
    if (!res.passed(tolerance)) {
        std::cerr << "gradcheck FAILED at " << res.worst_param << "[" << res.worst_index
                  << "]\n";
        return 3;
    }
    return 0;
}

// --- train / eval / saliency ------------------------------------------------------

cednet::lab::DatasetSpec load_dataset_spec(const std::string& path) {
    if (path.empty()) return cednet::lab::DatasetSpec{};
    return cednet::lab::parse_dataset_spec(read_file(path));
}

int cmd_train(const std::string& config_path, const std::string& data_path, int steps,
              double lr, double weight_decay, int batch, std::uint64_t seed,
              int eval_interval, const std::string& out) {
    GraphSpec spec = load_graph_spec(config_path);
    if (!spec.config || spec.config->mode != cednet::arch::GraphMode::Dense)
        throw cednet::ConfigError("train expects a dense-mode cednet config");
    const cednet::lab::DatasetSpec data = load_dataset_spec(data_path);

    cednet::lab::TrainConfig tc;
    tc.lr = lr;
    tc.weight_decay = weight_decay;
    tc.steps = steps;
    tc.batch = batch;
    tc.seed = seed;
    tc.eval_interval = eval_interval;

    const fs::path dir = prepare_out_dir(out);
    write_manifest(dir, "train", seed,
                   {{"config", spec.resolved},
                    {"config_path", config_path},
                    {"dataset", json::parse(cednet::lab::serialize_dataset_spec(data))},
                    {"train",
                     {{"lr", lr},
                      {"weight_decay", weight_decay},
                      {"steps", steps},
                      {"batch", batch},
                      {"eval_interval", eval_interval}}}});

    const cednet::lab::TrainRun run = cednet::lab::train(spec.graph, data, tc);

    std::ostringstream csv;
    csv << "step,loss,pixel_acc,miou\n";
    std::size_t mi = 0;
    csv << std::setprecision(10);
    for (std::size_t s = 0; s < run.loss_history.size(); ++s) {
        csv << (s + 1) << ',' << run.loss_history[s] << ',';
        if (mi < run.metric_history.size() &&
            run.metric_history[mi].step == static_cast<int>(s + 1)) {
            csv << run.metric_history[mi].pixel_acc << ',' << run.metric_history[mi].miou;
            ++mi;
        } else {
            csv << ',';
        }
        csv << '\n';
    }
    write_file(dir / "metrics.csv", csv.str());
    cednet::exec::save_checkpoint(run.params, (dir / "model.ckpt").string());

    const auto& last = run.metric_history.back();
    std::cout << "trained " << steps << " steps: loss " << run.loss_history.front() << " -> "
              << run.loss_history.back() << ", pixel acc " << last.pixel_acc << ", mIoU "
              << last.miou << "\n";
    std::cout << "checkpoint: " << (dir / "model.ckpt").string() << "\n";
    return 0;
}

int cmd_eval(const std::string& config_path, const std::string& ckpt_path,
             const std::string& data_path, int scenes, std::uint64_t seed,
             const std::string& out) {
    GraphSpec spec = load_graph_spec(config_path);
    const cednet::lab::DatasetSpec data = load_dataset_spec(data_path);
    const auto params = cednet::exec::load_checkpoint<float>(ckpt_path);

    const cednet::lab::EvalResult res =
        cednet::lab::evaluate(spec.graph, params, data, seed, scenes);
    const double baseline = cednet::lab::constant_background_miou(data, seed, scenes);

    const fs::path dir = prepare_out_dir(out);
    json jr;
    jr["pixel_acc"] = res.pixel_acc;
    jr["miou"] = res.miou;
    jr["per_class_iou"] = res.per_class_iou;
    jr["constant_background_miou"] = baseline;
    jr["scenes"] = scenes;
    write_file(dir / "eval.json", jr.dump(2));
    write_manifest(dir, "eval", seed,
                   {{"config", spec.resolved},
                    {"checkpoint", ckpt_path},
                    {"dataset", json::parse(cednet::lab::serialize_dataset_spec(data))},
                    {"scenes", scenes}});

    std::cout << "pixel acc " << res.pixel_acc << ", mIoU " << res.miou
              << " (constant-background baseline " << baseline << ")\n";
    return 0;
}

int cmd_saliency(const std::string& config_path, const std::string& ckpt_path,
                 const std::string& data_path, std::uint64_t scene_seed,
                 const std::string& thresholds_arg, int num_thresholds,
                 const std::string& out) {
    GraphSpec spec = load_graph_spec(config_path);
    const cednet::lab::DatasetSpec data = load_dataset_spec(data_path);
    const auto params = cednet::exec::load_checkpoint<float>(ckpt_path);
    const cednet::lab::SyntheticScene scene = cednet::lab::generate_scene(scene_seed, data);

    std::vector<double> thresholds;
    if (!thresholds_arg.empty()) {
        std::stringstream ss(thresholds_arg);
        std::string tok;
        while (std::getline(ss, tok, ',')) thresholds.push_back(std::stod(tok));
    }

    cednet::lab::SaliencyResult res =
        cednet::lab::saliency(spec.graph, params, scene, thresholds);
    if (thresholds.empty()) {
        // default: evenly spaced fractions of the max absolute gradient
        float max_g = 0.0f;
        for (float v : res.gradient_map) max_g = std::max(max_g, v);
        for (int i = 0; i < num_thresholds; ++i)
            res.thresholds.push_back(static_cast<double>(max_g) * i / num_thresholds);
        res.important_area =
            cednet::lab::important_region_areas(res.gradient_map, res.thresholds);
    }

    const fs::path dir = prepare_out_dir(out);
    cednet::Tensor<float> map = cednet::Tensor<float>::from_data(
        {scene.h, scene.w}, std::vector<float>(res.gradient_map));
    cednet::export_tensor_file((dir / "gradient_map.ctb").string(), map);
    std::ostringstream csv;
    csv << "threshold,important_area\n" << std::setprecision(10);
    for (std::size_t i = 0; i < res.thresholds.size(); ++i)
        csv << res.thresholds[i] << ',' << res.important_area[i] << '\n';
    write_file(dir / "saliency.csv", csv.str());
    write_manifest(dir, "saliency", scene_seed,
                   {{"config", spec.resolved},
                    {"checkpoint", ckpt_path},
                    {"dataset", json::parse(cednet::lab::serialize_dataset_spec(data))},
                    {"thresholds", res.thresholds}});

    std::cout << "gradient map and area curve written to " << dir.string() << "\n";
    return 0;
}

// --- sweep ----------------------------------------------------------------------

struct SweepRow {
    std::string label;
    cednet::arch::ArchConfig config;
    std::int64_t params = 0;
    std::int64_t macs = 0;
    double fusion_ratio = 0.0;
    double miou = std::nan("");
    bool done = false;
};

int sweep_worker_count(std::size_t jobs) {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("CEDNET_LAB_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0) hw = std::min<unsigned>(hw, static_cast<unsigned>(cap));
    }
    return static_cast<int>(std::min<std::size_t>(hw, jobs));
}

int cmd_sweep(const std::string& axis, const std::string& input_size, int train_steps,
              const std::string& data_path, std::uint64_t seed, const std::string& out) {
    const auto [h, w] = parse_input_size(input_size);
    const cednet::lab::DatasetSpec data = load_dataset_spec(data_path);

    std::vector<SweepRow> rows;
    const cednet::arch::ArchConfig base = cednet::arch::cednet_next_t();
    if (axis == "stages") {
        // same per-stage allocation family as the stage-count ablation
        const std::array<std::array<int, 3>, 4> alloc{
            {{6, 9, 3}, {3, 6, 3}, {2, 4, 2}, {1, 4, 1}}};
        for (int m = 1; m <= 4; ++m) {
            SweepRow row;
            row.label = "m" + std::to_string(m);
            row.config = base;
            row.config.stages = m;
            row.config.blocks = {3, alloc[static_cast<std::size_t>(m - 1)][0],
                                 alloc[static_cast<std::size_t>(m - 1)][1],
                                 alloc[static_cast<std::size_t>(m - 1)][2]};
            rows.push_back(row);
        }
    } else if (axis == "allocation") {
        // two-stage split of the (6, 12, 6) block budget; k/6 of it in stage 1
        for (int k = 6; k >= 1; --k) {
            SweepRow row;
            row.label = std::to_string(k) + "/6";
            row.config = base;
            row.config.stages = 2;
            row.config.per_stage_override = {{
                std::array<int, 3>{k, 2 * k, k},
                std::array<int, 3>{6 - k, 2 * (6 - k), 6 - k},
            }};
            rows.push_back(row);
        }
    } else if (axis == "lr-block") {
        for (const bool on : {true, false}) {
            SweepRow row;
            row.label = on ? "lr_on" : "lr_off";
            row.config = base;
            row.config.lr_blocks = on;
            rows.push_back(row);
        }
    } else {
        throw cednet::ConfigError("sweep axis must be stages|allocation|lr-block, got '" +
                                  axis + "'");
    }

    const fs::path dir = prepare_out_dir(out);
    json cfgs = json::array();
    for (const SweepRow& r : rows)
        cfgs.push_back({{"label", r.label},
                        {"config", json::parse(cednet::arch::serialize_config(r.config))}});
    write_manifest(dir, "sweep", seed,
                   {{"axis", axis},
                    {"input_size", {h, w}},
                    {"train_steps", train_steps},
                    {"configs", cfgs}});

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex err_mutex;

    const auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= rows.size() || failed.load()) return;
            SweepRow& row = rows[i];
            try {
                const auto graph = cednet::arch::build_cednet(row.config);
                const auto report = cednet::analyzer::emit_report(graph, h, w);
                row.params = report.total_params;
                row.macs = report.macs;
                row.fusion_ratio = report.fusion_ratio.value_or(std::nan(""));
                if (train_steps > 0) {
                    cednet::lab::TrainConfig tc;
                    tc.steps = train_steps;
                    tc.seed = seed;
                    tc.eval_interval = train_steps;
                    const auto run = cednet::lab::train(graph, data, tc);
                    row.miou = run.metric_history.back().miou;
                }
                row.done = true;
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!failed.exchange(true)) first_error = e.what();
            }
        }
    };

    std::vector<std::thread> pool;
    const int workers = sweep_worker_count(rows.size());
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    // merge by config index; partial results are still written on failure
    std::ostringstream csv;
    csv << "config,params,macs,fusion_time_ratio,miou\n" << std::setprecision(10);
    for (const SweepRow& r : rows) {
        if (!r.done) continue;
        csv << r.label << ',' << r.params << ',' << r.macs << ',' << r.fusion_ratio << ',';
        if (!std::isnan(r.miou)) csv << r.miou;
        csv << '\n';
    }
    write_file(dir / "sweep.csv", csv.str());

    if (failed.load()) throw cednet::NumericError("sweep failed: " + first_error);
    std::cout << "sweep over " << rows.size() << " configs written to "
              << (dir / "sweep.csv").string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"CEDNet analysis and verification lab"};
    app.require_subcommand(1);

    // analyze
    std::string a_config, a_size = "224x224", a_format = "table", a_out = "cednet-out";
    bool a_export_graph = false;
    CLI::App* analyze = app.add_subcommand("analyze", "static analysis of a network config");
    analyze->add_option("config", a_config, "config JSON path")->required();
    analyze->add_option("--input-size", a_size, "input size HxW (default 224x224)");
    analyze->add_option("--format", a_format, "stdout format: json|csv|table")
        ->check(CLI::IsMember({"json", "csv", "table"}));
    analyze->add_option("--out", a_out, "output directory");
    analyze->add_flag("--export-graph", a_export_graph, "also write graph.json");

    // gradcheck
    std::string g_config, g_size = "32x32", g_out = "cednet-out";
    double g_eps = 1e-5, g_tol = 1e-4;
    std::uint64_t g_seed = 1;
    CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check");
    gradcheck->add_option("config", g_config, "config JSON path")->required();
    gradcheck->add_option("--eps", g_eps, "finite-difference step");
    gradcheck->add_option("--tolerance", g_tol, "max relative error");
    gradcheck->add_option("--input-size", g_size, "input size HxW (default 32x32)");
    gradcheck->add_option("--seed", g_seed, "rng seed");
    gradcheck->add_option("--out", g_out, "output directory");

    // train
    std::string t_config, t_data, t_out = "cednet-out";
    int t_steps = 500, t_batch = 8, t_eval = 100;
    double t_lr = 1e-3, t_wd = 0.05;
    std::uint64_t t_seed = 1;
    CLI::App* train = app.add_subcommand("train", "train on the synthetic shapes task");
    train->add_option("config", t_config, "dense-mode config JSON path")->required();
    train->add_option("--data", t_data, "dataset spec JSON path");
    train->add_option("--steps", t_steps, "training steps");
    train->add_option("--lr", t_lr, "peak learning rate");
    train->add_option("--wd", t_wd, "weight decay");
    train->add_option("--batch", t_batch, "batch size");
    train->add_option("--seed", t_seed, "rng seed");
    train->add_option("--eval-interval", t_eval, "steps between metric evaluations");
    train->add_option("--out", t_out, "output directory");

    // eval
    std::string e_config, e_ckpt, e_data, e_out = "cednet-out";
    int e_scenes = 32;
    std::uint64_t e_seed = 99;
    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
    eval->add_option("config", e_config, "config JSON path")->required();
    eval->add_option("--ckpt", e_ckpt, "checkpoint path")->required();
    eval->add_option("--data", e_data, "dataset spec JSON path");
    eval->add_option("--scenes", e_scenes, "number of evaluation scenes");
    eval->add_option("--seed", e_seed, "evaluation stream seed");
    eval->add_option("--out", e_out, "output directory");

    // saliency
    std::string s_config, s_ckpt, s_data, s_thresholds, s_out = "cednet-out";
    std::uint64_t s_scene_seed = 7;
    int s_num_thresholds = 10;
    CLI::App* sal = app.add_subcommand("saliency", "input-gradient important-region analysis");
    sal->add_option("config", s_config, "config JSON path")->required();
    sal->add_option("--ckpt", s_ckpt, "checkpoint path")->required();
    sal->add_option("--data", s_data, "dataset spec JSON path");
    sal->add_option("--scene-seed", s_scene_seed, "scene seed");
    sal->add_option("--thresholds", s_thresholds, "comma-separated ascending thresholds");
    sal->add_option("--num-thresholds", s_num_thresholds,
                    "default threshold count (fractions of max gradient)");
    sal->add_option("--out", s_out, "output directory");

    // sweep
    std::string w_axis, w_size = "224x224", w_data, w_out = "cednet-out";
    int w_train_steps = 0;
    std::uint64_t w_seed = 1;
    CLI::App* sweep = app.add_subcommand("sweep", "batch-run the ablation config grids");
    sweep->add_option("--axis", w_axis, "stages|allocation|lr-block")->required();
    sweep->add_option("--input-size", w_size, "input size HxW for analysis");
    sweep->add_option("--train-steps", w_train_steps,
                      "toy-train each config for N steps (0 = analysis only)");
    sweep->add_option("--data", w_data, "dataset spec JSON path");
    sweep->add_option("--seed", w_seed, "rng seed");
    sweep->add_option("--out", w_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    if (analyze->parsed())
        return run_guarded([&] { return cmd_analyze(a_config, a_size, a_format, a_out,
                                                    a_export_graph); });
    if (gradcheck->parsed())
        return run_guarded(
            [&] { return cmd_gradcheck(g_config, g_eps, g_tol, g_size, g_seed, g_out); });
    if (train->parsed())
        return run_guarded([&] {
            return cmd_train(t_config, t_data, t_steps, t_lr, t_wd, t_batch, t_seed, t_eval,
                             t_out);
        });
    if (eval->parsed())
        return run_guarded(
            [&] { return cmd_eval(e_config, e_ckpt, e_data, e_scenes, e_seed, e_out); });
    if (sal->parsed())
        return run_guarded([&] {
            return cmd_saliency(s_config, s_ckpt, s_data, s_scene_seed, s_thresholds,
                                s_num_thresholds, s_out);
        });
    if (sweep->parsed())
        return run_guarded(
            [&] { return cmd_sweep(w_axis, w_size, w_train_steps, w_data, w_seed, w_out); });
    return 1;
}
