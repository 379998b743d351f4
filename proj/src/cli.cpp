#include "coordmotion/cli.hpp"

#include "coordmotion/gradcheck_suite.hpp"
#include "coordmotion/metrics.hpp"
#include "coordmotion/motion.hpp"
#include "coordmotion/network.hpp"
#include "coordmotion/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace coordmotion {

namespace fs = std::filesystem;

std::vector<std::string> list_motion_files(const std::string& dir) {
    if (!fs::is_directory(dir)) {
        throw std::runtime_error("not a directory: " + dir);
    }
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.size() > 11 && name.substr(name.size() - 11) == ".motion.txt") {
            files.push_back(entry.path().string());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

namespace {

std::vector<MotionSequence> load_dataset(const std::string& dir, bool keep_translation) {
    std::vector<MotionSequence> seqs;
    for (const std::string& path : list_motion_files(dir)) {
        MotionSequence seq = parse_motion_file(path);
        seqs.push_back(keep_translation ? seq : remove_global_translation(seq));
    }
    if (seqs.empty()) throw std::runtime_error("no .motion.txt files in " + dir);
    const double fps = seqs[0].fps;
    const int joints = seqs[0].joints();
    for (const auto& s : seqs) {
        if (s.fps != fps || s.joints() != joints) {
            throw std::runtime_error("dataset mixes fps/joint counts in " + dir);
        }
    }
    return seqs;
}

std::vector<JointSinusoid> load_spec_file(const std::string& path, int joints) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open spec file: " + path);
    std::vector<JointSinusoid> spec;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
        std::istringstream ls(line);
        JointSinusoid s;
        if (!(ls >> s.amplitude >> s.frequency_hz >> s.phase)) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected 'amplitude frequency phase'");
        }
        spec.push_back(s);
    }
    if (static_cast<int>(spec.size()) != joints) {
        throw std::runtime_error(path + ": has " + std::to_string(spec.size()) +
                                 " joint entries, expected " + std::to_string(joints));
    }
    return spec;
}

// default horizons that fit the model: frames {2,4,8,10} clipped to T_out
std::vector<int> default_horizons(double fps, int t_out) {
    std::vector<int> ms;
    for (int frame : {2, 4, 8, 10}) {
        if (frame <= t_out) ms.push_back(static_cast<int>(std::lround(frame * 1000.0 / fps)));
    }
    if (ms.empty()) ms.push_back(static_cast<int>(std::lround(t_out * 1000.0 / fps)));
    return ms;
}

} // namespace

int run_synth(const SynthOptions& opt) {
    if (opt.frames < 1) throw std::invalid_argument("synth: --frames must be >= 1");
    if (opt.count < 1) throw std::invalid_argument("synth: --count must be >= 1");
    if (opt.joints < 2) throw std::invalid_argument("synth: --joints must be >= 2");
    if (opt.fps <= 0) throw std::invalid_argument("synth: --fps must be > 0");
    fs::create_directories(opt.out_dir);
    KinematicTree tree = KinematicTree::for_joint_count(opt.joints);

    std::vector<JointSinusoid> fixed_spec;
    if (!opt.spec_path.empty()) fixed_spec = load_spec_file(opt.spec_path, opt.joints);

    for (int i = 0; i < opt.count; ++i) {
        MotionSequence seq =
            fixed_spec.empty()
                ? synthesize_motion(tree, opt.frames, opt.fps, opt.seed + static_cast<uint64_t>(i))
                : synthesize_motion(tree, fixed_spec, opt.frames, opt.fps);
        seq.label = opt.label;
        char name[64];
        std::snprintf(name, sizeof(name), "%s_%03d.motion.txt", opt.label.c_str(), i);
        const std::string path = (fs::path(opt.out_dir) / name).string();
        write_motion_file(seq, path);
        std::cout << path << "\n";
    }
    return 0;
}

int run_train(const TrainCliOptions& opt) {
    FileConfig cfg;
    if (!opt.config_path.empty()) cfg = load_config_file(opt.config_path);
    if (opt.epochs > 0) cfg.train.epochs = opt.epochs;
    if (opt.batch > 0) cfg.train.batch = opt.batch;
    if (opt.seed >= 0) {
        cfg.model.seed = static_cast<uint64_t>(opt.seed);
        cfg.train.seed = static_cast<uint64_t>(opt.seed);
    }
    cfg.model.validate();
    cfg.train.validate();

    std::vector<MotionSequence> seqs = load_dataset(opt.data_dir, opt.keep_translation);
    if (seqs[0].joints() != cfg.model.joints) {
        throw std::runtime_error("dataset has " + std::to_string(seqs[0].joints()) +
                                 " joints, config expects " + std::to_string(cfg.model.joints));
    }
    const int stride = opt.stride > 0 ? opt.stride : cfg.model.predicted_frames;
    std::vector<SampleWindow> windows =
        window_dataset(seqs, cfg.model.observed_frames, cfg.model.predicted_frames, stride);
    if (windows.empty()) {
        throw std::runtime_error("no training windows: sequences shorter than T_p + T_out");
    }

    // deterministic validation split
    std::vector<size_t> order(windows.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    SeededRng splitter(cfg.train.seed ^ 0xabcdef12345ull);
    splitter.shuffle(order);
    const size_t val_count =
        opt.val_frac > 0.0
            ? std::min(windows.size() - 1,
                       static_cast<size_t>(std::floor(opt.val_frac * windows.size())))
            : 0;
    std::vector<SampleWindow> train_set, val_set;
    for (size_t i = 0; i < order.size(); ++i) {
        (i < order.size() - val_count ? train_set : val_set).push_back(windows[order[i]]);
    }

    std::cout << "training on " << train_set.size() << " windows (" << val_set.size()
              << " held out) from " << seqs.size() << " sequences\n";
    CjreNet net(cfg.model);
    std::cout << "parameters: " << net.params().total_values() << " values in "
              << net.params().size() << " tensors\n";
    TrainResult result = train_net(net, train_set, cfg.train, opt.out_dir);
    std::cout << "final step loss: " << result.losses.back() << "\n";
    std::cout << "checkpoint: " << result.checkpoint_path << "\n";
    std::cout << "loss log:   " << result.loss_log_path << "\n";

    const double fps = seqs[0].fps;
    const std::vector<int> horizons = default_horizons(fps, cfg.model.predicted_frames);
    const int threads = thread_count_from_env();
    MetricsReport train_report = evaluate(net, train_set, horizons, fps, threads);
    std::cout << "\ntrain MPJPE (mm)\n" << format_metrics_table(train_report);
    if (!val_set.empty()) {
        MetricsReport val_report = evaluate(net, val_set, horizons, fps, threads);
        std::cout << "\nval MPJPE (mm)\n" << format_metrics_table(val_report);
    }
    return 0;
}

int run_eval(const EvalOptions& opt) {
    LoadedCheckpoint ckpt = load_checkpoint(opt.checkpoint);
    const ModelConfig& mc = ckpt.net->config();

    std::vector<MotionSequence> seqs = load_dataset(opt.data_dir, opt.keep_translation);
    if (seqs[0].joints() != mc.joints) {
        throw std::runtime_error("dataset has " + std::to_string(seqs[0].joints()) +
                                 " joints, checkpoint expects " + std::to_string(mc.joints));
    }
    const int stride = opt.stride > 0 ? opt.stride : mc.predicted_frames;
    std::vector<SampleWindow> windows =
        window_dataset(seqs, mc.observed_frames, mc.predicted_frames, stride);
    if (windows.empty()) throw std::runtime_error("no evaluation windows");

    if (opt.samples_per_action > 0) {
        std::map<std::string, std::vector<SampleWindow>> grouped;
        for (auto& w : windows) grouped[w.label].push_back(std::move(w));
        windows.clear();
        SeededRng rng(opt.seed);
        for (auto& [label, group] : grouped) {
            rng.shuffle(group);
            const size_t keep = std::min<size_t>(group.size(),
                                                 static_cast<size_t>(opt.samples_per_action));
            for (size_t i = 0; i < keep; ++i) windows.push_back(std::move(group[i]));
        }
    }

    MetricsReport report =
        evaluate(*ckpt.net, windows, opt.horizons_ms, seqs[0].fps, thread_count_from_env());
    std::cout << format_metrics_table(report);
    if (opt.per_action) {
        for (const auto& [label, rows] : report.per_action) {
            MetricsReport one;
            one.rows = rows;
            std::cout << "\n" << label << "\n" << format_metrics_table(one);
        }
    }
    if (report.has_fusion) {
        std::cout << "\nrelative feature weights\n" << format_fusion_table(report);
    }
    if (!opt.csv_path.empty()) {
        write_metrics_csv(report, opt.csv_path);
        std::cout << "\ncsv: " << opt.csv_path << "\n";
    }
    return 0;
}

int run_predict(const PredictOptions& opt) {
    LoadedCheckpoint ckpt = load_checkpoint(opt.checkpoint);
    const ModelConfig& mc = ckpt.net->config();
    MotionSequence seq = parse_motion_file(opt.input);
    if (!opt.keep_translation) seq = remove_global_translation(seq);
    if (seq.joints() != mc.joints) {
        throw std::runtime_error("input has " + std::to_string(seq.joints()) +
                                 " joints, checkpoint expects " + std::to_string(mc.joints));
    }
    if (seq.frame_count() < mc.observed_frames) {
        throw std::runtime_error("input has " + std::to_string(seq.frame_count()) +
                                 " frames, model needs " + std::to_string(mc.observed_frames));
    }
    const int64_t n = seq.joints();
    const int64_t block = n * 3;
    const auto& d = seq.frames.data();
    Tensor observed = Tensor::from_data(
        {mc.observed_frames, n, 3},
        std::vector<double>(d.begin(), d.begin() + mc.observed_frames * block));
    Tensor pred = ckpt.net->forward(observed);

    MotionSequence out;
    out.fps = seq.fps;
    out.joint_order = seq.joint_order;
    out.label = seq.label + "_pred";
    out.frames = pred;
    write_motion_file(out, opt.out);
    std::cout << opt.out << "\n";
    return 0;
}

int run_export_svg(const SvgOptions& opt) {
    MotionSequence seq = parse_motion_file(opt.motion);
    KinematicTree tree = KinematicTree::for_joint_count(seq.joints());
    const int frames = seq.frame_count();
    const int n = seq.joints();
    const auto& d = seq.frames.data();

    double min_x = 1e30, max_x = -1e30, min_y = 1e30, max_y = -1e30;
    for (int64_t i = 0; i < seq.frames.numel() / 3; ++i) {
        min_x = std::min(min_x, d[i * 3]);
        max_x = std::max(max_x, d[i * 3]);
        min_y = std::min(min_y, d[i * 3 + 1]);
        max_y = std::max(max_y, d[i * 3 + 1]);
    }
    const double span_x = std::max(max_x - min_x, 1e-6);
    const double span_y = std::max(max_y - min_y, 1e-6);
    const double cell_h = 220.0, margin = 10.0;
    const double s = (cell_h - 2 * margin) / std::max(span_x, span_y);
    const double cell_w = span_x * s + 2 * margin;

    std::ofstream out(opt.out);
    if (!out) throw std::runtime_error("cannot write svg: " + opt.out);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << cell_w * frames
        << "\" height=\"" << cell_h << "\">\n";
    for (int f = 0; f < frames; ++f) {
        out << " <g transform=\"translate(" << f * cell_w << ",0)\">\n";
        for (int j = 0; j < n; ++j) {
            const int p = tree.parents[j];
            if (p < 0) continue;
            auto px = [&](int joint, int c) { return d[(f * n + joint) * 3 + c]; };
            const double x1 = margin + (px(p, 0) - min_x) * s;
            const double y1 = cell_h - margin - (px(p, 1) - min_y) * s;
            const double x2 = margin + (px(j, 0) - min_x) * s;
            const double y2 = cell_h - margin - (px(j, 1) - min_y) * s;
            out << "  <line x1=\"" << x1 << "\" y1=\"" << y1 << "\" x2=\"" << x2 << "\" y2=\""
                << y2 << "\" stroke=\"#334\" stroke-width=\"1.5\"/>\n";
        }
        out << " </g>\n";
    }
    out << "</svg>\n";
    if (!out) throw std::runtime_error("svg write failed: " + opt.out);
    std::cout << opt.out << " (" << frames << " frames)\n";
    return 0;
}

int run_gradcheck(const GradcheckOptions& opt) {
    std::vector<std::string> modules;
    if (opt.module == "all") {
        modules = gradcheck_module_names();
    } else {
        modules.push_back(opt.module);
    }
    bool all_pass = true;
    for (const std::string& module : modules) {
        GradCheckReport report = run_module_gradcheck(module); // throws on unknown name
        const bool pass = report.pass(opt.tol);
        all_pass = all_pass && pass;
        std::printf("%-5s %-4s max_rel_err=%.3e\n", module.c_str(), pass ? "PASS" : "FAIL",
                    report.max_rel_err);
        for (const auto& entry : report.params) {
            std::printf("  %-28s %.3e%s\n", entry.name.c_str(), entry.max_rel_err,
                        entry.max_rel_err > opt.tol ? "  <-- FAIL" : "");
        }
    }
    return all_pass ? 0 : 1;
}

} // namespace coordmotion
