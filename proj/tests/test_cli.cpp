#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "coordmotion/cli.hpp"
#include "coordmotion/metrics.hpp"
#include "coordmotion/motion.hpp"
#include "coordmotion/training.hpp"
#include "test_util.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace coordmotion;
using testutil::max_abs_diff;

namespace {

namespace fs = std::filesystem;

std::string temp_dir(const std::string& name) {
    auto path = fs::temp_directory_path() / name;
    fs::remove_all(path);
    fs::create_directories(path);
    return path.string();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

size_t count_substr(const std::string& text, const std::string& needle) {
    size_t count = 0, pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.joints = 22;
    cfg.feature_dim = 4;
    cfg.trajectory_dim = 6;
    cfg.observed_frames = 10;
    cfg.predicted_frames = 10;
    cfg.block_count = 1;
    cfg.laterals.clear();
    cfg.affm_reduction = 3;
    return cfg;
}

} // namespace

TEST_CASE("synth writes parseable deterministic files") {
    const std::string dir_a = temp_dir("cli_synth_a");
    const std::string dir_b = temp_dir("cli_synth_b");
    SynthOptions opt;
    opt.out_dir = dir_a;
    opt.joints = 22;
    opt.frames = 100;
    opt.fps = 25.0;
    opt.seed = 7;
    CHECK(run_synth(opt) == 0);
    auto files = list_motion_files(dir_a);
    REQUIRE(files.size() == 1);
    MotionSequence seq = parse_motion_file(files[0]);
    CHECK(seq.frame_count() == 100);
    CHECK(seq.joints() == 22);
    // 100 data lines of 66 floats
    const std::string text = read_file(files[0]);
    CHECK(count_substr(text, "\n") == 102); // header + names + 100 frames

    opt.out_dir = dir_b;
    CHECK(run_synth(opt) == 0);
    CHECK(read_file(files[0]) == read_file(list_motion_files(dir_b)[0]));

    opt.frames = 0;
    CHECK_THROWS(run_synth(opt));
}

TEST_CASE("config file round-trip and unknown keys") {
    FileConfig cfg;
    cfg.model = tiny_config();
    cfg.model.similarity = Similarity::SoftmaxDot;
    cfg.model.laterals = {{1, 1}}; // invalid on purpose: text survives round-trip regardless
    cfg.model.laterals = {};
    cfg.train.batch = 5;
    const std::string text = config_to_text(cfg);
    FileConfig back = parse_config_text(text);
    CHECK(back.model.feature_dim == cfg.model.feature_dim);
    CHECK(back.model.similarity == Similarity::SoftmaxDot);
    CHECK(back.train.batch == 5);
    CHECK(config_to_text(back) == text);

    CHECK_THROWS(parse_config_text("nonsense_key=1\n"));
    CHECK_THROWS(parse_config_text("joints\n"));
    FileConfig defaults = parse_config_text("# comment only\n");
    CHECK(defaults.model.feature_dim == 32);
}

TEST_CASE("train then eval end to end, with determinism") {
    const std::string data_dir = temp_dir("cli_data");
    SynthOptions synth;
    synth.out_dir = data_dir;
    synth.count = 8;
    synth.frames = 40;
    synth.seed = 3;
    REQUIRE(run_synth(synth) == 0);

    FileConfig cfg;
    cfg.model = tiny_config();
    cfg.train.epochs = 2;
    cfg.train.batch = 4;
    const std::string cfg_path = temp_dir("cli_cfg") + "/toy.cfg";
    {
        std::ofstream out(cfg_path);
        out << config_to_text(cfg);
    }

    TrainCliOptions train_opt;
    train_opt.data_dir = data_dir;
    train_opt.config_path = cfg_path;
    train_opt.out_dir = temp_dir("cli_train_a");
    train_opt.seed = 9;
    CHECK(run_train(train_opt) == 0);
    CHECK(fs::exists(train_opt.out_dir + "/latest.ckpt.json"));
    CHECK(fs::exists(train_opt.out_dir + "/loss_log.csv"));

    // identical rerun -> identical artifacts
    TrainCliOptions train_b = train_opt;
    train_b.out_dir = temp_dir("cli_train_b");
    CHECK(run_train(train_b) == 0);
    CHECK(read_file(train_opt.out_dir + "/loss_log.csv") ==
          read_file(train_b.out_dir + "/loss_log.csv"));
    CHECK(read_file(train_opt.out_dir + "/latest.ckpt.json") ==
          read_file(train_b.out_dir + "/latest.ckpt.json"));

    EvalOptions eval_opt;
    eval_opt.data_dir = data_dir;
    eval_opt.checkpoint = train_opt.out_dir + "/latest.ckpt.json";
    eval_opt.horizons_ms = {80, 160, 320, 400};
    eval_opt.csv_path = train_opt.out_dir + "/metrics.csv";
    CHECK(run_eval(eval_opt) == 0);
    const std::string csv = read_file(eval_opt.csv_path);
    CHECK(csv.rfind("horizon_ms,model,zero_vel,const_vel", 0) == 0); // column contract
    CHECK(count_substr(csv, "\n") == 5);

    // horizon beyond T_out is an error
    EvalOptions bad = eval_opt;
    bad.horizons_ms = {80, 9000};
    CHECK_THROWS(run_eval(bad));
}

TEST_CASE("degenerate checkpoint: eval model column equals zero-velocity column") {
    const std::string data_dir = temp_dir("cli_degen_data");
    SynthOptions synth;
    synth.out_dir = data_dir;
    synth.count = 1;
    synth.frames = 40;
    synth.seed = 5;
    REQUIRE(run_synth(synth) == 0);

    ModelConfig cfg = tiny_config();
    CjreNet net(cfg);
    net.zero_output_head();
    AdamState adam;
    const std::string ckpt = temp_dir("cli_degen") + "/degen.ckpt.json";
    save_checkpoint(net, TrainConfig{}, 0, adam, ckpt);

    auto seqs_files = list_motion_files(data_dir);
    std::vector<MotionSequence> seqs;
    for (const auto& f : seqs_files) seqs.push_back(remove_global_translation(parse_motion_file(f)));
    auto windows = window_dataset(seqs, cfg.observed_frames, cfg.predicted_frames, 10);
    MetricsReport report = evaluate(net, windows, {80, 160, 320, 400}, 25.0);
    for (const auto& row : report.rows) {
        CHECK(row.model_mm == row.zero_vel_mm); // exact coincidence
    }

    EvalOptions eval_opt;
    eval_opt.data_dir = data_dir;
    eval_opt.checkpoint = ckpt;
    eval_opt.csv_path = temp_dir("cli_degen_out") + "/metrics.csv";
    CHECK(run_eval(eval_opt) == 0);
    // CSV model column textually equals the zero_vel column
    std::istringstream csv(read_file(eval_opt.csv_path));
    std::string line;
    std::getline(csv, line); // header
    while (std::getline(csv, line)) {
        std::stringstream ss(line);
        std::string ms, model, zero, cvel;
        std::getline(ss, ms, ',');
        std::getline(ss, model, ',');
        std::getline(ss, zero, ',');
        std::getline(ss, cvel, ',');
        CHECK(model == zero);
    }
}

TEST_CASE("predict writes a parseable file that round-trips") {
    const std::string dir = temp_dir("cli_predict");
    SynthOptions synth;
    synth.out_dir = dir;
    synth.count = 1;
    synth.frames = 30;
    synth.seed = 11;
    REQUIRE(run_synth(synth) == 0);

    ModelConfig cfg = tiny_config();
    CjreNet net(cfg);
    AdamState adam;
    const std::string ckpt = dir + "/model.ckpt.json";
    save_checkpoint(net, TrainConfig{}, 0, adam, ckpt);

    PredictOptions opt;
    opt.checkpoint = ckpt;
    opt.input = list_motion_files(dir)[0];
    opt.out = dir + "/pred.motion.txt";
    CHECK(run_predict(opt) == 0);
    MotionSequence pred = parse_motion_file(opt.out);
    CHECK(pred.frame_count() == cfg.predicted_frames);
    CHECK(pred.joints() == cfg.joints);

    // joint-count mismatch is an error
    SynthOptions other;
    other.out_dir = temp_dir("cli_predict_bad");
    other.joints = 5;
    other.frames = 30;
    REQUIRE(run_synth(other) == 0);
    PredictOptions bad = opt;
    bad.input = list_motion_files(other.out_dir)[0];
    CHECK_THROWS(run_predict(bad));
}

TEST_CASE("svg export has one group per frame and N-1 segments each") {
    const std::string dir = temp_dir("cli_svg");
    SynthOptions synth;
    synth.out_dir = dir;
    synth.count = 1;
    synth.frames = 6;
    synth.seed = 2;
    REQUIRE(run_synth(synth) == 0);

    SvgOptions opt;
    opt.motion = list_motion_files(dir)[0];
    opt.out = dir + "/strip.svg";
    CHECK(run_export_svg(opt) == 0);
    const std::string svg = read_file(opt.out);
    CHECK(count_substr(svg, "<g ") == 6);
    CHECK(count_substr(svg, "<line ") == 6 * 21);
}

TEST_CASE("synth honors an explicit sinusoid spec file") {
    const std::string dir = temp_dir("cli_spec");
    const std::string spec_path = dir + "/still.spec";
    {
        std::ofstream out(spec_path);
        out << "# amplitude frequency phase\n";
        for (int j = 0; j < 5; ++j) out << "0.3 0.0 1.2\n"; // frequency 0 -> static pose
    }
    SynthOptions opt;
    opt.out_dir = dir;
    opt.joints = 5;
    opt.frames = 8;
    opt.spec_path = spec_path;
    REQUIRE(run_synth(opt) == 0);
    MotionSequence seq = parse_motion_file(list_motion_files(dir)[0]);
    for (int f = 1; f < 8; ++f)
        for (int64_t j = 0; j < 5; ++j)
            for (int64_t c = 0; c < 3; ++c) {
                CHECK(seq.frames.at({f, j, c}) == seq.frames.at({0, j, c}));
            }

    // wrong joint count in the spec file
    SynthOptions bad = opt;
    bad.joints = 7;
    CHECK_THROWS(run_synth(bad));
}

TEST_CASE("predict output equals the in-process forward pass bit-exactly") {
    const std::string dir = temp_dir("cli_predict_eq");
    SynthOptions synth;
    synth.out_dir = dir;
    synth.frames = 25;
    synth.seed = 13;
    REQUIRE(run_synth(synth) == 0);

    ModelConfig cfg = tiny_config();
    CjreNet net(cfg);
    AdamState adam;
    const std::string ckpt = dir + "/m.ckpt.json";
    save_checkpoint(net, TrainConfig{}, 0, adam, ckpt);

    PredictOptions opt;
    opt.checkpoint = ckpt;
    opt.input = list_motion_files(dir)[0];
    opt.out = dir + "/pred.motion.txt";
    REQUIRE(run_predict(opt) == 0);

    MotionSequence input = remove_global_translation(parse_motion_file(opt.input));
    Tensor observed = Tensor::from_data(
        {cfg.observed_frames, cfg.joints, 3},
        std::vector<double>(input.frames.data().begin(),
                            input.frames.data().begin() + cfg.observed_frames * cfg.joints * 3));
    Tensor expected = net.forward(observed);
    MotionSequence written = parse_motion_file(opt.out);
    CHECK(max_abs_diff(written.frames, expected) == 0.0);
}

TEST_CASE("metrics table follows the horizon-header layout") {
    MetricsReport report;
    report.rows = {{80, 2, 10.0, 11.0, 12.0}, {160, 4, 20.0, 21.0, 22.0}};
    const std::string table = format_metrics_table(report);
    CHECK(table.rfind("time(ms)", 0) == 0);
    CHECK(table.find("80") < table.find("160"));
    const auto model_pos = table.find("model");
    const auto zero_pos = table.find("zero_vel");
    const auto cvel_pos = table.find("const_vel");
    CHECK(model_pos != std::string::npos);
    CHECK(model_pos < zero_pos);
    CHECK(zero_pos < cvel_pos);
}

TEST_CASE("parallel evaluation gives identical numbers to serial") {
    const std::string dir = temp_dir("cli_threads");
    SynthOptions synth;
    synth.out_dir = dir;
    synth.frames = 60;
    synth.seed = 21;
    REQUIRE(run_synth(synth) == 0);
    ModelConfig cfg = tiny_config();
    CjreNet net(cfg);
    MotionSequence seq = remove_global_translation(parse_motion_file(list_motion_files(dir)[0]));
    auto windows = window_dataset({seq}, cfg.observed_frames, cfg.predicted_frames, 5);
    MetricsReport serial = evaluate(net, windows, {80, 160}, 25.0, 1);
    MetricsReport parallel = evaluate(net, windows, {80, 160}, 25.0, 3);
    for (size_t i = 0; i < serial.rows.size(); ++i) {
        CHECK(serial.rows[i].model_mm == parallel.rows[i].model_mm);
        CHECK(serial.rows[i].zero_vel_mm == parallel.rows[i].zero_vel_mm);
        CHECK(serial.rows[i].const_vel_mm == parallel.rows[i].const_vel_mm);
    }
}

TEST_CASE("gradcheck command reports per-module results") {
    GradcheckOptions opt;
    opt.module = "affm";
    CHECK(run_gradcheck(opt) == 0);
    opt.module = "warp_drive";
    CHECK_THROWS(run_gradcheck(opt));
}

TEST_CASE("thread override environment variable") {
    CHECK(thread_count_from_env() >= 1);
}
