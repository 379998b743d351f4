#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace coordmotion {

struct SynthOptions {
    std::string out_dir;
    int joints = 22;
    int frames = 100;
    double fps = 25.0;
    uint64_t seed = 0;
    int count = 1;
    std::string label = "seq";
    std::string spec_path; // optional per-joint "amplitude frequency phase" lines
};

struct TrainCliOptions {
    std::string data_dir;
    std::string config_path; // optional; defaults otherwise
    std::string out_dir;
    int epochs = -1; // <0 keeps the config value
    int batch = -1;
    int64_t seed = -1;
    int stride = -1; // window stride; <0 -> predicted_frames
    double val_frac = 0.2;
    bool keep_translation = false;
};

struct EvalOptions {
    std::string data_dir;
    std::string checkpoint;
    std::vector<int> horizons_ms = {80, 160, 320, 400};
    std::string csv_path;
    bool per_action = false;
    int stride = -1;
    int samples_per_action = 0; // 0 = all
    uint64_t seed = 0;
    bool keep_translation = false;
};

struct PredictOptions {
    std::string checkpoint;
    std::string input;
    std::string out;
    bool keep_translation = false;
};

struct SvgOptions {
    std::string motion;
    std::string out;
};

struct GradcheckOptions {
    std::string module = "all";
    double tol = 1e-4;
};

int run_synth(const SynthOptions& opt);
int run_train(const TrainCliOptions& opt);
int run_eval(const EvalOptions& opt);
int run_predict(const PredictOptions& opt);
int run_export_svg(const SvgOptions& opt);
int run_gradcheck(const GradcheckOptions& opt);

// sorted *.motion.txt under dir, parsed and optionally root-centered
std::vector<std::string> list_motion_files(const std::string& dir);

} // namespace coordmotion
