#pragma once

#include "coordmotion/ops.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace coordmotion {

enum class Similarity { Cosine, SoftmaxDot };

Similarity similarity_from_string(const std::string& name);
std::string to_string(Similarity s);

struct ModelConfig {
    int joints = 22;            // N
    int feature_dim = 32;       // D
    int trajectory_dim = 64;    // T
    int observed_frames = 10;   // T_p
    int predicted_frames = 10;  // T_out
    std::vector<int> timescales = {1, 3, 5};
    int block_count = 9;
    // 1-based (source, destination): output of block i is added to the input
    // of block j, U-Net style
    std::vector<std::pair<int, int>> laterals = {{1, 9}, {2, 8}, {3, 7}, {4, 6}};
    ActivationKind act = ActivationKind::LeakyRelu;
    bool use_gce = true;
    bool use_lie = true;
    bool use_affm = true;
    bool use_relative_joints = true;
    bool multi_graph = true;
    Similarity similarity = Similarity::Cosine;
    bool serial_mode = false;
    bool residual_output = true;
    int affm_reduction = 8;
    uint64_t seed = 0;

    int nonlocal_embed_dim() const { return std::max(1, trajectory_dim / 2); } // T_e
    int stream_count() const { return (use_gce ? 1 : 0) + (use_lie ? 2 : 0); }
    void validate() const;
};

struct TrainConfig {
    double lr0 = 5e-4;
    double lr_decay = 0.96;     // multiplicative per-epoch learning-rate decay
    int lr_floor_epoch = 4;
    double lr_floor = 1e-4;
    int batch = 16;
    int epochs = 20;
    uint64_t seed = 0;
    double grad_clip = 0.0;     // global-norm clip; 0 disables
    void validate() const;
};

// Flat key=value config file covering both structs. Unknown keys are errors;
// missing keys keep defaults.
struct FileConfig {
    ModelConfig model;
    TrainConfig train;
};

FileConfig parse_config_text(const std::string& text);
FileConfig load_config_file(const std::string& path);
std::string config_to_text(const FileConfig& cfg);

} // namespace coordmotion
