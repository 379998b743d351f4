#pragma once

#include "coordmotion/tensor.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace coordmotion {

// Parent-child joint hierarchy. Joint order is a depth-first traversal so
// that skeletally adjacent joints sit in adjacent rows of the feature maps.
struct KinematicTree {
    std::vector<int> parents;                    // -1 marks the single root
    std::vector<double> bone_lengths;            // meters; root entry is 0
    std::vector<std::string> joint_names;
    std::vector<std::array<double, 3>> rest_dirs;  // unit direction from the parent
    std::vector<std::array<double, 3>> swing_axes; // per-joint rotation axis

    int joints() const { return static_cast<int>(parents.size()); }
    void validate() const;

    static KinematicTree default_human22();
    static KinematicTree chain(int joints);
    static KinematicTree for_joint_count(int joints); // human22 when N==22, else chain
};

struct MotionSequence {
    Tensor frames; // [F x N x 3], meters
    double fps = 25.0;
    std::vector<std::string> joint_order;
    std::string label;

    int frame_count() const { return static_cast<int>(frames.dim(0)); }
    int joints() const { return static_cast<int>(frames.dim(1)); }
};

struct SampleWindow {
    Tensor observed; // [T_p x N x 3]
    Tensor target;   // [T_out x N x 3]
    std::string label;
};

// Motion Text Format: header "joints=<N> dims=3 fps=<float>", optional
// "names=<comma-separated>", then one line of N*3 floats per frame.
MotionSequence parse_motion_file(const std::string& path);
void write_motion_file(const MotionSequence& seq, const std::string& path);

// out[t] = p[t+1] - p[t]
Tensor compute_velocity(const Tensor& p);

std::vector<SampleWindow> window_dataset(const std::vector<MotionSequence>& seqs, int t_p,
                                         int t_out, int stride);

struct JointSinusoid {
    double amplitude = 0.0; // radians (meters for the root translation)
    double frequency_hz = 0.0;
    double phase = 0.0;
};

std::vector<JointSinusoid> random_motion_spec(const KinematicTree& tree, uint64_t seed);

// Joint angles follow the per-joint sinusoids; positions come from forward
// kinematics over the tree, so bone lengths are preserved in every frame.
// The root sinusoid drives a translation along x instead of a rotation.
MotionSequence synthesize_motion(const KinematicTree& tree, const std::vector<JointSinusoid>& spec,
                                 int frames, double fps);
MotionSequence synthesize_motion(const KinematicTree& tree, int frames, double fps, uint64_t seed);

enum class BaselineKind { ZeroVelocity, ConstantVelocity };

Tensor baseline_predict(const Tensor& observed, int t_out, BaselineKind kind);

// Eq.-style mean per joint position error: mean over frames and joints of the
// Euclidean norm of the per-joint error. Same unit as the inputs.
double mpjpe(const Tensor& pred, const Tensor& truth);

// Subtract the root joint (row 0) trajectory from every joint.
MotionSequence remove_global_translation(const MotionSequence& seq);

} // namespace coordmotion
