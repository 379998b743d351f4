#include "coordmotion/motion.hpp"

#include "coordmotion/rng.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace coordmotion {

void KinematicTree::validate() const {
    const int n = joints();
    if (n < 2) throw std::invalid_argument("kinematic tree needs at least 2 joints");
    if (static_cast<int>(bone_lengths.size()) != n || static_cast<int>(joint_names.size()) != n ||
        static_cast<int>(rest_dirs.size()) != n || static_cast<int>(swing_axes.size()) != n) {
        throw std::invalid_argument("kinematic tree field lengths disagree");
    }
    int roots = 0;
    for (int j = 0; j < n; ++j) {
        if (parents[j] == -1) {
            ++roots;
            continue;
        }
        if (parents[j] < 0 || parents[j] >= n) {
            throw std::invalid_argument("kinematic tree parent index out of range at joint " +
                                        std::to_string(j));
        }
        // walk to the root; a cycle never reaches it
        int hops = 0, p = j;
        while (p != -1) {
            p = parents[p];
            if (++hops > n) {
                throw std::invalid_argument("kinematic tree contains a cycle at joint " +
                                            std::to_string(j));
            }
        }
        if (bone_lengths[j] <= 0.0) {
            throw std::invalid_argument("kinematic tree bone length must be positive at joint " +
                                        std::to_string(j));
        }
    }
    if (roots != 1) {
        throw std::invalid_argument("kinematic tree must have exactly one root, found " +
                                    std::to_string(roots));
    }
}

KinematicTree KinematicTree::default_human22() {
    KinematicTree t;
    struct J {
        const char* name;
        int parent;
        double len;
        std::array<double, 3> dir;
        std::array<double, 3> axis;
    };
    // depth-first order: pelvis, spine chain + head, left arm, right arm,
    // left leg, right leg
    const J joints[22] = {
        {"pelvis", -1, 0.0, {0, 1, 0}, {1, 0, 0}},
        {"spine1", 0, 0.12, {0, 1, 0}, {1, 0, 0}},
        {"spine2", 1, 0.12, {0, 1, 0}, {1, 0, 0}},
        {"spine3", 2, 0.12, {0, 1, 0}, {1, 0, 0}},
        {"neck", 3, 0.10, {0, 1, 0}, {1, 0, 0}},
        {"head", 4, 0.10, {0, 1, 0}, {1, 0, 0}},
        {"l_shoulder", 3, 0.18, {1, 0, 0}, {0, 0, 1}},
        {"l_elbow", 6, 0.28, {0, -1, 0}, {0, 0, 1}},
        {"l_wrist", 7, 0.25, {0, -1, 0}, {0, 0, 1}},
        {"l_hand", 8, 0.08, {0, -1, 0}, {1, 0, 0}},
        {"r_shoulder", 3, 0.18, {-1, 0, 0}, {0, 0, 1}},
        {"r_elbow", 10, 0.28, {0, -1, 0}, {0, 0, 1}},
        {"r_wrist", 11, 0.25, {0, -1, 0}, {0, 0, 1}},
        {"r_hand", 12, 0.08, {0, -1, 0}, {1, 0, 0}},
        {"l_hip", 0, 0.10, {1, 0, 0}, {1, 0, 0}},
        {"l_knee", 14, 0.40, {0, -1, 0}, {1, 0, 0}},
        {"l_ankle", 15, 0.40, {0, -1, 0}, {1, 0, 0}},
        {"l_foot", 16, 0.15, {0, 0, 1}, {1, 0, 0}},
        {"r_hip", 0, 0.10, {-1, 0, 0}, {1, 0, 0}},
        {"r_knee", 18, 0.40, {0, -1, 0}, {1, 0, 0}},
        {"r_ankle", 19, 0.40, {0, -1, 0}, {1, 0, 0}},
        {"r_foot", 20, 0.15, {0, 0, 1}, {1, 0, 0}},
    };
    for (const J& j : joints) {
        t.joint_names.push_back(j.name);
        t.parents.push_back(j.parent);
        t.bone_lengths.push_back(j.len);
        t.rest_dirs.push_back(j.dir);
        t.swing_axes.push_back(j.axis);
    }
    return t;
}

KinematicTree KinematicTree::chain(int joints) {
    if (joints < 2) throw std::invalid_argument("chain tree needs at least 2 joints");
    KinematicTree t;
    for (int j = 0; j < joints; ++j) {
        t.joint_names.push_back("j" + std::to_string(j));
        t.parents.push_back(j - 1);
        t.bone_lengths.push_back(j == 0 ? 0.0 : 0.25);
        t.rest_dirs.push_back({0, 1, 0});
        // alternate swing planes along the chain
        t.swing_axes.push_back(j % 2 == 0 ? std::array<double, 3>{1, 0, 0}
                                          : std::array<double, 3>{0, 0, 1});
    }
    return t;
}

KinematicTree KinematicTree::for_joint_count(int joints) {
    return joints == 22 ? default_human22() : chain(joints);
}

namespace {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

MotionSequence parse_motion_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open motion file: " + path);

    std::string line;
    int line_no = 0;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    ++line_no;

    int joints = 0, dims = 0;
    double fps = 0.0;
    {
        std::istringstream hs(line);
        std::string tok;
        while (hs >> tok) {
            auto eq = tok.find('=');
            if (eq == std::string::npos) {
                throw std::runtime_error(path + ":1: malformed header token '" + tok + "'");
            }
            const std::string key = tok.substr(0, eq);
            const std::string val = tok.substr(eq + 1);
            try {
                if (key == "joints") joints = std::stoi(val);
                else if (key == "dims") dims = std::stoi(val);
                else if (key == "fps") fps = std::stod(val);
                else throw std::runtime_error(path + ":1: unknown header key '" + key + "'");
            } catch (const std::runtime_error&) {
                throw;
            } catch (const std::exception&) {
                throw std::runtime_error(path + ":1: non-numeric header value '" + val + "'");
            }
        }
    }
    if (joints < 2 || dims != 3 || fps <= 0.0) {
        throw std::runtime_error(path + ":1: header must declare joints>=2 dims=3 fps>0");
    }

    MotionSequence seq;
    seq.fps = fps;

    std::vector<double> values;
    bool names_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (!names_seen && values.empty() && line.rfind("names=", 0) == 0) {
            names_seen = true;
            std::stringstream ns(line.substr(6));
            std::string name;
            while (std::getline(ns, name, ',')) seq.joint_order.push_back(name);
            if (static_cast<int>(seq.joint_order.size()) != joints) {
                throw std::runtime_error(path + ":" + std::to_string(line_no) + ": names line has " +
                                         std::to_string(seq.joint_order.size()) + " entries, expected " +
                                         std::to_string(joints));
            }
            continue;
        }
        std::istringstream ls(line);
        std::string tok;
        int count = 0;
        while (ls >> tok) {
            double v;
            try {
                size_t used = 0;
                v = std::stod(tok, &used);
                if (used != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": non-numeric token '" + tok + "'");
            }
            values.push_back(v);
            ++count;
        }
        if (count != joints * 3) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected " +
                                     std::to_string(joints * 3) + " values, got " +
                                     std::to_string(count));
        }
    }
    const int frames = static_cast<int>(values.size()) / (joints * 3);
    if (frames < 1) throw std::runtime_error(path + ": no frame lines");
    if (seq.joint_order.empty()) {
        for (int j = 0; j < joints; ++j) seq.joint_order.push_back("j" + std::to_string(j));
    }
    seq.frames = Tensor::from_data({frames, joints, 3}, std::move(values));

    // label from the file name, e.g. "walk_003.motion.txt" -> "walk"
    auto slash = path.find_last_of("/\\");
    std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
    auto dot = base.find('.');
    if (dot != std::string::npos) base = base.substr(0, dot);
    auto us = base.find_last_of('_');
    if (us != std::string::npos && us > 0 &&
        base.find_first_not_of("0123456789", us + 1) == std::string::npos) {
        base = base.substr(0, us);
    }
    seq.label = base;
    return seq;
}

void write_motion_file(const MotionSequence& seq, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write motion file: " + path);
    out << "joints=" << seq.joints() << " dims=3 fps=" << format_double(seq.fps) << "\n";
    if (!seq.joint_order.empty()) {
        out << "names=";
        for (size_t i = 0; i < seq.joint_order.size(); ++i) {
            out << (i ? "," : "") << seq.joint_order[i];
        }
        out << "\n";
    }
    const auto& d = seq.frames.data();
    const int per_frame = seq.joints() * 3;
    for (int f = 0; f < seq.frame_count(); ++f) {
        for (int k = 0; k < per_frame; ++k) {
            out << (k ? " " : "") << format_double(d[static_cast<size_t>(f * per_frame + k)]);
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

Tensor compute_velocity(const Tensor& p) {
    if (p.rank() != 3 || p.dim(0) < 2) {
        throw std::invalid_argument("compute_velocity needs [T>=2 x N x 3], got " +
                                    shape_to_string(p.shape()));
    }
    const int64_t t = p.dim(0), n = p.dim(1);
    Tensor v = Tensor::zeros({t - 1, n, 3});
    const auto& pd = p.data();
    auto& vd = v.data();
    const int64_t block = n * 3;
    for (int64_t f = 0; f + 1 < t; ++f) {
        for (int64_t k = 0; k < block; ++k) {
            vd[f * block + k] = pd[(f + 1) * block + k] - pd[f * block + k];
        }
    }
    return v;
}

std::vector<SampleWindow> window_dataset(const std::vector<MotionSequence>& seqs, int t_p,
                                         int t_out, int stride) {
    if (t_p < 2 || t_out < 1 || stride < 1) {
        throw std::invalid_argument("window_dataset: need t_p >= 2, t_out >= 1, stride >= 1");
    }
    std::vector<SampleWindow> out;
    const int total = t_p + t_out;
    for (const MotionSequence& seq : seqs) {
        const int64_t n = seq.joints();
        const auto& d = seq.frames.data();
        const int64_t block = n * 3;
        for (int start = 0; start + total <= seq.frame_count(); start += stride) {
            SampleWindow w;
            w.label = seq.label;
            w.observed = Tensor::from_data(
                {t_p, n, 3}, std::vector<double>(d.begin() + start * block,
                                                 d.begin() + (start + t_p) * block));
            w.target = Tensor::from_data(
                {t_out, n, 3}, std::vector<double>(d.begin() + (start + t_p) * block,
                                                   d.begin() + (start + total) * block));
            out.push_back(std::move(w));
        }
    }
    return out;
}

std::vector<JointSinusoid> random_motion_spec(const KinematicTree& tree, uint64_t seed) {
    SeededRng rng(seed * 0x51c64d65a5b3f1ull + 17);
    std::vector<JointSinusoid> spec(static_cast<size_t>(tree.joints()));
    for (int j = 0; j < tree.joints(); ++j) {
        JointSinusoid& s = spec[static_cast<size_t>(j)];
        if (tree.parents[j] == -1) {
            s.amplitude = rng.uniform(0.05, 0.2); // root translation, meters
            s.frequency_hz = rng.uniform(0.4, 1.2);
        } else {
            s.amplitude = rng.uniform(0.15, 0.55);
            s.frequency_hz = rng.uniform(0.6, 2.5);
        }
        s.phase = rng.uniform(0.0, 2.0 * M_PI);
    }
    return spec;
}

namespace {

using Mat3 = std::array<double, 9>;

Mat3 axis_angle(const std::array<double, 3>& axis, double angle) {
    double ax = axis[0], ay = axis[1], az = axis[2];
    const double norm = std::sqrt(ax * ax + ay * ay + az * az);
    if (norm < 1e-12) return {1, 0, 0, 0, 1, 0, 0, 0, 1};
    ax /= norm;
    ay /= norm;
    az /= norm;
    const double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
    return {t * ax * ax + c,      t * ax * ay - s * az, t * ax * az + s * ay,
            t * ax * ay + s * az, t * ay * ay + c,      t * ay * az - s * ax,
            t * ax * az - s * ay, t * ay * az + s * ax, t * az * az + c};
}

Mat3 matmul3(const Mat3& a, const Mat3& b) {
    Mat3 o{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) o[i * 3 + j] += a[i * 3 + k] * b[k * 3 + j];
    return o;
}

std::array<double, 3> apply3(const Mat3& m, const std::array<double, 3>& v) {
    return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2], m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
            m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
}

} // namespace

MotionSequence synthesize_motion(const KinematicTree& tree, const std::vector<JointSinusoid>& spec,
                                 int frames, double fps) {
    tree.validate();
    if (frames < 1) throw std::invalid_argument("synthesize_motion: frames must be >= 1");
    if (fps <= 0.0) throw std::invalid_argument("synthesize_motion: fps must be > 0");
    if (spec.size() != static_cast<size_t>(tree.joints())) {
        throw std::invalid_argument("synthesize_motion: spec must have one entry per joint");
    }
    const int n = tree.joints();

    // children-after-parents evaluation order
    std::vector<int> order;
    order.reserve(static_cast<size_t>(n));
    std::vector<bool> placed(static_cast<size_t>(n), false);
    while (static_cast<int>(order.size()) < n) {
        for (int j = 0; j < n; ++j) {
            if (placed[static_cast<size_t>(j)]) continue;
            if (tree.parents[j] == -1 || placed[static_cast<size_t>(tree.parents[j])]) {
                order.push_back(j);
                placed[static_cast<size_t>(j)] = true;
            }
        }
    }

    MotionSequence seq;
    seq.fps = fps;
    seq.joint_order = tree.joint_names;
    seq.frames = Tensor::zeros({frames, n, 3});
    auto& fd = seq.frames.data();

    std::vector<Mat3> global_rot(static_cast<size_t>(n));
    std::vector<std::array<double, 3>> pos(static_cast<size_t>(n));
    for (int f = 0; f < frames; ++f) {
        const double time = static_cast<double>(f) / fps;
        for (int j : order) {
            const JointSinusoid& s = spec[static_cast<size_t>(j)];
            const double angle =
                s.amplitude * std::sin(2.0 * M_PI * s.frequency_hz * time + s.phase);
            if (tree.parents[j] == -1) {
                // root sinusoid drives an x translation
                pos[static_cast<size_t>(j)] = {angle, 0.0, 0.0};
                global_rot[static_cast<size_t>(j)] = {1, 0, 0, 0, 1, 0, 0, 0, 1};
            } else {
                const int p = tree.parents[j];
                const Mat3 local = axis_angle(tree.swing_axes[static_cast<size_t>(j)], angle);
                global_rot[static_cast<size_t>(j)] =
                    matmul3(global_rot[static_cast<size_t>(p)], local);
                std::array<double, 3> bone = tree.rest_dirs[static_cast<size_t>(j)];
                for (double& c : bone) c *= tree.bone_lengths[static_cast<size_t>(j)];
                const auto offset = apply3(global_rot[static_cast<size_t>(j)], bone);
                for (int c = 0; c < 3; ++c) {
                    pos[static_cast<size_t>(j)][static_cast<size_t>(c)] =
                        pos[static_cast<size_t>(p)][static_cast<size_t>(c)] +
                        offset[static_cast<size_t>(c)];
                }
            }
            for (int c = 0; c < 3; ++c) {
                fd[static_cast<size_t>((f * n + j) * 3 + c)] =
                    pos[static_cast<size_t>(j)][static_cast<size_t>(c)];
            }
        }
    }
    seq.label = "synthetic";
    return seq;
}

MotionSequence synthesize_motion(const KinematicTree& tree, int frames, double fps, uint64_t seed) {
    MotionSequence seq = synthesize_motion(tree, random_motion_spec(tree, seed), frames, fps);
    seq.label = "synthetic_seed" + std::to_string(seed);
    return seq;
}

Tensor baseline_predict(const Tensor& observed, int t_out, BaselineKind kind) {
    if (observed.rank() != 3 || observed.dim(2) != 3) {
        throw std::invalid_argument("baseline_predict expects [T_p x N x 3], got " +
                                    shape_to_string(observed.shape()));
    }
    const int64_t t_p = observed.dim(0), n = observed.dim(1);
    if (t_out < 1) throw std::invalid_argument("baseline_predict: t_out must be >= 1");
    if (kind == BaselineKind::ConstantVelocity && t_p < 2) {
        throw std::invalid_argument("constant_velocity baseline needs at least 2 observed frames");
    }
    Tensor out = Tensor::zeros({t_out, n, 3});
    const auto& od = observed.data();
    auto& rd = out.data();
    const int64_t block = n * 3;
    const double* last = od.data() + (t_p - 1) * block;
    const double* prev = t_p >= 2 ? od.data() + (t_p - 2) * block : nullptr;
    for (int64_t f = 0; f < t_out; ++f) {
        for (int64_t k = 0; k < block; ++k) {
            if (kind == BaselineKind::ZeroVelocity) {
                rd[f * block + k] = last[k];
            } else {
                rd[f * block + k] = last[k] + static_cast<double>(f + 1) * (last[k] - prev[k]);
            }
        }
    }
    return out;
}

double mpjpe(const Tensor& pred, const Tensor& truth) {
    if (pred.shape() != truth.shape()) {
        throw std::invalid_argument("mpjpe shape mismatch: " + shape_to_string(pred.shape()) +
                                    " vs " + shape_to_string(truth.shape()));
    }
    if (pred.rank() != 3 || pred.dim(2) != 3) {
        throw std::invalid_argument("mpjpe expects [T x N x 3], got " +
                                    shape_to_string(pred.shape()));
    }
    const auto& pd = pred.data();
    const auto& td = truth.data();
    const int64_t total = pred.dim(0) * pred.dim(1);
    double acc = 0.0;
    for (int64_t j = 0; j < total; ++j) {
        const double ex = pd[j * 3] - td[j * 3];
        const double ey = pd[j * 3 + 1] - td[j * 3 + 1];
        const double ez = pd[j * 3 + 2] - td[j * 3 + 2];
        acc += std::sqrt(ex * ex + ey * ey + ez * ez);
    }
    return acc / static_cast<double>(total);
}

MotionSequence remove_global_translation(const MotionSequence& seq) {
    MotionSequence out = seq;
    out.frames = Tensor::from_data(seq.frames.shape(), seq.frames.data());
    auto& d = out.frames.data();
    const int64_t n = seq.joints();
    for (int f = 0; f < seq.frame_count(); ++f) {
        const double rx = d[static_cast<size_t>(f * n * 3)];
        const double ry = d[static_cast<size_t>(f * n * 3 + 1)];
        const double rz = d[static_cast<size_t>(f * n * 3 + 2)];
        for (int64_t j = 0; j < n; ++j) {
            d[static_cast<size_t>((f * n + j) * 3)] -= rx;
            d[static_cast<size_t>((f * n + j) * 3 + 1)] -= ry;
            d[static_cast<size_t>((f * n + j) * 3 + 2)] -= rz;
        }
    }
    return out;
}

} // namespace coordmotion
