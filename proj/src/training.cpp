#include "coordmotion/training.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace coordmotion {

double lr_schedule(const TrainConfig& cfg, int epoch) {
    if (epoch < 0) throw std::invalid_argument("lr_schedule: epoch must be >= 0");
    if (epoch >= cfg.lr_floor_epoch) return cfg.lr_floor;
    return cfg.lr0 * std::pow(cfg.lr_decay, epoch);
}

void AdamState::init_for(const ParameterStore& store) {
    t = 0;
    m.clear();
    v.clear();
    for (const auto& [name, tensor] : store.entries()) {
        m.emplace_back(static_cast<size_t>(tensor.numel()), 0.0);
        v.emplace_back(static_cast<size_t>(tensor.numel()), 0.0);
    }
}

void adam_step(ParameterStore& store, AdamState& state, double lr, double beta1, double beta2,
               double eps) {
    if (state.empty()) state.init_for(store);
    if (state.m.size() != store.size()) {
        throw std::invalid_argument("adam state does not match the parameter store");
    }
    state.t += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
    size_t idx = 0;
    for (const auto& [name, entry] : store.entries()) {
        Tensor tensor = entry; // shared handle; writes reach the store
        if (!tensor.has_grad()) {
            throw std::runtime_error("adam_step: missing gradient for parameter '" + name + "'");
        }
        const auto& g = tensor.grad();
        auto& m = state.m[idx];
        auto& v = state.v[idx];
        auto& values = tensor.data();
        for (size_t i = 0; i < values.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            values[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
        ++idx;
    }
}

void clip_global_norm(ParameterStore& store, double max_norm) {
    if (max_norm <= 0.0) return;
    double sq = 0.0;
    for (const auto& [name, tensor] : store.entries()) {
        if (!tensor.has_grad()) continue;
        for (double g : tensor.grad()) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (norm <= max_norm) return;
    const double f = max_norm / norm;
    for (const auto& [name, entry] : store.entries()) {
        Tensor tensor = entry;
        if (!tensor.has_grad()) continue;
        for (double& g : tensor.ensure_grad()) g *= f;
    }
}

namespace {

using nlohmann::json;

json model_config_to_json(const ModelConfig& m) {
    json j;
    j["joints"] = m.joints;
    j["feature_dim"] = m.feature_dim;
    j["trajectory_dim"] = m.trajectory_dim;
    j["observed_frames"] = m.observed_frames;
    j["predicted_frames"] = m.predicted_frames;
    j["timescales"] = m.timescales;
    j["blocks"] = m.block_count;
    json lat = json::array();
    for (auto [a, b] : m.laterals) lat.push_back(json::array({a, b}));
    j["laterals"] = lat;
    j["activation"] = to_string(m.act);
    j["use_gce"] = m.use_gce;
    j["use_lie"] = m.use_lie;
    j["use_affm"] = m.use_affm;
    j["use_relative_joints"] = m.use_relative_joints;
    j["multi_graph"] = m.multi_graph;
    j["similarity"] = to_string(m.similarity);
    j["serial_mode"] = m.serial_mode;
    j["residual_output"] = m.residual_output;
    j["affm_reduction"] = m.affm_reduction;
    j["seed"] = m.seed;
    return j;
}

ModelConfig model_config_from_json(const json& j) {
    ModelConfig m;
    m.joints = j.at("joints").get<int>();
    m.feature_dim = j.at("feature_dim").get<int>();
    m.trajectory_dim = j.at("trajectory_dim").get<int>();
    m.observed_frames = j.at("observed_frames").get<int>();
    m.predicted_frames = j.at("predicted_frames").get<int>();
    m.timescales = j.at("timescales").get<std::vector<int>>();
    m.block_count = j.at("blocks").get<int>();
    m.laterals.clear();
    for (const auto& pair : j.at("laterals")) {
        m.laterals.emplace_back(pair.at(0).get<int>(), pair.at(1).get<int>());
    }
    m.act = activation_from_string(j.at("activation").get<std::string>());
    m.use_gce = j.at("use_gce").get<bool>();
    m.use_lie = j.at("use_lie").get<bool>();
    m.use_affm = j.at("use_affm").get<bool>();
    m.use_relative_joints = j.at("use_relative_joints").get<bool>();
    m.multi_graph = j.at("multi_graph").get<bool>();
    m.similarity = similarity_from_string(j.at("similarity").get<std::string>());
    m.serial_mode = j.at("serial_mode").get<bool>();
    m.residual_output = j.at("residual_output").get<bool>();
    m.affm_reduction = j.at("affm_reduction").get<int>();
    m.seed = j.at("seed").get<uint64_t>();
    return m;
}

json train_config_to_json(const TrainConfig& t) {
    json j;
    j["lr0"] = t.lr0;
    j["lr_decay"] = t.lr_decay;
    j["lr_floor_epoch"] = t.lr_floor_epoch;
    j["lr_floor"] = t.lr_floor;
    j["batch"] = t.batch;
    j["epochs"] = t.epochs;
    j["seed"] = t.seed;
    j["grad_clip"] = t.grad_clip;
    return j;
}

TrainConfig train_config_from_json(const json& j) {
    TrainConfig t;
    t.lr0 = j.at("lr0").get<double>();
    t.lr_decay = j.at("lr_decay").get<double>();
    t.lr_floor_epoch = j.at("lr_floor_epoch").get<int>();
    t.lr_floor = j.at("lr_floor").get<double>();
    t.batch = j.at("batch").get<int>();
    t.epochs = j.at("epochs").get<int>();
    t.seed = j.at("seed").get<uint64_t>();
    t.grad_clip = j.at("grad_clip").get<double>();
    return t;
}

} // namespace

void save_checkpoint(const CjreNet& net, const TrainConfig& train_cfg, int epoch,
                     const AdamState& adam, const std::string& path) {
    json j;
    j["schema_version"] = kCheckpointSchemaVersion;
    j["epoch"] = epoch;
    j["model_config"] = model_config_to_json(net.config());
    j["train_config"] = train_config_to_json(train_cfg);
    json params = json::array();
    for (const auto& [name, tensor] : net.params().entries()) {
        json p;
        p["name"] = name;
        p["shape"] = tensor.shape();
        p["data"] = tensor.data();
        params.push_back(std::move(p));
    }
    j["params"] = std::move(params);
    json moments;
    moments["t"] = adam.t;
    moments["m"] = adam.m.empty() ? json::array() : json(adam.m);
    moments["v"] = adam.v.empty() ? json::array() : json(adam.v);
    j["adam"] = std::move(moments);

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out << j.dump(1) << "\n";
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("corrupt checkpoint " + path + ": " + e.what());
    }
    const int version = j.at("schema_version").get<int>();
    if (version != kCheckpointSchemaVersion) {
        throw std::runtime_error("checkpoint " + path + " has schema_version " +
                                 std::to_string(version) + ", expected " +
                                 std::to_string(kCheckpointSchemaVersion));
    }
    LoadedCheckpoint loaded;
    loaded.epoch = j.at("epoch").get<int>();
    loaded.train = train_config_from_json(j.at("train_config"));
    ModelConfig cfg = model_config_from_json(j.at("model_config"));
    loaded.net = std::make_unique<CjreNet>(cfg);

    const auto& params = j.at("params");
    auto& store = loaded.net->params();
    if (params.size() != store.size()) {
        throw std::runtime_error("checkpoint " + path + " has " + std::to_string(params.size()) +
                                 " parameters, model built from its config has " +
                                 std::to_string(store.size()));
    }
    for (const auto& p : params) {
        const std::string name = p.at("name").get<std::string>();
        if (!store.contains(name)) {
            throw std::runtime_error("checkpoint parameter '" + name + "' unknown to the model");
        }
        Tensor t = store.at(name);
        const auto shape = p.at("shape").get<std::vector<int64_t>>();
        if (shape != t.shape()) {
            throw std::runtime_error("checkpoint parameter '" + name + "' has shape " +
                                     shape_to_string(shape) + ", model expects " +
                                     shape_to_string(t.shape()));
        }
        auto data = p.at("data").get<std::vector<double>>();
        if (data.size() != t.data().size()) {
            throw std::runtime_error("checkpoint parameter '" + name + "' has " +
                                     std::to_string(data.size()) + " values, model expects " +
                                     std::to_string(t.data().size()));
        }
        t.data() = std::move(data);
    }

    const auto& moments = j.at("adam");
    loaded.adam.t = moments.at("t").get<int64_t>();
    loaded.adam.m = moments.at("m").get<std::vector<std::vector<double>>>();
    loaded.adam.v = moments.at("v").get<std::vector<std::vector<double>>>();
    if (!loaded.adam.m.empty()) {
        if (loaded.adam.m.size() != store.size() || loaded.adam.v.size() != store.size()) {
            throw std::runtime_error("checkpoint optimizer moments do not match parameter count");
        }
        size_t idx = 0;
        for (const auto& [name, tensor] : store.entries()) {
            if (loaded.adam.m[idx].size() != tensor.data().size() ||
                loaded.adam.v[idx].size() != tensor.data().size()) {
                throw std::runtime_error("checkpoint optimizer moments for '" + name +
                                         "' have the wrong length");
            }
            ++idx;
        }
    }
    return loaded;
}

namespace {

std::string format_full(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

TrainResult run_training(CjreNet& net, const std::vector<SampleWindow>& dataset,
                         const TrainConfig& cfg, const std::string& out_dir, int max_steps) {
    cfg.validate();
    if (dataset.empty()) throw std::invalid_argument("train: dataset is empty");
    std::filesystem::create_directories(out_dir);
    const std::string log_path = out_dir + "/loss_log.csv";
    const std::string ckpt_path = out_dir + "/latest.ckpt.json";
    std::ofstream log(log_path);
    if (!log) throw std::runtime_error("cannot write loss log: " + log_path);
    log << "step,epoch,lr,loss\n";

    AdamState adam;
    adam.init_for(net.params());
    SeededRng shuffler(cfg.seed);
    std::vector<size_t> order(dataset.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    TrainResult result;
    result.loss_log_path = log_path;
    result.checkpoint_path = ckpt_path;
    int step = 0;
    bool stop = false;
    for (int epoch = 0; epoch < cfg.epochs && !stop; ++epoch) {
        shuffler.shuffle(order);
        const double lr = lr_schedule(cfg, epoch);
        for (size_t start = 0; start < order.size() && !stop; start += cfg.batch) {
            const size_t end = std::min(order.size(), start + cfg.batch);
            net.params().zero_grads();
            ComputeTape tape;
            Tensor batch_loss;
            for (size_t i = start; i < end; ++i) {
                const SampleWindow& w = dataset[order[i]];
                Tensor pred = net.forward(w.observed);
                Tensor sample_loss = mpjpe_loss(pred, w.target);
                batch_loss = batch_loss.defined() ? add(batch_loss, sample_loss) : sample_loss;
            }
            batch_loss = scale(batch_loss, 1.0 / static_cast<double>(end - start));
            const double loss_value = batch_loss.value();
            if (!std::isfinite(loss_value)) {
                throw std::runtime_error("training diverged: non-finite loss at step " +
                                         std::to_string(step));
            }
            tape.backward(batch_loss);
            clip_global_norm(net.params(), cfg.grad_clip);
            adam_step(net.params(), adam, lr);

            log << step << "," << epoch << "," << format_full(lr) << ","
                << format_full(loss_value) << "\n";
            result.losses.push_back(loss_value);
            ++step;
            if (max_steps > 0 && step >= max_steps) stop = true;
        }
        save_checkpoint(net, cfg, epoch, adam, ckpt_path);
    }
    log.flush();
    if (!log) throw std::runtime_error("loss log write failed: " + log_path);
    return result;
}

} // namespace

TrainResult train(const std::vector<SampleWindow>& dataset, const ModelConfig& model_cfg,
                  const TrainConfig& train_cfg, const std::string& out_dir) {
    CjreNet net(model_cfg);
    return run_training(net, dataset, train_cfg, out_dir, 0);
}

TrainResult train_net(CjreNet& net, const std::vector<SampleWindow>& dataset,
                      const TrainConfig& train_cfg, const std::string& out_dir, int max_steps) {
    return run_training(net, dataset, train_cfg, out_dir, max_steps);
}

} // namespace coordmotion
