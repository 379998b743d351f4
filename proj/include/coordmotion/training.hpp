#pragma once

#include "coordmotion/config.hpp"
#include "coordmotion/motion.hpp"
#include "coordmotion/network.hpp"

#include <memory>
#include <string>
#include <vector>

namespace coordmotion {

// lr0 * decay^epoch before lr_floor_epoch, lr_floor from then on
double lr_schedule(const TrainConfig& cfg, int epoch);

// First-/second-moment buffers per parameter, in store order.
struct AdamState {
    int64_t t = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;

    void init_for(const ParameterStore& store);
    bool empty() const { return m.empty(); }
};

// Standard bias-corrected Adam over the store's grad slots, applied in
// deterministic parameter order. Throws if a trainable parameter has no
// gradient.
void adam_step(ParameterStore& store, AdamState& state, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

// Scale all grads so the global L2 norm is at most max_norm (no-op if 0).
void clip_global_norm(ParameterStore& store, double max_norm);

constexpr int kCheckpointSchemaVersion = 1;

void save_checkpoint(const CjreNet& net, const TrainConfig& train_cfg, int epoch,
                     const AdamState& adam, const std::string& path);

struct LoadedCheckpoint {
    std::unique_ptr<CjreNet> net;
    TrainConfig train;
    AdamState adam;
    int epoch = 0;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

struct TrainResult {
    std::string checkpoint_path;
    std::string loss_log_path;
    std::vector<double> losses; // one entry per step
};

// Seeded shuffling per epoch, per-step loss appended to out_dir/loss_log.csv
// (step,epoch,lr,loss), checkpoint rewritten each epoch.
TrainResult train(const std::vector<SampleWindow>& dataset, const ModelConfig& model_cfg,
                  const TrainConfig& train_cfg, const std::string& out_dir);

// Same loop against an existing net (the ablation/overfit harness).
TrainResult train_net(CjreNet& net, const std::vector<SampleWindow>& dataset,
                      const TrainConfig& train_cfg, const std::string& out_dir,
                      int max_steps = 0);

} // namespace coordmotion
