#pragma once

#include "coordmotion/affm.hpp"
#include "coordmotion/motion.hpp"
#include "coordmotion/network.hpp"

#include <map>
#include <string>
#include <vector>

namespace coordmotion {

// COORDMOTION_THREADS, default 1
int thread_count_from_env();

struct HorizonRow {
    int ms = 0;
    int frame = 0; // 1-based predicted frame index
    double model_mm = 0.0;
    double zero_vel_mm = 0.0;
    double const_vel_mm = 0.0;
};

struct MetricsReport {
    std::vector<HorizonRow> rows;
    std::map<std::string, std::vector<HorizonRow>> per_action;
    std::map<std::string, FusionReport> fusion_per_action; // dataset-mean gate per action
    bool has_fusion = false;
};

// ms -> 1-based frame index at the sequence fps; errors if beyond T_out
int horizon_to_frame(int ms, double fps, int t_out);

// Per-horizon MPJPE (mm): error at that single frame, averaged over joints
// and samples, alongside the zero-/constant-velocity baselines.
MetricsReport evaluate(const CjreNet& net, const std::vector<SampleWindow>& windows,
                       const std::vector<int>& horizons_ms, double fps, int threads = 1);

std::string format_metrics_table(const MetricsReport& report);
std::string format_fusion_table(const MetricsReport& report);
void write_metrics_csv(const MetricsReport& report, const std::string& path);

} // namespace coordmotion
