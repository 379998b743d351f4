#include "coordmotion/metrics.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace coordmotion {

int thread_count_from_env() {
    const char* v = std::getenv("COORDMOTION_THREADS");
    if (!v) return 1;
    const int n = std::atoi(v);
    return n < 1 ? 1 : n;
}

int horizon_to_frame(int ms, double fps, int t_out) {
    const int frame = static_cast<int>(std::lround(ms * fps / 1000.0));
    if (frame < 1) {
        throw std::invalid_argument("horizon " + std::to_string(ms) + " ms is below one frame at " +
                                    std::to_string(fps) + " fps");
    }
    if (frame > t_out) {
        throw std::invalid_argument("horizon " + std::to_string(ms) + " ms needs frame " +
                                    std::to_string(frame) + " but the model predicts only " +
                                    std::to_string(t_out));
    }
    return frame;
}

namespace {

// error at one predicted frame (1-based), averaged over joints
double frame_error(const Tensor& pred, const Tensor& truth, int frame) {
    const int64_t n = pred.dim(1);
    const auto& pd = pred.data();
    const auto& td = truth.data();
    const int64_t off = static_cast<int64_t>(frame - 1) * n * 3;
    double acc = 0.0;
    for (int64_t j = 0; j < n; ++j) {
        const double ex = pd[off + j * 3] - td[off + j * 3];
        const double ey = pd[off + j * 3 + 1] - td[off + j * 3 + 1];
        const double ez = pd[off + j * 3 + 2] - td[off + j * 3 + 2];
        acc += std::sqrt(ex * ex + ey * ey + ez * ez);
    }
    return acc / static_cast<double>(n);
}

struct SampleResult {
    std::vector<double> model, zero, cvel; // per horizon
    std::vector<double> mean_ratio;        // mean over blocks; empty without AFFM
    std::string label;
};

} // namespace

MetricsReport evaluate(const CjreNet& net, const std::vector<SampleWindow>& windows,
                       const std::vector<int>& horizons_ms, double fps, int threads) {
    if (windows.empty()) throw std::invalid_argument("evaluate: no windows");
    for (size_t i = 1; i < horizons_ms.size(); ++i) {
        if (horizons_ms[i] <= horizons_ms[i - 1]) {
            throw std::invalid_argument("evaluate: horizons must be strictly increasing");
        }
    }
    const int t_out = net.config().predicted_frames;
    std::vector<int> frames;
    frames.reserve(horizons_ms.size());
    for (int ms : horizons_ms) frames.push_back(horizon_to_frame(ms, fps, t_out));

    const bool with_fusion = net.config().use_affm && net.config().stream_count() == 3;
    std::vector<SampleResult> results(windows.size());
    auto eval_range = [&](size_t begin, size_t end) {
        for (size_t i = begin; i < end; ++i) {
            const SampleWindow& w = windows[i];
            ForwardTrace trace;
            Tensor pred = net.forward(w.observed, with_fusion ? &trace : nullptr);
            Tensor zero = baseline_predict(w.observed, t_out, BaselineKind::ZeroVelocity);
            Tensor cvel = baseline_predict(w.observed, t_out, BaselineKind::ConstantVelocity);
            SampleResult& r = results[i];
            r.label = w.label;
            for (int f : frames) {
                r.model.push_back(frame_error(pred, w.target, f));
                r.zero.push_back(frame_error(zero, w.target, f));
                r.cvel.push_back(frame_error(cvel, w.target, f));
            }
            if (with_fusion && !trace.block_ratios.empty()) {
                r.mean_ratio.assign(trace.block_ratios[0].size(), 0.0);
                for (const auto& ratio : trace.block_ratios) {
                    for (size_t k = 0; k < ratio.size(); ++k) r.mean_ratio[k] += ratio[k];
                }
                for (double& v : r.mean_ratio) v /= static_cast<double>(trace.block_ratios.size());
            }
        }
    };

    if (threads <= 1 || windows.size() < 2) {
        eval_range(0, windows.size());
    } else {
        const size_t workers = std::min<size_t>(static_cast<size_t>(threads), windows.size());
        std::vector<std::thread> pool;
        const size_t chunk = (windows.size() + workers - 1) / workers;
        for (size_t w = 0; w < workers; ++w) {
            const size_t begin = w * chunk;
            const size_t end = std::min(windows.size(), begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(eval_range, begin, end);
        }
        for (auto& th : pool) th.join();
    }

    MetricsReport report;
    report.has_fusion = with_fusion;
    std::map<std::string, std::vector<size_t>> by_action;
    for (size_t i = 0; i < results.size(); ++i) by_action[results[i].label].push_back(i);

    auto average_rows = [&](const std::vector<size_t>& idx) {
        std::vector<HorizonRow> rows(horizons_ms.size());
        for (size_t h = 0; h < horizons_ms.size(); ++h) {
            HorizonRow& row = rows[h];
            row.ms = horizons_ms[h];
            row.frame = frames[h];
            for (size_t i : idx) {
                row.model_mm += results[i].model[h];
                row.zero_vel_mm += results[i].zero[h];
                row.const_vel_mm += results[i].cvel[h];
            }
            const double k = 1000.0 / static_cast<double>(idx.size()); // meters -> mm
            row.model_mm *= k;
            row.zero_vel_mm *= k;
            row.const_vel_mm *= k;
        }
        return rows;
    };

    std::vector<size_t> all(results.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = i;
    report.rows = average_rows(all);
    for (const auto& [label, idx] : by_action) {
        report.per_action[label] = average_rows(idx);
        if (with_fusion) {
            std::vector<double> mean(results[idx[0]].mean_ratio.size(), 0.0);
            for (size_t i : idx) {
                for (size_t k = 0; k < mean.size(); ++k) mean[k] += results[i].mean_ratio[k];
            }
            for (double& v : mean) v /= static_cast<double>(idx.size());
            report.fusion_per_action[label] = relative_weights(mean);
        }
    }
    return report;
}

std::string format_metrics_table(const MetricsReport& report) {
    std::ostringstream os;
    os << std::left << std::setw(12) << "time(ms)";
    for (const auto& row : report.rows) os << std::right << std::setw(10) << row.ms;
    os << "\n";
    auto line = [&](const std::string& name, double HorizonRow::* field) {
        os << std::left << std::setw(12) << name;
        for (const auto& row : report.rows) {
            os << std::right << std::setw(10) << std::fixed << std::setprecision(2) << row.*field;
        }
        os << "\n";
    };
    line("model", &HorizonRow::model_mm);
    line("zero_vel", &HorizonRow::zero_vel_mm);
    line("const_vel", &HorizonRow::const_vel_mm);
    return os.str();
}

std::string format_fusion_table(const MetricsReport& report) {
    std::ostringstream os;
    os << std::left << std::setw(20) << "motion" << std::right << std::setw(12) << "w_distant"
       << std::setw(12) << "w_adjacent" << std::setw(12) << "w_ca" << "\n";
    for (const auto& [label, fusion] : report.fusion_per_action) {
        os << std::left << std::setw(20) << label << std::right << std::setw(12) << std::fixed
           << std::setprecision(2) << fusion.w_distant << std::setw(12) << fusion.w_adjacent
           << std::setw(12) << fusion.w_ca << "\n";
    }
    return os.str();
}

void write_metrics_csv(const MetricsReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write metrics csv: " + path);
    out << "horizon_ms,model,zero_vel,const_vel\n";
    out << std::fixed << std::setprecision(6);
    for (const auto& row : report.rows) {
        out << row.ms << "," << row.model_mm << "," << row.zero_vel_mm << "," << row.const_vel_mm
            << "\n";
    }
    if (!out) throw std::runtime_error("metrics csv write failed: " + path);
}

} // namespace coordmotion
