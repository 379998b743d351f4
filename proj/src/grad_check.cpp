#include "coordmotion/grad_check.hpp"

#include <cmath>
#include <stdexcept>

namespace coordmotion {

GradCheckReport grad_check(const std::function<Tensor()>& f,
                           const std::vector<std::pair<std::string, Tensor>>& params, double h) {
    if (h <= 0.0) throw std::invalid_argument("grad_check requires h > 0");

    const double v0 = f().value();
    const double v1 = f().value();
    if (v0 != v1) {
        throw std::runtime_error("grad_check: objective is not deterministic (" +
                                 std::to_string(v0) + " vs " + std::to_string(v1) + ")");
    }

    // analytic gradients
    std::vector<std::vector<double>> analytic;
    {
        for (const auto& [name, t] : params) {
            Tensor copy = t;
            copy.zero_grad();
        }
        ComputeTape tape;
        Tensor loss = f();
        tape.backward(loss);
        for (const auto& [name, t] : params) {
            if (t.has_grad()) {
                analytic.push_back(t.grad());
            } else {
                analytic.emplace_back(t.numel(), 0.0);
            }
        }
    }

    GradCheckReport report;
    for (size_t p = 0; p < params.size(); ++p) {
        Tensor t = params[p].second;
        GradCheckEntry entry;
        entry.name = params[p].first;
        auto& values = t.data();
        for (int64_t i = 0; i < t.numel(); ++i) {
            const double orig = values[static_cast<size_t>(i)];
            const double step = h * std::max(1.0, std::abs(orig));
            values[static_cast<size_t>(i)] = orig + step;
            const double plus = f().value();
            values[static_cast<size_t>(i)] = orig - step;
            const double minus = f().value();
            values[static_cast<size_t>(i)] = orig;
            const double fd = (plus - minus) / (2.0 * step);
            const double ad = analytic[p][static_cast<size_t>(i)];
            const double rel = std::abs(ad - fd) / std::max({1.0, std::abs(ad), std::abs(fd)});
            if (rel > entry.max_rel_err) {
                entry.max_rel_err = rel;
                entry.worst_index = i;
                entry.analytic = ad;
                entry.numeric = fd;
            }
        }
        report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
        report.params.push_back(std::move(entry));
    }
    return report;
}

} // namespace coordmotion
