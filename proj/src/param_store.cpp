#include "coordmotion/param_store.hpp"

#include <cmath>
#include <stdexcept>

namespace coordmotion {

Tensor ParameterStore::create(const std::string& name, std::vector<int64_t> shape, int64_t fan_in,
                              SeededRng& rng) {
    if (index_.count(name)) {
        throw std::invalid_argument("parameter '" + name + "' already exists");
    }
    if (fan_in < 1) throw std::invalid_argument("parameter '" + name + "': fan_in must be >= 1");
    Tensor t = Tensor::zeros(std::move(shape), /*requires_grad=*/true);
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    for (auto& v : t.data()) v = rng.uniform(-bound, bound);
    index_[name] = entries_.size();
    entries_.emplace_back(name, t);
    return t;
}

const Tensor& ParameterStore::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("no parameter named '" + name + "'");
    return entries_[it->second].second;
}

int64_t ParameterStore::total_values() const {
    int64_t n = 0;
    for (const auto& [name, t] : entries_) n += t.numel();
    return n;
}

void ParameterStore::zero_grads() {
    for (auto& [name, t] : entries_) t.zero_grad();
}

} // namespace coordmotion
