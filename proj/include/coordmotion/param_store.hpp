#pragma once

#include "coordmotion/rng.hpp"
#include "coordmotion/tensor.hpp"

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace coordmotion {

// Named map of trainable tensors with deterministic (insertion) iteration
// order; the order fixes both checkpoint layout and optimizer traversal.
class ParameterStore {
public:
    // uniform init in [-sqrt(1/fan_in), +sqrt(1/fan_in)]
    Tensor create(const std::string& name, std::vector<int64_t> shape, int64_t fan_in,
                  SeededRng& rng);

    const Tensor& at(const std::string& name) const;
    bool contains(const std::string& name) const { return index_.count(name) != 0; }
    const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
    size_t size() const { return entries_.size(); }
    int64_t total_values() const;
    void zero_grads();

private:
    std::vector<std::pair<std::string, Tensor>> entries_;
    std::unordered_map<std::string, size_t> index_;
};

} // namespace coordmotion
