#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace coordmotion {

class ComputeTape;

namespace detail {
struct TensorNode {
    std::vector<int64_t> shape;
    std::vector<double> data;
    std::vector<double> grad; // empty until backward touches this node
    bool requires_grad = false;
    const ComputeTape* creator = nullptr; // tape that recorded the producing op
};
} // namespace detail

// Dense row-major tensor of 64-bit floats. Copies are shallow: they share the
// underlying buffer, which is what lets a ParameterStore and a module struct
// alias the same trainable weight. Kernels never mutate their inputs; only
// the optimizer writes through data() in place.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<int64_t> shape, bool requires_grad = false);
    static Tensor full(std::vector<int64_t> shape, double value, bool requires_grad = false);
    static Tensor from_data(std::vector<int64_t> shape, std::vector<double> data,
                            bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const std::vector<int64_t>& shape() const;
    int rank() const { return static_cast<int>(shape().size()); }
    int64_t dim(int axis) const;
    int64_t numel() const;

    std::vector<double>& data();
    const std::vector<double>& data() const;
    double& at(std::initializer_list<int64_t> idx);
    double at(std::initializer_list<int64_t> idx) const;
    double value() const; // scalar tensors only

    bool requires_grad() const;
    void set_requires_grad(bool v);
    bool has_grad() const;
    const std::vector<double>& grad() const; // throws if no grad was produced
    std::vector<double>& ensure_grad();      // allocates a zero buffer on demand
    void zero_grad();                        // drops the grad buffer

    // error if any stored value is NaN/Inf; `what` names the tensor in the message
    void check_finite(const std::string& what) const;

    // node identity (aliasing test / tape bookkeeping)
    const void* id() const { return node_.get(); }

private:
    std::shared_ptr<detail::TensorNode> node_;
    friend class ComputeTape;
    friend const ComputeTape* creator_of(const Tensor& t);
    friend void set_creator(Tensor& t, const ComputeTape* tape);
};

std::string shape_to_string(const std::vector<int64_t>& shape);

// Ordered record of executed kernel applications. Constructing a tape makes
// it the active tape for the current thread (one at a time); ops record onto
// it whenever any input requires a gradient. backward() replays the records
// in reverse, which visits every node in reverse topological order exactly
// once, then resets the tape.
class ComputeTape {
public:
    ComputeTape();
    ~ComputeTape();
    ComputeTape(const ComputeTape&) = delete;
    ComputeTape& operator=(const ComputeTape&) = delete;

    static ComputeTape* active();

    // backward_fn reads output.grad and accumulates into the inputs' grads;
    // it owns (captures) every tensor it needs.
    void record(const Tensor& output, std::function<void()> backward_fn);

    // Seeds d(loss)/d(loss) = 1 and propagates. loss must be a scalar that
    // this tape recorded; afterwards the tape is reset for reuse.
    void backward(const Tensor& loss);

    size_t size() const { return records_.size(); }

private:
    struct Record {
        Tensor output;
        std::function<void()> fn;
    };
    std::vector<Record> records_;
};

} // namespace coordmotion
