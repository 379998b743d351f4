#include "coordmotion/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace coordmotion {

namespace {

int64_t product(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (int64_t d : shape) n *= d;
    return n;
}

void validate_shape(const std::vector<int64_t>& shape) {
    for (int64_t d : shape) {
        if (d <= 0) {
            throw std::invalid_argument("tensor shape must have positive axis lengths, got " +
                                        shape_to_string(shape));
        }
    }
}

thread_local ComputeTape* g_active_tape = nullptr;

} // namespace

std::string shape_to_string(const std::vector<int64_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << " x ";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

Tensor Tensor::zeros(std::vector<int64_t> shape, bool requires_grad) {
    return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(std::vector<int64_t> shape, double value, bool requires_grad) {
    validate_shape(shape);
    Tensor t;
    t.node_ = std::make_shared<detail::TensorNode>();
    t.node_->data.assign(static_cast<size_t>(product(shape)), value);
    t.node_->shape = std::move(shape);
    t.node_->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::from_data(std::vector<int64_t> shape, std::vector<double> data, bool requires_grad) {
    validate_shape(shape);
    if (product(shape) != static_cast<int64_t>(data.size())) {
        throw std::invalid_argument("tensor data length " + std::to_string(data.size()) +
                                    " does not match shape " + shape_to_string(shape));
    }
    Tensor t;
    t.node_ = std::make_shared<detail::TensorNode>();
    t.node_->shape = std::move(shape);
    t.node_->data = std::move(data);
    t.node_->requires_grad = requires_grad;
    t.check_finite("tensor data");
    return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from_data({1}, {value}, requires_grad);
}

const std::vector<int64_t>& Tensor::shape() const {
    if (!node_) throw std::logic_error("operation on an undefined tensor");
    return node_->shape;
}

int64_t Tensor::dim(int axis) const {
    const auto& s = shape();
    if (axis < 0 || axis >= static_cast<int>(s.size())) {
        throw std::out_of_range("axis " + std::to_string(axis) + " out of range for shape " +
                                shape_to_string(s));
    }
    return s[axis];
}

int64_t Tensor::numel() const { return product(shape()); }

std::vector<double>& Tensor::data() {
    if (!node_) throw std::logic_error("operation on an undefined tensor");
    return node_->data;
}

const std::vector<double>& Tensor::data() const {
    if (!node_) throw std::logic_error("operation on an undefined tensor");
    return node_->data;
}

namespace {
size_t flat_index(const std::vector<int64_t>& shape, std::initializer_list<int64_t> idx) {
    if (idx.size() != shape.size()) {
        throw std::invalid_argument("index rank " + std::to_string(idx.size()) +
                                    " does not match tensor rank " + std::to_string(shape.size()));
    }
    size_t flat = 0;
    size_t d = 0;
    for (int64_t i : idx) {
        if (i < 0 || i >= shape[d]) {
            throw std::out_of_range("index " + std::to_string(i) + " out of range on axis " +
                                    std::to_string(d) + " of " + shape_to_string(shape));
        }
        flat = flat * static_cast<size_t>(shape[d]) + static_cast<size_t>(i);
        ++d;
    }
    return flat;
}
} // namespace

double& Tensor::at(std::initializer_list<int64_t> idx) { return data()[flat_index(shape(), idx)]; }

double Tensor::at(std::initializer_list<int64_t> idx) const {
    return data()[flat_index(shape(), idx)];
}

double Tensor::value() const {
    if (numel() != 1) {
        throw std::invalid_argument("value() requires a scalar tensor, got shape " +
                                    shape_to_string(shape()));
    }
    return data()[0];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

void Tensor::set_requires_grad(bool v) {
    if (!node_) throw std::logic_error("operation on an undefined tensor");
    node_->requires_grad = v;
}

bool Tensor::has_grad() const { return node_ && !node_->grad.empty(); }

const std::vector<double>& Tensor::grad() const {
    if (!has_grad()) {
        throw std::logic_error("tensor has no gradient (backward never reached it)");
    }
    return node_->grad;
}

std::vector<double>& Tensor::ensure_grad() {
    if (!node_) throw std::logic_error("operation on an undefined tensor");
    if (node_->grad.empty()) node_->grad.assign(node_->data.size(), 0.0);
    return node_->grad;
}

void Tensor::zero_grad() {
    if (node_) node_->grad.clear();
}

void Tensor::check_finite(const std::string& what) const {
    for (double v : data()) {
        if (!std::isfinite(v)) {
            throw std::runtime_error(what + " contains a non-finite value");
        }
    }
}

const ComputeTape* creator_of(const Tensor& t) { return t.node_ ? t.node_->creator : nullptr; }

void set_creator(Tensor& t, const ComputeTape* tape) {
    if (t.node_) t.node_->creator = tape;
}

ComputeTape::ComputeTape() {
    if (g_active_tape) {
        throw std::logic_error("a ComputeTape is already active on this thread");
    }
    g_active_tape = this;
}

ComputeTape::~ComputeTape() {
    if (g_active_tape == this) g_active_tape = nullptr;
}

ComputeTape* ComputeTape::active() { return g_active_tape; }

void ComputeTape::record(const Tensor& output, std::function<void()> backward_fn) {
    records_.push_back(Record{output, std::move(backward_fn)});
}

void ComputeTape::backward(const Tensor& loss) {
    if (!loss.defined()) throw std::invalid_argument("backward on an undefined tensor");
    if (loss.numel() != 1) {
        throw std::invalid_argument("backward requires a scalar loss, got shape " +
                                    shape_to_string(loss.shape()));
    }
    if (creator_of(loss) != this) {
        throw std::invalid_argument(
            "backward on a tensor detached from this tape (no recorded op produced it)");
    }
    Tensor seed = loss;
    seed.ensure_grad()[0] += 1.0;
    for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
        // a node never touched by upstream gradients contributes nothing
        if (!it->output.has_grad()) continue;
        it->fn();
    }
    records_.clear();
}

} // namespace coordmotion
