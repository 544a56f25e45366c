#include "mtlre/tensor.hpp"

#include <sstream>
#include <utility>

namespace mtlre {

void Shape::check() const {
    if (dims_.size() > 2) {
        throw DimensionError("shape rank " + std::to_string(dims_.size()) +
                             " unsupported (max rank is 2)");
    }
    for (Index d : dims_) {
        if (d <= 0) {
            std::ostringstream os;
            os << "shape extents must be positive, got " << str();
            throw DimensionError(os.str());
        }
    }
}

Index Shape::extent(Index axis) const {
    if (axis < 0 || axis >= rank()) {
        throw DimensionError("axis " + std::to_string(axis) +
                             " out of range for shape " + str());
    }
    return dims_[axis];
}

std::string Shape::str() const {
    std::string s = "[";
    for (size_t i = 0; i < dims_.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(dims_[i]);
    }
    return s + "]";
}

Parameter::Parameter(std::string name_, Shape shape_, Vec value_, bool trainable_)
    : name(std::move(name_)),
      shape(std::move(shape_)),
      value(std::move(value_)),
      trainable(trainable_) {
    if (value.size() != shape.size()) {
        throw DimensionError("parameter '" + name + "': value has " +
                             std::to_string(value.size()) +
                             " elements but shape " + shape.str() + " needs " +
                             std::to_string(shape.size()));
    }
}

const Shape& Tensor::shape() const { return tape_->shape_of(id_); }
const Vec& Tensor::value() const { return tape_->value_of(id_); }

double Tensor::scalar() const {
    const Vec& v = value();
    if (v.size() != 1) {
        throw DimensionError("scalar() called on tensor of shape " + shape().str());
    }
    return v[0];
}

ConstMatMap Tensor::matrix() const {
    const Shape& s = shape();
    return ConstMatMap(value().data(), s.rows(), s.cols());
}

Tensor Tape::constant(Shape shape, Vec values) {
    if (values.size() != shape.size()) {
        throw DimensionError("constant: " + std::to_string(values.size()) +
                             " values for shape " + shape.str());
    }
    return make_node(std::move(shape), std::move(values), nullptr);
}

Tensor Tape::constant(double scalar_value) {
    Vec v(1);
    v[0] = scalar_value;
    return make_node(Shape::scalar(), std::move(v), nullptr);
}

Tensor Tape::constant(const Mat& m) {
    Vec flat = Eigen::Map<const Vec>(m.data(), m.size());
    return make_node(Shape::matrix(m.rows(), m.cols()), std::move(flat), nullptr);
}

Tensor Tape::zeros(Shape shape) {
    Vec v = Vec::Zero(shape.size());
    return make_node(std::move(shape), std::move(v), nullptr);
}

Tensor Tape::watch(Parameter& param) {
    auto it = watched_.find(&param);
    if (it != watched_.end()) return Tensor(this, it->second);
    Tensor t = make_node(param.shape, param.value, nullptr);
    watched_.emplace(&param, t.id());
    return t;
}

Tensor Tape::make_node(Shape shape, Vec value,
                       std::function<void(Tape&, Index)> backward) {
    if (value.size() != shape.size()) {
        throw DimensionError("node value size " + std::to_string(value.size()) +
                             " does not match shape " + shape.str());
    }
    Index id = static_cast<Index>(nodes_.size());
    nodes_.push_back(Node{std::move(shape), std::move(value), Vec(), std::move(backward)});
    return Tensor(this, id);
}

Vec& Tape::grad_ref(Index id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) n.grad = Vec::Zero(n.shape.size());
    return n.grad;
}

void Tape::backward(const Tensor& loss) {
    if (backward_done_) {
        throw ValidationError("backward() already ran on this tape");
    }
    if (&loss.tape() != this) {
        throw ValidationError("backward() called with a tensor from another tape");
    }
    if (loss.shape().size() != 1) {
        throw DimensionError("backward() requires a scalar loss, got shape " +
                             loss.shape().str());
    }
    backward_done_ = true;
    grad_ref(loss.id())[0] = 1.0;
    for (Index id = loss.id(); id >= 0; --id) {
        Node& n = nodes_[id];
        // Nodes whose gradient was never touched cannot influence the loss;
        // skipping them keeps backward linear in the reached subgraph.
        if (n.grad.size() == 0 || !n.backward) continue;
        n.backward(*this, id);
    }
}

Vec Tape::gradient(const Parameter& param) const {
    if (!param.trainable) return Vec::Zero(param.shape.size());
    auto it = watched_.find(&param);
    if (it == watched_.end() || nodes_[it->second].grad.size() == 0) {
        return Vec::Zero(param.shape.size());
    }
    return nodes_[it->second].grad;
}

}  // namespace mtlre
