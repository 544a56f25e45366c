#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <unordered_map>
#include <vector>

#include "mtlre/error.hpp"

namespace mtlre {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
// All rank-2 data is row-major so flat storage, file formats and Eigen views
// agree on element order.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<Mat>;
using ConstMatMap = Eigen::Map<const Mat>;

// Dense extents: rank 0 (scalar), 1 (vector) or 2 (matrix).  Extents are
// strictly positive; a zero-sized tensor is a caller bug we refuse early.
class Shape {
public:
    Shape() = default;
    Shape(std::initializer_list<Index> extents) : dims_(extents) { check(); }
    explicit Shape(std::vector<Index> extents) : dims_(std::move(extents)) { check(); }

    static Shape scalar() { return Shape(); }
    static Shape vector(Index n) { return Shape{n}; }
    static Shape matrix(Index rows, Index cols) { return Shape{rows, cols}; }

    Index rank() const { return static_cast<Index>(dims_.size()); }
    Index size() const {
        Index n = 1;
        for (Index d : dims_) n *= d;
        return n;
    }
    Index extent(Index axis) const;
    // rows()/cols() view any shape as a matrix: scalars are 1x1, vectors 1xn.
    Index rows() const { return rank() == 2 ? dims_[0] : 1; }
    Index cols() const {
        if (rank() == 2) return dims_[1];
        return rank() == 1 ? dims_[0] : 1;
    }
    const std::vector<Index>& extents() const { return dims_; }

    bool operator==(const Shape& other) const = default;
    std::string str() const;  // "[]", "[5]", "[3x4]"

private:
    void check() const;
    std::vector<Index> dims_;
};

// A named, owned block of values.  Parameters live outside any tape; tapes
// reference them via watch() and hand gradients back through Tape::gradient.
struct Parameter {
    std::string name;
    Shape shape;
    Vec value;
    bool trainable = true;
    // Optimizer-frozen rows of a rank-2 parameter (used for embedding rows
    // that must keep their initial values, e.g. padding).  Gradients still
    // flow through these rows; the optimizer skips them.
    std::vector<Index> frozen_rows;

    Parameter() = default;
    Parameter(std::string name_, Shape shape_, Vec value_, bool trainable_ = true);
    ConstMatMap matrix() const { return ConstMatMap(value.data(), shape.rows(), shape.cols()); }
    MatMap matrix() { return MatMap(value.data(), shape.rows(), shape.cols()); }
};

class Tape;

// Lightweight handle into a tape: cheap to copy, valid as long as the tape
// lives.  All arithmetic on Tensors records nodes on the tape so that
// Tape::backward can replay them in reverse.
class Tensor {
public:
    Tensor() = default;

    const Shape& shape() const;
    const Vec& value() const;
    double scalar() const;  // requires size()==1
    ConstMatMap matrix() const;
    Tape& tape() const { return *tape_; }
    Index id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

private:
    friend class Tape;
    Tensor(Tape* tape, Index id) : tape_(tape), id_(id) {}
    Tape* tape_ = nullptr;
    Index id_ = -1;
};

// Reverse-mode tape (Wengert list).  Nodes are appended during the forward
// pass; each carries a closure that scatters its output gradient to its
// inputs.  backward() walks the list once, in reverse creation order.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Leaf without gradient tracking.
    Tensor constant(Shape shape, Vec values);
    Tensor constant(double scalar_value);
    Tensor constant(const Mat& m);
    Tensor zeros(Shape shape);

    // Leaf bound to a parameter.  Watching the same parameter twice returns
    // the same node, so gradients from every use accumulate in one place.
    Tensor watch(Parameter& param);

    // Generic node constructor used by the ops layer.  `backward` receives
    // the tape and the node's own id; it must add into input gradients via
    // grad_ref().  Pass an empty function for nodes with no inputs.
    Tensor make_node(Shape shape, Vec value,
                     std::function<void(Tape&, Index)> backward);

    // Runs backpropagation from `loss` (which must be scalar), seeding its
    // gradient with 1.  May be called once per tape.
    void backward(const Tensor& loss);

    // Gradient of the last backward() w.r.t. a watched parameter.  Returns
    // zeros when the parameter is non-trainable, unwatched, or unreached.
    Vec gradient(const Parameter& param) const;

    Index node_count() const { return static_cast<Index>(nodes_.size()); }

    // --- introspection for ops/backward closures ---
    const Shape& shape_of(Index id) const { return nodes_[id].shape; }
    const Vec& value_of(Index id) const { return nodes_[id].value; }
    // Mutable gradient buffer of a node, allocated (zeroed) on first access.
    Vec& grad_ref(Index id);
    bool grad_touched(Index id) const { return nodes_[id].grad.size() != 0; }

private:
    struct Node {
        Shape shape;
        Vec value;
        Vec grad;  // empty until touched during backward
        std::function<void(Tape&, Index)> backward;
    };
    std::vector<Node> nodes_;
    std::unordered_map<const Parameter*, Index> watched_;
    bool backward_done_ = false;
};

}  // namespace mtlre
