#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "simq/tensor.hpp"

namespace simq {

using NodeId = std::int32_t;

// Learnable weights, shared across tapes. A tape's backward pass accumulates
// d(loss)/d(param) into the grad slot of each entry; callers zero the grads,
// run one or more backward passes, then hand the store to the optimizer.
class ParamStore {
public:
    int add(const std::string& name, Tensor init);
    int find(const std::string& name) const;  // -1 when absent

    Tensor& value(int id) { return entries_[id].value; }
    const Tensor& value(int id) const { return entries_[id].value; }
    Tensor& grad(int id) { return entries_[id].grad; }
    const Tensor& grad(int id) const { return entries_[id].grad; }
    const std::string& name(int id) const { return entries_[id].name; }

    std::size_t count() const { return entries_.size(); }
    std::size_t total_values() const;

    void zero_grads();
    void scale_grads(double s);

    // Flat views over all parameters in registration order; used by the
    // finite-difference checker and the optimizer tests.
    std::vector<double> flatten_values() const;
    void unflatten_values(std::span<const double> flat);
    std::vector<double> flatten_grads() const;

private:
    struct Entry {
        std::string name;
        Tensor value;
        Tensor grad;
    };
    std::vector<Entry> entries_;
    std::unordered_map<std::string, int> index_;
};

enum class OpKind : std::uint8_t {
    Constant,
    Param,
    MatVec,       // [m,n] x [n] -> [m]
    Add,
    Sub,
    Mul,          // elementwise
    Affine,       // k0 * x + k1, elementwise with constant coefficients
    Sigmoid,
    Tanh,
    Relu,
    Concat,       // n-ary over vectors
    Dot,          // -> scalar
    Sqrt,
    Recip,
    VScale,       // vector * scalar node
    ReduceMax,    // -> scalar; subgradient to the first argmax
    SoftmaxXent,  // logits + target index -> scalar cross-entropy
};

// Append-only record of primitive operations with eagerly computed values.
// Nodes are topologically ordered by construction, so the backward pass is a
// single reverse sweep that visits each node exactly once. Every operation
// validates shapes and rejects non-finite results.
class Tape {
public:
    explicit Tape(ParamStore* params = nullptr) : params_(params) {}

    NodeId constant(Tensor value);
    NodeId param(int param_id);

    NodeId matvec(NodeId w, NodeId x);
    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId affine(NodeId x, double scale, double shift);
    NodeId sigmoid(NodeId x);
    NodeId tanh(NodeId x);
    NodeId relu(NodeId x);
    NodeId concat(std::span<const NodeId> parts);
    NodeId concat(NodeId a, NodeId b);
    NodeId dot(NodeId a, NodeId b);
    NodeId sqrt(NodeId x);
    NodeId recip(NodeId x);
    NodeId vscale(NodeId v, NodeId s);
    NodeId reduce_max(NodeId v);
    NodeId softmax_xent(NodeId logits, std::size_t target);

    const Tensor& value(NodeId id) const { return nodes_[check(id)].value; }
    std::size_t size() const { return nodes_.size(); }

    // Accumulates d(out)/d(param) into the parameter store. `out` must be a
    // scalar node on this tape. Parameters that do not participate in the
    // graph keep whatever gradient they already had (zero after zero_grads).
    void backward(NodeId out);

    // Gradient of the last backward pass w.r.t. an arbitrary node. Testing
    // hook; empty tensor when the node was not reached.
    const Tensor& node_grad(NodeId id) const { return grads_[check(id)]; }

private:
    struct Node {
        OpKind op;
        std::vector<NodeId> in;
        Tensor value;
        double k0 = 0.0, k1 = 0.0;  // Affine coefficients
        std::size_t aux = 0;        // param id / target index / argmax
        Tensor cache;               // softmax probabilities
    };

    NodeId push(Node n);
    std::size_t check(NodeId id) const;
    const Tensor& val(NodeId id) const { return nodes_[check(id)].value; }

    ParamStore* params_;
    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;
};

}  // namespace simq
