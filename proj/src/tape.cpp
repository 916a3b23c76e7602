#include "simq/tape.hpp"

#include <algorithm>
#include <cmath>

namespace simq {

int ParamStore::add(const std::string& name, Tensor init) {
    if (index_.count(name)) throw ConfigError("duplicate parameter name: " + name);
    Entry e;
    e.name = name;
    e.grad = Tensor::zeros(init.shape);
    e.value = std::move(init);
    entries_.push_back(std::move(e));
    int id = static_cast<int>(entries_.size()) - 1;
    index_[name] = id;
    return id;
}

int ParamStore::find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? -1 : it->second;
}

std::size_t ParamStore::total_values() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
}

void ParamStore::zero_grads() {
    for (auto& e : entries_) std::fill(e.grad.values.begin(), e.grad.values.end(), 0.0);
}

void ParamStore::scale_grads(double s) {
    for (auto& e : entries_)
        for (double& g : e.grad.values) g *= s;
}

std::vector<double> ParamStore::flatten_values() const {
    std::vector<double> flat;
    flat.reserve(total_values());
    for (const auto& e : entries_)
        flat.insert(flat.end(), e.value.values.begin(), e.value.values.end());
    return flat;
}

void ParamStore::unflatten_values(std::span<const double> flat) {
    if (flat.size() != total_values()) throw ShapeError("flat parameter size mismatch");
    std::size_t off = 0;
    for (auto& e : entries_) {
        std::copy_n(flat.begin() + off, e.value.size(), e.value.values.begin());
        off += e.value.size();
    }
}

std::vector<double> ParamStore::flatten_grads() const {
    std::vector<double> flat;
    flat.reserve(total_values());
    for (const auto& e : entries_)
        flat.insert(flat.end(), e.grad.values.begin(), e.grad.values.end());
    return flat;
}

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw ShapeError(msg);
}

}  // namespace

std::size_t Tape::check(NodeId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
        throw ShapeError("node id not on this tape");
    return static_cast<std::size_t>(id);
}

NodeId Tape::push(Node n) {
    if (!all_finite(n.value.values)) throw NumericError("non-finite value produced by tape op");
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size()) - 1;
}

NodeId Tape::constant(Tensor value) {
    Node n;
    n.op = OpKind::Constant;
    n.value = std::move(value);
    return push(std::move(n));
}

NodeId Tape::param(int param_id) {
    if (!params_) throw ShapeError("tape has no parameter store");
    Node n;
    n.op = OpKind::Param;
    n.aux = static_cast<std::size_t>(param_id);
    n.value = params_->value(param_id);
    return push(std::move(n));
}

NodeId Tape::matvec(NodeId w, NodeId x) {
    const Tensor& W = val(w);
    const Tensor& X = val(x);
    require(W.rank() == 2 && X.rank() == 1, "matvec expects matrix and vector");
    require(W.shape[1] == X.shape[0], "matvec dimension mismatch");
    const std::size_t rows = W.shape[0], cols = W.shape[1];
    Tensor out = Tensor::zeros({rows});
    for (std::size_t i = 0; i < rows; ++i) {
        double acc = 0.0;
        const double* wrow = &W.values[i * cols];
        for (std::size_t j = 0; j < cols; ++j) acc += wrow[j] * X.values[j];
        out.values[i] = acc;
    }
    Node n;
    n.op = OpKind::MatVec;
    n.in = {w, x};
    n.value = std::move(out);
    return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    require(A.same_shape(B), "add shape mismatch");
    Tensor out = A;
    for (std::size_t i = 0; i < out.size(); ++i) out.values[i] += B.values[i];
    Node n;
    n.op = OpKind::Add;
    n.in = {a, b};
    n.value = std::move(out);
    return push(std::move(n));
}

NodeId Tape::sub(NodeId a, NodeId b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    require(A.same_shape(B), "sub shape mismatch");
    Tensor out = A;
    for (std::size_t i = 0; i < out.size(); ++i) out.values[i] -= B.values[i];
    Node n;
    n.op = OpKind::Sub;
    n.in = {a, b};
    n.value = std::move(out);
    return push(std::move(n));
}

NodeId Tape::mul(NodeId a, NodeId b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    require(A.same_shape(B), "mul shape mismatch");
    Tensor out = A;
    for (std::size_t i = 0; i < out.size(); ++i) out.values[i] *= B.values[i];
    Node n;
    n.op = OpKind::Mul;
    n.in = {a, b};
    n.value = std::move(out);
    return push(std::move(n));
}

NodeId Tape::affine(NodeId x, double scale, double shift) {
    Tensor out = val(x);
    for (double& v : out.values) v = scale * v + shift;
    Node n;
    n.op = OpKind::Affine;
    n.in = {x};
    n.k0 = scale;
    n.k1 = shift;
    n.value = std::move(out);
    return push(std::move(n));
}

NodeId Tape::sigmoid(NodeId x) {
    Tensor out = val(x);
    for (double& v : out.values) v = 1.0 / (1.0 + std::exp(-v));
    Node n;
    n.op = OpKind::Sigmoid;
    n.in = {x};
    n.value = std::move(out);
    return push(std::move(n));
}

NodeId Tape::tanh(NodeId x) {
    Tensor out = val(x);
    for (double& v : out.values) v = std::tanh(v);
    Node n;
    n.op = OpKind::Tanh;
    n.in = {x};
    n.value = std::move(out);
    return push(std::move(n));
}

NodeId Tape::relu(NodeId x) {
    Tensor out = val(x);
    for (double& v : out.values) v = v > 0.0 ? v : 0.0;
    Node n;
    n.op = OpKind::Relu;
    n.in = {x};
    n.value = std::move(out);
    return push(std::move(n));
}

NodeId Tape::concat(std::span<const NodeId> parts) {
    require(!parts.empty(), "concat of zero parts");
    std::size_t total = 0;
    for (NodeId p : parts) {
        require(val(p).rank() == 1, "concat expects vectors");
        total += val(p).size();
    }
    Tensor out = Tensor::zeros({total});
    std::size_t off = 0;
    for (NodeId p : parts) {
        const Tensor& t = val(p);
        std::copy(t.values.begin(), t.values.end(), out.values.begin() + off);
        off += t.size();
    }
    Node n;
    n.op = OpKind::Concat;
    n.in.assign(parts.begin(), parts.end());
    n.value = std::move(out);
    return push(std::move(n));
}

NodeId Tape::concat(NodeId a, NodeId b) {
    NodeId parts[2] = {a, b};
    return concat(std::span<const NodeId>(parts, 2));
}

NodeId Tape::dot(NodeId a, NodeId b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    require(A.same_shape(B) && A.rank() == 1, "dot expects equal-length vectors");
    double acc = 0.0;
    for (std::size_t i = 0; i < A.size(); ++i) acc += A.values[i] * B.values[i];
    Node n;
    n.op = OpKind::Dot;
    n.in = {a, b};
    n.value = Tensor::scalar(acc);
    return push(std::move(n));
}

NodeId Tape::sqrt(NodeId x) {
    Tensor out = val(x);
    for (double& v : out.values) {
        if (v < 0.0) throw NumericError("sqrt of negative value");
        v = std::sqrt(v);
    }
    Node n;
    n.op = OpKind::Sqrt;
    n.in = {x};
    n.value = std::move(out);
    return push(std::move(n));
}

NodeId Tape::recip(NodeId x) {
    Tensor out = val(x);
    for (double& v : out.values) v = 1.0 / v;
    Node n;
    n.op = OpKind::Recip;
    n.in = {x};
    n.value = std::move(out);
    return push(std::move(n));
}

NodeId Tape::vscale(NodeId v, NodeId s) {
    const Tensor& V = val(v);
    const Tensor& S = val(s);
    require(S.is_scalar(), "vscale expects a scalar second operand");
    Tensor out = V;
    const double k = S.values[0];
    for (double& x : out.values) x *= k;
    Node n;
    n.op = OpKind::VScale;
    n.in = {v, s};
    n.value = std::move(out);
    return push(std::move(n));
}

NodeId Tape::reduce_max(NodeId v) {
    const Tensor& V = val(v);
    require(V.rank() == 1 && V.size() > 0, "reduce_max expects a non-empty vector");
    std::size_t arg = 0;
    for (std::size_t i = 1; i < V.size(); ++i)
        if (V.values[i] > V.values[arg]) arg = i;
    Node n;
    n.op = OpKind::ReduceMax;
    n.in = {v};
    n.aux = arg;
    n.value = Tensor::scalar(V.values[arg]);
    return push(std::move(n));
}

NodeId Tape::softmax_xent(NodeId logits, std::size_t target) {
    const Tensor& Z = val(logits);
    require(Z.rank() == 1 && target < Z.size(), "softmax_xent target out of range");
    double m = Z.values[0];
    for (double z : Z.values) m = std::max(m, z);
    double sum = 0.0;
    for (double z : Z.values) sum += std::exp(z - m);
    const double lse = m + std::log(sum);
    Tensor probs = Z;
    for (double& p : probs.values) p = std::exp(p - m) / sum;
    Node n;
    n.op = OpKind::SoftmaxXent;
    n.in = {logits};
    n.aux = target;
    n.cache = std::move(probs);
    n.value = Tensor::scalar(lse - Z.values[target]);
    return push(std::move(n));
}

void Tape::backward(NodeId out) {
    const std::size_t oi = check(out);
    if (!nodes_[oi].value.is_scalar()) throw ShapeError("backward requires a scalar output");

    grads_.assign(nodes_.size(), Tensor{});
    grads_[oi] = Tensor::scalar(1.0);

    for (std::size_t idx = nodes_.size(); idx-- > 0;) {
        Node& n = nodes_[idx];
        const Tensor& g = grads_[idx];
        if (g.values.empty()) continue;  // node not on any path to the output

        auto sink = [&](NodeId src) -> Tensor& {
            Tensor& t = grads_[static_cast<std::size_t>(src)];
            if (t.values.empty()) t = Tensor::zeros(nodes_[src].value.shape);
            return t;
        };

        switch (n.op) {
            case OpKind::Constant:
                break;
            case OpKind::Param:
                if (params_) {
                    Tensor& pg = params_->grad(static_cast<int>(n.aux));
                    for (std::size_t i = 0; i < g.size(); ++i) pg.values[i] += g.values[i];
                }
                break;
            case OpKind::MatVec: {
                const Tensor& W = nodes_[n.in[0]].value;
                const Tensor& X = nodes_[n.in[1]].value;
                Tensor& gw = sink(n.in[0]);
                Tensor& gx = sink(n.in[1]);
                const std::size_t rows = W.shape[0], cols = W.shape[1];
                // dW = g x^T ; dx = W^T g
                for (std::size_t i = 0; i < rows; ++i) {
                    const double gi = g.values[i];
                    double* gwrow = &gw.values[i * cols];
                    const double* wrow = &W.values[i * cols];
                    for (std::size_t j = 0; j < cols; ++j) {
                        gwrow[j] += gi * X.values[j];
                        gx.values[j] += wrow[j] * gi;
                    }
                }
                break;
            }
            case OpKind::Add: {
                Tensor& ga = sink(n.in[0]);
                Tensor& gb = sink(n.in[1]);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    ga.values[i] += g.values[i];
                    gb.values[i] += g.values[i];
                }
                break;
            }
            case OpKind::Sub: {
                Tensor& ga = sink(n.in[0]);
                Tensor& gb = sink(n.in[1]);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    ga.values[i] += g.values[i];
                    gb.values[i] -= g.values[i];
                }
                break;
            }
            case OpKind::Mul: {
                const Tensor& A = nodes_[n.in[0]].value;
                const Tensor& B = nodes_[n.in[1]].value;
                Tensor& ga = sink(n.in[0]);
                Tensor& gb = sink(n.in[1]);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    ga.values[i] += g.values[i] * B.values[i];
                    gb.values[i] += g.values[i] * A.values[i];
                }
                break;
            }
            case OpKind::Affine: {
                Tensor& gx = sink(n.in[0]);
                for (std::size_t i = 0; i < g.size(); ++i) gx.values[i] += g.values[i] * n.k0;
                break;
            }
            case OpKind::Sigmoid: {
                Tensor& gx = sink(n.in[0]);
                // dy/dx = y (1 - y)
                for (std::size_t i = 0; i < g.size(); ++i) {
                    const double y = n.value.values[i];
                    gx.values[i] += g.values[i] * y * (1.0 - y);
                }
                break;
            }
            case OpKind::Tanh: {
                Tensor& gx = sink(n.in[0]);
                // dy/dx = 1 - y^2
                for (std::size_t i = 0; i < g.size(); ++i) {
                    const double y = n.value.values[i];
                    gx.values[i] += g.values[i] * (1.0 - y * y);
                }
                break;
            }
            case OpKind::Relu: {
                const Tensor& X = nodes_[n.in[0]].value;
                Tensor& gx = sink(n.in[0]);
                for (std::size_t i = 0; i < g.size(); ++i)
                    if (X.values[i] > 0.0) gx.values[i] += g.values[i];
                break;
            }
            case OpKind::Concat: {
                std::size_t off = 0;
                for (NodeId src : n.in) {
                    Tensor& gs = sink(src);
                    for (std::size_t i = 0; i < gs.size(); ++i) gs.values[i] += g.values[off + i];
                    off += gs.size();
                }
                break;
            }
            case OpKind::Dot: {
                const Tensor& A = nodes_[n.in[0]].value;
                const Tensor& B = nodes_[n.in[1]].value;
                Tensor& ga = sink(n.in[0]);
                Tensor& gb = sink(n.in[1]);
                const double g0 = g.values[0];
                for (std::size_t i = 0; i < A.size(); ++i) {
                    ga.values[i] += g0 * B.values[i];
                    gb.values[i] += g0 * A.values[i];
                }
                break;
            }
            case OpKind::Sqrt: {
                Tensor& gx = sink(n.in[0]);
                // dy/dx = 1 / (2 sqrt(x))
                for (std::size_t i = 0; i < g.size(); ++i)
                    gx.values[i] += g.values[i] * 0.5 / n.value.values[i];
                break;
            }
            case OpKind::Recip: {
                Tensor& gx = sink(n.in[0]);
                // dy/dx = -y^2
                for (std::size_t i = 0; i < g.size(); ++i) {
                    const double y = n.value.values[i];
                    gx.values[i] -= g.values[i] * y * y;
                }
                break;
            }
            case OpKind::VScale: {
                const Tensor& V = nodes_[n.in[0]].value;
                const double s = nodes_[n.in[1]].value.values[0];
                Tensor& gv = sink(n.in[0]);
                Tensor& gs = sink(n.in[1]);
                double acc = 0.0;
                for (std::size_t i = 0; i < g.size(); ++i) {
                    gv.values[i] += g.values[i] * s;
                    acc += g.values[i] * V.values[i];
                }
                gs.values[0] += acc;
                break;
            }
            case OpKind::ReduceMax: {
                Tensor& gv = sink(n.in[0]);
                gv.values[n.aux] += g.values[0];
                break;
            }
            case OpKind::SoftmaxXent: {
                Tensor& gz = sink(n.in[0]);
                const double g0 = g.values[0];
                // dz = softmax(z) - onehot(target)
                for (std::size_t i = 0; i < gz.size(); ++i)
                    gz.values[i] += g0 * n.cache.values[i];
                gz.values[n.aux] -= g0;
                break;
            }
        }
    }
}

}  // namespace simq
