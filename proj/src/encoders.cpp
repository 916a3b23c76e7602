#include "simq/encoders.hpp"

#include <atomic>
#include <cmath>

namespace simq {

namespace {

std::atomic<std::size_t> g_zero_norm_skips{0};

Tensor uniform_init(std::vector<std::size_t> shape, Rng& rng) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.values) v = rng.uniform(-0.05, 0.05);
    return t;
}

NodeId zeros_node(Tape& tape, std::size_t n) { return tape.constant(Tensor::zeros({n})); }

// pre = W x + U h + b
NodeId gate_preactivation(Tape& tape, int w, int u, int b, NodeId x, NodeId h) {
    NodeId wx = tape.matvec(tape.param(w), x);
    NodeId uh = tape.matvec(tape.param(u), h);
    return tape.add(tape.add(wx, uh), tape.param(b));
}

}  // namespace

Arch parse_arch(const std::string& name) {
    if (name == "rcnn") return Arch::Rcnn;
    if (name == "lstm") return Arch::Lstm;
    if (name == "gru") return Arch::Gru;
    if (name == "cnn") return Arch::Cnn;
    throw ConfigError("arch: unknown architecture '" + name + "'");
}

Pooling parse_pooling(const std::string& name) {
    if (name == "mean") return Pooling::MeanNormalized;
    if (name == "last") return Pooling::Last;
    if (name == "max") return Pooling::Max;
    throw ConfigError("pooling: unknown strategy '" + name + "'");
}

std::string to_string(Arch arch) {
    switch (arch) {
        case Arch::Rcnn: return "rcnn";
        case Arch::Lstm: return "lstm";
        case Arch::Gru: return "gru";
        case Arch::Cnn: return "cnn";
    }
    return "?";
}

std::string to_string(Pooling pooling) {
    switch (pooling) {
        case Pooling::MeanNormalized: return "mean";
        case Pooling::Last: return "last";
        case Pooling::Max: return "max";
    }
    return "?";
}

EncoderSpec resolve_spec(EncoderSpec spec, std::size_t embed_dim) {
    spec.embed_dim = embed_dim;
    if (spec.hidden_dim == 0) {
        switch (spec.arch) {
            case Arch::Rcnn: spec.hidden_dim = 400; break;
            case Arch::Lstm: spec.hidden_dim = 240; break;
            case Arch::Gru: spec.hidden_dim = 280; break;
            case Arch::Cnn: spec.hidden_dim = 667; break;
        }
    }
    if (spec.filter_width == 0)
        spec.filter_width = spec.arch == Arch::Cnn ? 3 : 2;
    if (spec.filter_width < 1) throw ConfigError("filter_width: must be >= 1");
    if (spec.pooling == Pooling::Max && spec.arch != Arch::Cnn)
        throw ConfigError("pooling: max pooling is only available with arch=cnn");
    if (spec.scalar_gate && spec.arch != Arch::Rcnn)
        throw ConfigError("scalar_gate: only meaningful with arch=rcnn");
    if (embed_dim == 0) throw ConfigError("embed_dim: embedding table is empty");
    return spec;
}

const RcnnParams& EncoderModel::rcnn() const {
    const auto* p = std::get_if<RcnnParams>(&params);
    if (!p) throw ConfigError("operation requires an rcnn checkpoint, got " +
                              to_string(spec.arch));
    return *p;
}

RcnnParams make_rcnn_cell(ParamStore& store, int filter_width, std::size_t hidden,
                          std::size_t input, bool scalar_gate, Rng& rng,
                          const std::string& prefix) {
    RcnnParams p;
    p.filter_width = filter_width;
    p.hidden = hidden;
    p.input = input;
    p.scalar_gate = scalar_gate;
    for (int k = 1; k <= filter_width; ++k)
        p.filters.push_back(store.add(prefix + ".w" + std::to_string(k),
                                      uniform_init({hidden, input}, rng)));
    const std::size_t g = scalar_gate ? 1 : hidden;
    p.gate_w = store.add(prefix + ".gate.w", uniform_init({g, input}, rng));
    p.gate_u = store.add(prefix + ".gate.u", uniform_init({g, hidden}, rng));
    p.gate_b = store.add(prefix + ".gate.b", Tensor::zeros({g}));
    p.bias = store.add(prefix + ".b", Tensor::zeros({hidden}));
    return p;
}

LstmParams make_lstm_cell(ParamStore& store, std::size_t hidden, std::size_t input,
                          Rng& rng, const std::string& prefix) {
    LstmParams p;
    p.hidden = hidden;
    p.input = input;
    auto gate = [&](const char* tag, int& w, int& u, int& b) {
        w = store.add(prefix + "." + tag + ".w", uniform_init({hidden, input}, rng));
        u = store.add(prefix + "." + tag + ".u", uniform_init({hidden, hidden}, rng));
        b = store.add(prefix + "." + tag + ".b", Tensor::zeros({hidden}));
    };
    gate("i", p.wi, p.ui, p.bi);
    gate("f", p.wf, p.uf, p.bf);
    gate("o", p.wo, p.uo, p.bo);
    gate("z", p.wz, p.uz, p.bz);
    return p;
}

GruParams make_gru_cell(ParamStore& store, std::size_t hidden, std::size_t input,
                        Rng& rng, const std::string& prefix) {
    GruParams p;
    p.hidden = hidden;
    p.input = input;
    auto gate = [&](const char* tag, int& w, int& u, int& b) {
        w = store.add(prefix + "." + tag + ".w", uniform_init({hidden, input}, rng));
        u = store.add(prefix + "." + tag + ".u", uniform_init({hidden, hidden}, rng));
        b = store.add(prefix + "." + tag + ".b", Tensor::zeros({hidden}));
    };
    gate("i", p.wi, p.ui, p.bi);
    gate("r", p.wr, p.ur, p.br);
    gate("c", p.wc, p.uc, p.bc);
    return p;
}

CnnParams make_cnn(ParamStore& store, int filter_width, std::size_t hidden,
                   std::size_t input, Rng& rng, const std::string& prefix) {
    CnnParams p;
    p.filter_width = filter_width;
    p.hidden = hidden;
    p.input = input;
    for (int k = 1; k <= filter_width; ++k)
        p.filters.push_back(store.add(prefix + ".w" + std::to_string(k),
                                      uniform_init({hidden, input}, rng)));
    p.bias = store.add(prefix + ".b", Tensor::zeros({hidden}));
    return p;
}

EncoderModel build_encoder(ParamStore& store, const EncoderSpec& spec, Rng& rng,
                           const std::string& prefix) {
    EncoderModel model;
    model.spec = spec;
    switch (spec.arch) {
        case Arch::Rcnn:
            model.params = make_rcnn_cell(store, spec.filter_width, spec.hidden_dim,
                                          spec.embed_dim, spec.scalar_gate, rng, prefix);
            break;
        case Arch::Lstm:
            model.params = make_lstm_cell(store, spec.hidden_dim, spec.embed_dim, rng, prefix);
            break;
        case Arch::Gru:
            model.params = make_gru_cell(store, spec.hidden_dim, spec.embed_dim, rng, prefix);
            break;
        case Arch::Cnn:
            model.params = make_cnn(store, spec.filter_width, spec.hidden_dim,
                                    spec.embed_dim, rng, prefix);
            break;
    }
    return model;
}

RcnnState rcnn_initial_state(Tape& tape, const RcnnParams& p) {
    RcnnState s;
    for (int k = 0; k < p.filter_width; ++k) s.acc.push_back(zeros_node(tape, p.hidden));
    s.h = zeros_node(tape, p.hidden);
    return s;
}

RcnnState rcnn_step(Tape& tape, const RcnnParams& p, NodeId x, const RcnnState& prev,
                    const std::optional<double>& gate_override,
                    std::vector<double>* input_weight) {
    const std::size_t g = p.scalar_gate ? 1 : p.hidden;
    NodeId lambda;
    if (gate_override) {
        lambda = tape.constant(Tensor::full({g}, *gate_override));
    } else {
        lambda = tape.sigmoid(gate_preactivation(tape, p.gate_w, p.gate_u, p.gate_b, x, prev.h));
    }
    NodeId keep = lambda;                       // decay weight on the accumulators
    NodeId take = tape.affine(lambda, -1.0, 1.0);  // weight on the new pattern

    auto blend = [&](NodeId acc_prev, NodeId injected) {
        if (p.scalar_gate)
            return tape.add(tape.vscale(acc_prev, keep), tape.vscale(injected, take));
        return tape.add(tape.mul(keep, acc_prev), tape.mul(take, injected));
    };

    RcnnState next;
    next.acc.resize(p.filter_width);
    for (int k = 0; k < p.filter_width; ++k) {
        NodeId injected = tape.matvec(tape.param(p.filters[k]), x);
        if (k > 0) injected = tape.add(prev.acc[k - 1], injected);
        next.acc[k] = blend(prev.acc[k], injected);
    }
    next.h = tape.tanh(tape.add(next.acc[p.filter_width - 1], tape.param(p.bias)));

    if (input_weight) {
        const Tensor& t = tape.value(take);
        input_weight->assign(t.values.begin(), t.values.end());
    }
    return next;
}

std::vector<NodeId> rcnn_forward(Tape& tape, const RcnnParams& p,
                                 std::span<const NodeId> xs,
                                 const std::optional<double>& gate_override,
                                 GateTrace* trace) {
    if (xs.empty()) throw DataError("encoder input is empty");
    std::vector<NodeId> states;
    states.reserve(xs.size());
    RcnnState state = rcnn_initial_state(tape, p);
    for (NodeId x : xs) {
        std::vector<double> weights;
        state = rcnn_step(tape, p, x, state, gate_override, trace ? &weights : nullptr);
        if (trace) trace->input_weights.push_back(std::move(weights));
        states.push_back(state.h);
    }
    return states;
}

LstmState lstm_initial_state(Tape& tape, const LstmParams& p) {
    return {zeros_node(tape, p.hidden), zeros_node(tape, p.hidden)};
}

LstmState lstm_step(Tape& tape, const LstmParams& p, NodeId x, const LstmState& prev) {
    NodeId i = tape.sigmoid(gate_preactivation(tape, p.wi, p.ui, p.bi, x, prev.h));
    NodeId f = tape.sigmoid(gate_preactivation(tape, p.wf, p.uf, p.bf, x, prev.h));
    NodeId o = tape.sigmoid(gate_preactivation(tape, p.wo, p.uo, p.bo, x, prev.h));
    NodeId z = tape.tanh(gate_preactivation(tape, p.wz, p.uz, p.bz, x, prev.h));
    LstmState next;
    next.c = tape.add(tape.mul(i, z), tape.mul(f, prev.c));
    next.h = tape.mul(o, tape.tanh(next.c));
    return next;
}

std::vector<NodeId> lstm_forward(Tape& tape, const LstmParams& p, std::span<const NodeId> xs) {
    if (xs.empty()) throw DataError("encoder input is empty");
    std::vector<NodeId> states;
    states.reserve(xs.size());
    LstmState state = lstm_initial_state(tape, p);
    for (NodeId x : xs) {
        state = lstm_step(tape, p, x, state);
        states.push_back(state.h);
    }
    return states;
}

GruState gru_initial_state(Tape& tape, const GruParams& p) {
    return {zeros_node(tape, p.hidden)};
}

GruState gru_step(Tape& tape, const GruParams& p, NodeId x, const GruState& prev) {
    NodeId i = tape.sigmoid(gate_preactivation(tape, p.wi, p.ui, p.bi, x, prev.h));
    NodeId r = tape.sigmoid(gate_preactivation(tape, p.wr, p.ur, p.br, x, prev.h));
    NodeId gated_h = tape.mul(r, prev.h);
    NodeId c = tape.tanh(tape.add(tape.add(tape.matvec(tape.param(p.wc), x),
                                           tape.matvec(tape.param(p.uc), gated_h)),
                                  tape.param(p.bc)));
    GruState next;
    next.h = tape.add(tape.mul(i, c), tape.mul(tape.affine(i, -1.0, 1.0), prev.h));
    return next;
}

std::vector<NodeId> gru_forward(Tape& tape, const GruParams& p, std::span<const NodeId> xs) {
    if (xs.empty()) throw DataError("encoder input is empty");
    std::vector<NodeId> states;
    states.reserve(xs.size());
    GruState state = gru_initial_state(tape, p);
    for (NodeId x : xs) {
        state = gru_step(tape, p, x, state);
        states.push_back(state.h);
    }
    return states;
}

std::vector<NodeId> cnn_forward(Tape& tape, const CnnParams& p, std::span<const NodeId> xs) {
    if (xs.empty()) throw DataError("encoder input is empty");
    const int n = p.filter_width;
    std::vector<NodeId> states;
    states.reserve(xs.size());
    for (std::size_t t = 0; t < xs.size(); ++t) {
        NodeId acc = -1;
        for (int k = 0; k < n; ++k) {
            // Filter k+1 reads the token at offset t-n+1+k; skip positions
            // before the sequence start.
            const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) - (n - 1) + k;
            if (src < 0) continue;
            NodeId term = tape.matvec(tape.param(p.filters[k]),
                                      xs[static_cast<std::size_t>(src)]);
            acc = acc < 0 ? term : tape.add(acc, term);
        }
        states.push_back(tape.tanh(tape.add(acc, tape.param(p.bias))));
    }
    return states;
}

std::size_t pool_zero_norm_skips() { return g_zero_norm_skips.load(); }

NodeId pool(Tape& tape, std::span<const NodeId> states, Pooling strategy) {
    if (states.empty()) throw DataError("pool of empty state list");
    switch (strategy) {
        case Pooling::Last:
            return states.back();
        case Pooling::Max: {
            // Componentwise max via max(a,b) = a + relu(b - a).
            NodeId acc = states[0];
            for (std::size_t i = 1; i < states.size(); ++i)
                acc = tape.add(acc, tape.relu(tape.sub(states[i], acc)));
            return acc;
        }
        case Pooling::MeanNormalized: {
            NodeId sum = -1;
            std::size_t used = 0;
            for (NodeId h : states) {
                NodeId sq = tape.dot(h, h);
                if (tape.value(sq).values[0] == 0.0) {
                    ++g_zero_norm_skips;
                    continue;
                }
                NodeId unit = tape.vscale(h, tape.recip(tape.sqrt(sq)));
                sum = sum < 0 ? unit : tape.add(sum, unit);
                ++used;
            }
            if (used == 0)
                return tape.constant(Tensor::zeros(tape.value(states[0]).shape));
            return tape.affine(sum, 1.0 / static_cast<double>(used), 0.0);
        }
    }
    throw ConfigError("pooling: unknown strategy");
}

std::vector<NodeId> embed_tokens(Tape& tape, const EmbeddingTable& table,
                                 std::span<const std::string> tokens,
                                 const Dropout& dropout) {
    std::vector<NodeId> xs;
    xs.reserve(tokens.size());
    for (const auto& tok : tokens) {
        NodeId x = tape.constant(Tensor::row(table.lookup(tok)));
        if (dropout.active()) {
            Tensor mask = Tensor::zeros({table.dim()});
            const double scale = 1.0 / (1.0 - dropout.p);
            for (double& m : mask.values)
                m = dropout.rng->next_double() >= dropout.p ? scale : 0.0;
            x = tape.mul(x, tape.constant(std::move(mask)));
        }
        xs.push_back(x);
    }
    return xs;
}

std::vector<NodeId> encoder_states(Tape& tape, const EncoderModel& model,
                                   std::span<const NodeId> xs,
                                   const std::optional<double>& gate_override,
                                   GateTrace* trace) {
    switch (model.spec.arch) {
        case Arch::Rcnn:
            return rcnn_forward(tape, std::get<RcnnParams>(model.params), xs, gate_override,
                                trace);
        case Arch::Lstm:
            return lstm_forward(tape, std::get<LstmParams>(model.params), xs);
        case Arch::Gru:
            return gru_forward(tape, std::get<GruParams>(model.params), xs);
        case Arch::Cnn:
            return cnn_forward(tape, std::get<CnnParams>(model.params), xs);
    }
    throw ConfigError("arch: unknown architecture");
}

NodeId encode_tokens(Tape& tape, const EncoderModel& model,
                     std::span<const std::string> tokens, const EmbeddingTable& table,
                     const Dropout& dropout) {
    std::vector<NodeId> xs = embed_tokens(tape, table, tokens, dropout);
    std::vector<NodeId> states = encoder_states(tape, model, xs);
    return pool(tape, states, model.spec.pooling);
}

NodeId encode_question(Tape& tape, const EncoderModel& model, const Question& question,
                       const EmbeddingTable& table, bool use_body, const Dropout& dropout) {
    if (question.title.empty())
        throw DataError("question " + std::to_string(question.id) + " has an empty title");
    NodeId title_vec = encode_tokens(tape, model, question.title, table, dropout);
    if (!use_body || question.body.empty()) return title_vec;
    NodeId body_vec = encode_tokens(tape, model, question.body, table, dropout);
    return tape.affine(tape.add(title_vec, body_vec), 0.5, 0.0);
}

NodeId cosine_node(Tape& tape, NodeId u, NodeId v) {
    NodeId uu = tape.dot(u, u);
    NodeId vv = tape.dot(v, v);
    if (tape.value(uu).values[0] == 0.0 || tape.value(vv).values[0] == 0.0)
        throw DataError("cosine of a zero vector");
    NodeId inv_norms = tape.recip(tape.sqrt(tape.mul(uu, vv)));
    return tape.mul(tape.dot(u, v), inv_norms);
}

double cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw ShapeError("cosine dimension mismatch");
    double uv = 0, uu = 0, vv = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        uv += u[i] * v[i];
        uu += u[i] * u[i];
        vv += v[i] * v[i];
    }
    if (uu == 0.0 || vv == 0.0) throw DataError("cosine of a zero vector");
    return uv / std::sqrt(uu * vv);
}

std::vector<double> question_vector(const EncoderModel& model, ParamStore& store,
                                    const Question& question, const EmbeddingTable& table,
                                    bool use_body) {
    Tape tape(&store);
    NodeId v = encode_question(tape, model, question, table, use_body);
    return tape.value(v).values;
}

Checkpoint encoder_checkpoint(const ParamStore& store, const EncoderModel& model,
                              std::map<std::string, std::string> extra,
                              const std::string& prefix) {
    Checkpoint ckpt;
    const EncoderSpec& s = model.spec;
    ckpt.meta["arch"] = to_string(s.arch);
    ckpt.meta["pooling"] = to_string(s.pooling);
    ckpt.meta["use_body"] = s.use_body ? "1" : "0";
    ckpt.meta["scalar_gate"] = s.scalar_gate ? "1" : "0";
    ckpt.meta["filter_width"] = std::to_string(s.filter_width);
    ckpt.meta["hidden_dim"] = std::to_string(s.hidden_dim);
    ckpt.meta["embed_dim"] = std::to_string(s.embed_dim);
    for (auto& [k, v] : extra) ckpt.meta[k] = v;
    const std::string dotted = prefix + ".";
    for (std::size_t i = 0; i < store.count(); ++i) {
        const int id = static_cast<int>(i);
        if (store.name(id).starts_with(dotted))
            ckpt.params.emplace_back(store.name(id), store.value(id));
    }
    return ckpt;
}

EncoderModel restore_encoder(ParamStore& store, const Checkpoint& ckpt,
                             const std::string& prefix) {
    EncoderSpec spec;
    spec.arch = parse_arch(ckpt.meta_or("arch", ""));
    spec.pooling = parse_pooling(ckpt.meta_or("pooling", ""));
    spec.use_body = ckpt.meta_or("use_body", "1") == "1";
    spec.scalar_gate = ckpt.meta_or("scalar_gate", "0") == "1";
    spec.filter_width = std::stoi(ckpt.meta_or("filter_width", "0"));
    spec.hidden_dim = static_cast<std::size_t>(std::stoul(ckpt.meta_or("hidden_dim", "0")));
    const std::size_t embed = static_cast<std::size_t>(
        std::stoul(ckpt.meta_or("embed_dim", "0")));
    spec = resolve_spec(spec, embed);

    Rng rng(0);  // placeholder init, immediately overwritten
    EncoderModel model = build_encoder(store, spec, rng, prefix);
    restore(ckpt, store);
    return model;
}

}  // namespace simq
