#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "simq/checkpoint.hpp"
#include "simq/corpus.hpp"
#include "simq/rng.hpp"
#include "simq/tape.hpp"

namespace simq {

enum class Arch { Rcnn, Lstm, Gru, Cnn };
enum class Pooling { MeanNormalized, Last, Max };

Arch parse_arch(const std::string& name);
Pooling parse_pooling(const std::string& name);
std::string to_string(Arch arch);
std::string to_string(Pooling pooling);

// Gated non-consecutive convolution. Accumulators c^(1)..c^(n) hold decayed
// 1-gram..n-gram pattern sums; a sigmoid gate computed from the input token
// and previous state decides how much history each position keeps.
struct RcnnParams {
    int filter_width = 2;
    std::size_t hidden = 0;
    std::size_t input = 0;
    bool scalar_gate = false;      // one shared decay weight per position
    std::vector<int> filters;      // filter_width matrices, each [hidden, input]
    int gate_w = -1, gate_u = -1, gate_b = -1;
    int bias = -1;
};

struct LstmParams {
    std::size_t hidden = 0;
    std::size_t input = 0;
    int wi = -1, ui = -1, bi = -1;  // input gate
    int wf = -1, uf = -1, bf = -1;  // forget gate
    int wo = -1, uo = -1, bo = -1;  // output gate
    int wz = -1, uz = -1, bz = -1;  // candidate
};

struct GruParams {
    std::size_t hidden = 0;
    std::size_t input = 0;
    int wi = -1, ui = -1, bi = -1;  // update gate
    int wr = -1, ur = -1, br = -1;  // reset gate
    int wc = -1, uc = -1, bc = -1;  // candidate
};

struct CnnParams {
    int filter_width = 3;
    std::size_t hidden = 0;
    std::size_t input = 0;
    std::vector<int> filters;  // filter_width matrices, each [hidden, input]
    int bias = -1;
};

struct EncoderSpec {
    Arch arch = Arch::Rcnn;
    Pooling pooling = Pooling::Last;
    bool use_body = true;
    bool scalar_gate = false;
    int filter_width = 0;        // 0 -> arch default (rcnn 2, cnn 3)
    std::size_t hidden_dim = 0;  // 0 -> arch default (400/240/280/667)
    std::size_t embed_dim = 0;
};

// Fills defaults and validates the architecture/pooling combination
// (max pooling is a CNN feature map reduction only).
EncoderSpec resolve_spec(EncoderSpec spec, std::size_t embed_dim);

struct EncoderModel {
    EncoderSpec spec;
    std::variant<RcnnParams, LstmParams, GruParams, CnnParams> params;

    std::size_t dim() const { return spec.hidden_dim; }
    const RcnnParams& rcnn() const;
};

// Cell builders register weights (uniform in [-0.05, 0.05], zero biases)
// under `prefix` and return the id bundle. The decoder reuses them with a
// wider input dimension.
RcnnParams make_rcnn_cell(ParamStore& store, int filter_width, std::size_t hidden,
                          std::size_t input, bool scalar_gate, Rng& rng,
                          const std::string& prefix);
LstmParams make_lstm_cell(ParamStore& store, std::size_t hidden, std::size_t input,
                          Rng& rng, const std::string& prefix);
GruParams make_gru_cell(ParamStore& store, std::size_t hidden, std::size_t input,
                        Rng& rng, const std::string& prefix);
CnnParams make_cnn(ParamStore& store, int filter_width, std::size_t hidden,
                   std::size_t input, Rng& rng, const std::string& prefix);

EncoderModel build_encoder(ParamStore& store, const EncoderSpec& spec, Rng& rng,
                           const std::string& prefix = "enc");

// Per-position input weights (the complement of the decay gate), captured
// for analysis when requested.
struct GateTrace {
    std::vector<std::vector<double>> input_weights;
};

struct RcnnState {
    std::vector<NodeId> acc;  // acc[k-1] = c^(k)
    NodeId h = -1;
};
RcnnState rcnn_initial_state(Tape& tape, const RcnnParams& p);
RcnnState rcnn_step(Tape& tape, const RcnnParams& p, NodeId x, const RcnnState& prev,
                    const std::optional<double>& gate_override = std::nullopt,
                    std::vector<double>* input_weight = nullptr);
std::vector<NodeId> rcnn_forward(Tape& tape, const RcnnParams& p,
                                 std::span<const NodeId> xs,
                                 const std::optional<double>& gate_override = std::nullopt,
                                 GateTrace* trace = nullptr);

struct LstmState {
    NodeId h = -1, c = -1;
};
LstmState lstm_initial_state(Tape& tape, const LstmParams& p);
LstmState lstm_step(Tape& tape, const LstmParams& p, NodeId x, const LstmState& prev);
std::vector<NodeId> lstm_forward(Tape& tape, const LstmParams& p, std::span<const NodeId> xs);

struct GruState {
    NodeId h = -1;
};
GruState gru_initial_state(Tape& tape, const GruParams& p);
GruState gru_step(Tape& tape, const GruParams& p, NodeId x, const GruState& prev);
std::vector<NodeId> gru_forward(Tape& tape, const GruParams& p, std::span<const NodeId> xs);

// Windows at the left edge use only the available tokens, so position t
// covers tokens max(1, t-n+1) .. t.
std::vector<NodeId> cnn_forward(Tape& tape, const CnnParams& p, std::span<const NodeId> xs);

// MeanNormalized: L2-normalize each state, then average (zero-norm states
// are skipped and counted). Last: the final state. Max: componentwise max.
NodeId pool(Tape& tape, std::span<const NodeId> states, Pooling strategy);
std::size_t pool_zero_norm_skips();

// Inverted-scaling dropout on token embeddings; active only when a
// generator is supplied.
struct Dropout {
    double p = 0.0;
    Rng* rng = nullptr;
    bool active() const { return p > 0.0 && rng != nullptr; }
};

std::vector<NodeId> embed_tokens(Tape& tape, const EmbeddingTable& table,
                                 std::span<const std::string> tokens,
                                 const Dropout& dropout = {});

std::vector<NodeId> encoder_states(Tape& tape, const EncoderModel& model,
                                   std::span<const NodeId> xs,
                                   const std::optional<double>& gate_override = std::nullopt,
                                   GateTrace* trace = nullptr);

NodeId encode_tokens(Tape& tape, const EncoderModel& model,
                     std::span<const std::string> tokens, const EmbeddingTable& table,
                     const Dropout& dropout = {});

// Title encoding, or the average of title and body encodings when
// use_body is set and the body is non-empty.
NodeId encode_question(Tape& tape, const EncoderModel& model, const Question& question,
                       const EmbeddingTable& table, bool use_body,
                       const Dropout& dropout = {});

NodeId cosine_node(Tape& tape, NodeId u, NodeId v);
double cosine(std::span<const double> u, std::span<const double> v);

// No-gradient convenience: the pooled representation as plain values.
std::vector<double> question_vector(const EncoderModel& model, ParamStore& store,
                                    const Question& question, const EmbeddingTable& table,
                                    bool use_body);

// Checkpoint round trip. Only parameters under the model's prefix are
// saved, so a pretraining store can export its encoder alone.
Checkpoint encoder_checkpoint(const ParamStore& store, const EncoderModel& model,
                              std::map<std::string, std::string> extra = {},
                              const std::string& prefix = "enc");
EncoderModel restore_encoder(ParamStore& store, const Checkpoint& ckpt,
                             const std::string& prefix = "enc");

}  // namespace simq
