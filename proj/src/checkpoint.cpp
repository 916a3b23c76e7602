#include "simq/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace simq {

namespace {

constexpr const char* kMagic = "simq-ckpt";
constexpr int kVersion = 1;

std::string format_hex(double v) {
    char buf[40];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::hex);
    if (ec != std::errc()) throw NumericError("failed to format checkpoint value");
    return std::string(buf, end);
}

double parse_hex(const std::string& token) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v,
                                     std::chars_format::hex);
    if (ec != std::errc() || ptr != token.data() + token.size())
        throw DataError("bad checkpoint value: " + token);
    return v;
}

}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
    for (const auto& [n, t] : params)
        if (n == name) return &t;
    return nullptr;
}

std::string Checkpoint::meta_or(const std::string& key, const std::string& fallback) const {
    auto it = meta.find(key);
    return it == meta.end() ? fallback : it->second;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open checkpoint for writing: " + path);
    out << kMagic << ' ' << kVersion << '\n';
    for (const auto& [k, v] : ckpt.meta) out << "meta " << k << ' ' << v << '\n';
    for (const auto& [name, t] : ckpt.params) {
        out << "param " << name << ' ' << t.rank();
        for (std::size_t d : t.shape) out << ' ' << d;
        out << '\n';
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (i) out << ' ';
            out << format_hex(t.values[i]);
        }
        out << '\n';
    }
    out << "end\n";
    if (!out) throw DataError("write failure on checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != kMagic || version != kVersion)
        throw DataError("not a checkpoint file: " + path);

    Checkpoint ckpt;
    std::string tag;
    while (in >> tag) {
        if (tag == "end") return ckpt;
        if (tag == "meta") {
            std::string key;
            in >> key;
            std::string rest;
            std::getline(in, rest);
            if (!rest.empty() && rest.front() == ' ') rest.erase(0, 1);
            ckpt.meta[key] = rest;
        } else if (tag == "param") {
            std::string name;
            std::size_t rank = 0;
            in >> name >> rank;
            std::vector<std::size_t> shape(rank);
            for (auto& d : shape) in >> d;
            if (!in) throw DataError("truncated checkpoint header: " + path);
            const std::size_t n = Tensor::shape_product(shape);
            std::vector<double> values(n);
            std::string token;
            for (std::size_t i = 0; i < n; ++i) {
                if (!(in >> token)) throw DataError("truncated checkpoint values: " + path);
                values[i] = parse_hex(token);
            }
            ckpt.params.emplace_back(name, Tensor(std::move(shape), std::move(values)));
        } else {
            throw DataError("unknown checkpoint record '" + tag + "' in " + path);
        }
    }
    throw DataError("checkpoint missing end marker: " + path);
}

Checkpoint snapshot(const ParamStore& params, std::map<std::string, std::string> meta) {
    Checkpoint ckpt;
    ckpt.meta = std::move(meta);
    ckpt.params.reserve(params.count());
    for (std::size_t i = 0; i < params.count(); ++i) {
        const int id = static_cast<int>(i);
        ckpt.params.emplace_back(params.name(id), params.value(id));
    }
    return ckpt;
}

void restore(const Checkpoint& ckpt, ParamStore& params) {
    for (std::size_t i = 0; i < params.count(); ++i) {
        const int id = static_cast<int>(i);
        const Tensor* t = ckpt.find(params.name(id));
        if (!t) throw DataError("checkpoint missing parameter: " + params.name(id));
        if (t->shape != params.value(id).shape)
            throw DataError("checkpoint shape mismatch for parameter: " + params.name(id));
        params.value(id) = *t;
    }
}

}  // namespace simq
