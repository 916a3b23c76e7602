#include "simq/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "simq/rng.hpp"

namespace simq {

namespace {

std::vector<std::string> split_tokens(const std::string& text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && text[i] == ' ') ++i;
        std::size_t j = i;
        while (j < text.size() && text[j] != ' ') ++j;
        if (j > i) tokens.emplace_back(text.substr(i, j - i));
        i = j;
    }
    return tokens;
}

void lowercase(std::vector<std::string>& tokens) {
    for (auto& t : tokens)
        for (char& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

int parse_int(const std::string& s, const char* what) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw DataError(std::string("bad ") + what + ": '" + s + "'");
    return v;
}

std::vector<int> parse_id_list(const std::string& s, const char* what) {
    std::vector<int> ids;
    if (s.empty()) return ids;
    std::size_t start = 0;
    while (start <= s.size()) {
        std::size_t comma = s.find(',', start);
        if (comma == std::string::npos) comma = s.size();
        if (comma > start) ids.push_back(parse_int(s.substr(start, comma - start), what));
        start = comma + 1;
    }
    return ids;
}

bool opens_quote(const std::string& tok) {
    return tok.starts_with("\"") || tok.starts_with("``") || tok.starts_with("“") ||
           tok.starts_with("'");
}

bool closes_quote(const std::string& tok) {
    return tok.ends_with("\"") || tok.ends_with("''") || tok.ends_with("”") ||
           (tok.size() > 1 && tok.ends_with("'"));
}

}  // namespace

std::vector<int> Corpus::ids() const {
    std::vector<int> out;
    out.reserve(questions.size());
    for (const auto& q : questions) out.push_back(q.id);
    return out;
}

void Corpus::add(Question q) {
    if (by_id.count(q.id)) throw DataError("duplicate question id " + std::to_string(q.id));
    by_id[q.id] = questions.size();
    questions.push_back(std::move(q));
}

std::vector<std::string> strip_duplicate_markers(const std::vector<std::string>& body) {
    std::vector<std::string> out;
    out.reserve(body.size());
    std::size_t i = 0;
    while (i < body.size()) {
        if (i + 1 < body.size() && body[i] == "possible" && body[i + 1] == "duplicate") {
            std::size_t j = i + 2;
            if (j < body.size() && body[j] == ":") ++j;
            if (j < body.size() && opens_quote(body[j])) {
                // A one-token span like "foo" both opens and closes.
                if (!(body[j].size() > 1 && closes_quote(body[j]))) {
                    ++j;
                    while (j < body.size() && !closes_quote(body[j])) ++j;
                }
                j = std::min(j + 1, body.size());
            }
            i = j;
            continue;
        }
        out.push_back(body[i]);
        ++i;
    }
    return out;
}

Corpus parse_corpus(std::istream& in) {
    Corpus corpus;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::size_t tab1 = line.find('\t');
        const std::size_t tab2 = tab1 == std::string::npos ? std::string::npos
                                                           : line.find('\t', tab1 + 1);
        if (tab1 == std::string::npos || tab2 == std::string::npos ||
            line.find('\t', tab2 + 1) != std::string::npos)
            throw DataError("corpus line " + std::to_string(lineno) +
                            ": expected id<TAB>title<TAB>body");
        Question q;
        q.id = parse_int(line.substr(0, tab1), "question id");
        q.title = split_tokens(line.substr(tab1 + 1, tab2 - tab1 - 1));
        q.body = split_tokens(line.substr(tab2 + 1));
        if (q.title.empty())
            throw DataError("corpus line " + std::to_string(lineno) + ": empty title");
        lowercase(q.title);
        lowercase(q.body);
        q.body = strip_duplicate_markers(q.body);
        if (q.body.size() > kMaxBodyTokens) q.body.resize(kMaxBodyTokens);
        corpus.add(std::move(q));
    }
    return corpus;
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
    for (const auto& q : corpus.questions) {
        out << q.id << '\t';
        for (std::size_t i = 0; i < q.title.size(); ++i) {
            if (i) out << ' ';
            out << q.title[i];
        }
        out << '\t';
        for (std::size_t i = 0; i < q.body.size(); ++i) {
            if (i) out << ' ';
            out << q.body[i];
        }
        out << '\n';
    }
}

CorpusStats corpus_stats(const Corpus& corpus) {
    CorpusStats s;
    s.count = corpus.size();
    if (s.count == 0) return s;
    double title = 0, body = 0;
    for (const auto& q : corpus.questions) {
        title += static_cast<double>(q.title.size());
        body += static_cast<double>(q.body.size());
    }
    s.avg_title_len = title / static_cast<double>(s.count);
    s.avg_body_len = body / static_cast<double>(s.count);
    return s;
}

void EmbeddingTable::add(const std::string& token, std::vector<double> vec) {
    if (dim_ == 0) dim_ = vec.size();
    if (vec.size() != dim_)
        throw DataError("embedding dimension mismatch for token '" + token + "'");
    if (index_.count(token)) throw DataError("duplicate embedding token '" + token + "'");
    index_[token] = tokens_.size();
    tokens_.push_back(token);
    matrix_.insert(matrix_.end(), vec.begin(), vec.end());
}

std::ptrdiff_t EmbeddingTable::index_of(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

std::span<const double> EmbeddingTable::row(std::size_t index) const {
    return {matrix_.data() + index * dim_, dim_};
}

std::vector<double> EmbeddingTable::lookup(const std::string& token) const {
    auto idx = index_of(token);
    if (idx < 0) return std::vector<double>(dim_, 0.0);
    auto r = row(static_cast<std::size_t>(idx));
    return {r.begin(), r.end()};
}

EmbeddingTable load_embeddings(std::istream& in) {
    EmbeddingTable table;
    std::string line;
    std::size_t lineno = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string token;
        ss >> token;
        std::vector<double> vec;
        std::string field;
        while (ss >> field) {
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
            if (ec != std::errc() || ptr != field.data() + field.size())
                throw DataError("embedding line " + std::to_string(lineno) +
                                ": non-numeric value '" + field + "'");
            vec.push_back(v);
        }
        if (first) {
            first = false;
            // word2vec text files may start with a `count dim` header.
            if (vec.size() == 1) {
                bool numeric = !token.empty() &&
                               std::all_of(token.begin(), token.end(),
                                           [](unsigned char c) { return std::isdigit(c); });
                if (numeric) continue;
            }
        }
        if (vec.empty())
            throw DataError("embedding line " + std::to_string(lineno) + ": no values");
        table.add(token, std::move(vec));
    }
    return table;
}

std::vector<int> sample_negatives(int query_id,
                                  const std::vector<int>& corpus_ids,
                                  std::span<const int> known_positives,
                                  std::size_t k,
                                  std::uint64_t seed) {
    std::vector<int> eligible;
    eligible.reserve(corpus_ids.size());
    for (int id : corpus_ids) {
        if (id == query_id) continue;
        if (std::find(known_positives.begin(), known_positives.end(), id) !=
            known_positives.end())
            continue;
        eligible.push_back(id);
    }
    if (eligible.size() < k)
        throw DataError("corpus too small to sample " + std::to_string(k) + " negatives");

    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(static_cast<std::int64_t>(query_id))));
    // Partial Fisher-Yates: the first k slots become the sample.
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + rng.index(eligible.size() - i);
        std::swap(eligible[i], eligible[j]);
    }
    eligible.resize(k);
    return eligible;
}

std::size_t EvalQuery::positive_count() const {
    std::size_t n = 0;
    for (auto l : labels) n += l;
    return n;
}

double EvaluationSet::avg_positives_per_query() const {
    if (queries.empty()) return 0.0;
    double total = 0;
    for (const auto& q : queries) total += static_cast<double>(q.positive_count());
    return total / static_cast<double>(queries.size());
}

EvaluationSet parse_annotations(std::istream& in) {
    EvaluationSet set;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::size_t tab1 = line.find('\t');
        const std::size_t tab2 = tab1 == std::string::npos ? std::string::npos
                                                           : line.find('\t', tab1 + 1);
        if (tab1 == std::string::npos || tab2 == std::string::npos)
            throw DataError("annotation line " + std::to_string(lineno) +
                            ": expected query<TAB>positives<TAB>candidates");
        EvalQuery q;
        q.query_id = parse_int(line.substr(0, tab1), "query id");
        std::vector<int> positives = parse_id_list(line.substr(tab1 + 1, tab2 - tab1 - 1),
                                                   "positive id");
        q.candidates = parse_id_list(line.substr(tab2 + 1), "candidate id");
        if (q.candidates.size() != kCandidatesPerQuery)
            throw DataError("annotation line " + std::to_string(lineno) + ": expected " +
                            std::to_string(kCandidatesPerQuery) + " candidates, got " +
                            std::to_string(q.candidates.size()));
        q.labels.resize(q.candidates.size());
        for (std::size_t i = 0; i < q.candidates.size(); ++i)
            q.labels[i] = std::find(positives.begin(), positives.end(), q.candidates[i]) !=
                                  positives.end()
                              ? 1
                              : 0;
        for (int p : positives)
            if (std::find(q.candidates.begin(), q.candidates.end(), p) == q.candidates.end())
                ++set.positives_outside_pool;
        if (q.positive_count() == 0) {
            ++set.dropped_no_positive;
            continue;
        }
        set.queries.push_back(std::move(q));
    }
    return set;
}

std::vector<std::pair<int, int>> parse_pairs(std::istream& in) {
    std::vector<std::pair<int, int>> pairs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw DataError("pairs line " + std::to_string(lineno) +
                            ": expected query<TAB>similar ids");
        const int query = parse_int(line.substr(0, tab), "query id");
        for (int p : parse_id_list(line.substr(tab + 1), "similar id")) {
            if (p == query)
                throw DataError("pairs line " + std::to_string(lineno) +
                                ": question paired with itself");
            pairs.emplace_back(query, p);
        }
    }
    return pairs;
}

}  // namespace simq
