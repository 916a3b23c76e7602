#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "simq/errors.hpp"

namespace simq {

// Bodies are cut to this many tokens after marker stripping.
constexpr std::size_t kMaxBodyTokens = 100;
// Evaluation pools carry exactly this many retrieved candidates per query.
constexpr std::size_t kCandidatesPerQuery = 20;

struct Question {
    int id = 0;
    std::vector<std::string> title;
    std::vector<std::string> body;  // already stripped and truncated
};

struct Corpus {
    std::vector<Question> questions;
    std::unordered_map<int, std::size_t> by_id;

    const Question* find(int id) const {
        auto it = by_id.find(id);
        return it == by_id.end() ? nullptr : &questions[it->second];
    }
    const Question& at(int id) const {
        const Question* q = find(id);
        if (!q) throw DataError("unknown question id " + std::to_string(id));
        return *q;
    }
    std::vector<int> ids() const;
    std::size_t size() const { return questions.size(); }
    void add(Question q);
};

// Removes user-added duplicate markers: the literal phrase "possible
// duplicate", an optional colon, and the quoted title span that follows it.
// An unterminated quote consumes the rest of the body. No-op when the
// phrase is absent.
std::vector<std::string> strip_duplicate_markers(const std::vector<std::string>& body);

// One question per line: id<TAB>title<TAB>body, tokens space-separated.
// Tokens are lowercased; bodies are marker-stripped then truncated to
// kMaxBodyTokens. Duplicate ids, missing fields and empty titles are errors.
Corpus parse_corpus(std::istream& in);
void write_corpus(std::ostream& out, const Corpus& corpus);

struct CorpusStats {
    std::size_t count = 0;
    double avg_title_len = 0.0;
    double avg_body_len = 0.0;
};
CorpusStats corpus_stats(const Corpus& corpus);

// Frozen word vectors. Out-of-vocabulary tokens map to the zero vector.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    EmbeddingTable(std::size_t dim) : dim_(dim) {}

    std::size_t dim() const { return dim_; }
    std::size_t vocab_size() const { return tokens_.size(); }

    void add(const std::string& token, std::vector<double> vec);
    // -1 when out of vocabulary.
    std::ptrdiff_t index_of(const std::string& token) const;
    std::span<const double> row(std::size_t index) const;
    const std::string& token_at(std::size_t index) const { return tokens_[index]; }

    // Embedding for a token; zero vector when out of vocabulary.
    std::vector<double> lookup(const std::string& token) const;

private:
    std::size_t dim_ = 0;
    std::vector<std::string> tokens_;
    std::vector<double> matrix_;  // vocab_size x dim, row-major
    std::unordered_map<std::string, std::size_t> index_;
};

// word2vec text format: `token v1 ... vd` per line; an optional leading
// `count dim` header line is skipped. All rows must share one dimension.
EmbeddingTable load_embeddings(std::istream& in);

// k distinct ids drawn uniformly without replacement from the corpus,
// excluding the query and its known positives. Deterministic in the seed;
// callers fold the epoch index into the seed for per-epoch resampling.
std::vector<int> sample_negatives(int query_id,
                                  const std::vector<int>& corpus_ids,
                                  std::span<const int> known_positives,
                                  std::size_t k,
                                  std::uint64_t seed);

struct EvalQuery {
    int query_id = 0;
    std::vector<int> candidates;        // size kCandidatesPerQuery
    std::vector<std::uint8_t> labels;   // relevance of candidates[i]
    std::size_t positive_count() const;
};

struct EvaluationSet {
    std::vector<EvalQuery> queries;
    std::size_t dropped_no_positive = 0;    // queries excluded (no positive in pool)
    std::size_t positives_outside_pool = 0; // marked positives missing from candidates
    double avg_positives_per_query() const;
};

// One query per line: query_id<TAB>comma-separated positive ids<TAB>
// comma-separated candidate ids (exactly kCandidatesPerQuery). Labels come
// from membership of a candidate in the positive set. Queries whose pool
// holds no positive are dropped and counted.
EvaluationSet parse_annotations(std::istream& in);

// Two columns: query_id<TAB>comma-separated similar ids. Expanded into one
// (query, positive) pair per listed id.
std::vector<std::pair<int, int>> parse_pairs(std::istream& in);

}  // namespace simq
