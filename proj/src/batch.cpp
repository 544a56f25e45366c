#include "mtlre/batch.hpp"

#include <algorithm>
#include <optional>

#include "mtlre/init.hpp"
#include "mtlre/log.hpp"

namespace mtlre {

Index Batch::length(Index r) const {
    Index n = 0;
    while (n < cols && mask[r * cols + n] != 0) ++n;
    return n;
}

namespace {

// Tokens of an example after length capping, or nullopt when the two entity
// spans cannot fit one window.
std::optional<std::vector<std::string>> capped_tokens(const RelationExample& ex,
                                                      Index max_len) {
    Index n = static_cast<Index>(ex.tokens.size());
    if (n <= max_len) return ex.tokens;
    Index lo = std::min(ex.entity1.begin, ex.entity2.begin);
    Index hi = std::max(ex.entity1.end, ex.entity2.end);
    Index start = 0;
    if (hi <= max_len) {
        // Plain head truncation keeps both entities.
        start = 0;
    } else if (hi - lo > max_len) {
        return std::nullopt;
    } else {
        // Center a window on the span pair, clamped so it covers both spans
        // and stays inside the sentence.
        start = (lo + hi - max_len) / 2;
        start = std::max(start, hi - max_len);
        start = std::min(start, lo);
        start = std::max<Index>(start, 0);
        start = std::min(start, n - max_len);
    }
    return std::vector<std::string>(ex.tokens.begin() + start,
                                    ex.tokens.begin() + start + max_len);
}

}  // namespace

std::vector<Batch> make_batches(const Corpus& corpus,
                                const std::vector<std::string>& labels,
                                const Vocabulary& vocab, Index batch_size,
                                Index max_len, std::mt19937_64& rng) {
    if (batch_size < 1) {
        throw ValidationError("make_batches: batch size must be >= 1, got " +
                              std::to_string(batch_size));
    }
    if (max_len < 1) {
        throw ValidationError("make_batches: max sentence length must be >= 1, got " +
                              std::to_string(max_len));
    }
    std::unordered_map<std::string, Index> label_index;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        label_index[labels[i]] = static_cast<Index>(i);
    }

    struct Packed {
        const RelationExample* ex;
        std::vector<std::string> tokens;
        Index label;
    };
    std::vector<Packed> survivors;
    for (const RelationExample& ex : corpus) {
        auto it = label_index.find(ex.label);
        if (it == label_index.end()) {
            throw ValidationError("example '" + ex.example_id + "': label '" +
                                  ex.label + "' is not in the task's label set");
        }
        auto toks = capped_tokens(ex, max_len);
        if (!toks) {
            MTLRE_LOG_AT(LogLevel::warn)
                << "skipping example '" << ex.example_id << "': entity spans lie "
                << ex.tokens.size() << " tokens apart, beyond max length " << max_len;
            continue;
        }
        survivors.push_back(Packed{&ex, std::move(*toks), it->second});
    }
    shuffle_inplace(survivors, rng);

    std::vector<Batch> out;
    Index c_count = static_cast<Index>(labels.size());
    for (std::size_t at = 0; at < survivors.size(); at += batch_size) {
        std::size_t end = std::min(at + static_cast<std::size_t>(batch_size),
                                   survivors.size());
        Batch b;
        b.rows = static_cast<Index>(end - at);
        b.cols = 0;
        for (std::size_t i = at; i < end; ++i) {
            b.cols = std::max(b.cols, static_cast<Index>(survivors[i].tokens.size()));
        }
        if (!survivors.empty()) b.task_id = survivors[at].ex->task_id;
        b.tokens.assign(b.rows * b.cols, Vocabulary::kPad);
        b.mask.assign(b.rows * b.cols, 0);
        b.labels = Mat::Zero(b.rows, c_count);
        for (std::size_t i = at; i < end; ++i) {
            Index r = static_cast<Index>(i - at);
            const Packed& p = survivors[i];
            for (std::size_t t = 0; t < p.tokens.size(); ++t) {
                b.tokens[r * b.cols + static_cast<Index>(t)] = vocab.index_of(p.tokens[t]);
                b.mask[r * b.cols + static_cast<Index>(t)] = 1;
            }
            b.labels(r, p.label) = 1.0;
            b.label_indices.push_back(p.label);
            b.example_ids.push_back(p.ex->example_id);
        }
        out.push_back(std::move(b));
    }
    return out;
}

}  // namespace mtlre
