#include "mtlre/embedding.hpp"

#include <fstream>
#include <sstream>

#include "mtlre/init.hpp"
#include "mtlre/log.hpp"

namespace mtlre {

namespace {

constexpr double kInitRange = 0.05;
constexpr double kEntityFill = 0.1;

EmbeddingTable make_table(const Vocabulary& vocab, Index dim) {
    if (dim <= 0) {
        throw ValidationError("embedding dimension must be positive, got " +
                              std::to_string(dim));
    }
    EmbeddingTable table;
    table.dim = dim;
    table.weights = Parameter("embedding", Shape::matrix(vocab.size(), dim),
                              Vec::Zero(vocab.size() * dim));
    table.weights.frozen_rows = {Vocabulary::kPad, Vocabulary::kEntity};
    MatMap rows = table.weights.matrix();
    rows.row(Vocabulary::kEntity).setConstant(kEntityFill);
    return table;
}

void random_row(MatMap rows, Index r, std::mt19937_64& rng) {
    for (Index c = 0; c < rows.cols(); ++c) {
        rows(r, c) = uniform_range(rng, -kInitRange, kInitRange);
    }
}

}  // namespace

EmbeddingTable EmbeddingTable::random_init(const Vocabulary& vocab, Index dim,
                                           std::mt19937_64& rng) {
    EmbeddingTable table = make_table(vocab, dim);
    MatMap rows = table.weights.matrix();
    for (Index r = 0; r < vocab.size(); ++r) {
        if (r == Vocabulary::kPad || r == Vocabulary::kEntity) continue;
        random_row(rows, r, rng);
    }
    return table;
}

EmbeddingTable EmbeddingTable::load_pretrained(const std::string& path,
                                               const Vocabulary& vocab,
                                               Index expected_dim,
                                               std::mt19937_64& rng) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open embedding file: " + path);
    std::string line;
    if (!std::getline(is, line)) {
        throw ParseError("embedding file " + path + ": missing header");
    }
    Index file_count = 0, file_dim = 0;
    {
        std::istringstream hs(line);
        if (!(hs >> file_count >> file_dim) || file_count < 0 || file_dim <= 0) {
            throw ParseError("embedding file " + path +
                             ": header must be 'count dim', got '" + line + "'");
        }
        std::string extra;
        if (hs >> extra) {
            throw ParseError("embedding file " + path + ": header has trailing '" +
                             extra + "'");
        }
    }
    if (file_dim != expected_dim) {
        throw ValidationError("embedding file " + path + " has dimension " +
                              std::to_string(file_dim) + " but the configuration asks for " +
                              std::to_string(expected_dim));
    }

    EmbeddingTable table = make_table(vocab, expected_dim);
    MatMap rows = table.weights.matrix();
    std::vector<bool> from_file(static_cast<std::size_t>(vocab.size()), false);
    Index line_no = 1;
    Index parsed = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        ++parsed;
        std::istringstream ls(line);
        std::string token;
        ls >> token;
        Vec v(expected_dim);
        for (Index c = 0; c < expected_dim; ++c) {
            if (!(ls >> v[c])) {
                throw ParseError("embedding file " + path + " line " +
                                 std::to_string(line_no) + ": expected " +
                                 std::to_string(expected_dim) + " values for '" +
                                 token + "'");
            }
        }
        std::string extra;
        if (ls >> extra) {
            throw ParseError("embedding file " + path + " line " +
                             std::to_string(line_no) + ": trailing '" + extra +
                             "' after " + std::to_string(expected_dim) + " values");
        }
        if (!vocab.contains(token)) continue;
        Index r = vocab.index_of(token);
        if (r == Vocabulary::kPad || r == Vocabulary::kEntity) continue;
        rows.row(r) = v.transpose();
        from_file[static_cast<std::size_t>(r)] = true;
    }
    if (parsed != file_count) {
        MTLRE_LOG_AT(LogLevel::warn)
            << "embedding file " << path << " header promises " << file_count
            << " rows but " << parsed << " were found";
    }
    // Vocabulary entries the file does not cover fall back to random
    // initialization, drawn in index order for seed reproducibility.
    Index missing = 0;
    for (Index r = 0; r < vocab.size(); ++r) {
        if (r == Vocabulary::kPad || r == Vocabulary::kEntity) continue;
        if (!from_file[static_cast<std::size_t>(r)]) {
            random_row(rows, r, rng);
            ++missing;
        }
    }
    MTLRE_LOG_AT(LogLevel::info)
        << "embeddings: " << (vocab.size() - missing - 2) << " rows from file, "
        << missing << " randomly initialized";
    return table;
}

}  // namespace mtlre
