#include "mtlre/vocab.hpp"

#include <fstream>

namespace mtlre {

Vocabulary::Vocabulary() {
    add(kPadToken);
    add(kUnkToken);
    add(kEntityToken);
}

Vocabulary Vocabulary::build(std::span<const Corpus* const> corpora) {
    Vocabulary v;
    for (const Corpus* corpus : corpora) {
        for (const RelationExample& ex : *corpus) {
            for (const std::string& tok : ex.tokens) v.add(tok);
        }
    }
    return v;
}

Vocabulary Vocabulary::build(const Corpus& corpus) {
    const Corpus* p = &corpus;
    return build(std::span<const Corpus* const>(&p, 1));
}

Index Vocabulary::index_of(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(const std::string& token) const {
    return index_.contains(token);
}

const std::string& Vocabulary::token(Index i) const {
    if (i < 0 || i >= size()) {
        throw LookupError("vocabulary index " + std::to_string(i) +
                          " out of range (size " + std::to_string(size()) + ")");
    }
    return tokens_[i];
}

Index Vocabulary::add(const std::string& token) {
    auto it = index_.find(token);
    if (it != index_.end()) return it->second;
    Index id = size();
    tokens_.push_back(token);
    index_.emplace(token, id);
    return id;
}

void Vocabulary::save(const std::string& path) const {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open vocabulary for writing: " + path);
    for (const std::string& tok : tokens_) os << tok << "\n";
    os.flush();
    if (!os) throw IoError("write failed for vocabulary: " + path);
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open vocabulary: " + path);
    Vocabulary v;
    std::string line;
    Index line_no = 0;
    while (std::getline(is, line)) {
        if (line_no < v.size()) {
            // Reserved rows must match what the constructor installed.
            if (line != v.tokens_[line_no]) {
                throw ParseError("vocabulary " + path + ": line " +
                                 std::to_string(line_no + 1) + " is '" + line +
                                 "' but reserved token '" + v.tokens_[line_no] +
                                 "' was expected");
            }
        } else if (v.contains(line)) {
            throw ParseError("vocabulary " + path + ": duplicate token '" + line + "'");
        } else {
            v.add(line);
        }
        ++line_no;
    }
    if (line_no < v.size()) {
        throw ParseError("vocabulary " + path + ": missing reserved tokens");
    }
    return v;
}

}  // namespace mtlre
