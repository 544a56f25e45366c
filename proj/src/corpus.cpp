#include "mtlre/corpus.hpp"

#include <cctype>
#include <fstream>

#include <json.hpp>

namespace mtlre {

using json = nlohmann::ordered_json;

void validate_example(const RelationExample& ex) {
    auto fail = [&](const std::string& why) {
        throw ValidationError("example '" + ex.example_id + "': " + why);
    };
    Index n = static_cast<Index>(ex.tokens.size());
    for (const Span* s : {&ex.entity1, &ex.entity2}) {
        if (s->begin < 0 || s->end > n || s->begin >= s->end) {
            fail("entity span [" + std::to_string(s->begin) + "," +
                 std::to_string(s->end) + ") invalid for " + std::to_string(n) +
                 " tokens");
        }
    }
    if (ex.entity1.overlaps(ex.entity2)) fail("entity spans overlap");
    if (ex.label.empty()) fail("empty label");
    if (ex.task_id.empty()) fail("empty task id");
}

RelationExample mask_entities(const RelationExample& ex,
                              const std::string& placeholder1,
                              const std::string& placeholder2) {
    validate_example(ex);
    // Work on (span, placeholder) in text order so index shifts are easy to
    // track; entity1 need not precede entity2.
    const bool e1_first = ex.entity1.begin < ex.entity2.begin;
    const Span& first = e1_first ? ex.entity1 : ex.entity2;
    const Span& second = e1_first ? ex.entity2 : ex.entity1;
    const std::string& first_tok = e1_first ? placeholder1 : placeholder2;
    const std::string& second_tok = e1_first ? placeholder2 : placeholder1;

    RelationExample out = ex;
    out.tokens.clear();
    Index i = 0;
    Span new_first, new_second;
    auto emit_span = [&](const Span& s, const std::string& tok, Span& placed) {
        placed.begin = static_cast<Index>(out.tokens.size());
        placed.end = placed.begin + 1;
        out.tokens.push_back(tok);
        i = s.end;
    };
    while (i < static_cast<Index>(ex.tokens.size())) {
        if (i == first.begin) emit_span(first, first_tok, new_first);
        else if (i == second.begin) emit_span(second, second_tok, new_second);
        else out.tokens.push_back(ex.tokens[i++]);
    }
    out.entity1 = e1_first ? new_first : new_second;
    out.entity2 = e1_first ? new_second : new_first;
    return out;
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    };
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            flush();
        } else if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else {
            // Punctuation and symbols stand alone.
            flush();
            out.push_back(std::string(1, static_cast<char>(c)));
        }
    }
    flush();
    return out;
}

namespace {

Span parse_span(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() ||
        !j[1].is_number_integer()) {
        throw ParseError(where + ": span must be [begin, end]");
    }
    return Span{j[0].get<Index>(), j[1].get<Index>()};
}

}  // namespace

Corpus read_corpus(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open corpus: " + path);
    Corpus corpus;
    std::string line;
    Index line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::string where = path + ":" + std::to_string(line_no);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(where + ": " + e.what());
        }
        for (const char* field : {"id", "doc", "task", "tokens", "e1", "e2", "label"}) {
            if (!j.contains(field)) {
                throw ParseError(where + ": missing field '" + field + "'");
            }
        }
        RelationExample ex;
        try {
            ex.example_id = j["id"].get<std::string>();
            ex.document_id = j["doc"].get<std::string>();
            ex.task_id = j["task"].get<std::string>();
            ex.tokens = j["tokens"].get<std::vector<std::string>>();
            ex.label = j["label"].get<std::string>();
        } catch (const json::exception& e) {
            throw ParseError(where + ": " + e.what());
        }
        ex.entity1 = parse_span(j["e1"], where);
        ex.entity2 = parse_span(j["e2"], where);
        try {
            validate_example(ex);
        } catch (const ValidationError& e) {
            throw ParseError(where + ": " + e.what());
        }
        corpus.push_back(std::move(ex));
    }
    return corpus;
}

void write_corpus(const std::string& path, const Corpus& corpus) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open corpus for writing: " + path);
    for (const RelationExample& ex : corpus) {
        json j;
        j["id"] = ex.example_id;
        j["doc"] = ex.document_id;
        j["task"] = ex.task_id;
        j["tokens"] = ex.tokens;
        j["e1"] = {ex.entity1.begin, ex.entity1.end};
        j["e2"] = {ex.entity2.begin, ex.entity2.end};
        j["label"] = ex.label;
        os << j.dump() << "\n";
    }
    os.flush();
    if (!os) throw IoError("write failed for corpus: " + path);
}

}  // namespace mtlre
