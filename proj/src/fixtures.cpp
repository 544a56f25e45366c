#include "mtlre/fixtures.hpp"

#include <algorithm>

#include "mtlre/error.hpp"

namespace mtlre {

std::vector<std::string> CorpusFixture::label_set() const {
    std::vector<std::string> out;
    for (const ClassCount& c : classes) {
        if (std::find(removed_labels.begin(), removed_labels.end(), c.label) ==
            removed_labels.end()) {
            out.push_back(c.label);
        }
    }
    return out;
}

Index CorpusFixture::total() const {
    Index t = 0;
    for (const ClassCount& c : classes) t += c.count;
    return t;
}

const std::vector<CorpusFixture>& corpus_fixtures() {
    static const std::vector<CorpusFixture> fixtures = {
        // Binary protein-protein interaction corpora.
        {"aimed",
         {{"interaction", 1000}, {"no_interaction", 4834}},
         {}},
        {"bioinfer",
         {{"interaction", 2534}, {"no_interaction", 7132}},
         {}},
        // DDI-2013: four interaction types plus the negative class.
        // Counts are train + test instances.
        {"ddi",
         {{"false", 22474 + 4461},
          {"effect", 1685 + 360},
          {"mechanism", 1316 + 302},
          {"advice", 826 + 221},
          {"int", 188 + 96}},
         {}},
        // i2b2-2010 clinical relations; the three rarest classes are dropped
        // from training/evaluation by protocol.
        {"i2b2",
         {{"TrIP", 203},
          {"TeRP", 3053},
          {"TrAP", 2617},
          {"PIP", 2203},
          {"TeCP", 504},
          {"TrCP", 526},
          {"TrNAP", 174},
          {"TrWP", 133},
          {"NONE", 54530}},
         {"TrWP", "TrIP", "TrNAP"}},
    };
    return fixtures;
}

const CorpusFixture& fixture(const std::string& corpus_id) {
    for (const CorpusFixture& f : corpus_fixtures()) {
        if (f.corpus_id == corpus_id) return f;
    }
    throw LookupError("no corpus fixture named '" + corpus_id + "'");
}

}  // namespace mtlre
