#pragma once

#include <string>
#include <vector>

#include "mtlre/tensor.hpp"

namespace mtlre {

// Published label inventories and class counts for the four public
// relation-extraction corpora this architecture targets (AiMed, BioInfer,
// DDI-2013, i2b2-2010).  The corpora themselves are license-restricted and
// never ship here; these reference tables let a user sanity-check their own
// converter output (label spelling, class count totals) against the
// published statistics.
struct ClassCount {
    std::string label;
    Index count;
};

struct CorpusFixture {
    std::string corpus_id;
    std::vector<ClassCount> classes;
    // Labels excluded from training/evaluation by protocol (rare classes).
    std::vector<std::string> removed_labels;

    std::vector<std::string> label_set() const;  // after removals
    Index total() const;
};

const std::vector<CorpusFixture>& corpus_fixtures();
const CorpusFixture& fixture(const std::string& corpus_id);  // LookupError if unknown

}  // namespace mtlre
