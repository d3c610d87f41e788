#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sealpy/memcheck/analyzer.hpp"

namespace sealpy::memcheck {

struct expected_finding {
    diagnostic_kind kind;
    int line;
};

struct corpus_file {
    std::string name;
    std::string text;
    bool listing_derived = false;
    // Parsed from "# expect: Kind" markers in the text.
    std::vector<expected_finding> expected;
};

// The seeded corpus: four files modelled on the Balloc and codemap-delete
// listings (vulnerable and fixed), one synthetic file per bug class, and a
// clean control.
const std::vector<corpus_file>& corpus_files();

// Writes every corpus file plus manifest.json into `dir` (created if needed)
// and returns the written file names in corpus order.
std::vector<std::string> generate_corpus(const std::filesystem::path& dir);

} // namespace sealpy::memcheck
