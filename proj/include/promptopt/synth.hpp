#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "promptopt/dataset.hpp"

namespace promptopt {

// Deterministic desk-scale corpus whose gold labels agree with the synthetic
// judge's hidden rule: PASS answers reuse only document words, FAIL answers
// contain at least one content token absent from the document. Six sources,
// balanced labels, answers long enough to survive cleaning.
std::vector<Record> generate_synthetic_records(std::size_t n, std::uint64_t seed);

void write_synthetic_dataset(const std::filesystem::path& path, std::size_t n,
                             std::uint64_t seed);

}  // namespace promptopt
