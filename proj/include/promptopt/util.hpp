#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace promptopt {

// FNV-1a, the digest primitive behind cache keys and derived seeds.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ull);

std::uint64_t splitmix64(std::uint64_t x);

// Deterministic sub-seed for a named purpose ("rs-candidate-2", a stratum key, ...).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view salt);

// Uniform double in [0,1) from a 64-bit hash.
double unit_real(std::uint64_t h);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

// Maximal runs of non-whitespace.
std::vector<std::string> split_whitespace(std::string_view s);

// Lowercased maximal alphanumeric runs.
std::vector<std::string> alnum_tokens(std::string_view s);

std::string read_file(const std::filesystem::path& path);

// Write-to-temp + rename so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Runs fn(i) for i in [0,n) on up to `workers` threads. Exceptions from
// workers are rethrown on the calling thread (first one wins).
void parallel_for_index(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace promptopt
