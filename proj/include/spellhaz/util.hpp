#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace spellhaz {

// Raised for malformed inputs (files, configs, data contracts). The CLI maps
// this to exit code 2; everything else maps to 1.
class input_error : public std::runtime_error {
public:
  explicit input_error(const std::string& what) : std::runtime_error(what) {}
};

// Shortest round-trip decimal rendering of a double. All file output goes
// through this so artifacts are byte-stable across runs and thread counts.
std::string format_double(double value);

std::vector<std::string> split_csv_line(std::string_view line);
std::string join_csv(const std::vector<std::string>& fields);

// FNV-1a over a byte stream; used for manifest fingerprints.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state = 0xcbf29ce484222325ull);
std::uint64_t fnv1a64_file(const std::string& path, std::uint64_t state = 0xcbf29ce484222325ull);

// SplitMix64 mixer; combines seeds and ids into independent RNG streams.
std::uint64_t mix64(std::uint64_t a, std::uint64_t b);

// Minimal deterministic RNG (xorshift-star family). <random> distributions are
// implementation-defined, so every draw the engine makes goes through this.
class DetRng {
public:
  explicit DetRng(std::uint64_t seed);
  std::uint64_t next_u64();
  double next_uniform();             // (0,1)
  double next_normal();              // standard normal, Box-Muller
  int next_geometric(double p);      // support {1,2,...}; inversion method
  std::uint64_t next_below(std::uint64_t bound);

private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Fisher-Yates with explicit bounded draws, deterministic across platforms.
template <typename T>
void det_shuffle(std::vector<T>& items, DetRng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t k = static_cast<std::size_t>(rng.next_below(i));
    std::swap(items[i - 1], items[k]);
  }
}

}  // namespace spellhaz
