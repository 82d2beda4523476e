#include "spellhaz/util.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>

namespace spellhaz {

std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    if (comma == std::string_view::npos) {
      out.emplace_back(line.substr(pos));
      break;
    }
    out.emplace_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
  // strip trailing CR from files with CRLF endings
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r') {
    out.back().pop_back();
  }
  return out;
}

std::string join_csv(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out.push_back(',');
    out += fields[i];
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state) {
  for (unsigned char c : bytes) {
    state ^= c;
    state *= 0x100000001b3ull;
  }
  return state;
}

std::uint64_t fnv1a64_file(const std::string& path, std::uint64_t state) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open file for hashing: " + path);
  char buf[1 << 14];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    state = fnv1a64(std::string_view(buf, static_cast<std::size_t>(in.gcount())), state);
  }
  return state;
}

static std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (0x9e3779b97f4a7c15ull + (b << 6) + (b >> 2));
  std::uint64_t r = splitmix64(x);
  r ^= splitmix64(x);
  return r;
}

DetRng::DetRng(std::uint64_t seed) : state_(seed) {
  // warm up through splitmix so nearby seeds yield unrelated streams
  std::uint64_t s = seed;
  state_ = splitmix64(s);
  if (state_ == 0) state_ = 0x2545f4914f6cdd1dull;
}

std::uint64_t DetRng::next_u64() {
  // xorshift64*
  state_ ^= state_ >> 12;
  state_ ^= state_ << 25;
  state_ ^= state_ >> 27;
  return state_ * 0x2545f4914f6cdd1dull;
}

double DetRng::next_uniform() {
  // 53 random bits mapped into (0,1); never returns an exact endpoint
  const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  return u == 0.0 ? 0x1.0p-53 : u;
}

double DetRng::next_normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  const double u1 = next_uniform();
  const double u2 = next_uniform();
  const double mag = std::sqrt(-2.0 * std::log(u1));
  spare_ = mag * std::sin(2.0 * M_PI * u2);
  have_spare_ = true;
  return mag * std::cos(2.0 * M_PI * u2);
}

int DetRng::next_geometric(double p) {
  if (p >= 1.0) return 1;
  if (p <= 0.0) throw std::invalid_argument("geometric draw requires p in (0,1]");
  const double u = next_uniform();
  const double g = std::ceil(std::log(u) / std::log1p(-p));
  return g < 1.0 ? 1 : static_cast<int>(g);
}

std::uint64_t DetRng::next_below(std::uint64_t bound) {
  // rejection-free would bias tiny bounds negligibly; use rejection for exactness
  const std::uint64_t limit = bound * ((~0ull) / bound);
  std::uint64_t draw;
  do {
    draw = next_u64();
  } while (draw >= limit);
  return draw % bound;
}

}  // namespace spellhaz
