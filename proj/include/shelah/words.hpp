#pragma once

// Formal words over an abstract alphabet of integer symbols.

#include <algorithm>
#include <concepts>
#include <type_traits>
#include <cstdint>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "shelah/core.hpp"

namespace shelah {

using Symbol = std::int32_t;

struct Letter {
  Symbol symbol = 0;
  int sign = 1;  // +1 or -1

  constexpr Letter inverse() const noexcept { return {symbol, -sign}; }
  friend constexpr bool operator==(Letter, Letter) = default;
  friend constexpr auto operator<=>(Letter, Letter) = default;
};

using Word = std::vector<Letter>;

inline Word letter_word(Symbol s, int sign = 1) { return Word{Letter{s, sign}}; }

/// Concatenation of any number of words, no reduction.
template <class... Ws>
  requires(std::same_as<std::remove_cvref_t<Ws>, Word> && ...)
Word concat(const Ws&... parts) {
  Word out;
  out.reserve((parts.size() + ... + std::size_t{0}));
  (out.insert(out.end(), parts.begin(), parts.end()), ...);
  return out;
}

/// Formal inverse: reversed with every sign flipped. No reduction.
inline Word inverse(const Word& w) {
  Word out;
  out.reserve(w.size());
  for (auto it = w.rbegin(); it != w.rend(); ++it) out.push_back(it->inverse());
  return out;
}

/// Stack-based free reduction.
inline Word free_reduce(const Word& w) {
  Word out;
  out.reserve(w.size());
  for (Letter l : w) {
    if (!out.empty() && out.back() == l.inverse())
      out.pop_back();
    else
      out.push_back(l);
  }
  return out;
}

inline bool is_freely_reduced(const Word& w) {
  for (std::size_t i = 1; i < w.size(); ++i)
    if (w[i] == w[i - 1].inverse()) return false;
  return true;
}

/// w^n for n >= 0, unreduced.
inline Word power(const Word& w, std::size_t n) {
  Word out;
  out.reserve(w.size() * n);
  for (std::size_t i = 0; i < n; ++i) out.insert(out.end(), w.begin(), w.end());
  return out;
}

/// Signed power: negative exponents use the formal inverse.
inline Word signed_power(const Word& w, long long n) {
  return n >= 0 ? power(w, static_cast<std::size_t>(n))
                : power(inverse(w), static_cast<std::size_t>(-n));
}

/// Cyclic rotation so the word starts at position k.
inline Word rotate(const Word& w, std::size_t k) {
  if (w.empty()) return w;
  k %= w.size();
  Word out;
  out.reserve(w.size());
  out.insert(out.end(), w.begin() + static_cast<std::ptrdiff_t>(k), w.end());
  out.insert(out.end(), w.begin(), w.begin() + static_cast<std::ptrdiff_t>(k));
  return out;
}

inline std::vector<Symbol> support(const Word& w) {
  std::vector<Symbol> s;
  for (Letter l : w) s.push_back(l.symbol);
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

/// Number of x-blocks in the rho word: x y x^2 y ... x^80 y.
inline constexpr std::size_t kRhoBlocks = 80;
/// 1 + 2 + ... + 80.
inline constexpr std::size_t kRhoXPowerSum = kRhoBlocks * (kRhoBlocks + 1) / 2;

inline constexpr std::size_t rho_length(std::size_t x_len, std::size_t y_len) {
  return kRhoXPowerSum * x_len + kRhoBlocks * y_len;
}

/// x y x^2 y x^3 y ... x^80 y with x and y substituted verbatim, never reduced.
inline Word rho(const Word& x, const Word& y) {
  if (x.empty() || y.empty()) throw Error("rho: x and y must be nonempty");
  Word out;
  out.reserve(rho_length(x.size(), y.size()));
  for (std::size_t i = 1; i <= kRhoBlocks; ++i) {
    for (std::size_t j = 0; j < i; ++j) out.insert(out.end(), x.begin(), x.end());
    out.insert(out.end(), y.begin(), y.end());
  }
  return out;
}

/// n_level = 6640^level, saturating at SIZE_MAX.
inline std::size_t rho_exponent(std::size_t level) {
  std::size_t n = 1;
  for (std::size_t i = 0; i < level; ++i) {
    if (n > SIZE_MAX / 6640) return SIZE_MAX;
    n *= 6640;
  }
  return n;
}

/// rho(x^n, y^n) with n = 6640^level. Throws BudgetExceeded when the output
/// would exceed max_letters.
inline Word rho_ell(const Word& x, const Word& y, std::size_t level,
                    std::size_t max_letters = Budget{}.max_word_letters) {
  if (x.empty() || y.empty()) throw Error("rho_ell: x and y must be nonempty");
  const std::size_t n = rho_exponent(level);
  const long double len = static_cast<long double>(rho_length(x.size(), y.size())) * n;
  if (n == SIZE_MAX || len > static_cast<long double>(max_letters))
    throw BudgetExceeded("rho_ell: level " + std::to_string(level) +
                         " exceeds the word-length budget");
  if (level == 0) return rho(x, y);
  return rho(power(x, n), power(y, n));
}

inline std::string to_string(const Word& w) {
  if (w.empty()) return "1";
  std::ostringstream os;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) os << '.';
    os << 'x' << w[i].symbol;
    if (w[i].sign < 0) os << '\'';
  }
  return os.str();
}

/// Inverse of to_string: "1" or letters "x<id>" with an optional trailing
/// apostrophe for the inverse, separated by dots.
inline Word parse_word(const std::string& text) {
  Word out;
  if (text == "1" || text.empty()) return out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != 'x') throw Error("parse_word: expected 'x' in \"" + text + "\"");
    std::size_t j = i + 1;
    bool neg = j < text.size() && text[j] == '-';
    if (neg) ++j;
    std::size_t k = j;
    while (k < text.size() && text[k] >= '0' && text[k] <= '9') ++k;
    if (k == j) throw Error("parse_word: missing symbol id in \"" + text + "\"");
    Symbol sym = static_cast<Symbol>(std::stoll(text.substr(j, k - j)));
    if (neg) sym = -sym;
    int sign = 1;
    if (k < text.size() && text[k] == '\'') {
      sign = -1;
      ++k;
    }
    out.push_back({sym, sign});
    if (k < text.size()) {
      if (text[k] != '.') throw Error("parse_word: expected '.' in \"" + text + "\"");
      ++k;
    }
    i = k;
  }
  return out;
}

inline std::ostream& operator<<(std::ostream& os, const Word& w) { return os << to_string(w); }

struct WordHash {
  std::size_t operator()(const Word& w) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (Letter l : w) {
      h ^= static_cast<std::size_t>(static_cast<std::uint32_t>(l.symbol)) * 2 + (l.sign > 0);
      h *= 1099511628211ull;
    }
    return h;
  }
};

}  // namespace shelah
