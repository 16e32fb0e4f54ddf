#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace shelah {

/// Three-valued verdict used wherever a question may exhaust a search budget.
enum class Tri : std::uint8_t { no, yes, inconclusive };

inline constexpr Tri from_bool(bool b) noexcept { return b ? Tri::yes : Tri::no; }

inline constexpr Tri tri_not(Tri t) noexcept {
  switch (t) {
    case Tri::yes: return Tri::no;
    case Tri::no: return Tri::yes;
    default: return Tri::inconclusive;
  }
}

/// Kleene conjunction.
inline constexpr Tri tri_and(Tri a, Tri b) noexcept {
  if (a == Tri::no || b == Tri::no) return Tri::no;
  if (a == Tri::yes && b == Tri::yes) return Tri::yes;
  return Tri::inconclusive;
}

/// Kleene disjunction.
inline constexpr Tri tri_or(Tri a, Tri b) noexcept {
  if (a == Tri::yes || b == Tri::yes) return Tri::yes;
  if (a == Tri::no && b == Tri::no) return Tri::no;
  return Tri::inconclusive;
}

inline const char* to_string(Tri t) noexcept {
  switch (t) {
    case Tri::yes: return "yes";
    case Tri::no: return "no";
    default: return "inconclusive";
  }
}

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when a search exceeds its configured budget and the caller asked
/// for a hard failure instead of an inconclusive verdict.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// Thrown from deep inside a computation when a subgroup-membership or
/// equality question came back inconclusive. Entry points catch it and
/// report Tri::inconclusive.
class Inconclusive : public Error {
 public:
  using Error::Error;
};

/// Bounds shared by the semi-decision procedures.
struct Budget {
  std::size_t dehn_steps = 64;        // replacements per Dehn run
  std::size_t chain_candidates = 64;  // h-values tried when solving double cosets
  std::size_t max_word_letters = 50'000'000;
  std::size_t torsion_len = 8;
  std::size_t torsion_pow = 4;
  std::size_t samples = 32;
};

}  // namespace shelah
