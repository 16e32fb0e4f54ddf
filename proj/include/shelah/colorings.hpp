#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "shelah/core.hpp"

namespace shelah {

/// Ordinal below epsilon_0 in Cantor normal form: a sum of terms w^exponent * coef
/// with strictly decreasing exponents and positive coefficients.
struct Ordinal {
  struct Term;
  std::vector<Term> terms;

  static Ordinal zero() { return {}; }
  static Ordinal finite(std::uint64_t n);
  static Ordinal omega_power(Ordinal exponent, std::uint64_t coef = 1);
  static Ordinal omega() { return omega_power(finite(1)); }

  bool is_zero() const noexcept { return terms.empty(); }
  bool is_finite() const noexcept;
  bool is_successor() const noexcept;
  bool is_limit() const noexcept { return !is_zero() && !is_successor(); }
  /// Value of a finite ordinal; throws otherwise.
  std::uint64_t as_finite() const;
};

struct Ordinal::Term {
  Ordinal exponent;
  std::uint64_t coef = 1;
};

inline std::strong_ordering operator<=>(const Ordinal& a, const Ordinal& b) {
  const std::size_t n = std::min(a.terms.size(), b.terms.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (auto c = a.terms[i].exponent <=> b.terms[i].exponent; c != 0) return c;
    if (auto c = a.terms[i].coef <=> b.terms[i].coef; c != 0) return c;
  }
  return a.terms.size() <=> b.terms.size();
}

inline bool operator==(const Ordinal& a, const Ordinal& b) { return (a <=> b) == 0; }

inline std::strong_ordering ord_cmp(const Ordinal& a, const Ordinal& b) { return a <=> b; }

inline Ordinal Ordinal::finite(std::uint64_t n) {
  Ordinal o;
  if (n > 0) o.terms.push_back(Term{Ordinal{}, n});
  return o;
}

inline Ordinal Ordinal::omega_power(Ordinal exponent, std::uint64_t coef) {
  if (coef == 0) throw Error("ordinal coefficient must be positive");
  Ordinal o;
  o.terms.push_back(Term{std::move(exponent), coef});
  return o;
}

inline bool Ordinal::is_finite() const noexcept {
  return terms.empty() || (terms.size() == 1 && terms[0].exponent.is_zero());
}

inline bool Ordinal::is_successor() const noexcept {
  return !terms.empty() && terms.back().exponent.is_zero();
}

inline std::uint64_t Ordinal::as_finite() const {
  if (!is_finite()) throw Error("ordinal is not finite");
  return terms.empty() ? 0 : terms[0].coef;
}

/// Throws unless every exponent list is strictly decreasing with positive
/// coefficients, recursively.
inline void validate(const Ordinal& o) {
  for (std::size_t i = 0; i < o.terms.size(); ++i) {
    if (o.terms[i].coef == 0) throw Error("malformed CNF: zero coefficient");
    validate(o.terms[i].exponent);
    if (i > 0 && !(o.terms[i].exponent < o.terms[i - 1].exponent))
      throw Error("malformed CNF: exponents not strictly decreasing");
  }
}

inline Ordinal ord_add(const Ordinal& a, const Ordinal& b) {
  if (b.is_zero()) return a;
  const Ordinal& lead = b.terms.front().exponent;
  Ordinal out;
  for (const auto& t : a.terms) {
    if (t.exponent > lead) {
      out.terms.push_back(t);
    } else {
      if (t.exponent == lead) {
        out.terms.push_back({lead, t.coef + b.terms.front().coef});
        out.terms.insert(out.terms.end(), b.terms.begin() + 1, b.terms.end());
        return out;
      }
      break;
    }
  }
  out.terms.insert(out.terms.end(), b.terms.begin(), b.terms.end());
  return out;
}

/// w*a + b, the shape of every ordinal below w^2.
inline Ordinal omega_affine(std::uint64_t a, std::uint64_t b) {
  Ordinal o;
  if (a > 0) o.terms.push_back({Ordinal::finite(1), a});
  if (b > 0) o.terms.push_back({Ordinal{}, b});
  return o;
}

inline Ordinal predecessor(const Ordinal& o) {
  if (!o.is_successor()) throw Error("ordinal has no predecessor");
  Ordinal p = o;
  if (--p.terms.back().coef == 0) p.terms.pop_back();
  return p;
}

/// Splits a limit w^a*c + ... into (gamma, a) where the ordinal is gamma + w^a
/// and a > 0.
inline std::pair<Ordinal, Ordinal> split_last(const Ordinal& delta) {
  if (delta.is_zero()) throw Error("zero has no last term");
  Ordinal head = delta;
  Ordinal exp = head.terms.back().exponent;
  if (--head.terms.back().coef == 0) head.terms.pop_back();
  return {std::move(head), std::move(exp)};
}

/// Canonical fundamental sequence: (g + w^(a+1))[n] = g + w^a*(n+1) and
/// (g + w^l)[n] = g + w^(l[n]) for limit l.
inline Ordinal fundamental_seq(const Ordinal& delta, std::uint64_t n) {
  if (!delta.is_limit()) throw Error("fundamental_seq needs a limit ordinal");
  auto [head, exp] = split_last(delta);
  if (exp.is_successor()) return ord_add(head, Ordinal::omega_power(predecessor(exp), n + 1));
  return ord_add(head, Ordinal::omega_power(fundamental_seq(exp, n)));
}

inline std::string to_string(const Ordinal& o) {
  if (o.is_zero()) return "0";
  std::string s;
  for (const auto& t : o.terms) {
    if (!s.empty()) s += "+";
    if (t.exponent.is_zero()) {
      s += std::to_string(t.coef);
      continue;
    }
    s += "w";
    if (t.exponent.is_finite()) {
      if (t.exponent.as_finite() != 1) s += "^" + std::to_string(t.exponent.as_finite());
    } else if (t.exponent == Ordinal::omega()) {
      s += "^w";
    } else {
      s += "^(" + to_string(t.exponent) + ")";
    }
    if (t.coef != 1) s += "*" + std::to_string(t.coef);
  }
  return s;
}

namespace detail {

class OrdinalParser {
 public:
  explicit OrdinalParser(const std::string& s) : s_(s) {}

  Ordinal parse_all() {
    Ordinal o = sum();
    if (pos_ != s_.size()) fail();
    validate(o);
    return o;
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail() const { throw Error("malformed ordinal: '" + s_ + "'"); }
  bool eat(char c) {
    if (pos_ < s_.size() && s_[pos_] == c) return ++pos_, true;
    return false;
  }
  std::uint64_t number() {
    std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] >= '0' && s_[pos_] <= '9') ++pos_;
    if (start == pos_) fail();
    return std::stoull(s_.substr(start, pos_ - start));
  }
  Ordinal sum() {
    Ordinal o;
    do {
      Ordinal::Term t = term();
      if (t.coef == 0) continue;
      o.terms.push_back(std::move(t));
    } while (eat('+'));
    return o;
  }
  Ordinal::Term term() {
    if (!eat('w')) return {Ordinal{}, number()};
    Ordinal exp = Ordinal::finite(1);
    if (eat('^')) {
      if (eat('(')) {
        exp = sum();
        if (!eat(')')) fail();
      } else if (eat('w')) {
        exp = Ordinal::omega();
      } else {
        exp = Ordinal::finite(number());
      }
    }
    std::uint64_t coef = eat('*') ? number() : 1;
    if (coef == 0) fail();
    return {std::move(exp), coef};
  }
};

}  // namespace detail

/// Parses strings such as "w^2*3+w+5", "w^(w+1)" or "0".
inline Ordinal parse_ordinal(const std::string& s) { return detail::OrdinalParser(s).parse_all(); }

inline bool is_strictly_descending(const std::vector<Ordinal>& trace) {
  for (std::size_t i = 1; i < trace.size(); ++i)
    if (!(trace[i] < trace[i - 1])) return false;
  return true;
}


// ---------------------------------------------------------------------------
// Ladders and walks.
//
// For a limit d = g + w^a the ladder is {g} together with the fundamental
// sequence d[0] < d[1] < ..., so it has order type w and is cofinal in d.
// A successor b + 1 has the one-point ladder {b}.

/// Least ladder point of `beta` that is >= `alpha`, for alpha < beta.
inline Ordinal ladder_step(const Ordinal& alpha, const Ordinal& beta) {
  if (!(alpha < beta)) throw Error("ladder_step needs alpha < beta");
  if (beta.is_successor()) return predecessor(beta);
  Ordinal head = split_last(beta).first;
  if (alpha <= head) return head;
  for (std::uint64_t n = 0;; ++n) {
    Ordinal p = fundamental_seq(beta, n);
    if (alpha <= p) return p;
  }
}

/// |C_beta ∩ alpha|, finite because the ladder has order type w.
inline std::uint64_t ladder_count_below(const Ordinal& alpha, const Ordinal& beta) {
  if (beta.is_zero()) return 0;
  if (beta.is_successor()) return predecessor(beta) < alpha ? 1 : 0;
  Ordinal head = split_last(beta).first;
  if (!(head < alpha)) return 0;
  std::uint64_t count = 1;
  for (std::uint64_t n = 0; fundamental_seq(beta, n) < alpha; ++n) ++count;
  return count;
}

/// Ladder points of `beta` strictly below `alpha`, ascending.
inline std::vector<Ordinal> ladder_below(const Ordinal& alpha, const Ordinal& beta) {
  std::vector<Ordinal> out;
  if (beta.is_zero()) return out;
  if (beta.is_successor()) {
    if (predecessor(beta) < alpha) out.push_back(predecessor(beta));
    return out;
  }
  Ordinal head = split_last(beta).first;
  if (!(head < alpha)) return out;
  out.push_back(head);
  for (std::uint64_t n = 0;; ++n) {
    Ordinal p = fundamental_seq(beta, n);
    if (!(p < alpha)) break;
    out.push_back(std::move(p));
  }
  return out;
}

/// Walk from beta down to alpha: (beta, ..., alpha).
inline std::vector<Ordinal> walk(const Ordinal& alpha, const Ordinal& beta) {
  if (!(alpha < beta)) throw Error("walk needs alpha < beta");
  std::vector<Ordinal> trace{beta};
  while (trace.back() != alpha) trace.push_back(ladder_step(alpha, trace.back()));
  return trace;
}

/// Sum over the walk of |C_{beta_k} ∩ alpha|.
inline std::uint64_t walk_weight(const Ordinal& alpha, const Ordinal& beta) {
  std::uint64_t total = 0;
  auto trace = walk(alpha, beta);
  for (std::size_t k = 0; k + 1 < trace.size(); ++k) total += ladder_count_below(alpha, trace[k]);
  return total;
}

/// The subadditive walk function:
///   rho(a, b) = max{ |C_b ∩ a|, rho(a, min(C_b \ a)), rho(x, a) : x ∈ C_b ∩ a },
/// with rho(a, a) = 0. Memoized; not thread-safe.
class WalkRho {
 public:
  std::uint64_t operator()(const Ordinal& alpha, const Ordinal& beta) {
    if (!(alpha < beta)) {
      if (alpha == beta) return 0;
      throw Error("rho needs alpha <= beta");
    }
    return eval(alpha, beta, 0);
  }

  std::size_t memo_size() const noexcept { return memo_.size(); }

 private:
  static constexpr std::size_t kMaxDepth = 100'000;
  std::map<std::pair<Ordinal, Ordinal>, std::uint64_t> memo_;

  std::uint64_t eval(const Ordinal& alpha, const Ordinal& beta, std::size_t depth) {
    if (alpha == beta) return 0;
    if (depth > kMaxDepth) throw Error("rho recursion depth exceeded");
    auto key = std::make_pair(alpha, beta);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    auto below = ladder_below(alpha, beta);
    std::uint64_t value = below.size();
    value = std::max(value, eval(alpha, ladder_step(alpha, beta), depth + 1));
    for (const auto& xi : below) value = std::max(value, eval(xi, alpha, depth + 1));
    memo_.emplace(std::move(key), value);
    return value;
  }
};

// ---------------------------------------------------------------------------
// Cantor pairing on naturals.

inline std::uint64_t cantor_encode(std::uint64_t x, std::uint64_t y) {
  const std::uint64_t s = x + y;
  return s * (s + 1) / 2 + y;
}

inline std::pair<std::uint64_t, std::uint64_t> cantor_decode(std::uint64_t z) {
  auto w = static_cast<std::uint64_t>((std::sqrt(8.0L * z + 1) - 1) / 2);
  while (w * (w + 1) / 2 > z) --w;
  while ((w + 1) * (w + 2) / 2 <= z) ++w;
  const std::uint64_t y = z - w * (w + 1) / 2;
  return {w - y, y};
}

// ---------------------------------------------------------------------------
// Coloring tables.

struct ColoringValues {
  std::uint64_t e = 0;
  std::uint64_t c0 = 0;
  std::uint64_t c1 = 0;
};

/// The three pair colorings consumed by the construction. Defined for
/// alpha < beta.
class ColoringTable {
 public:
  virtual ~ColoringTable() = default;
  virtual ColoringValues at(const Ordinal& alpha, const Ordinal& beta) const = 0;
  virtual std::string name() const = 0;

  std::uint64_t e(const Ordinal& a, const Ordinal& b) const { return at(a, b).e; }
  std::uint64_t c0(const Ordinal& a, const Ordinal& b) const { return at(a, b).c0; }
  std::uint64_t c1(const Ordinal& a, const Ordinal& b) const { return at(a, b).c1; }
};

using ColoringPtr = std::shared_ptr<const ColoringTable>;

/// e = rho; (c0, c1) = Cantor decoding of the walk weight.
class WalksColoring final : public ColoringTable {
 public:
  ColoringValues at(const Ordinal& alpha, const Ordinal& beta) const override {
    auto [x0, x1] = cantor_decode(walk_weight(alpha, beta));
    return {rho_(alpha, beta), x0, x1};
  }
  std::string name() const override { return "walks"; }

 private:
  mutable WalkRho rho_;
};

/// Explicit entries with a fallback for unlisted pairs.
class SparseColoring final : public ColoringTable {
 public:
  SparseColoring() = default;
  explicit SparseColoring(ColoringValues fallback) : fallback_(fallback) {}

  void set(const Ordinal& alpha, const Ordinal& beta, ColoringValues v) {
    if (!(alpha < beta)) throw Error("coloring entries need alpha < beta");
    entries_[{alpha, beta}] = v;
  }

  ColoringValues at(const Ordinal& alpha, const Ordinal& beta) const override {
    auto it = entries_.find({alpha, beta});
    return it == entries_.end() ? fallback_ : it->second;
  }
  std::string name() const override { return "sparse"; }

  const ColoringValues& fallback() const noexcept { return fallback_; }
  std::size_t size() const noexcept { return entries_.size(); }

  /// {"default": {e,c0,c1}, "entries": [{"alpha": "w+1", "beta": "w*2", "e": 1, ...}]}
  static SparseColoring from_json(const nlohmann::json& j) {
    auto values = [](const nlohmann::json& v, ColoringValues base) {
      base.e = v.value("e", base.e);
      base.c0 = v.value("c0", base.c0);
      base.c1 = v.value("c1", base.c1);
      return base;
    };
    SparseColoring t(j.contains("default") ? values(j.at("default"), {}) : ColoringValues{});
    for (const auto& entry : j.value("entries", nlohmann::json::array()))
      t.set(parse_ordinal(entry.at("alpha").get<std::string>()),
            parse_ordinal(entry.at("beta").get<std::string>()), values(entry, t.fallback_));
    return t;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["default"] = {{"e", fallback_.e}, {"c0", fallback_.c0}, {"c1", fallback_.c1}};
    j["entries"] = nlohmann::json::array();
    for (const auto& [k, v] : entries_)
      j["entries"].push_back({{"alpha", to_string(k.first)},
                              {"beta", to_string(k.second)},
                              {"e", v.e},
                              {"c0", v.c0},
                              {"c1", v.c1}});
    return j;
  }

 private:
  ColoringValues fallback_{};
  std::map<std::pair<Ordinal, Ordinal>, ColoringValues> entries_;
};

/// D^gamma_{<i} (strict) or D^gamma_{<=i} (weak), restricted to `universe`.
enum class DMode { strict, weak };

inline std::vector<Ordinal> d_set(const Ordinal& gamma, std::uint64_t i, DMode mode,
                                  const std::vector<Ordinal>& universe, const ColoringTable& table) {
  std::vector<Ordinal> out;
  for (const auto& beta : universe) {
    if (!(beta < gamma)) continue;
    const std::uint64_t v = table.e(beta, gamma);
    if (mode == DMode::strict ? v < i : v <= i) out.push_back(beta);
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct SubadditivityViolation {
  std::size_t alpha, beta, gamma;  // indices into the sorted universe
  int inequality;                  // 1 or 2
};

/// Checks both inequalities on every triple of `universe` (sorted ascending):
///   e(a,c) <= max(e(a,b), e(b,c))  and  e(a,b) <= max(e(a,c), e(b,c)).
inline std::optional<SubadditivityViolation> check_subadditive(const std::vector<Ordinal>& universe,
                                                               const ColoringTable& table) {
  const std::size_t n = universe.size();
  std::vector<std::uint64_t> m(n * n, 0);
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t a = 0; a < b; ++a) m[a * n + b] = table.e(universe[a], universe[b]);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      for (std::size_t c = b + 1; c < n; ++c) {
        const auto ab = m[a * n + b], bc = m[b * n + c], ac = m[a * n + c];
        if (ac > std::max(ab, bc)) return SubadditivityViolation{a, b, c, 1};
        if (ab > std::max(ac, bc)) return SubadditivityViolation{a, b, c, 2};
      }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Hitting scan: how often a target (x0, x1, i) is realized below a given beta.

struct HittingTarget {
  std::uint64_t xi0 = 0, xi1 = 0, level = 0;
};

struct HittingRow {
  Ordinal beta;
  HittingTarget target;
  std::size_t witnesses = 0;
};

struct HittingReport {
  std::vector<HittingRow> rows;
  std::size_t targets_hit = 0;
  std::size_t targets_total = 0;
  double coverage() const { return targets_total ? double(targets_hit) / targets_total : 0.0; }
};

inline HittingReport hitting_scan(const std::vector<Ordinal>& sample, const std::vector<Ordinal>& betas,
                                  const std::vector<HittingTarget>& targets, const ColoringTable& table) {
  HittingReport rep;
  if (sample.empty()) return rep;
  rep.targets_total = targets.size();
  for (const auto& t : targets) {
    bool hit = false;
    for (const auto& beta : betas) {
      HittingRow row{beta, t, 0};
      for (const auto& alpha : sample) {
        if (!(alpha < beta)) continue;
        auto v = table.at(alpha, beta);
        if (v.c0 == t.xi0 && v.c1 == t.xi1 && v.e > t.level) ++row.witnesses;
      }
      hit = hit || row.witnesses > 0;
      rep.rows.push_back(std::move(row));
    }
    if (hit) ++rep.targets_hit;
  }
  return rep;
}

}  // namespace shelah
