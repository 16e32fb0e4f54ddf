#pragma once

// Canonical forms in K *_H L.

#include <algorithm>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "shelah/core.hpp"
#include "shelah/groups.hpp"
#include "shelah/words.hpp"

namespace shelah {

enum class Side : std::uint8_t { k, l };

inline constexpr Side other(Side s) noexcept { return s == Side::k ? Side::l : Side::k; }
inline const char* to_string(Side s) noexcept { return s == Side::k ? "K" : "L"; }

struct Syllable {
  Side side = Side::k;
  Word word;
  friend bool operator==(const Syllable&, const Syllable&) = default;
};

/// Alternating syllables outside H; empty means the identity; a single
/// syllable may lie in H (then it is tagged K).
using CanonicalWord = std::vector<Syllable>;

/// Factors K, L and the common subgroup H as seen from each side. Symbols
/// owned by both factors must denote elements of H.
struct AmalgamTriple {
  GroupPtr k;
  GroupPtr l;
  SubgroupPtr h_in_k;
  SubgroupPtr h_in_l;

  const Group& group(Side s) const { return s == Side::k ? *k : *l; }
  const Subgroup& h(Side s) const { return s == Side::k ? *h_in_k : *h_in_l; }

  /// H-membership of a syllable; throws Inconclusive when undecided.
  Membership in_h(Side s, const Word& w) const {
    Membership m = h(s).contains(w);
    if (m.status == Tri::inconclusive) throw Inconclusive("H-membership undecided");
    return m;
  }
  bool is_one(Side s, const Word& w) const {
    Tri t = group(s).is_identity(w);
    if (t == Tri::inconclusive) throw Inconclusive("identity test undecided");
    return t == Tri::yes;
  }

  /// Cuts a formal word into maximal one-sided runs. Shared letters stay in
  /// the current run.
  std::vector<Syllable> split(const Word& w) const {
    std::vector<Syllable> out;
    Word pending;  // shared letters seen before any one-sided letter
    for (Letter x : w) {
      const bool in_k = k->owns(x.symbol), in_l = l->owns(x.symbol);
      if (!in_k && !in_l) throw Error("amalgam: letter " + std::to_string(x.symbol) + " in neither factor");
      if (in_k && in_l) {
        if (out.empty())
          pending.push_back(x);
        else
          out.back().word.push_back(x);
        continue;
      }
      Side s = in_k ? Side::k : Side::l;
      if (out.empty() || out.back().side != s) {
        out.push_back({s, std::move(pending)});
        pending.clear();
      }
      out.back().word.push_back(x);
    }
    if (!pending.empty()) out.push_back({Side::k, std::move(pending)});
    return out;
  }
};

using TriplePtr = std::shared_ptr<const AmalgamTriple>;

/// Amalgam of two finite tables along H, given as index lists in each table
/// matched by position (h_in_k[i] corresponds to h_in_l[i]). H elements get
/// shared symbols 0..|H|-1, then K-only and L-only elements follow.
inline TriplePtr make_finite_amalgam(const std::vector<std::vector<int>>& k_table,
                                     const std::vector<int>& h_in_k,
                                     const std::vector<std::vector<int>>& l_table,
                                     const std::vector<int>& h_in_l) {
  if (h_in_k.size() != h_in_l.size() || h_in_k.empty())
    throw Error("finite amalgam: H index lists must be nonempty and of equal size");
  const int nk = static_cast<int>(k_table.size()), nl = static_cast<int>(l_table.size());
  std::vector<Symbol> ks(nk, -1), ls(nl, -1);
  Symbol next = 0;
  for (std::size_t i = 0; i < h_in_k.size(); ++i) {
    if (h_in_k[i] < 0 || h_in_k[i] >= nk || h_in_l[i] < 0 || h_in_l[i] >= nl)
      throw Error("finite amalgam: H index out of range");
    if (ks[h_in_k[i]] >= 0 || ls[h_in_l[i]] >= 0) throw Error("finite amalgam: repeated H index");
    ks[h_in_k[i]] = ls[h_in_l[i]] = next++;
  }
  for (auto& s : ks)
    if (s < 0) s = next++;
  for (auto& s : ls)
    if (s < 0) s = next++;
  auto k = std::make_shared<FiniteTableGroup>(k_table, ks);
  auto l = std::make_shared<FiniteTableGroup>(l_table, ls);
  // The matching must be an isomorphism between subgroups.
  std::vector<int> to_l(nk, -1);
  for (std::size_t i = 0; i < h_in_k.size(); ++i) to_l[h_in_k[i]] = h_in_l[i];
  for (int x : h_in_k)
    for (int y : h_in_k) {
      int xy = k->product(x, y);
      if (to_l[xy] < 0) throw Error("finite amalgam: H is not closed in K");
      if (l->product(to_l[x], to_l[y]) != to_l[xy]) throw Error("finite amalgam: H copies are not isomorphic");
    }
  std::vector<Word> hk, hl;
  for (int x : h_in_k) hk.push_back(k->element(x));
  for (int x : h_in_l) hl.push_back(l->element(x));
  auto t = std::make_shared<AmalgamTriple>();
  t->k = k;
  t->l = l;
  t->h_in_k = std::make_shared<TableSubgroup>(k, hk);
  t->h_in_l = std::make_shared<TableSubgroup>(l, hl);
  return t;
}

/// Amalgam of two free groups along a common set of generator letters.
inline TriplePtr make_free_amalgam(const std::vector<Symbol>& k_letters, const std::vector<Symbol>& l_letters,
                                   const std::set<Symbol>& shared) {
  for (Symbol s : shared)
    if (std::find(k_letters.begin(), k_letters.end(), s) == k_letters.end() ||
        std::find(l_letters.begin(), l_letters.end(), s) == l_letters.end())
      throw Error("free amalgam: shared letter missing from a factor");
  for (Symbol s : k_letters)
    if (!shared.count(s) && std::find(l_letters.begin(), l_letters.end(), s) != l_letters.end())
      throw Error("free amalgam: factors share a letter outside H");
  auto t = std::make_shared<AmalgamTriple>();
  t->k = std::make_shared<FreeGroup>(k_letters);
  t->l = std::make_shared<FreeGroup>(l_letters);
  t->h_in_k = std::make_shared<LetterSubgroup>(shared);
  t->h_in_l = std::make_shared<LetterSubgroup>(shared);
  return t;
}

namespace detail {

inline void push_syllable(const AmalgamTriple& t, CanonicalWord& stack, Word& prefix,
                          Syllable s);

/// Absorbs an H element (already in the shared alphabet) into the top of the
/// stack, or into the pending prefix when the stack is empty.
inline void absorb(const AmalgamTriple& t, CanonicalWord& stack, Word& prefix, const Word& hrep) {
  if (stack.empty()) {
    prefix = concat(prefix, hrep);
    return;
  }
  Syllable& top = stack.back();
  top.word = t.group(top.side).normalize(concat(top.word, hrep));
}

inline void push_syllable(const AmalgamTriple& t, CanonicalWord& stack, Word& prefix,
                          Syllable s) {
  const Group& g = t.group(s.side);
  if (!prefix.empty() && stack.empty()) {
    s.word = concat(prefix, s.word);
    prefix.clear();
  }
  s.word = g.normalize(s.word);
  if (!stack.empty() && stack.back().side == s.side) {
    Syllable top = std::move(stack.back());
    stack.pop_back();
    push_syllable(t, stack, prefix, {s.side, concat(top.word, s.word)});
    return;
  }
  if (t.is_one(s.side, s.word)) return;
  Membership m = t.in_h(s.side, s.word);
  if (m.status == Tri::yes) {
    absorb(t, stack, prefix, m.rep);
    return;
  }
  stack.push_back(std::move(s));
}

}  // namespace detail

/// Canonical form of a product of one-sided syllables. H syllables are
/// absorbed into their left neighbour (a leading H factor goes right).
inline CanonicalWord canonicalize(const std::vector<Syllable>& syllables, const AmalgamTriple& t) {
  CanonicalWord stack;
  Word prefix;
  for (const Syllable& s : syllables) {
    // An H prefix pending in front of an empty stack is folded in by push.
    detail::push_syllable(t, stack, prefix, s);
  }
  if (stack.empty()) {
    Word p = t.k->normalize(prefix);
    if (p.empty() || t.is_one(Side::k, p)) return {};
    return {Syllable{Side::k, p}};
  }
  return stack;
}

inline CanonicalWord canonicalize_word(const Word& w, const AmalgamTriple& t) {
  return canonicalize(t.split(w), t);
}

inline Word flatten(const CanonicalWord& c) {
  Word out;
  for (const Syllable& s : c) out.insert(out.end(), s.word.begin(), s.word.end());
  return out;
}

inline CanonicalWord formal_inverse(const CanonicalWord& c) {
  CanonicalWord out;
  out.reserve(c.size());
  for (auto it = c.rbegin(); it != c.rend(); ++it) out.push_back({it->side, inverse(it->word)});
  return out;
}

inline CanonicalWord multiply(const CanonicalWord& a, const CanonicalWord& b, const AmalgamTriple& t) {
  std::vector<Syllable> all(a);
  all.insert(all.end(), b.begin(), b.end());
  return canonicalize(all, t);
}

inline CanonicalWord invert(const CanonicalWord& a, const AmalgamTriple& t) {
  return canonicalize(formal_inverse(a), t);
}

/// Equality test: same length and an h-chain with h_0 = h_n = 1, found by
/// forward propagation h_{i+1} = u_i^{-1} h_i v_i.
inline Tri canonical_equal(const CanonicalWord& u, const CanonicalWord& v, const AmalgamTriple& t) {
  try {
    if (u.size() != v.size()) return Tri::no;
    if (u.empty()) return Tri::yes;
    if (u.size() == 1 && u[0].side != v[0].side) {
      // Only possible when both lie in H.
      Membership a = t.in_h(u[0].side, u[0].word), b = t.in_h(v[0].side, v[0].word);
      if (a.status != Tri::yes || b.status != Tri::yes) return Tri::no;
      return from_bool(t.is_one(Side::k, concat(a.rep, inverse(b.rep))));
    }
    Word chain;  // h_i in the shared alphabet
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (u[i].side != v[i].side) return Tri::no;
      Side s = u[i].side;
      Word next = concat(inverse(u[i].word), chain, v[i].word);
      if (i + 1 == u.size()) return from_bool(t.is_one(s, next));
      Membership m = t.in_h(s, next);
      if (m.status != Tri::yes) return Tri::no;
      chain = m.rep;
    }
    return Tri::yes;
  } catch (const Inconclusive&) {
    return Tri::inconclusive;
  }
}

/// Product of u and v^{-1} is trivial in the amalgam.
inline Tri amalgam_equal(const CanonicalWord& u, const CanonicalWord& v, const AmalgamTriple& t) {
  try {
    return from_bool(multiply(u, formal_inverse(v), t).empty());
  } catch (const Inconclusive&) {
    return Tri::inconclusive;
  }
}

inline bool is_wcr(const CanonicalWord& g, const AmalgamTriple& t) {
  const std::size_t n = g.size();
  if (n <= 1 || n % 2 == 0) return true;
  return t.in_h(g.back().side, concat(g.back().word, g.front().word)).status == Tri::no;
}

/// Conjugate obtained by moving the last syllable to the front.
inline CanonicalWord cycle_last_to_front(const CanonicalWord& g, const AmalgamTriple& t) {
  if (g.size() <= 1) return g;
  std::vector<Syllable> s;
  s.reserve(g.size());
  s.push_back(g.back());
  s.insert(s.end(), g.begin(), g.end() - 1);
  return canonicalize(s, t);
}

/// A cyclically shortest conjugate: length 0, 1 or even. Each step shortens
/// an odd word by merging its two ends.
inline CanonicalWord cyclic_core(CanonicalWord g, const AmalgamTriple& t) {
  while (g.size() >= 3 && g.size() % 2 == 1) g = cycle_last_to_front(g, t);
  return g;
}

/// Rotation starting at syllable i (only alternating for even length).
inline CanonicalWord rotation(const CanonicalWord& g, std::size_t i) {
  CanonicalWord out;
  out.reserve(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) out.push_back(g[(i + j) % g.size()]);
  return out;
}

/// Candidate split pieces for syllables on each side.
struct SplitOptions {
  /// Explicit candidates per side; empty means "all elements" on finite
  /// factors and none on infinite ones.
  std::vector<Word> k_candidates;
  std::vector<Word> l_candidates;
  std::size_t max_results = 100'000;
};

namespace detail {

/// Buckets canonical words so that canonical_equal is only run within a
/// bucket of equal length and side pattern.
class CanonicalSet {
 public:
  explicit CanonicalSet(const AmalgamTriple& t) : t_(&t) {}
  bool insert(const CanonicalWord& c) {
    auto& bucket = buckets_[key(c)];
    for (std::size_t idx : bucket) {
      Tri eq = canonical_equal(items_[idx], c, *t_);
      if (eq == Tri::inconclusive) throw Inconclusive("canonical_equal undecided");
      if (eq == Tri::yes) return false;
    }
    bucket.push_back(items_.size());
    items_.push_back(c);
    return true;
  }
  bool contains(const CanonicalWord& c) const {
    auto it = buckets_.find(key(c));
    if (it == buckets_.end()) return false;
    for (std::size_t idx : it->second)
      if (canonical_equal(items_[idx], c, *t_) == Tri::yes) return true;
    return false;
  }
  const std::vector<CanonicalWord>& items() const noexcept { return items_; }

 private:
  static std::string key(const CanonicalWord& c) {
    std::string k = std::to_string(c.size()) + ":";
    for (const Syllable& s : c) k += s.side == Side::k ? 'k' : 'l';
    return k;
  }
  const AmalgamTriple* t_;
  std::unordered_map<std::string, std::vector<std::size_t>> buckets_;
  std::vector<CanonicalWord> items_;
};

}  // namespace detail

/// Weakly cyclically reduced conjugates: cyclic rotations and the split forms
/// x' g_{i+1} ... g_{i-1} x'' with x'' x' = g_i, deduplicated up to canonical
/// equality. Splits range over `opts` candidates (all elements on finite
/// factors by default).
inline std::vector<CanonicalWord> wcr_conjugates(const CanonicalWord& g, const AmalgamTriple& t,
                                                 const SplitOptions& opts = {}) {
  if (g.empty()) throw Error("wcr_conjugates: identity has no wcr conjugates");
  if (g.size() == 1) return {g};
  CanonicalWord core = cyclic_core(g, t);
  if (core.size() == 1) return {core};
  detail::CanonicalSet out(t);
  const std::size_t n = core.size();
  auto candidates = [&](Side s) -> std::vector<Word> {
    const auto& explicit_list = s == Side::k ? opts.k_candidates : opts.l_candidates;
    if (!explicit_list.empty()) return explicit_list;
    if (auto all = t.group(s).elements()) return *all;
    return {};
  };
  const std::vector<Word> cand_k = candidates(Side::k), cand_l = candidates(Side::l);
  for (std::size_t i = 0; i < n; ++i) {
    out.insert(rotation(core, i));
    if (out.items().size() >= opts.max_results) break;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Syllable& gi = core[i];
    const Group& grp = t.group(gi.side);
    for (const Word& xp : gi.side == Side::k ? cand_k : cand_l) {
      Word xpp = grp.normalize(concat(gi.word, inverse(xp)));
      std::vector<Syllable> s{{gi.side, xp}};
      for (std::size_t j = 1; j < n; ++j) s.push_back(core[(i + j) % n]);
      s.push_back({gi.side, xpp});
      CanonicalWord c = canonicalize(s, t);
      if (c.empty() || !is_wcr(c, t)) continue;
      out.insert(c);
      if (out.items().size() >= opts.max_results) return out.items();
    }
  }
  return out.items();
}

struct Part {
  CanonicalWord word;
  std::size_t source = 0;  // index of the wcr conjugate it was cut from
  std::size_t offset = 0;
};

/// Contiguous subwords of length >= min_len of the wcr conjugates of g.
inline std::vector<Part> parts_of(const CanonicalWord& g, const AmalgamTriple& t, std::size_t min_len,
                                  const SplitOptions& opts = {}) {
  std::vector<Part> out;
  auto conj = wcr_conjugates(g, t, opts);
  for (std::size_t c = 0; c < conj.size(); ++c) {
    const auto& w = conj[c];
    for (std::size_t len = std::max<std::size_t>(min_len, 1); len <= w.size(); ++len)
      for (std::size_t off = 0; off + len <= w.size(); ++off)
        out.push_back({CanonicalWord(w.begin() + static_cast<std::ptrdiff_t>(off),
                                     w.begin() + static_cast<std::ptrdiff_t>(off + len)),
                       c, off});
  }
  return out;
}

inline std::string to_string(const CanonicalWord& c) {
  if (c.empty()) return "1";
  std::string s;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (i) s += " | ";
    s += std::string(to_string(c[i].side)) + ":" + to_string(c[i].word);
  }
  return s;
}

}  // namespace shelah
