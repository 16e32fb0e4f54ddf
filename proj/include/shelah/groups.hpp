#pragma once

// Group backends, symbolic subgroup descriptors, double cosets, good fellows,
// malnormality and the element registry.
//
// Every backend represents its elements as words over integer symbols. Two
// backends that share a symbol denote the same element by it, which is how an
// amalgamated subgroup H is literally the intersection K ∩ L.

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "shelah/core.hpp"
#include "shelah/words.hpp"

namespace shelah {

/// Membership verdict. `rep` is a representative of the element written in the
/// subgroup's own alphabet (valid when status == yes).
struct Membership {
  Tri status = Tri::inconclusive;
  Word rep;
};

/// Solution of y = c^{-1} x c' with c, c' in a subgroup.
struct DoubleCosetSolution {
  Tri status = Tri::inconclusive;
  Word left;   // c
  Word right;  // c'
};

class Group;

class Subgroup {
 public:
  virtual ~Subgroup() = default;
  virtual std::string describe() const = 0;
  virtual Membership contains(const Word& w) const = 0;
  /// All elements, when the subgroup is finite and small enough to list.
  virtual std::optional<std::vector<Word>> elements() const { return std::nullopt; }
  /// Materialized elements usable as search candidates for infinite subgroups.
  virtual std::vector<Word> samples() const { return {}; }
  virtual bool is_trivial() const { return false; }
};

using SubgroupPtr = std::shared_ptr<const Subgroup>;

class Group : public std::enable_shared_from_this<Group> {
 public:
  virtual ~Group() = default;
  virtual std::string kind() const = 0;
  virtual bool owns(Symbol s) const = 0;
  /// Best-effort normal form. Equal outputs imply equal elements.
  virtual Word normalize(const Word& w) const = 0;
  virtual Tri is_identity(const Word& w) const = 0;
  /// Finite groups list every element; infinite ones return nullopt.
  virtual std::optional<std::vector<Word>> elements() const { return std::nullopt; }
  /// Deterministic sample of elements (short words for infinite backends).
  virtual std::vector<Word> sample_elements(std::size_t n) const = 0;

  /// y ∈ H x H ? with the conjugating pair as witness.
  virtual DoubleCosetSolution solve_double_coset(const Subgroup& h, const Word& x,
                                                 const Word& y, const Budget& budget) const;

  /// A string equal for two elements iff they share an H-double coset, when the
  /// backend can compute one exactly.
  virtual std::optional<std::string> double_coset_key(const Subgroup&, const Word&) const {
    return std::nullopt;
  }

  bool owns_word(const Word& w) const {
    return std::all_of(w.begin(), w.end(), [&](Letter l) { return owns(l.symbol); });
  }
  Word mul(const Word& a, const Word& b) const { return normalize(concat(a, b)); }
  Word inv(const Word& a) const { return normalize(inverse(a)); }
  Tri equal(const Word& a, const Word& b) const { return is_identity(concat(a, inverse(b))); }
};

using GroupPtr = std::shared_ptr<const Group>;

inline DoubleCosetSolution Group::solve_double_coset(const Subgroup& h, const Word& x,
                                                     const Word& y,
                                                     const Budget& budget) const {
  // y = c^{-1} x c'  <=>  c' = x^{-1} c y ∈ H.
  auto try_left = [&](const Word& c) -> std::optional<DoubleCosetSolution> {
    Word right_word = normalize(concat(inverse(x), c, y));
    Membership m = h.contains(right_word);
    if (m.status == Tri::yes) return DoubleCosetSolution{Tri::yes, c, m.rep};
    return std::nullopt;
  };
  if (auto all = h.elements()) {
    for (const Word& c : *all)
      if (auto s = try_left(c)) return *s;
    return {Tri::no, {}, {}};
  }
  std::vector<Word> cands{Word{}};
  for (const Word& s : h.samples()) {
    cands.push_back(s);
    cands.push_back(inverse(s));
  }
  std::size_t tried = 0;
  for (const Word& c : cands) {
    if (tried++ >= budget.chain_candidates) break;
    if (auto s = try_left(c)) return *s;
  }
  return {Tri::inconclusive, {}, {}};
}

// ---------------------------------------------------------------------------
// Finite multiplication tables

class FiniteTableGroup : public Group {
 public:
  /// table[i][j] = index of element_i * element_j; symbols[i] names element i.
  FiniteTableGroup(std::vector<std::vector<int>> table, std::vector<Symbol> symbols)
      : table_(std::move(table)), symbols_(std::move(symbols)) {
    const int n = order();
    if (n == 0) throw Error("finite table: empty group");
    if (static_cast<int>(symbols_.size()) != n) throw Error("finite table: symbol count mismatch");
    for (const auto& row : table_) {
      if (static_cast<int>(row.size()) != n) throw Error("finite table: table is not square");
      for (int v : row)
        if (v < 0 || v >= n) throw Error("finite table: entry out of range");
    }
    identity_ = -1;
    for (int e = 0; e < n && identity_ < 0; ++e) {
      bool ok = true;
      for (int j = 0; j < n && ok; ++j) ok = table_[e][j] == j && table_[j][e] == j;
      if (ok) identity_ = e;
    }
    if (identity_ < 0) throw Error("finite table: no identity element");
    inverse_.assign(n, -1);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (table_[i][j] == identity_) inverse_[i] = j;
    for (int i = 0; i < n; ++i)
      if (inverse_[i] < 0 || table_[inverse_[i]][i] != identity_)
        throw Error("finite table: element without two-sided inverse");
    for (int i = 0; i < n; ++i) {
      if (!index_of_.emplace(symbols_[i], i).second) throw Error("finite table: duplicate symbol");
    }
  }

  /// Symbols default to offset + index.
  static std::shared_ptr<FiniteTableGroup> from_table(std::vector<std::vector<int>> table,
                                                      Symbol offset = 0) {
    std::vector<Symbol> sym(table.size());
    for (std::size_t i = 0; i < sym.size(); ++i) sym[i] = offset + static_cast<Symbol>(i);
    return std::make_shared<FiniteTableGroup>(std::move(table), std::move(sym));
  }

  int order() const noexcept { return static_cast<int>(table_.size()); }
  int identity_index() const noexcept { return identity_; }
  int product(int a, int b) const { return table_.at(a).at(b); }
  int inverse_index(int a) const { return inverse_.at(a); }
  Symbol symbol(int index) const { return symbols_.at(index); }
  const std::vector<std::vector<int>>& table() const noexcept { return table_; }

  int index_of(Symbol s) const {
    auto it = index_of_.find(s);
    if (it == index_of_.end()) throw Error("finite table: foreign symbol " + std::to_string(s));
    return it->second;
  }

  int evaluate(const Word& w) const {
    int acc = identity_;
    for (Letter l : w) {
      int x = index_of(l.symbol);
      acc = table_[acc][l.sign > 0 ? x : inverse_[x]];
    }
    return acc;
  }

  Word element(int index) const {
    return index == identity_ ? Word{} : letter_word(symbols_.at(index));
  }

  std::string kind() const override { return "finite-table"; }
  bool owns(Symbol s) const override { return index_of_.count(s) != 0; }
  Word normalize(const Word& w) const override { return element(evaluate(w)); }
  Tri is_identity(const Word& w) const override { return from_bool(evaluate(w) == identity_); }

  std::optional<std::vector<Word>> elements() const override {
    std::vector<Word> out;
    for (int i = 0; i < order(); ++i) out.push_back(element(i));
    return out;
  }
  std::vector<Word> sample_elements(std::size_t n) const override {
    auto all = *elements();
    if (all.size() > n) all.resize(n);
    return all;
  }

  std::optional<std::string> double_coset_key(const Subgroup& h, const Word& x) const override {
    auto hs = h.elements();
    if (!hs) return std::nullopt;
    int best = order();
    const int xi = evaluate(x);
    for (const Word& a : *hs)
      for (const Word& b : *hs) best = std::min(best, product(product(evaluate(a), xi), evaluate(b)));
    return std::to_string(best);
  }

  /// Associativity over all triples.
  bool is_associative() const {
    const int n = order();
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
          if (table_[table_[a][b]][c] != table_[a][table_[b][c]]) return false;
    return true;
  }

 private:
  std::vector<std::vector<int>> table_;
  std::vector<Symbol> symbols_;
  std::unordered_map<Symbol, int> index_of_;
  std::vector<int> inverse_;
  int identity_ = 0;
};

/// Subgroup of a finite table group generated by a list of words; materialized
/// by closure under multiplication.
class TableSubgroup : public Subgroup {
 public:
  TableSubgroup(std::shared_ptr<const FiniteTableGroup> group, const std::vector<Word>& gens)
      : group_(std::move(group)) {
    std::vector<int> frontier{group_->identity_index()};
    members_.insert(group_->identity_index());
    std::vector<int> gen_idx;
    for (const Word& g : gens) gen_idx.push_back(group_->evaluate(g));
    while (!frontier.empty()) {
      int x = frontier.back();
      frontier.pop_back();
      for (int g : gen_idx) {
        int y = group_->product(x, g);
        if (members_.insert(y).second) frontier.push_back(y);
      }
    }
  }

  std::string describe() const override {
    return "table-subgroup(order " + std::to_string(members_.size()) + ")";
  }
  Membership contains(const Word& w) const override {
    int x = group_->evaluate(w);
    if (!members_.count(x)) return {Tri::no, {}};
    return {Tri::yes, group_->element(x)};
  }
  std::optional<std::vector<Word>> elements() const override {
    std::vector<Word> out;
    for (int i : members_) out.push_back(group_->element(i));
    return out;
  }
  bool is_trivial() const override { return members_.size() == 1; }
  const std::set<int>& member_indices() const noexcept { return members_; }

 private:
  std::shared_ptr<const FiniteTableGroup> group_;
  std::set<int> members_;
};

// ---------------------------------------------------------------------------
// Free groups and Z

/// Free group on a finite symbol set.
class FreeGroup : public Group {
 public:
  explicit FreeGroup(std::vector<Symbol> generators) : gens_(generators.begin(), generators.end()) {
    if (gens_.empty()) throw Error("free group: needs at least one generator");
  }
  const std::set<Symbol>& generators() const noexcept { return gens_; }

  std::string kind() const override { return gens_.size() == 1 ? "integer-cyclic" : "free"; }
  bool owns(Symbol s) const override { return gens_.count(s) != 0; }
  Word normalize(const Word& w) const override { return free_reduce(w); }
  Tri is_identity(const Word& w) const override { return from_bool(free_reduce(w).empty()); }

  std::vector<Word> sample_elements(std::size_t n) const override {
    // Breadth-first over reduced words.
    std::vector<Word> out{Word{}};
    std::size_t head = 0;
    while (out.size() < n && head < out.size()) {
      Word base = out[head++];
      for (Symbol s : gens_)
        for (int sign : {1, -1}) {
          Letter l{s, sign};
          if (!base.empty() && base.back() == l.inverse()) continue;
          Word next = base;
          next.push_back(l);
          out.push_back(std::move(next));
          if (out.size() >= n) return out;
        }
    }
    return out;
  }

  DoubleCosetSolution solve_double_coset(const Subgroup& h, const Word& x, const Word& y,
                                         const Budget& budget) const override;
  std::optional<std::string> double_coset_key(const Subgroup& h, const Word& x) const override;

 private:
  std::set<Symbol> gens_;
};

/// Z generated by one symbol; integer exponents as words x^n.
inline std::shared_ptr<FreeGroup> make_integers(Symbol generator) {
  return std::make_shared<FreeGroup>(std::vector<Symbol>{generator});
}

/// Exponent of a word in Z.
inline long long exponent_sum(const Word& w) {
  long long n = 0;
  for (Letter l : w) n += l.sign;
  return n;
}

/// Subgroup of a free group generated by a subset of its free generators.
class LetterSubgroup : public Subgroup {
 public:
  explicit LetterSubgroup(std::set<Symbol> letters) : letters_(std::move(letters)) {}
  const std::set<Symbol>& letters() const noexcept { return letters_; }

  std::string describe() const override {
    std::string s = "letters{";
    bool first = true;
    for (Symbol l : letters_) {
      s += (first ? "" : ",") + std::to_string(l);
      first = false;
    }
    return s + "}";
  }
  Membership contains(const Word& w) const override {
    Word r = free_reduce(w);
    for (Letter l : r)
      if (!letters_.count(l.symbol)) return {Tri::no, {}};
    return {Tri::yes, r};
  }
  bool is_trivial() const override { return letters_.empty(); }
  bool has(Symbol s) const { return letters_.count(s) != 0; }

 private:
  std::set<Symbol> letters_;
};

/// Splits reduced w as prefix·core·suffix with prefix, suffix over the
/// subgroup's letters and core starting and ending outside them. If w lies in
/// the subgroup, core is empty and prefix = w.
struct LetterCore {
  Word prefix, core, suffix;
};

inline LetterCore letter_core(const LetterSubgroup& h, const Word& w) {
  Word r = free_reduce(w);
  std::size_t a = 0;
  while (a < r.size() && h.has(r[a].symbol)) ++a;
  if (a == r.size()) return {r, {}, {}};
  std::size_t b = r.size();
  while (b > a && h.has(r[b - 1].symbol)) --b;
  return {Word(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(a)),
          Word(r.begin() + static_cast<std::ptrdiff_t>(a), r.begin() + static_cast<std::ptrdiff_t>(b)),
          Word(r.begin() + static_cast<std::ptrdiff_t>(b), r.end())};
}

inline DoubleCosetSolution FreeGroup::solve_double_coset(const Subgroup& h, const Word& x,
                                                         const Word& y,
                                                         const Budget& budget) const {
  const auto* lh = dynamic_cast<const LetterSubgroup*>(&h);
  if (!lh) return Group::solve_double_coset(h, x, y, budget);
  LetterCore cx = letter_core(*lh, x), cy = letter_core(*lh, y);
  if (cx.core.empty() || cy.core.empty()) {
    if (!cx.core.empty() || !cy.core.empty()) return {Tri::no, {}, {}};
    // Both in H: y = (x y^{-1})^{-1}... choose c = 1, c' = x^{-1} y.
    return {Tri::yes, {}, free_reduce(concat(inverse(x), y))};
  }
  if (cx.core != cy.core) return {Tri::no, {}, {}};
  // y = py core sy, x = px core sx  =>  y = (px py^{-1})^{-1} x (sx^{-1} sy)
  return {Tri::yes, free_reduce(concat(cx.prefix, inverse(cy.prefix))),
          free_reduce(concat(inverse(cx.suffix), cy.suffix))};
}

inline std::optional<std::string> FreeGroup::double_coset_key(const Subgroup& h,
                                                              const Word& x) const {
  const auto* lh = dynamic_cast<const LetterSubgroup*>(&h);
  if (!lh) return std::nullopt;
  return to_string(letter_core(*lh, x).core);
}

class TrivialSubgroup : public Subgroup {
 public:
  explicit TrivialSubgroup(GroupPtr group) : group_(std::move(group)) {}
  std::string describe() const override { return "trivial"; }
  Membership contains(const Word& w) const override {
    Tri t = group_->is_identity(w);
    return {t, {}};
  }
  std::optional<std::vector<Word>> elements() const override { return std::vector<Word>{Word{}}; }
  bool is_trivial() const override { return true; }

 private:
  GroupPtr group_;
};

// ---------------------------------------------------------------------------
// Derived predicates

/// Three-valued membership.
inline Tri in_subgroup(const Word& g, const Subgroup& s) { return s.contains(g).status; }

/// y ∈ H x H ∪ H x^{-1} H ?
inline Tri in_double_coset_pm(const Group& group, const Subgroup& h, const Word& x,
                              const Word& y, const Budget& budget = {}) {
  Tri plus = group.solve_double_coset(h, x, y, budget).status;
  if (plus == Tri::yes) return Tri::yes;
  Tri minus = group.solve_double_coset(h, inverse(x), y, budget).status;
  return tri_or(plus, minus);
}

/// g, h are good fellows over H iff g ∉ H h H ∪ H h^{-1} H.
inline Tri good_fellows(const Group& group, const Word& g, const Word& h, const Subgroup& sub,
                        const Budget& budget = {}) {
  return tri_not(in_double_coset_pm(group, sub, h, g, budget));
}

/// H ≤_m L: g^{-1} h g ∉ H for h ∈ H∖{1}, g ∈ L∖H. Exhaustive on finite
/// groups; free factors of free groups are malnormal; otherwise a bounded
/// search that can only refute.
inline Tri is_malnormal(const Subgroup& h, const Group& l, const Budget& budget = {}) {
  if (h.is_trivial()) return Tri::yes;
  auto h_elems = h.elements();
  auto l_elems = l.elements();
  if (h_elems && l_elems) {
    for (const Word& g : *l_elems) {
      if (h.contains(g).status == Tri::yes) continue;
      for (const Word& x : *h_elems) {
        if (l.is_identity(x) == Tri::yes) continue;
        if (h.contains(concat(inverse(g), x, g)).status == Tri::yes) return Tri::no;
      }
    }
    return Tri::yes;
  }
  if (dynamic_cast<const FreeGroup*>(&l) && dynamic_cast<const LetterSubgroup*>(&h)) {
    const auto& fg = static_cast<const FreeGroup&>(l);
    const auto& lh = static_cast<const LetterSubgroup&>(h);
    bool whole = std::all_of(fg.generators().begin(), fg.generators().end(),
                             [&](Symbol s) { return lh.has(s); });
    if (whole) return Tri::yes;  // L∖H empty
    if (fg.generators().size() == 1) return Tri::no;  // unreachable: proper nontrivial in Z
    return Tri::yes;  // free factor
  }
  std::vector<Word> hs = h.samples();
  std::vector<Word> gs = l.sample_elements(budget.samples);
  for (const Word& g : gs) {
    if (h.contains(g).status != Tri::no) continue;
    for (const Word& x : hs) {
      if (l.is_identity(x) != Tri::no) continue;
      if (h.contains(concat(inverse(g), x, g)).status == Tri::yes) return Tri::no;
    }
  }
  return Tri::inconclusive;
}

// ---------------------------------------------------------------------------
// Elements and the registry

struct Element {
  GroupPtr owner;
  Word word;
};

inline void require_same_owner(const Element& a, const Element& b) {
  if (a.owner != b.owner) throw Error("element owner mismatch");
}
inline Element mul(const Element& a, const Element& b) {
  require_same_owner(a, b);
  return {a.owner, a.owner->mul(a.word, b.word)};
}
inline Element inv(const Element& a) { return {a.owner, a.owner->inv(a.word)}; }
inline Tri is_identity(const Element& a) { return a.owner->is_identity(a.word); }

/// Assigns consecutive natural codes to elements in order of first
/// registration. Distinct words are merged when the owner proves them equal.
class ElementRegistry {
 public:
  std::size_t register_element(const Element& g) {
    Word nf = g.owner->normalize(g.word);
    auto key = std::make_pair(g.owner.get(), nf);
    if (auto it = index_.find(key); it != index_.end()) return it->second;
    for (std::size_t c = 0; c < entries_.size(); ++c) {
      if (entries_[c].owner != g.owner) continue;
      if (g.owner->equal(entries_[c].word, nf) == Tri::yes) {
        index_.emplace(key, c);
        return c;
      }
    }
    const std::size_t code = entries_.size();
    entries_.push_back({g.owner, nf});
    index_.emplace(key, code);
    return code;
  }

  const Element& decode(std::size_t code) const {
    if (code >= entries_.size()) throw Error("registry: unassigned code " + std::to_string(code));
    return entries_[code];
  }
  bool has_code(std::size_t code) const noexcept { return code < entries_.size(); }
  std::optional<std::size_t> find(const Element& g) const {
    auto it = index_.find(std::make_pair(g.owner.get(), g.owner->normalize(g.word)));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::vector<Element> entries_;
  std::map<std::pair<const Group*, Word>, std::size_t> index_;
};

}  // namespace shelah
