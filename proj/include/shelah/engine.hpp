#pragma once

// Finite-stage simulator of the stage-by-stage construction. Stage s adjoins
// the generator symbol s; its group is built level by level as a tower of
// amalgams G_{S_j ∪ {s}} = G_{S_j} *_{G_{S_{j-1}}} G_{S_{j-1} ∪ {s}}, with a
// small-cancellation quotient wherever the J-set of a level is nonempty.

#include <algorithm>
#include <climits>
#include <cstdlib>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "shelah/amalgam.hpp"
#include "shelah/colorings.hpp"
#include "shelah/core.hpp"
#include "shelah/groups.hpp"
#include "shelah/hesse.hpp"
#include "shelah/smallcancel.hpp"
#include "shelah/words.hpp"

namespace shelah {

using LetterSet = std::set<Symbol>;

inline std::string to_string(const LetterSet& s) {
  std::string out = "{";
  for (Symbol x : s) out += (out.size() > 1 ? "," : "") + std::to_string(x);
  return out + "}";
}

inline LetterSet letters_of(const Word& w) {
  LetterSet s;
  for (Letter l : w) s.insert(l.symbol);
  return s;
}

inline bool subset_of(const LetterSet& a, const LetterSet& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

inline LetterSet intersect(const LetterSet& a, const LetterSet& b) {
  LetterSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
  return out;
}

inline LetterSet below(const LetterSet& a, Symbol bound) { return {a.begin(), a.lower_bound(bound)}; }

inline LetterSet initial_segment(Symbol n) {
  LetterSet s;
  for (Symbol x = 0; x < n; ++x) s.insert(x);
  return s;
}

// ---------------------------------------------------------------------------
// The bookkeeping map xi -> (z0, z1, z2, eps): parity carries eps, the rest is
// a nested Cantor decoding.

struct QTuple {
  std::uint64_t y0 = 0, y1 = 0, d = 0;
  int eps = 1;
  friend bool operator==(const QTuple&, const QTuple&) = default;
};

inline QTuple q_decode(std::uint64_t xi) {
  const int eps = xi % 2 == 0 ? 1 : -1;
  auto [z0, rest] = cantor_decode(xi / 2);
  auto [z1, z2] = cantor_decode(rest);
  return {z0, z1, z2, eps};
}

inline std::uint64_t q_encode(const QTuple& q) {
  return 2 * cantor_encode(q.y0, cantor_encode(q.y1, q.d)) + (q.eps == 1 ? 0 : 1);
}

/// Least bound B such that every tuple with codes below n is q_decode(xi)
/// for some xi < B.
inline std::uint64_t q_frontier(std::uint64_t n) {
  if (n == 0) return 0;
  return std::max(q_encode({n - 1, n - 1, n - 1, 1}), q_encode({n - 1, n - 1, n - 1, -1})) + 1;
}

// ---------------------------------------------------------------------------
// Configuration

struct EngineConfig {
  std::size_t generators = 1;  // free base generators
  std::size_t stages = 3;      // constructed stages on top of the base
  std::vector<Ordinal> ordinals;  // one per symbol; defaults to 0, 1, 2, ...
  ColoringPtr coloring;           // defaults to the walks coloring
  Budget budget;
  std::size_t audit_word_length = 2;  // short words added to the audit pool
  unsigned k = 10;

  std::size_t total() const { return generators + stages; }

  /// {"generators", "stages", "ordinals", "coloring": {"source": "walks"|"table",
  ///  "table": {...}}, "budgets": {...}, "audits": {"word_length"}}
  static EngineConfig from_json(const nlohmann::json& j) {
    EngineConfig c;
    c.generators = j.value("generators", c.generators);
    c.stages = j.value("stages", c.stages);
    if (j.contains("ordinals"))
      for (const auto& o : j.at("ordinals")) c.ordinals.push_back(parse_ordinal(o.get<std::string>()));
    const auto col = j.value("coloring", nlohmann::json{{"source", "walks"}});
    const std::string source = col.value("source", "walks");
    if (source == "walks") {
      c.coloring = std::make_shared<WalksColoring>();
    } else if (source == "table") {
      c.coloring = std::make_shared<SparseColoring>(SparseColoring::from_json(col.at("table")));
    } else {
      throw Error("config: unknown coloring source '" + source + "'");
    }
    if (j.contains("budgets")) {
      const auto& b = j.at("budgets");
      c.budget.dehn_steps = b.value("dehn_steps", c.budget.dehn_steps);
      c.budget.chain_candidates = b.value("chain_candidates", c.budget.chain_candidates);
      c.budget.max_word_letters = b.value("max_word_letters", c.budget.max_word_letters);
      c.budget.torsion_len = b.value("torsion_len", c.budget.torsion_len);
      c.budget.torsion_pow = b.value("torsion_pow", c.budget.torsion_pow);
      c.budget.samples = b.value("samples", c.budget.samples);
    }
    if (j.contains("audits")) c.audit_word_length = j.at("audits").value("word_length", c.audit_word_length);
    return c;
  }
};

// ---------------------------------------------------------------------------
// Result types

struct MemberResult {
  Tri status = Tri::inconclusive;
  Word rep;  // representative over the target letters when status == yes
};

struct Locus {
  Tri status = Tri::inconclusive;
  Symbol tau = 0;
  std::uint64_t level = 0;
};

struct TransversalRep {
  Tri status = Tri::inconclusive;
  Word t, y0, y1;
  int eps = 1;
};

struct JEntry {
  std::string id;
  Word l, k;            // sigma = (l, k)
  Word a, b, bprime, h;
  Word d, y0, y1;
  int eps = 1;
  Symbol alpha = 0;     // tau_k
  LetterSet k_prime;    // letters of K'_sigma
  std::uint64_t xi0 = 0, xi1 = 0;
};

struct AuditEntry {
  std::string id;  // stage-meet, layer-meet, malnormal, transversal-level, transversal-bound, closed-meet,
                   // fresh-fellows, sandwich, star, system
  Symbol stage = 0;
  std::size_t instances = 0;
  std::size_t failures = 0;
  std::size_t inconclusive = 0;
  std::vector<std::string> detail;  // first few failing inputs

  void record(Tri outcome, const std::string& what) {
    ++instances;
    if (outcome == Tri::no) {
      ++failures;
      if (detail.size() < 8) detail.push_back(what);
    } else if (outcome == Tri::inconclusive) {
      ++inconclusive;
    }
  }
};

struct Layer {
  std::uint64_t value = 0;  // the realized e-value of this level
  LetterSet h, k, l;        // S_{j-1}, S_j, S_{j-1} ∪ {s}
  TriplePtr triple;
  GroupPtr group;           // G_{S_j ∪ {s}}
  std::vector<JEntry> j_entries;
  std::shared_ptr<const RelatorSet> relators;  // null when J is empty
  CPrimeReport cprime;
  std::vector<std::string> log;  // skipped candidates and other notes
};

struct StageRecord {
  Symbol symbol = 0;
  Ordinal ordinal;
  bool base = false;
  bool free = true;  // G_{s+1} is free on 0..s
  std::vector<std::uint64_t> values;  // realized e-values, ascending
  std::vector<LetterSet> s_sets;      // S_0 = {}, S_j = D_{<= values[j-1]}
  GroupPtr m0;                        // <x_s>
  std::vector<Layer> layers;

  /// G_{S_j ∪ {s}} for j <= layers built.
  const Group& m(std::size_t j) const { return j == 0 ? *m0 : *layers.at(j - 1).group; }
  GroupPtr m_ptr(std::size_t j) const { return j == 0 ? m0 : layers.at(j - 1).group; }
  /// Index j with S_j = D_{<= i}; the number of realized values <= i.
  std::size_t weak_index(std::uint64_t i) const {
    return static_cast<std::size_t>(std::upper_bound(values.begin(), values.end(), i) - values.begin());
  }
  bool has_relators() const {
    return std::any_of(layers.begin(), layers.end(), [](const Layer& l) { return l.relators != nullptr; });
  }
};

class Engine;

// ---------------------------------------------------------------------------
// Group backends that defer to the engine's membership oracle.

/// G_F as a subgroup of any group containing it.
class ClosedSetSubgroup : public Subgroup {
 public:
  ClosedSetSubgroup(const Engine* e, LetterSet f) : engine_(e), f_(std::move(f)) {}
  std::string describe() const override { return "G_" + to_string(f_); }
  Membership contains(const Word& w) const override;
  bool is_trivial() const override { return f_.empty(); }
  const LetterSet& letters() const noexcept { return f_; }

 private:
  const Engine* engine_;
  LetterSet f_;
};

/// G_F as a group in its own right, with identity decided in the stage tower.
class ClosedSetGroup : public Group {
 public:
  ClosedSetGroup(const Engine* e, LetterSet f) : engine_(e), f_(std::move(f)) {
    if (f_.empty()) throw Error("closed-set group: empty generating set");
  }
  std::string kind() const override { return "stage-subgroup"; }
  bool owns(Symbol s) const override { return f_.count(s) != 0; }
  Word normalize(const Word& w) const override { return free_reduce(w); }
  Tri is_identity(const Word& w) const override;
  std::vector<Word> sample_elements(std::size_t n) const override {
    return FreeGroup(std::vector<Symbol>(f_.begin(), f_.end())).sample_elements(n);
  }

 private:
  const Engine* engine_;
  LetterSet f_;
};

/// K *_H L without relators, for factors that are not free.
class PlainAmalgam : public Group {
 public:
  explicit PlainAmalgam(TriplePtr t) : t_(std::move(t)) {}
  std::string kind() const override { return "amalgam"; }
  bool owns(Symbol s) const override { return t_->k->owns(s) || t_->l->owns(s); }
  Word normalize(const Word& w) const override {
    try {
      return flatten(canonicalize_word(w, *t_));
    } catch (const Inconclusive&) {
      return free_reduce(w);
    }
  }
  Tri is_identity(const Word& w) const override {
    try {
      return from_bool(canonicalize_word(w, *t_).empty());
    } catch (const Inconclusive&) {
      return Tri::inconclusive;
    }
  }
  std::vector<Word> sample_elements(std::size_t n) const override {
    auto ks = t_->k->sample_elements(6), ls = t_->l->sample_elements(6);
    std::vector<Word> out{Word{}};
    for (const Word& a : ks)
      for (const Word& b : ls) {
        if (out.size() >= n) return out;
        out.push_back(normalize(concat(a, b)));
      }
    return out;
  }
  const AmalgamTriple& triple() const noexcept { return *t_; }

 private:
  TriplePtr t_;
};

// ---------------------------------------------------------------------------
// Engine

struct CodeEntry {
  Word word;      // freely reduced
  Symbol tau = 0; // first stage whose group contains it
};

struct WitnessCheck {
  DehnVerdict verdict = DehnVerdict::inconclusive;
  bool certificate_replays = false;
  std::size_t letters = 0;  // |rho(u, v)|
  DehnCertificate certificate;
  std::string reason;
};

struct ChainFamily {
  std::size_t k = 0;
  std::vector<std::string> members;  // "base:<entry>" and "rho<l>:<entry>"
};

struct TopologyReport {
  Symbol stage = 0;
  std::size_t layer = 0;
  std::size_t k_max = 0;
  std::vector<std::string> n0;        // the stage's own relators
  std::vector<ChainFamily> families;  // R_0 .. R_{k_max}, rho-terms up to k_max + 1
  bool nested = true;                 // R_{k+1} ⊆ R_k and N_0 ⊆ R_k throughout
  std::vector<unsigned long long> rho_lengths;  // syllables of rho_l, l = 0..k_max+1
  // Type-level C'(1/10) on R_1 (run-length encoded).
  Verdict r1_cprime = Verdict::inconclusive;
  unsigned long long r1_piece_bound = 0;
  unsigned long long r1_min_length = 0;
  // rho_k outside N_0, k = 1..k_max, via the longest common factor with N_0.
  std::vector<Tri> rho_outside_n0;
  std::vector<unsigned long long> rho_common_with_n0;
  std::string note;
};

struct AbelianInvariants {
  std::vector<long long> torsion;  // invariant factors > 1, ascending divisibility
  std::size_t rank = 0;
  friend bool operator==(const AbelianInvariants&, const AbelianInvariants&) = default;
};

class Engine {
 public:
  explicit Engine(EngineConfig cfg, bool strict_audits = true)
      : cfg_(std::move(cfg)), strict_(strict_audits) {
    const std::size_t n = cfg_.total();
    if (cfg_.generators == 0) throw Error("engine: need at least one base generator");
    if (cfg_.ordinals.empty())
      for (std::size_t i = 0; i < n; ++i) cfg_.ordinals.push_back(Ordinal::finite(i));
    if (cfg_.ordinals.size() != n)
      throw Error("engine: " + std::to_string(cfg_.ordinals.size()) + " ordinals for " + std::to_string(n) +
                  " symbols");
    for (const auto& o : cfg_.ordinals) validate(o);
    for (std::size_t i = 1; i < n; ++i)
      if (!(cfg_.ordinals[i - 1] < cfg_.ordinals[i])) throw Error("engine: ordinals must increase strictly");
    if (!cfg_.coloring) cfg_.coloring = std::make_shared<WalksColoring>();
    if (auto v = check_subadditive(cfg_.ordinals, *cfg_.coloring))
      throw Error("engine: coloring not subadditive at symbols (" + std::to_string(v->alpha) + ", " +
                  std::to_string(v->beta) + ", " + std::to_string(v->gamma) + "), inequality " +
                  std::to_string(v->inequality));
    stages_.reserve(n);
    for (Symbol s = 0; s < static_cast<Symbol>(cfg_.generators); ++s) add_code({{s, 1}}, s);
    add_code({}, 0);
    for (Symbol s = 0; s < static_cast<Symbol>(cfg_.generators); ++s) build_stage(s);
  }

  const EngineConfig& config() const noexcept { return cfg_; }
  std::size_t built() const noexcept { return stages_.size(); }
  Symbol built_symbols() const noexcept { return static_cast<Symbol>(stages_.size()); }
  bool finished() const noexcept { return built() == cfg_.total(); }
  const std::vector<StageRecord>& stages() const noexcept { return stages_; }
  const StageRecord& stage(Symbol s) const { return stages_.at(s); }
  const std::vector<CodeEntry>& codes() const noexcept { return codes_; }
  std::size_t identity_code() const noexcept { return cfg_.generators; }
  const std::vector<AuditEntry>& audits() const noexcept { return audits_; }
  std::size_t audit_failures() const {
    std::size_t n = 0;
    for (const auto& a : audits_) n += a.failures;
    return n;
  }

  /// Builds the next stage; throws on a failed promise audit in strict mode.
  void advance_stage() {
    if (finished()) throw Error("engine: all stages built");
    const Symbol s = static_cast<Symbol>(built());
    add_code({{s, 1}}, s);
    build_stage(s);
    audit_stage(s);
    if (strict_)
      for (const auto& a : audits_)
        if (a.stage == s && a.failures > 0)
          throw Error("engine: audit " + a.id + " failed at stage " + std::to_string(s) +
                      (a.detail.empty() ? "" : ": " + a.detail.front()));
  }
  void run() {
    while (!finished()) advance_stage();
  }

  std::uint64_t e(Symbol a, Symbol b) const { return cfg_.coloring->e(cfg_.ordinals[a], cfg_.ordinals[b]); }
  std::uint64_t c0(Symbol a, Symbol b) const { return cfg_.coloring->c0(cfg_.ordinals[a], cfg_.ordinals[b]); }
  std::uint64_t c1(Symbol a, Symbol b) const { return cfg_.coloring->c1(cfg_.ordinals[a], cfg_.ordinals[b]); }

  std::optional<std::size_t> code_of(const Word& w) const {
    auto it = code_index_.find(free_reduce(w));
    if (it == code_index_.end()) return std::nullopt;
    return it->second;
  }

  /// Is w in G_F? F must be closed. The representative is a word over F.
  MemberResult member(const Word& w0, const LetterSet& f) const {
    Word w = free_reduce(w0);
    if (w.empty()) return {Tri::yes, {}};
    const LetterSet ls = letters_of(w);
    if (subset_of(ls, f)) return {Tri::yes, w};
    const Symbol t = *ls.rbegin();
    if (t >= built_symbols()) throw Error("member: word uses unbuilt symbol " + std::to_string(t));
    if (stages_[t].free) return {Tri::no, {}};
    const StageRecord& st = stages_[t];
    const std::size_t n = st.layers.size();
    LetterSet top = st.s_sets.at(n);
    top.insert(t);
    if (!subset_of(ls, top)) throw Error("member: word outside the built part of stage " + std::to_string(t));
    const LetterSet ft = below(f, t);
    if (f.count(t)) {
      auto m = closed_index(st, ft);
      if (!m) throw Error("member: " + to_string(f) + " is not closed at " + std::to_string(t));
      for (std::size_t j = n; j > *m; --j) {
        MemberResult r = factor_rep(st.layers[j - 1], w, Side::l);
        if (r.status != Tri::yes) return r;
        w = std::move(r.rep);
      }
      return {Tri::yes, w};
    }
    if (n == 0) return {Tri::no, {}};
    MemberResult r = factor_rep(st.layers[n - 1], w, Side::k);
    if (r.status != Tri::yes) return r;
    return member(r.rep, ft);
  }

  /// w = 1 in the group generated by all built symbols?
  Tri is_identity(const Word& w0) const {
    Word w = free_reduce(w0);
    if (w.empty()) return Tri::yes;
    const Symbol t = max_symbol(w);
    if (t >= built_symbols()) throw Error("is_identity: word uses unbuilt symbol " + std::to_string(t));
    if (stages_[t].free) return Tri::no;
    const StageRecord& st = stages_[t];
    return st.m(st.layers.size()).is_identity(w);
  }

  /// tau_g and i_g: the least beta with g in G_{beta+1}, then the least i in
  /// {0} ∪ values(beta) with g in G_{D_{<=i} ∪ {beta}}.
  Locus locate(const Word& w0) const {
    Word w = free_reduce(w0);
    if (w.empty()) return {Tri::yes, 0, 0};
    if (auto it = locus_cache_.find(w); it != locus_cache_.end()) return it->second;
    const Symbol t = max_symbol(w);
    Locus out;
    for (Symbol b = 0; b <= t; ++b) {
      MemberResult r = member(w, initial_segment(b + 1));
      if (r.status == Tri::inconclusive) return {};
      if (r.status == Tri::yes) {
        out.tau = b;
        break;
      }
    }
    const StageRecord& st = stages_[out.tau];
    std::vector<std::uint64_t> levels{0};
    for (auto v : st.values)
      if (v != 0) levels.push_back(v);
    for (auto i : levels) {
      LetterSet f = st.s_sets.at(st.weak_index(i));
      f.insert(out.tau);
      MemberResult r = member(w, f);
      if (r.status == Tri::inconclusive) return {};
      if (r.status == Tri::yes) {
        out.status = Tri::yes;
        out.level = i;
        locus_cache_.emplace(w, out);
        return out;
      }
    }
    throw Error("locate: no level found for " + to_string(w));
  }

  /// i^gamma_g: least i in {0} ∪ values(gamma) with g in G_{D_{<=i}}, for g in G_gamma.
  Locus i_at(const Word& w, Symbol gamma) const {
    const StageRecord& st = stages_.at(gamma);
    MemberResult whole = member(w, initial_segment(gamma));
    if (whole.status != Tri::yes) return {whole.status, gamma, 0};
    std::vector<std::uint64_t> levels{0};
    for (auto v : st.values)
      if (v != 0) levels.push_back(v);
    for (auto i : levels) {
      MemberResult r = member(w, st.s_sets.at(st.weak_index(i)));
      if (r.status == Tri::inconclusive) return {};
      if (r.status == Tri::yes) return {Tri::yes, gamma, i};
    }
    throw Error("i_at: no level found");
  }

  /// Representative of w in one factor of the layer's amalgam, if it lies there.
  MemberResult factor_rep(const Layer& layer, const Word& w, Side side) const {
    if (dynamic_cast<const FreeGroup*>(layer.group.get())) {
      const LetterSet& target = side == Side::k ? layer.k : layer.l;
      return {from_bool(subset_of(letters_of(w), target)), free_reduce(w)};
    }
    CanonicalWord c;
    try {
      c = canonicalize_word(w, *layer.triple);
    } catch (const Inconclusive&) {
      return {};
    }
    if (c.empty()) return {Tri::yes, {}};
    if (c.size() == 1) {
      if (c[0].side == side) return {Tri::yes, c[0].word};
      Membership hm = layer.triple->h(c[0].side).contains(c[0].word);
      if (hm.status == Tri::yes) return {Tri::yes, hm.rep};
      if (hm.status == Tri::inconclusive) return {};
      return {Tri::no, {}};  // the factors embed and meet in H
    }
    if (!layer.relators) return {Tri::no, {}};
    // A reduced word too short to contain a long part of any relator is
    // not killed by the quotient, so it stays outside both factors.
    const std::size_t m = layer.relators->min_length();
    if (cfg_.k * (c.size() + 2) <= (cfg_.k - 3) * m) return {Tri::no, {}};
    return {};
  }

  /// j with F = S_j at stage st, if any.
  static std::optional<std::size_t> closed_index(const StageRecord& st, const LetterSet& f) {
    for (std::size_t j = 0; j < st.s_sets.size(); ++j)
      if (st.s_sets[j] == f) return j;
    return std::nullopt;
  }

  /// F is closed: F ∩ beta is some S_j(beta) for every beta in F.
  bool is_closed(const LetterSet& f) const {
    for (Symbol b : f) {
      if (b >= built_symbols()) return false;
      if (!closed_index(stages_[b], below(f, b))) return false;
    }
    return true;
  }

  // -------------------------------------------------------------------------
  // Pools, the well-order, and transversals

  /// Words examined at stage s: the registry plus every reduced word of
  /// length <= audit_word_length over symbols <= s.
  const std::vector<Word>& pool(Symbol s) const {
    if (auto it = pool_cache_.find(s); it != pool_cache_.end()) return it->second;
    std::set<Word> seen;
    std::vector<Word> out;
    for (const CodeEntry& c : codes_)
      if (c.word.empty() || max_symbol(c.word) <= s)
        if (seen.insert(c.word).second) out.push_back(c.word);
    std::vector<Symbol> gens;
    for (Symbol x = 0; x <= s; ++x) gens.push_back(x);
    const std::size_t cap = 1 + 2 * gens.size() * 64;
    for (const Word& w : FreeGroup(gens).sample_elements(cap)) {
      if (w.size() > cfg_.audit_word_length) break;
      if (seen.insert(w).second) out.push_back(w);
    }
    return pool_cache_.emplace(s, std::move(out)).first->second;
  }

  struct OrderKey {
    std::uint64_t level = 0;
    std::size_t code = 0;
    std::size_t length = 0;
    Word word;
    auto operator<=>(const OrderKey&) const = default;
  };

  /// The well-order: by i_g, then registry code (unregistered last), then
  /// length, then lexicographically.
  OrderKey order_key(const Word& w0) const {
    Word w = free_reduce(w0);
    Locus loc = locate(w);
    if (loc.status != Tri::yes) throw Inconclusive("order_key: cannot locate " + to_string(w));
    auto code = code_of(w);
    return {loc.level, code ? *code : SIZE_MAX, w.size(), w};
  }

  /// Canonical E-class key at stage s, level j (group M_{j-1}), bound alpha,
  /// when M_{j-1} is free.
  /// Valid for comparing two keys of words no longer than
  /// short_word_bound(M_{j-1}).
  std::optional<std::string> e_class_key(const StageRecord& st, std::size_t j, Symbol alpha, const Word& w) const {
    const Group& m = st.m(j - 1);
    std::optional<FreeGroup> cover;
    if (const auto* fg = dynamic_cast<const FreeGroup*>(&m)) {
      cover.emplace(*fg);
    } else if (w.size() <= short_word_bound(m)) {
      LetterSet all = st.s_sets.at(j - 1);
      all.insert(st.symbol);
      cover.emplace(std::vector<Symbol>(all.begin(), all.end()));
    } else {
      return std::nullopt;
    }
    LetterSubgroup p(below(st.s_sets.at(j - 1), alpha));
    auto a = cover->double_coset_key(p, w);
    auto b = cover->double_coset_key(p, inverse(w));
    if (!a || !b) return std::nullopt;
    return std::min(*a, *b);
  }

  /// Longest word length for which double cosets of a factor subgroup in a
  /// quotient of an amalgam of free groups along a letter subgroup agree with
  /// those of the free group: with P inside one factor, p x p' y^{-1} has at
  /// most |x| + |y| + 2 syllables, and a nontrivial element of the normal
  /// closure needs more than (k-3)/k of a relator. Zero when not applicable.
  std::size_t short_word_bound(const Group& m) const {
    const auto* q = dynamic_cast<const AmalgamQuotient*>(&m);
    if (!q) return 0;
    const AmalgamTriple& t = q->triple();
    if (!dynamic_cast<const FreeGroup*>(t.k.get()) || !dynamic_cast<const FreeGroup*>(t.l.get()) ||
        !dynamic_cast<const LetterSubgroup*>(t.h_in_k.get()) || !dynamic_cast<const LetterSubgroup*>(t.h_in_l.get()))
      return 0;
    const std::size_t budget = (cfg_.k - 3) * q->relators().min_length() / cfg_.k;
    return budget < 4 ? 0 : (budget - 2) / 2;
  }

  /// g E h: g ∈ P h P ∪ P h^{-1} P with P = G_{S_{j-1} ∩ alpha} inside M_{j-1}.
  Tri same_class(const StageRecord& st, std::size_t j, Symbol alpha, const Word& g, const Word& h) const {
    auto kg = e_class_key(st, j, alpha, g), kh = e_class_key(st, j, alpha, h);
    if (kg && kh) return from_bool(*kg == *kh);
    ClosedSetSubgroup p(this, below(st.s_sets.at(j - 1), alpha));
    return in_double_coset_pm(st.m(j - 1), p, h, g, cfg_.budget);
  }

  /// Pool elements of M_{j-1} outside G_s: the ground set of T_{<j, alpha}.
  std::vector<Word> level_candidates(const StageRecord& st, std::size_t j) const {
    LetterSet l = st.s_sets.at(j - 1);
    l.insert(st.symbol);
    std::vector<Word> out;
    for (const Word& w : pool(st.symbol)) {
      if (w.empty() || !subset_of(letters_of(w), l)) continue;
      if (member(w, initial_segment(st.symbol)).status == Tri::no) out.push_back(w);
    }
    return out;
  }

  /// Is g the ≺-least pool element of its E-class?
  Tri in_transversal(const StageRecord& st, std::size_t j, Symbol alpha, const Word& g) const {
    const OrderKey kg = order_key(g);
    Tri out = Tri::yes;
    for (const Word& h : level_candidates(st, j)) {
      if (!(order_key(h) < kg)) continue;
      Tri same = same_class(st, j, alpha, g, h);
      if (same == Tri::yes) return Tri::no;
      if (same == Tri::inconclusive) out = Tri::inconclusive;
    }
    return out;
  }

  /// x = y0 t^eps y1 with t the transversal representative of x's class and
  /// y0, y1 in P.
  TransversalRep transversal_rep(const StageRecord& st, std::size_t j, Symbol alpha, const Word& x) const {
    std::vector<Word> cands = level_candidates(st, j);
    std::sort(cands.begin(), cands.end(),
              [&](const Word& a, const Word& b) { return order_key(a) < order_key(b); });
    const Group& g = st.m(j - 1);
    bool unsure = false;
    for (const Word& t : cands) {
      Tri same = same_class(st, j, alpha, x, t);
      if (same == Tri::inconclusive) unsure = true;
      if (same != Tri::yes) continue;
      // Solve in the covering free group when that is exact; the caller can
      // replay the decomposition in M_{j-1}.
      LetterSet all = st.s_sets.at(j - 1);
      all.insert(st.symbol);
      const FreeGroup cover(std::vector<Symbol>(all.begin(), all.end()));
      const bool exact_cover =
          dynamic_cast<const FreeGroup*>(&g) || std::max(x.size(), t.size()) <= short_word_bound(g);
      std::unique_ptr<Subgroup> p;
      if (exact_cover)
        p = std::make_unique<LetterSubgroup>(below(st.s_sets.at(j - 1), alpha));
      else
        p = std::make_unique<ClosedSetSubgroup>(this, below(st.s_sets.at(j - 1), alpha));
      const Group& solver = exact_cover ? static_cast<const Group&>(cover) : g;
      for (int eps : {1, -1}) {
        DoubleCosetSolution sol = solver.solve_double_coset(*p, eps == 1 ? t : inverse(t), x, cfg_.budget);
        if (sol.status == Tri::yes) return {Tri::yes, t, free_reduce(inverse(sol.left)), sol.right, eps};
      }
      return {};
    }
    return {unsure ? Tri::inconclusive : Tri::no, {}, {}, {}, 1};
  }

  /// T_{<j, beta} on the pool: the ≺-least candidate of each E-class.
  std::vector<Word> transversal_set(const StageRecord& st, std::size_t j, Symbol beta) const {
    std::vector<Word> cands = level_candidates(st, j);
    std::vector<std::pair<OrderKey, Word>> keyed;
    for (Word& w : cands) keyed.emplace_back(order_key(w), std::move(w));
    std::sort(keyed.begin(), keyed.end());
    std::vector<Word> out;
    std::set<std::string> seen;
    for (auto& [key, w] : keyed) {
      if (auto ck = e_class_key(st, j, beta, w)) {
        if (seen.insert(*ck).second) out.push_back(w);
        continue;
      }
      bool fresh = true;
      for (const Word& t : out)
        if (same_class(st, j, beta, w, t) != Tri::no) {
          fresh = false;
          break;
        }
      if (fresh) out.push_back(w);
    }
    return out;
  }

  // -------------------------------------------------------------------------
  // J-sets

  /// J at stage s, level j (1-based), drawn from registered elements.
  std::vector<JEntry> enumerate_j(const StageRecord& st, std::size_t j, std::vector<std::string>& log) const {
    const Symbol s = st.symbol;
    const LetterSet& hset = st.s_sets.at(j - 1);
    const LetterSet& kset = st.s_sets.at(j);
    LetterSet lset = hset;
    lset.insert(s);
    std::vector<std::pair<std::size_t, Symbol>> ks;  // (code, tau)
    std::vector<std::size_t> ls;
    for (std::size_t c = 0; c < codes_.size(); ++c) {
      const Word& w = codes_[c].word;
      if (w.empty()) continue;
      Locus loc = locate(w);
      if (loc.status != Tri::yes) {
        log.push_back("code " + std::to_string(c) + ": location undecided");
        continue;
      }
      if (kset.count(loc.tau) && !hset.count(loc.tau) && member(w, kset).status == Tri::yes &&
          member(w, hset).status == Tri::no)
        ks.emplace_back(c, loc.tau);
      if (loc.tau == s && member(w, lset).status == Tri::yes) ls.push_back(c);
    }
    std::vector<JEntry> out;
    for (auto [kc, alpha] : ks) {
      const std::uint64_t xi1 = c1(alpha, s), xi0 = c0(alpha, s);
      const QTuple q = q_decode(xi1);
      const std::string tag = "k=" + std::to_string(kc) + " alpha=" + std::to_string(alpha);
      auto usable = [&](std::uint64_t code) { return code < codes_.size() && codes_[code].tau < s; };
      if (!usable(q.y0) || !usable(q.y1) || !usable(q.d)) {
        log.push_back(tag + ": xi1=" + std::to_string(xi1) + " does not decode to elements of G_s");
        continue;
      }
      const Word& y0 = codes_[q.y0].word;
      const Word& y1 = codes_[q.y1].word;
      const Word& d = codes_[q.d].word;
      if (codes_[q.d].tau >= alpha || codes_[q.y0].tau >= alpha || codes_[q.y1].tau >= alpha) {
        log.push_back(tag + ": first box fails");
        continue;
      }
      Locus id = i_at(d, s), iy0 = i_at(y0, s), iy1 = i_at(y1, s);
      if (id.status != Tri::yes || iy0.status != Tri::yes || iy1.status != Tri::yes) {
        log.push_back(tag + ": levels undecided");
        continue;
      }
      if (xi0 >= codes_.size()) {
        log.push_back(tag + ": xi0=" + std::to_string(xi0) + " unregistered");
        continue;
      }
      MemberResult hm = member(codes_[xi0].word, hset);
      if (hm.status != Tri::yes) {
        log.push_back(tag + ": xi0 names no element of G_{S_{j-1}}");
        continue;
      }
      for (std::size_t lc : ls) {
        const Word& l = codes_[lc].word;
        Tri tr = in_transversal(st, j, alpha, l);
        if (tr != Tri::yes) {
          if (tr == Tri::inconclusive) log.push_back(tag + " l=" + std::to_string(lc) + ": transversal undecided");
          continue;
        }
        Locus il = locate(l);
        if (std::max({il.level, iy0.level, iy1.level}) >= id.level) continue;
        JEntry e;
        e.id = "s" + std::to_string(s) + ".v" + std::to_string(st.values[j - 1]) + ".l" + std::to_string(lc) +
               ".k" + std::to_string(kc);
        e.l = l;
        e.k = codes_[kc].word;
        e.a = e.k;
        e.d = d;
        e.y0 = y0;
        e.y1 = y1;
        e.eps = q.eps;
        e.b = free_reduce(concat(y0, q.eps == 1 ? l : inverse(l), y1, d));
        e.bprime = free_reduce(concat(e.b, e.b));
        e.h = hm.rep;
        e.alpha = alpha;
        e.k_prime = below(kset, alpha);
        e.xi0 = xi0;
        e.xi1 = xi1;
        out.push_back(std::move(e));
      }
    }
    return out;
  }

 private:
  static Symbol max_symbol(const Word& w) {
    Symbol t = 0;
    for (Letter l : w) t = std::max(t, l.symbol);
    return t;
  }

  std::size_t add_code(const Word& w, Symbol tau) {
    Word r = free_reduce(w);
    if (auto it = code_index_.find(r); it != code_index_.end()) return it->second;
    codes_.push_back({r, tau});
    code_index_.emplace(r, codes_.size() - 1);
    pool_cache_.clear();
    return codes_.size() - 1;
  }

  SubgroupPtr closed_subgroup(const LetterSet& f, bool free) const {
    if (free) return std::make_shared<LetterSubgroup>(f);
    return std::make_shared<ClosedSetSubgroup>(this, f);
  }

  void build_stage(Symbol s) {
    StageRecord st;
    st.symbol = s;
    st.ordinal = cfg_.ordinals[s];
    st.base = s < static_cast<Symbol>(cfg_.generators);
    st.free = s == 0 || stages_.back().free;
    std::set<std::uint64_t> vals;
    for (Symbol b = 0; b < s; ++b) vals.insert(e(b, s));
    st.values.assign(vals.begin(), vals.end());
    st.s_sets.push_back({});
    for (auto v : st.values) {
      LetterSet sj;
      for (Symbol b = 0; b < s; ++b)
        if (e(b, s) <= v) sj.insert(b);
      st.s_sets.push_back(std::move(sj));
    }
    st.m0 = make_integers(s);
    stages_.push_back(std::move(st));
    StageRecord& rec = stages_.back();
    for (std::size_t j = 1; j <= rec.values.size(); ++j) build_layer(rec, j);
  }

  void build_layer(StageRecord& st, std::size_t j) {
    const Symbol s = st.symbol;
    Layer layer;
    layer.value = st.values[j - 1];
    layer.h = st.s_sets[j - 1];
    layer.k = st.s_sets[j];
    layer.l = layer.h;
    layer.l.insert(s);
    const bool below_free = s == 0 || stages_[s - 1].free;
    if (st.free) {
      layer.triple = make_free_amalgam({layer.k.begin(), layer.k.end()}, {layer.l.begin(), layer.l.end()}, layer.h);
    } else {
      auto t = std::make_shared<AmalgamTriple>();
      if (below_free)
        t->k = std::make_shared<FreeGroup>(std::vector<Symbol>(layer.k.begin(), layer.k.end()));
      else
        t->k = std::make_shared<ClosedSetGroup>(this, layer.k);
      t->l = st.m_ptr(j - 1);
      t->h_in_k = closed_subgroup(layer.h, below_free);
      t->h_in_l = closed_subgroup(layer.h, false);
      layer.triple = t;
    }
    if (!st.base) layer.j_entries = enumerate_j(st, j, layer.log);
    if (layer.j_entries.empty()) {
      if (st.free) {
        LetterSet all = layer.k;
        all.insert(s);
        layer.group = std::make_shared<FreeGroup>(std::vector<Symbol>(all.begin(), all.end()));
      } else {
        layer.group = std::make_shared<PlainAmalgam>(layer.triple);
      }
      st.layers.push_back(std::move(layer));
      return;
    }
    std::vector<SystemEntry> sys;
    std::map<std::string, const JEntry*> by_id;
    for (const JEntry& e : layer.j_entries) {
      sys.push_back({e.id, e.h, e.a, e.b, e.bprime});
      by_id[e.id] = &e;
    }
    const bool plain_free = st.free;
    PrimeProvider provider = [&](const SystemEntry& x, const SystemEntry& y) -> std::optional<PrimeSubgroups> {
      const JEntry& a = *by_id.at(x.index);
      const JEntry& b = *by_id.at(y.index);
      if (a.alpha != b.alpha) return std::nullopt;
      PrimeSubgroups p;
      const LetterSet hp = below(layer.h, a.alpha);
      p.h_prime_in_l = closed_subgroup(hp, plain_free);
      p.h_prime_in_k = closed_subgroup(hp, plain_free);
      p.k_prime = closed_subgroup(a.k_prime, plain_free);
      return p;
    };
    SystemValidation v = validate_system(sys, *layer.triple, provider, cfg_.budget);
    AuditEntry system_audit{"system", s, 0, 0, 0, {}};
    system_audit.record(v.verdict == Verdict::pass ? Tri::yes : v.verdict == Verdict::fail ? Tri::no : Tri::inconclusive,
               "stage " + std::to_string(s) + " level " + std::to_string(layer.value) + ": " + v.witness);
    audits_.push_back(system_audit);
    if (v.verdict == Verdict::fail)
      throw Error("engine: J-system at stage " + std::to_string(s) + " level " + std::to_string(layer.value) +
                  " fails validation: " + v.witness);
    if (v.verdict != Verdict::pass) layer.log.push_back("J-system validation inconclusive");
    GeneratedRelators gen = generate_relators(sys, layer.triple, cfg_.budget);
    layer.relators = gen.relators;
    layer.cprime = gen.cprime;
    layer.group = build_quotient(gen.relators, cfg_.k, cfg_.budget);
    st.free = false;
    st.layers.push_back(std::move(layer));
  }

  // -------------------------------------------------------------------------
  // Promise audits on the frozen stage

  /// (w ∈ G_A ∧ w ∈ G_B) ⟹ w ∈ G_C over the stage pool.
  void audit_intersection(AuditEntry& a, Symbol s, const LetterSet& fa, const LetterSet& fb,
                          const LetterSet& fc) const {
    for (const Word& w : pool(s)) {
      Tri in_a = member(w, fa).status, in_b = member(w, fb).status;
      if (in_a == Tri::no || in_b == Tri::no) continue;
      if (in_a == Tri::inconclusive || in_b == Tri::inconclusive) {
        a.record(Tri::inconclusive, to_string(w));
        continue;
      }
      a.record(member(w, fc).status,
               to_string(w) + " in G_" + to_string(fa) + " ∩ G_" + to_string(fb) + " but not G_" + to_string(fc));
    }
  }

  void audit_stage(Symbol s) {
    const StageRecord& st = stages_[s];
    const std::size_t r = st.layers.size();
    const std::size_t cap = cfg_.budget.samples;
    AuditEntry stage_meet{"stage-meet", s, 0, 0, 0, {}}, layer_meet{"layer-meet", s, 0, 0, 0, {}};
    AuditEntry malnormal{"malnormal", s, 0, 0, 0, {}}, by_level{"transversal-level", s, 0, 0, 0, {}};
    AuditEntry by_bound{"transversal-bound", s, 0, 0, 0, {}};
    AuditEntry closed{"closed-meet", s, 0, 0, 0, {}}, fellows{"fresh-fellows", s, 0, 0, 0, {}}, sandwich{"sandwich", s, 0, 0, 0, {}}, star{"star", s, 0, 0, 0, {}};
    const LetterSet below_s = initial_segment(s);
    for (std::size_t j = 0; j <= r; ++j) {
      LetterSet a = st.s_sets[j];
      a.insert(s);
      audit_intersection(stage_meet, s, a, below_s, st.s_sets[j]);
      if (j < r) audit_intersection(layer_meet, s, a, st.s_sets[j + 1], st.s_sets[j]);
      // Malnormality of G_{S_j} in M_j on pool conjugates.
      std::vector<Word> in_h, out_h;
      for (const Word& w : pool(s)) {
        if (w.empty() || !subset_of(letters_of(w), a)) continue;
        Tri m = member(w, st.s_sets[j]).status;
        if (m == Tri::yes && in_h.size() < cap) in_h.push_back(w);
        if (m == Tri::no && out_h.size() < cap) out_h.push_back(w);
      }
      for (const Word& g : out_h)
        for (const Word& x : in_h) {
          Word c = free_reduce(concat(inverse(g), x, g));
          if (is_identity(x) != Tri::no) continue;
          malnormal.record(tri_not(member(c, st.s_sets[j]).status), "conjugate " + to_string(c));
        }
      auto sub = closed_subgroup(st.s_sets[j], dynamic_cast<const FreeGroup*>(&st.m(j)) != nullptr);
      Tri mal = is_malnormal(*sub, st.m(j), cfg_.budget);
      if (mal == Tri::no) malnormal.record(Tri::no, "is_malnormal refutes at level " + std::to_string(j));
    }
    // Transversal laws over levels j = 1..r+1 and bounds beta <= s.
    std::map<std::pair<std::size_t, Symbol>, std::set<Word>> tset;
    for (std::size_t j = 1; j <= r + 1; ++j)
      for (Symbol b = 0; b <= s; ++b) {
        auto v = transversal_set(st, j, b);
        tset[{j, b}] = std::set<Word>(v.begin(), v.end());
      }
    for (std::size_t j = 1; j <= r + 1; ++j)
      for (Symbol b = 0; b <= s; ++b) {
        for (std::size_t j2 = j + 1; j2 <= r + 1; ++j2)
          for (const Word& g : tset[{j, b}])
            by_level.record(from_bool(tset[{j2, b}].count(g) != 0),
                      to_string(g) + " leaves T at level " + std::to_string(j2) + ", bound " + std::to_string(b));
        for (Symbol b2 = b + 1; b2 <= s; ++b2)
          for (const Word& g : tset[{j, b2}])
            by_bound.record(from_bool(tset[{j, b}].count(g) != 0),
                      to_string(g) + " in T bound " + std::to_string(b2) + " but not bound " + std::to_string(b));
      }
    // Star decomposition, replayed by multiplying out.
    for (std::size_t j = 1; j <= r + 1; ++j)
      for (Symbol b = 0; b <= s; ++b)
        for (const Word& g : level_candidates(st, j)) {
          TransversalRep tr = transversal_rep(st, j, b, g);
          if (tr.status != Tri::yes) {
            star.record(tr.status, to_string(g) + " has no representative");
            continue;
          }
          const LetterSet p = below(st.s_sets[j - 1], b);
          Word back = concat(tr.y0, tr.eps == 1 ? tr.t : inverse(tr.t), tr.y1, inverse(g));
          Tri ok = tri_and(st.m(j - 1).is_identity(back),
                           tri_and(member(tr.y0, p).status, member(tr.y1, p).status));
          star.record(ok, to_string(g) + " != y0 t y1");
        }
    // G_F ∩ G_F' = G_{F∩F'} on the closed sets visible at this stage.
    std::vector<LetterSet> fam;
    for (std::size_t j = 0; j <= r; ++j) {
      fam.push_back(st.s_sets[j]);
      LetterSet a = st.s_sets[j];
      a.insert(s);
      fam.push_back(a);
    }
    for (Symbol b = 0; b <= s + 1; ++b) fam.push_back(initial_segment(b));
    std::sort(fam.begin(), fam.end());
    fam.erase(std::unique(fam.begin(), fam.end()), fam.end());
    for (std::size_t x = 0; x < fam.size(); ++x)
      for (std::size_t y = x + 1; y < fam.size(); ++y) {
        const LetterSet meet = intersect(fam[x], fam[y]);
        if (!is_closed(fam[x]) || !is_closed(fam[y]) || !is_closed(meet)) continue;
        audit_intersection(closed, s, fam[x], fam[y], meet);
      }
    audit_fellows(st, fellows, sandwich);
    for (auto* a : {&stage_meet, &layer_meet, &malnormal, &by_level, &by_bound, &closed, &fellows, &sandwich, &star}) audits_.push_back(std::move(*a));
  }

  void audit_fellows(const StageRecord& st, AuditEntry& fellows, AuditEntry& sandwich) const {
    const Symbol s = st.symbol;
    const std::size_t cap = cfg_.budget.samples;
    for (std::size_t j = 1; j <= st.layers.size(); ++j) {
      const LetterSet& hset = st.s_sets[j - 1];
      const LetterSet& kset = st.s_sets[j];
      const AmalgamTriple& t = *st.layers[j - 1].triple;
      std::vector<std::pair<Symbol, Word>> fresh;  // (tau, k) with tau in S_j∖S_{j-1}
      for (const Word& w : pool(s)) {
        if (w.empty() || max_symbol(w) >= s) continue;
        if (member(w, kset).status != Tri::yes) continue;
        Locus loc = locate(w);
        if (loc.status == Tri::yes && kset.count(loc.tau) && !hset.count(loc.tau)) fresh.emplace_back(loc.tau, w);
      }
      std::size_t pairs = 0;
      for (const auto& [ta, ka] : fresh)
        for (const auto& [tb, kb] : fresh) {
          if (!(ta < tb) || pairs++ >= cap * cap) continue;
          fellows.record(good_fellows(*t.k, ka, kb, *t.h_in_k, cfg_.budget),
                    to_string(ka) + ", " + to_string(kb) + " over G_" + to_string(hset));
        }
      for (Symbol alpha : kset) {
        if (hset.count(alpha)) continue;
        LetterSet upto = below(kset, alpha + 1);
        const LetterSet before = initial_segment(alpha);
        std::vector<Word> gs, ks;
        for (const Word& w : pool(s)) {
          if (w.empty() || max_symbol(w) >= s) continue;
          if (member(w, before).status != Tri::no) continue;
          if (gs.size() < cap && member(w, hset).status == Tri::yes) gs.push_back(w);
          if (ks.size() < cap && member(w, upto).status == Tri::yes) ks.push_back(w);
        }
        std::size_t n = 0;
        for (const Word& g : gs)
          for (const Word& k : ks)
            for (const Word& k2 : ks) {
              if (n++ >= cap * cap) break;
              Word x = free_reduce(concat(k, g, k2));
              sandwich.record(tri_not(member(x, hset).status), to_string(x) + " in G_" + to_string(hset));
            }
      }
    }
  }

 public:
  // -------------------------------------------------------------------------
  // Witness identity

  /// Decides g^{-1} rho(zb h za, zb h zb h za) = 1 in the current top group,
  /// with a replayable certificate when the group is a small-cancellation
  /// quotient.
  WitnessCheck witness_check(const Word& g, const Word& za, const Word& zb, const Word& h) const {
    WitnessCheck out;
    Word u = concat(zb, h, za), v = concat(zb, h, zb, h, za);
    Word r = rho(u, v);
    out.letters = r.size();
    Word target = concat(inverse(g), r);
    const Symbol t = std::max(max_symbol(target), max_symbol(g));
    if (t >= built_symbols()) throw Error("witness_check: symbol " + std::to_string(t) + " not built");
    const StageRecord& st = stages_[t];
    const Group& top = st.m(st.layers.size());
    if (const auto* q = dynamic_cast<const AmalgamQuotient*>(&top)) {
      DehnResult d = q->decide(target);
      out.verdict = d.verdict;
      out.certificate = d.certificate;
      out.reason = d.reason;
      out.certificate_replays = d.verdict == DehnVerdict::trivial && replay_certificate(d.certificate, q->relators());
      return out;
    }
    switch (is_identity(target)) {
      case Tri::yes: out.verdict = DehnVerdict::trivial; break;
      case Tri::no: out.verdict = DehnVerdict::nontrivial; break;
      default: out.verdict = DehnVerdict::inconclusive;
    }
    out.reason = "top group of stage " + std::to_string(t) + " carries no relators";
    return out;
  }

  // -------------------------------------------------------------------------
  // Presentation, abelianization

  /// Exponent-sum vector over all built symbols.
  std::vector<long long> exponent_vector(const Word& w) const {
    std::vector<long long> v(built(), 0);
    for (Letter l : w) v.at(l.symbol) += l.sign;
    return v;
  }

  /// Abelian invariants of the built group, from h^{-1} rho(ba, b'a) with
  /// b' = b^2: exponent sums -h + 3400 b + 3320 a.
  AbelianInvariants abelian_invariants() const {
    std::vector<std::vector<long long>> rows;
    const long long nb = static_cast<long long>(kRhoXPowerSum + 2 * kRhoBlocks);
    const long long na = static_cast<long long>(kRhoXPowerSum + kRhoBlocks);
    for (const StageRecord& st : stages_)
      for (const Layer& layer : st.layers)
        for (const JEntry& e : layer.j_entries) {
          auto vh = exponent_vector(e.h), vb = exponent_vector(e.b), va = exponent_vector(e.a);
          std::vector<long long> row(built());
          for (std::size_t i = 0; i < row.size(); ++i) row[i] = -vh[i] + nb * vb[i] + na * va[i];
          rows.push_back(std::move(row));
        }
    return smith_invariants(std::move(rows), built());
  }

  static AbelianInvariants smith_invariants(std::vector<std::vector<long long>> m, std::size_t cols) {
    std::vector<long long> diag;
    std::size_t top = 0;
    for (std::size_t c = 0; c < cols && top < m.size(); ++c) {
      // Euclid on column c below row `top`, then clear the row to the right.
      for (;;) {
        std::size_t piv = SIZE_MAX;
        for (std::size_t r = top; r < m.size(); ++r)
          if (m[r][c] != 0 && (piv == SIZE_MAX || std::llabs(m[r][c]) < std::llabs(m[piv][c]))) piv = r;
        if (piv == SIZE_MAX) break;
        std::swap(m[top], m[piv]);
        bool clean = true;
        for (std::size_t r = top + 1; r < m.size(); ++r) {
          const long long f = m[r][c] / m[top][c];
          if (f != 0)
            for (std::size_t k = c; k < cols; ++k) m[r][k] -= f * m[top][k];
          if (m[r][c] != 0) clean = false;
        }
        if (!clean) continue;
        for (std::size_t k = c + 1; k < cols; ++k) {
          const long long f = m[top][k] / m[top][c];
          if (f != 0)
            for (std::size_t r = top; r < m.size(); ++r) m[r][k] -= f * m[r][c];
        }
        bool row_clean = true;
        for (std::size_t k = c + 1; k < cols; ++k)
          if (m[top][k] != 0) {
            row_clean = false;
            for (std::size_t r = top; r < m.size(); ++r) std::swap(m[r][c], m[r][k]);
            break;
          }
        if (row_clean) break;
      }
      if (top < m.size() && m[top][c] != 0) {
        diag.push_back(std::llabs(m[top][c]));
        ++top;
      }
    }
    // Divisibility chain: d_i | d_{i+1}.
    for (std::size_t i = 0; i < diag.size(); ++i)
      for (std::size_t j = i + 1; j < diag.size(); ++j) {
        const long long g = std::gcd(diag[i], diag[j]);
        const long long l = diag[i] / g * diag[j];
        diag[i] = g;
        diag[j] = l;
      }
    AbelianInvariants out;
    out.rank = cols - diag.size();
    for (long long d : diag)
      if (d > 1) out.torsion.push_back(d);
    return out;
  }

  // -------------------------------------------------------------------------
  // Relator chains N_0 ⊆ N_k built from rho_l(b a, b' a), l >= k

  /// Cyclic run-length sequence of super-symbols.
  struct Runs {
    std::vector<int> sym;
    std::vector<unsigned long long> len;
    unsigned long long total() const {
      unsigned long long t = 0;
      for (auto x : len) t += x;
      return t;
    }
  };

  /// Longest common factor (in super-symbols) of two cyclic run sequences.
  /// With same = true the trivial alignment is excluded.
  static unsigned long long longest_common(const Runs& x, const Runs& y, bool same) {
    unsigned long long best = 0;
    const std::size_t nx = x.sym.size(), ny = y.sym.size();
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < ny; ++j) {
        if (x.sym[i] != y.sym[j]) continue;
        const bool trivial = same && i == j;
        best = std::max(best, trivial ? x.len[i] - 1 : std::min(x.len[i], y.len[j]));
        if (trivial) continue;
        // Ends of runs i and j aligned; extend forward.
        unsigned long long total = std::min(x.len[i], y.len[j]);
        for (std::size_t step = 1; step <= std::max(nx, ny); ++step) {
          const std::size_t a = (i + step) % nx, b = (j + step) % ny;
          if (x.sym[a] != y.sym[b]) break;
          total += std::min(x.len[a], y.len[b]);
          if (x.len[a] != y.len[b]) break;
        }
        best = std::max(best, total);
      }
    return best;
  }

  TopologyReport topology_chain(std::size_t k_max) const {
    if (k_max > 3) throw BudgetExceeded("topology_chain: rho lengths beyond level 4 overflow 64 bits");
    TopologyReport rep;
    rep.k_max = k_max;
    const Layer* layer = nullptr;
    for (Symbol s = static_cast<Symbol>(built()); s-- > 0 && !layer;)
      for (std::size_t j = stages_[s].layers.size(); j-- > 0;)
        if (stages_[s].layers[j].relators) {
          layer = &stages_[s].layers[j];
          rep.stage = s;
          rep.layer = j + 1;
          break;
        }
    if (!layer) throw Error("topology_chain: no stage carries relators");
    const AmalgamTriple& t = *layer->triple;
    const std::size_t top = k_max + 1;
    for (std::size_t l = 0; l <= top; ++l) rep.rho_lengths.push_back(6640ULL * rho_exponent(l));

    std::set<std::string> n0;
    for (const JEntry& e : layer->j_entries) n0.insert("base:" + e.id);
    rep.n0.assign(n0.begin(), n0.end());
    for (std::size_t k = 0; k <= k_max; ++k) {
      std::set<std::string> fam = n0;
      for (std::size_t l = k; l <= top; ++l)
        for (const JEntry& e : layer->j_entries) fam.insert("rho" + std::to_string(l) + ":" + e.id);
      rep.families.push_back({k, {fam.begin(), fam.end()}});
    }
    for (std::size_t k = 0; k < rep.families.size(); ++k) {
      const auto& fk = rep.families[k].members;
      if (!std::includes(fk.begin(), fk.end(), rep.n0.begin(), rep.n0.end())) rep.nested = false;
      if (k + 1 < rep.families.size()) {
        const auto& next = rep.families[k + 1].members;
        if (!std::includes(fk.begin(), fk.end(), next.begin(), next.end())) rep.nested = false;
      }
    }

    // Syllable types: H-double cosets, or one type per side when unknown.
    std::map<std::string, int> types;
    auto type_of = [&](Side side, const Word& w) {
      auto key = t.group(side).double_coset_key(t.h(side), w);
      std::string k = std::string(side == Side::k ? "k:" : "l:") + (key ? *key : "*");
      return types.emplace(k, static_cast<int>(types.size())).first->second;
    };
    std::map<std::pair<int, int>, int> supers;
    auto super = [&](int a, int b) { return supers.emplace(std::make_pair(a, b), static_cast<int>(supers.size())).first->second; };
    auto push = [](Runs& r, int s, unsigned long long n) {
      if (!r.sym.empty() && r.sym.back() == s) {
        r.len.back() += n;
        return;
      }
      r.sym.push_back(s);
      r.len.push_back(n);
    };
    auto cyclic_merge = [](Runs& r) {
      if (r.sym.size() > 1 && r.sym.front() == r.sym.back()) {
        r.len.front() += r.len.back();
        r.sym.pop_back();
        r.len.pop_back();
      }
    };
    // Both orientations of rho_l for each entry.
    auto runs_of = [&](const JEntry& e, std::size_t l, bool inverted) {
      const unsigned long long n = rho_exponent(l);
      Runs r;
      if (!inverted) {
        const int p = super(type_of(Side::l, e.b), type_of(Side::k, e.a));
        const int q = super(type_of(Side::l, e.bprime), type_of(Side::k, e.a));
        for (std::size_t i = 1; i <= kRhoBlocks; ++i) {
          push(r, p, i * n);
          push(r, q, n);
        }
      } else {
        const int ai = type_of(Side::k, inverse(e.a));
        const int p = super(type_of(Side::l, inverse(e.b)), ai);
        const int q = super(type_of(Side::l, inverse(e.bprime)), ai);
        for (std::size_t i = kRhoBlocks; i >= 1; --i) {
          push(r, q, n);
          push(r, p, i * n);
        }
      }
      cyclic_merge(r);
      return r;
    };
    struct Item {
      std::string name;
      Runs runs;
      bool inverted;
    };
    auto family_items = [&](std::size_t lo, std::size_t hi, bool with_base) {
      std::vector<Item> items;
      for (std::size_t i = 0; i < layer->j_entries.size(); ++i) {
        const JEntry& e = layer->j_entries[i];
        for (bool inv : {false, true}) {
          if (with_base) items.push_back({"base:" + e.id, runs_of(e, 0, inv), inv});
          for (std::size_t l = lo; l <= hi; ++l)
            items.push_back({"rho" + std::to_string(l) + ":" + e.id, runs_of(e, l, inv), inv});
        }
      }
      return items;
    };
    // Type-level C'(1/10) on R_1 with rho-terms up to `top`.
    auto r1 = family_items(1, top, true);
    // Pieces are measured against the shorter relator of each pair; the
    // report keeps the pair with the largest ratio.
    rep.r1_cprime = Verdict::pass;
    rep.r1_min_length = 1;
    for (std::size_t a = 0; a < r1.size(); ++a)
      for (std::size_t b = 0; b < r1.size(); ++b) {
        const bool same = r1[a].name == r1[b].name && r1[a].inverted == r1[b].inverted;
        const unsigned long long bound = 2 * longest_common(r1[a].runs, r1[b].runs, same) + 4;
        const unsigned long long len = 2 * std::min(r1[a].runs.total(), r1[b].runs.total());
        if (static_cast<long double>(bound) / len >
            static_cast<long double>(rep.r1_piece_bound) / rep.r1_min_length) {
          rep.r1_piece_bound = bound;
          rep.r1_min_length = len;
        }
        if (10 * bound >= len) rep.r1_cprime = Verdict::inconclusive;
      }
    // rho_k against the long parts of N_0's relators.
    const std::size_t base_len = layer->relators->min_length();
    for (std::size_t k = 1; k <= k_max; ++k) {
      unsigned long long c = 0;
      for (const JEntry& e : layer->j_entries)
        for (bool inv : {false, true})
          for (const JEntry& f : layer->j_entries)
            for (bool inv2 : {false, true})
              c = std::max(c, longest_common(runs_of(e, k, inv), runs_of(f, 0, inv2), false));
      const unsigned long long syllables = 2 * c + 4;
      rep.rho_common_with_n0.push_back(syllables);
      rep.rho_outside_n0.push_back(10 * syllables <= static_cast<unsigned long long>(cfg_.k - 3) * base_len
                                       ? Tri::yes
                                       : Tri::inconclusive);
    }
    rep.note = "pieces bounded at the level of H-double-coset types";
    return rep;
  }

  /// Deterministic description of everything built so far.
  nlohmann::json presentation_json() const {
    using nlohmann::json;
    auto set_json = [](const LetterSet& s) { return json(std::vector<Symbol>(s.begin(), s.end())); };
    json out;
    out["generators"] = cfg_.generators;
    out["stages_built"] = built();
    json codes = json::array();
    for (const CodeEntry& c : codes_) codes.push_back({{"word", to_string(c.word)}, {"tau", c.tau}});
    out["registry"] = codes;
    json stages = json::array();
    for (const StageRecord& st : stages_) {
      json js{{"symbol", st.symbol}, {"ordinal", to_string(st.ordinal)}, {"base", st.base},
              {"free", st.free}, {"values", st.values}};
      json layers = json::array();
      for (const Layer& l : st.layers) {
        json jl{{"value", l.value}, {"h", set_json(l.h)}, {"k", set_json(l.k)}, {"l", set_json(l.l)},
                {"group", l.group->kind()}};
        json entries = json::array();
        for (const JEntry& e : l.j_entries)
          entries.push_back({{"id", e.id}, {"l", to_string(e.l)}, {"k", to_string(e.k)}, {"h", to_string(e.h)},
                             {"a", to_string(e.a)}, {"b", to_string(e.b)}, {"bprime", to_string(e.bprime)},
                             {"alpha", e.alpha}, {"k_prime", set_json(e.k_prime)}, {"xi0", e.xi0},
                             {"xi1", e.xi1}});
        jl["j"] = entries;
        json rels = json::array();
        if (l.relators)
          for (const CanonicalWord& r : l.relators->base()) rels.push_back(to_string(flatten(r)));
        jl["relators"] = rels;
        jl["log"] = l.log;
        layers.push_back(jl);
      }
      js["layers"] = layers;
      stages.push_back(js);
    }
    out["stages"] = stages;
    json audits = json::array();
    for (const AuditEntry& a : audits_)
      audits.push_back({{"id", a.id}, {"stage", a.stage}, {"instances", a.instances}, {"failures", a.failures},
                        {"inconclusive", a.inconclusive}, {"detail", a.detail}});
    out["audits"] = audits;
    return out;
  }

 private:
  EngineConfig cfg_;
  bool strict_ = true;
  std::vector<StageRecord> stages_;
  std::vector<CodeEntry> codes_;
  std::map<Word, std::size_t> code_index_;
  std::vector<AuditEntry> audits_;
  mutable std::map<Word, Locus> locus_cache_;
  mutable std::map<Symbol, std::vector<Word>> pool_cache_;
};

inline Membership ClosedSetSubgroup::contains(const Word& w) const {
  MemberResult r = engine_->member(w, f_);
  return {r.status, r.rep};
}

inline Tri ClosedSetGroup::is_identity(const Word& w) const { return engine_->is_identity(w); }

}  // namespace shelah
