#pragma once

// Systems of quadruples (h, a, b, b') over an amalgam, their validation, the
// rho-word relators they generate, and bounded checks of what the quotient
// by those relators satisfies.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "shelah/amalgam.hpp"
#include "shelah/core.hpp"
#include "shelah/groups.hpp"
#include "shelah/smallcancel.hpp"
#include "shelah/words.hpp"

namespace shelah {

/// h in H, a in K∖H, b and bprime in L∖H; all as words of the respective
/// factor.
struct SystemEntry {
  std::string index;
  Word h, a, b, bprime;
};

enum class PairCase : std::uint8_t { a, b, c, d, none };

inline const char* to_string(PairCase c) noexcept {
  switch (c) {
    case PairCase::a: return "a";
    case PairCase::b: return "b";
    case PairCase::c: return "c";
    case PairCase::d: return "d";
    default: return "none";
  }
}

/// Subgroups for the fourth case: H' ≤ H (seen in L and in K) and K' ≤ K.
struct PrimeSubgroups {
  SubgroupPtr h_prime_in_l;
  SubgroupPtr h_prime_in_k;
  SubgroupPtr k_prime;
};

using PrimeProvider =
    std::function<std::optional<PrimeSubgroups>(const SystemEntry&, const SystemEntry&)>;

struct PairCertificate {
  std::size_t i = 0, j = 0;
  PairCase tag = PairCase::none;
  Tri status = Tri::no;
  std::string detail;
  /// Set in the fourth case when b_i, b_j are good fellows over H' but not
  /// over H, i.e. where reading (iii) over H would have rejected the pair.
  bool h_prime_matters = false;
};

struct SystemValidation {
  Verdict verdict = Verdict::pass;
  Tri malnormal = Tri::yes;       // H ≤_m L; inconclusive means assumed
  std::vector<Tri> entry_status;  // typing plus hypothesis (1), per entry
  std::vector<PairCertificate> pairs;
  std::string witness;
};

namespace detail {

inline Tri in_h_minus(const Group& g, const Subgroup& h, const Word& w, bool want_in_h) {
  Tri in = h.contains(w).status;
  Tri one = g.is_identity(w);
  if (want_in_h) return in;
  return tri_and(tri_not(in), tri_not(one));
}

/// Clause (v): (K'∖H)(H∖K')(K'∖H) ⊆ K∖H. Exhaustive when K' and H are
/// finite, otherwise over the listed samples (never better than
/// inconclusive).
inline Tri clause_v(const AmalgamTriple& t, const Subgroup& kp) {
  auto kps = kp.elements();
  auto hs = t.h_in_k->elements();
  const bool finite = kps && hs;
  std::vector<Word> kx = finite ? *kps : kp.samples();
  std::vector<Word> hx = finite ? *hs : t.h_in_k->samples();
  std::vector<Word> outer, middle;
  for (const Word& x : kx)
    if (t.h_in_k->contains(x).status == Tri::no) outer.push_back(x);
  for (const Word& x : hx)
    if (kp.contains(x).status == Tri::no) middle.push_back(x);
  for (const Word& x : outer)
    for (const Word& y : middle)
      for (const Word& z : outer)
        if (t.h_in_k->contains(concat(x, y, z)).status != Tri::no) return Tri::no;
  return finite ? Tri::yes : Tri::inconclusive;
}

/// Clause (i): K' ∩ H = H'.
inline Tri clause_i(const AmalgamTriple& t, const PrimeSubgroups& ps) {
  auto kps = ps.k_prime->elements();
  auto hps = ps.h_prime_in_k->elements();
  if (!kps || !hps) return Tri::inconclusive;
  for (const Word& x : *kps) {
    Tri in_h = t.h_in_k->contains(x).status;
    Tri in_hp = ps.h_prime_in_k->contains(x).status;
    if (in_h != in_hp) return Tri::no;
  }
  for (const Word& x : *hps)
    if (ps.k_prime->contains(x).status != Tri::yes || t.h_in_k->contains(x).status != Tri::yes) return Tri::no;
  return Tri::yes;
}

}  // namespace detail

/// Checks the hypotheses: typing, (1) for every entry, and one of the four
/// cases for every pair i < j.
inline SystemValidation validate_system(const std::vector<SystemEntry>& s, const AmalgamTriple& t,
                                        const PrimeProvider& provider = {}, const Budget& budget = {}) {
  SystemValidation v;
  v.malnormal = is_malnormal(*t.h_in_l, *t.l, budget);
  if (v.malnormal == Tri::no) {
    v.verdict = Verdict::fail;
    v.witness = "H is not malnormal in L";
    return v;
  }
  bool undecided = false;
  const Group& k = *t.k;
  const Group& l = *t.l;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const SystemEntry& e = s[i];
    Tri typed = tri_and(tri_and(detail::in_h_minus(k, *t.h_in_k, e.h, true),
                                detail::in_h_minus(k, *t.h_in_k, e.a, false)),
                        tri_and(detail::in_h_minus(l, *t.h_in_l, e.b, false),
                                detail::in_h_minus(l, *t.h_in_l, e.bprime, false)));
    Tri ok = tri_and(typed, good_fellows(l, e.b, e.bprime, *t.h_in_l, budget));
    v.entry_status.push_back(ok);
    if (ok == Tri::no) {
      v.verdict = Verdict::fail;
      v.witness = "entry " + e.index + (typed == Tri::no ? " is mistyped" : ": b and b' are not good fellows over H");
      return v;
    }
    if (ok == Tri::inconclusive) undecided = true;
  }
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = i + 1; j < s.size(); ++j) {
      const SystemEntry& x = s[i];
      const SystemEntry& y = s[j];
      PairCertificate c{i, j, PairCase::none, Tri::no, {}, false};
      Tri ca = good_fellows(k, x.a, y.a, *t.h_in_k, budget);
      Tri cb = tri_and(tri_and(l.equal(x.b, y.b), l.equal(x.bprime, y.bprime)), tri_not(k.equal(x.a, y.a)));
      Tri cc = good_fellows(l, x.b, y.b, *t.h_in_l, budget);
      if (ca == Tri::yes) {
        c.tag = PairCase::a;
        c.status = Tri::yes;
      } else if (cb == Tri::yes) {
        c.tag = PairCase::b;
        c.status = Tri::yes;
      } else if (cc == Tri::yes) {
        c.tag = PairCase::c;
        c.status = Tri::yes;
      } else {
        Tri cd = Tri::no;
        if (provider) {
          if (auto ps = provider(x, y)) {
            Tri ci = detail::clause_i(t, *ps);
            Tri cii = tri_and(tri_and(ps->k_prime->contains(x.a).status, ps->k_prime->contains(y.a).status),
                              tri_and(tri_not(t.h_in_k->contains(x.a).status),
                                      tri_not(t.h_in_k->contains(y.a).status)));
            Tri ciii = good_fellows(l, x.b, y.b, *ps->h_prime_in_l, budget);
            Tri civ = good_fellows(l, x.b, y.bprime, *t.h_in_l, budget);
            Tri cv = detail::clause_v(t, *ps->k_prime);
            cd = tri_and(tri_and(ci, cii), tri_and(tri_and(ciii, civ), cv));
            c.detail = std::string("i=") + to_string(ci) + " ii=" + to_string(cii) + " iii=" + to_string(ciii) +
                       " iv=" + to_string(civ) + " v=" + to_string(cv);
            c.h_prime_matters = ciii == Tri::yes && cc == Tri::no;
          }
        }
        c.tag = cd == Tri::no ? PairCase::none : PairCase::d;
        c.status = cd;
        if (cd == Tri::no) {
          // Some case may still hold if an earlier test was undecided.
          Tri any = tri_or(tri_or(ca, cb), cc);
          c.status = any;
        }
      }
      v.pairs.push_back(c);
      if (c.status == Tri::no) {
        v.verdict = Verdict::fail;
        v.witness = "entries " + x.index + " and " + y.index + " satisfy none of the four cases";
        return v;
      }
      if (c.status == Tri::inconclusive) undecided = true;
    }
  if (undecided) v.verdict = Verdict::inconclusive;
  return v;
}

/// Syllables of h^{-1} rho(b a, b' a) before canonicalization.
inline std::vector<Syllable> relator_syllables(const SystemEntry& e) {
  std::vector<Syllable> out;
  out.reserve(2 * kRhoXPowerSum + 2 * kRhoBlocks + 1);
  out.push_back({Side::k, inverse(e.h)});
  for (std::size_t i = 1; i <= kRhoBlocks; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      out.push_back({Side::l, e.b});
      out.push_back({Side::k, e.a});
    }
    out.push_back({Side::l, e.bprime});
    out.push_back({Side::k, e.a});
  }
  return out;
}

struct GeneratedRelators {
  std::shared_ptr<const RelatorSet> relators;
  CPrimeReport cprime;
};

/// Relators h^{-1} rho(b a, b' a) in entry order. Throws when C'(1/10) does
/// not pass: for a validated system that is a bug, reported with the witness.
inline GeneratedRelators generate_relators(const std::vector<SystemEntry>& s, TriplePtr t,
                                           const Budget& budget = {}) {
  std::vector<CanonicalWord> rels;
  std::vector<std::string> origin;
  for (const SystemEntry& e : s) {
    CanonicalWord r = canonicalize(relator_syllables(e), *t);
    if (r.size() != 6640 && r.size() != 6641)
      throw Error("generate_relators: relator " + e.index + " has canonical length " + std::to_string(r.size()));
    rels.push_back(std::move(r));
    origin.push_back(e.index);
  }
  auto rs = std::make_shared<const RelatorSet>(t, std::move(rels), std::move(origin));
  CPrimeReport rep = check_cprime(*rs, Ratio{1, 10}, budget);
  if (rep.verdict != Verdict::pass) {
    std::string msg = std::string("generate_relators: C'(1/10) ") + to_string(rep.verdict);
    if (rep.witness)
      msg += ": piece of length " + std::to_string(rep.witness->length) + " between cyclic relators " +
             std::to_string(rep.witness->z_cyclic) + " and " + std::to_string(rep.witness->y_cyclic);
    throw Error(msg);
  }
  // No piece may exceed 664 syllables when relators have length 6640.
  if (rep.max_lower > 664) throw Error("generate_relators: piece longer than 664");
  return {rs, rep};
}

// ---------------------------------------------------------------------------
// Bounded checks in the quotient

/// Membership of x in the image of one factor. Exact when the factor is
/// finite or when x is too short for any relator to matter; otherwise only a
/// sampled witness can decide.
inline Tri in_factor(const AmalgamQuotient& q, Side side, const Word& x) {
  const AmalgamTriple& t = q.triple();
  try {
    CanonicalWord c = canonicalize_word(x, t);
    if (c.empty()) return Tri::yes;
    if (c.size() == 1) {
      if (c[0].side == side) return Tri::yes;
      return tri_not(t.h(c[0].side).contains(c[0].word).status);
    }
    const Group& f = t.group(side);
    bool undecided = false;
    auto test = [&](const Word& y) {
      DehnResult r = q.decide(concat(x, inverse(y)));
      if (r.verdict == DehnVerdict::inconclusive) undecided = true;
      return r.verdict == DehnVerdict::trivial;
    };
    if (auto all = f.elements()) {
      for (const Word& y : *all)
        if (test(y)) return Tri::yes;
      return undecided ? Tri::inconclusive : Tri::no;
    }
    for (const Word& y : f.sample_elements(q.budget().samples))
      if (test(y)) return Tri::yes;
    const std::size_t m = q.relators().empty() ? SIZE_MAX : q.relators().min_length();
    if (m != SIZE_MAX && static_cast<unsigned long long>(q.k()) * (c.size() + 2) >
                             static_cast<unsigned long long>(q.k() - 3) * m)
      return Tri::inconclusive;
    // x y^{-1} has cyclic length at most |x| + 1 for every y in the factor.
    return Tri::no;
  } catch (const Inconclusive&) {
    return Tri::inconclusive;
  }
}

/// g, h good fellows over a factor F in the quotient: g ∉ F h F ∪ F h^{-1} F.
/// Exact for finite F; refutation-only otherwise.
inline Tri good_fellows_over_factor(const AmalgamQuotient& q, Side side, const Word& g, const Word& h) {
  const Group& f = q.triple().group(side);
  auto all = f.elements();
  std::vector<Word> fs = all ? *all : f.sample_elements(q.budget().samples);
  bool undecided = false;
  for (const Word& hh : {h, inverse(h)})
    for (const Word& x : fs)
      for (const Word& y : fs) {
        DehnResult r = q.decide(concat(x, hh, y, inverse(g)));
        if (r.verdict == DehnVerdict::trivial) return Tri::no;
        if (r.verdict == DehnVerdict::inconclusive) undecided = true;
      }
  return all && !undecided ? Tri::yes : Tri::inconclusive;
}

struct ConclusionCheck {
  std::string id;
  Verdict status = Verdict::pass;
  std::size_t instances = 0;
  std::size_t inconclusive = 0;
  std::string detail;
  std::vector<std::string> replay;  // inputs of failed or undecided instances
};

struct ConclusionReport {
  std::vector<ConclusionCheck> checks;
  const ConclusionCheck* find(const std::string& id) const {
    for (const auto& c : checks)
      if (c.id == id) return &c;
    return nullptr;
  }
};

struct ConclusionOptions {
  bool factors_torsion_free = false;
  std::size_t sample = 6;        // elements drawn from each factor
  std::size_t torsion_alphabet = 3;  // syllables per side in the torsion scan
};

namespace detail {

/// Records one instance whose expected answer is `want`.
inline void tally(ConclusionCheck& c, Tri got, Tri want, const std::string& inputs) {
  ++c.instances;
  if (got == want) return;
  if (got == Tri::inconclusive) {
    ++c.inconclusive;
    if (c.status == Verdict::pass) c.status = Verdict::inconclusive;
  } else {
    c.status = Verdict::fail;
  }
  if (c.replay.size() < 16) c.replay.push_back(inputs);
}

inline std::vector<Word> outside_h(const Group& g, const Subgroup& h, std::size_t n) {
  std::vector<Word> out;
  for (const Word& w : g.sample_elements(8 * n + 8)) {
    if (out.size() >= n) break;
    if (h.contains(w).status == Tri::no) out.push_back(w);
  }
  return out;
}

}  // namespace detail

/// Torsion scan: no w^n = 1 for alternating words of canonical length up to
/// budget.torsion_len over a fixed syllable alphabet and 2 <= n <= budget.torsion_pow.
inline ConclusionCheck torsion_scan(const AmalgamQuotient& q, const Budget& budget, std::size_t alphabet) {
  ConclusionCheck c{"torsion-free", Verdict::pass, 0, 0, {}, {}};
  const AmalgamTriple& t = q.triple();
  auto ks = detail::outside_h(*t.k, *t.h_in_k, alphabet);
  auto ls = detail::outside_h(*t.l, *t.h_in_l, alphabet);
  std::vector<Word> cur;
  std::function<void(std::size_t, Side)> grow = [&](std::size_t depth, Side next) {
    if (depth > 0) {
      Word w;
      for (const Word& s : cur) w.insert(w.end(), s.begin(), s.end());
      for (std::size_t n = 2; n <= budget.torsion_pow; ++n) {
        DehnResult r = q.decide(power(w, n));
        Tri trivial = r.verdict == DehnVerdict::trivial     ? Tri::yes
                      : r.verdict == DehnVerdict::nontrivial ? Tri::no
                                                             : Tri::inconclusive;
        detail::tally(c, trivial, Tri::no, to_string(w) + " ^ " + std::to_string(n));
      }
    }
    if (depth == budget.torsion_len) return;
    for (const Word& s : next == Side::k ? ks : ls) {
      cur.push_back(s);
      grow(depth + 1, other(next));
      cur.pop_back();
    }
  };
  grow(0, Side::k);
  grow(0, Side::l);
  c.detail = "alphabet " + std::to_string(ks.size()) + "+" + std::to_string(ls.size()) + ", length <= " +
             std::to_string(budget.torsion_len) + ", powers 2.." + std::to_string(budget.torsion_pow);
  return c;
}

/// Checks small cancellation exactly and the remaining properties on
/// bounded, deterministic samples.
inline ConclusionReport verify_conclusions(const AmalgamQuotient& q, const std::vector<SystemEntry>& s,
                                           const CPrimeReport& cprime, const Budget& budget = {},
                                           const ConclusionOptions& opt = {}) {
  const AmalgamTriple& t = q.triple();
  ConclusionReport rep;
  const Group& k = *t.k;
  const Group& l = *t.l;
  auto ks = detail::outside_h(k, *t.h_in_k, opt.sample);
  auto ls = detail::outside_h(l, *t.h_in_l, opt.sample);
  std::vector<Word> hs = t.h_in_l->elements().value_or(t.h_in_l->samples());
  if (hs.empty()) hs.push_back(Word{});

  ConclusionCheck a{"small-cancellation", cprime.verdict, 1, cprime.verdict == Verdict::inconclusive ? 1u : 0u,
                    "max piece " + std::to_string(cprime.max_lower) + ", bound " + std::to_string(cprime.max_upper), {}};
  rep.checks.push_back(a);

  // K malnormal in the quotient, on sampled conjugators outside K.
  ConclusionCheck b{"k-malnormal", Verdict::pass, 0, 0, {}, {}};
  for (const Word& y : ls)
    for (const Word& x : ks) {
      Word g = concat(y, x);  // canonical length 2, outside K
      for (const Word& kk : ks)
        detail::tally(b, in_factor(q, Side::k, concat(inverse(g), kk, g)), Tri::no,
                      "g=" + to_string(g) + " k=" + to_string(kk));
    }
  rep.checks.push_back(b);

  // b, b' not good fellows over H, d in K∖H: d b' and d b d b good fellows over K.
  ConclusionCheck cc{"fellows-over-k", Verdict::pass, 0, 0, {}, {}};
  for (const Word& bb : ls)
    for (const Word& d : ks) {
      Word bp = concat(hs.back(), inverse(bb), hs.front());
      detail::tally(cc, good_fellows_over_factor(q, Side::k, concat(d, bp), concat(d, bb, d, bb)), Tri::yes,
                    "b=" + to_string(bb) + " b'=" + to_string(bp) + " d=" + to_string(d));
    }
  rep.checks.push_back(cc);

  // b a b' and b a outside K; a b a' and a b outside L.
  ConclusionCheck dd{"outside-factors", Verdict::pass, 0, 0, {}, {}};
  for (const Word& x : ks)
    for (const Word& y : ls)
      for (const Word& y2 : ls) {
        detail::tally(dd, in_factor(q, Side::k, concat(y, x, y2)), Tri::no,
                      "bab' b=" + to_string(y) + " a=" + to_string(x) + " b'=" + to_string(y2));
        detail::tally(dd, in_factor(q, Side::l, concat(x, y, x)), Tri::no,
                      "aba' a=" + to_string(x) + " b=" + to_string(y));
      }
  for (const Word& x : ks)
    for (const Word& y : ls) {
      detail::tally(dd, in_factor(q, Side::k, concat(y, x)), Tri::no, "ba b=" + to_string(y) + " a=" + to_string(x));
      detail::tally(dd, in_factor(q, Side::l, concat(x, y)), Tri::no, "ab a=" + to_string(x) + " b=" + to_string(y));
    }
  rep.checks.push_back(dd);

  // With H' = L' = H: good fellows over H in K stay good fellows over H.
  ConclusionCheck ee{"fellows-in-k", Verdict::pass, 0, 0, {}, {}};
  auto hk = t.h_in_k->elements();
  for (std::size_t i = 0; i < ks.size(); ++i)
    for (std::size_t j = i + 1; j < ks.size(); ++j) {
      if (good_fellows(k, ks[i], ks[j], *t.h_in_k, budget) != Tri::yes) continue;
      std::vector<Word> hh = hk ? *hk : t.h_in_k->samples();
      if (hh.empty()) hh.push_back(Word{});
      Tri gf = Tri::yes;
      for (const Word& e : {ks[j], inverse(ks[j])})
        for (const Word& x : hh)
          for (const Word& y : hh) {
            Tri same = q.is_identity(concat(x, e, y, inverse(ks[i])));
            if (same == Tri::yes) gf = Tri::no;
            if (same == Tri::inconclusive && gf == Tri::yes) gf = Tri::inconclusive;
          }
      if (!hk && gf == Tri::yes) gf = Tri::inconclusive;
      detail::tally(ee, gf, Tri::yes, "a=" + to_string(ks[i]) + " a'=" + to_string(ks[j]));
    }
  rep.checks.push_back(ee);

  // Good fellows over H in L are good fellows over K in the quotient.
  ConclusionCheck ff{"fellows-in-l", Verdict::pass, 0, 0, {}, {}};
  std::vector<std::pair<Word, Word>> fellows;
  for (const SystemEntry& e : s) fellows.emplace_back(e.b, e.bprime);
  for (std::size_t i = 0; i < ls.size(); ++i)
    for (std::size_t j = i + 1; j < ls.size(); ++j)
      if (good_fellows(l, ls[i], ls[j], *t.h_in_l, budget) == Tri::yes) fellows.emplace_back(ls[i], ls[j]);
  for (const auto& [x, y] : fellows)
    detail::tally(ff, good_fellows_over_factor(q, Side::k, x, y), Tri::yes,
                  "b=" + to_string(x) + " b'=" + to_string(y));
  rep.checks.push_back(ff);

  if (opt.factors_torsion_free) {
    rep.checks.push_back(torsion_scan(q, budget, opt.torsion_alphabet));
  } else {
    rep.checks.push_back({"torsion-free", Verdict::pass, 0, 0, "not applicable: factors not declared torsion-free", {}});
  }
  return rep;
}

}  // namespace shelah
