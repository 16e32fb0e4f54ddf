#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <numeric>
#include <random>

#include "shelah/smallcancel.hpp"
#include "support/oracles.hpp"

using namespace shelah;

namespace {

constexpr Symbol kA = 0, kB = 1;

// Free product F(a) * F(b): alternating a^e b^f syllables.
TriplePtr free_product() { return make_free_amalgam({kA}, {kB}, {}); }

CanonicalWord alternating(std::mt19937_64& rng, std::size_t pairs, int max_exp) {
  std::uniform_int_distribution<int> e(1, max_exp), sgn(0, 1);
  CanonicalWord c;
  for (std::size_t i = 0; i < pairs; ++i) {
    c.push_back({Side::k, signed_power(letter_word(kA), sgn(rng) ? e(rng) : -e(rng))});
    c.push_back({Side::l, signed_power(letter_word(kB), sgn(rng) ? e(rng) : -e(rng))});
  }
  return c;
}

// Finite amalgam with table access for the brute-force piece oracle.
struct TableSetting {
  oracle::Table k, l;
  std::vector<int> hk, hl;
  TriplePtr t;
  std::shared_ptr<const FiniteTableGroup> kg, lg;
  std::vector<int> k_to_l;

  TableSetting(oracle::Table kt, std::vector<int> hk_, oracle::Table lt, std::vector<int> hl_)
      : k(kt), l(lt), hk(hk_), hl(hl_), t(make_finite_amalgam(kt, hk_, lt, hl_)),
        kg(std::dynamic_pointer_cast<const FiniteTableGroup>(t->k)),
        lg(std::dynamic_pointer_cast<const FiniteTableGroup>(t->l)), k_to_l(kt.size(), -1) {
    for (std::size_t i = 0; i < hk.size(); ++i) k_to_l[hk[i]] = hl[i];
  }

  int index(const Syllable& s) const { return (s.side == Side::k ? kg : lg)->evaluate(s.word); }
  bool in_h(int side, int x) const {
    const auto& h = side == 0 ? hk : hl;
    return std::find(h.begin(), h.end(), x) != h.end();
  }

  CanonicalWord random_relator(std::mt19937_64& rng, std::size_t pairs) const {
    CanonicalWord c;
    for (std::size_t i = 0; i < pairs; ++i)
      for (int side : {0, 1}) {
        const auto& tab = side == 0 ? k : l;
        int x;
        do x = std::uniform_int_distribution<int>(0, static_cast<int>(tab.size()) - 1)(rng);
        while (in_h(side, x));
        c.push_back(side == 0 ? Syllable{Side::k, kg->element(x)} : Syllable{Side::l, lg->element(x)});
      }
    return c;
  }

  // Longest chain y_{q+t} = c_t^{-1} z_{p+t} c_{t+1} over every alignment and
  // every starting c in H, by direct table arithmetic.
  std::size_t longest_piece(const CanonicalWord& z, const CanonicalWord& y, bool same) const {
    const std::size_t n = z.size(), m = y.size(), cap = std::min(n, m);
    const int ek = oracle::identity_of(k);
    std::size_t best = 0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = 0; q < m; ++q)
        for (int c0 : hk) {
          if (same && p == q && c0 == ek) continue;
          int c = c0;  // K-side index
          std::size_t len = 0;
          while (len < cap) {
            const Syllable& zs = z[(p + len) % n];
            const Syllable& ys = y[(q + len) % m];
            if (zs.side != ys.side) break;
            int side = zs.side == Side::k ? 0 : 1;
            const auto& tab = side == 0 ? k : l;
            int cs = side == 0 ? c : k_to_l[c];
            int next = tab[tab[oracle::inverse_of(tab, index(zs))][cs]][index(ys)];
            if (!in_h(side, next)) break;
            c = side == 0 ? next : hk[std::find(hl.begin(), hl.end(), next) - hl.begin()];
            ++len;
          }
          best = std::max(best, std::min(len, cap - 1));
        }
    return best;
  }
};

bool violates(std::size_t ell, std::size_t m, Ratio chi) { return ell * chi.den >= m * chi.num; }

// Expected verdict from exact piece lengths: a piece that violates is a
// failure; a bound (piece + 2 split ends) that violates is undecided. With
// no matched interior a piece is at most one split end.
Verdict expected_verdict(const std::vector<CanonicalWord>& cyc, Ratio chi,
                         const std::function<std::size_t(std::size_t, std::size_t)>& piece) {
  bool undecided = false;
  for (std::size_t i = 0; i < cyc.size(); ++i)
    for (std::size_t j = i; j < cyc.size(); ++j) {
      std::size_t cap = std::min(cyc[i].size(), cyc[j].size());
      std::size_t ell = piece(i, j);
      if (violates(ell, cap, chi)) return Verdict::fail;
      if (ell > 0 && violates(ell + 2, cap, chi)) undecided = true;
    }
  return undecided ? Verdict::inconclusive : Verdict::pass;
}

std::vector<CanonicalWord> words_of(const RelatorSet& rs) {
  std::vector<CanonicalWord> out;
  for (const auto& c : rs.cyclic()) out.push_back(c.word);
  return out;
}

// Relators on F(a) * F(b) whose exponents have pairwise distinct magnitudes:
// no two syllables match, so C'(1/10) holds once the length exceeds 20.
RelatorSet small_cancellation_set(std::mt19937_64& rng, std::size_t count) {
  std::vector<int> mags(400);
  std::iota(mags.begin(), mags.end(), 1);
  std::shuffle(mags.begin(), mags.end(), rng);
  std::uniform_int_distribution<int> sgn(0, 1);
  std::size_t next = 0;
  std::vector<CanonicalWord> base;
  for (std::size_t i = 0; i < count; ++i) {
    CanonicalWord c;
    for (std::size_t j = 0; j < 12; ++j) {
      int e = mags[next++], f = mags[next++];
      c.push_back({Side::k, signed_power(letter_word(kA), sgn(rng) ? e : -e)});
      c.push_back({Side::l, signed_power(letter_word(kB), sgn(rng) ? f : -f)});
    }
    base.push_back(c);
  }
  RelatorSet rs(free_product(), base);
  if (check_cprime(rs, {1, 10}).verdict != Verdict::pass) throw Error("fixture relators fail C'(1/10)");
  return rs;
}

Word random_free_word(std::mt19937_64& rng, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<int> sym(0, 1), sgn(0, 1);
  Word w;
  for (std::size_t i = 0, n = len(rng); i < n; ++i) w.push_back({sym(rng), sgn(rng) ? 1 : -1});
  return w;
}

}  // namespace

TEST(LongPart, SmallestInteriorLength) {
  for (unsigned k : {4u, 6u, 10u})
    for (std::size_t m = 2; m < 200; ++m) {
      std::size_t l = long_part_interior(m, k);
      EXPECT_GT(k * (l + 2), (k - 3) * m);
      if (l > 0) EXPECT_LE(k * (l + 1), (k - 3) * m);
    }
}

TEST(RelatorSet, RejectsShortRelators) {
  auto t = free_product();
  EXPECT_THROW(RelatorSet(t, {CanonicalWord{{Side::k, letter_word(kA)}}}), Error);
  EXPECT_THROW(RelatorSet(t, {CanonicalWord{}}), Error);
  // a b a^-1 has cyclic length 1.
  CanonicalWord conj{{Side::k, letter_word(kA)}, {Side::l, letter_word(kB)}, {Side::k, inverse(letter_word(kA))}};
  EXPECT_THROW(RelatorSet(t, {conj}), Error);
}

TEST(RelatorSet, StoresRelatorAndInverse) {
  std::mt19937_64 rng(3);
  auto t = free_product();
  RelatorSet rs(t, {alternating(rng, 5, 9), alternating(rng, 3, 9)});
  ASSERT_EQ(rs.cyclic().size(), 4u);
  EXPECT_EQ(rs.min_length(), 6u);
  for (const auto& c : rs.cyclic()) {
    EXPECT_EQ(c.word.size() % 2, 0u);
    EXPECT_EQ(c.keys.size(), c.word.size());
  }
  auto prod = multiply(rs.cyclic()[0].word, rs.cyclic()[1].word, *t);
  EXPECT_TRUE(prod.empty());
}

TEST(SymmetrizedClosure, RotationsOfRelatorAndInverse) {
  auto t = free_product();
  for (int trial = 0; trial < 20; ++trial) {
    CanonicalWord r;
    // Distinct positive exponents rule out proper powers.
    for (int i = 1; i <= 4; ++i) {
      r.push_back({Side::k, power(letter_word(kA), static_cast<std::size_t>(i))});
      r.push_back({Side::l, power(letter_word(kB), static_cast<std::size_t>(i + trial))});
    }
    auto closure = symmetrized_closure({r}, *t);
    EXPECT_EQ(closure.size(), 2 * r.size());
  }
}

TEST(CPrime, FreeProductAgreesWithBruteForce) {
  std::mt19937_64 rng(5);
  auto t = free_product();
  int seen[3] = {0, 0, 0};
  for (int trial = 0; trial < 300; ++trial) {
    std::uniform_int_distribution<std::size_t> pairs(3, 9), count(1, 3);
    std::vector<CanonicalWord> base;
    for (std::size_t i = 0, n = count(rng); i < n; ++i) base.push_back(alternating(rng, pairs(rng), 3));
    RelatorSet rs(t, base);
    auto cyc = words_of(rs);
    auto piece = [&](std::size_t i, std::size_t j) {
      const auto& z = cyc[i];
      const auto& y = cyc[j];
      std::size_t cap = std::min(z.size(), y.size()), best = 0;
      for (std::size_t p = 0; p < z.size(); ++p)
        for (std::size_t q = 0; q < y.size(); ++q) {
          if (i == j && p == q) continue;
          std::size_t len = 0;
          while (len < cap && z[(p + len) % z.size()] == y[(q + len) % y.size()]) ++len;
          best = std::max(best, std::min(len, cap - 1));
        }
      return best;
    };
    for (Ratio chi : {Ratio{1, 6}, Ratio{1, 3}, Ratio{1, 2}}) {
      auto rep = check_cprime(rs, chi);
      Verdict want = expected_verdict(cyc, chi, piece);
      ASSERT_EQ(rep.verdict, want) << trial;
      ++seen[static_cast<int>(want)];
      if (rep.verdict == Verdict::fail) {
        ASSERT_TRUE(rep.witness.has_value());
        EXPECT_TRUE(replay_piece(rs, *rep.witness));
      }
    }
  }
  // The generator exercises every verdict.
  EXPECT_GT(seen[0], 0);
  EXPECT_GT(seen[1], 0);
  EXPECT_GT(seen[2], 0);
}

TEST(CPrime, FiniteAmalgamAgreesWithBruteForce) {
  std::mt19937_64 rng(6);
  TableSetting s(oracle::semidirect(13, 3, 3), {0, 13, 26}, oracle::cyclic_table(15), {0, 5, 10});
  int fails = 0, passes = 0;
  for (int trial = 0; trial < 60; ++trial) {
    std::uniform_int_distribution<std::size_t> pairs(3, 12);
    std::vector<CanonicalWord> base{s.random_relator(rng, pairs(rng))};
    if (trial % 2) base.push_back(s.random_relator(rng, pairs(rng)));
    RelatorSet rs(s.t, base);
    auto cyc = words_of(rs);
    auto piece = [&](std::size_t i, std::size_t j) { return s.longest_piece(cyc[i], cyc[j], i == j); };
    for (Ratio chi : {Ratio{1, 6}, Ratio{1, 2}}) {
      auto rep = check_cprime(rs, chi);
      Verdict want = expected_verdict(cyc, chi, piece);
      ASSERT_EQ(rep.verdict, want) << trial;
      fails += want == Verdict::fail;
      passes += want == Verdict::pass;
      if (rep.witness) EXPECT_TRUE(replay_piece(rs, *rep.witness));
    }
  }
  EXPECT_GT(fails, 0);
  EXPECT_GT(passes, 0);
}

TEST(CPrime, TamperedWitnessFailsReplay) {
  std::mt19937_64 rng(7);
  auto t = free_product();
  CanonicalWord r = alternating(rng, 6, 2);
  // r and a near-copy share a long stretch.
  CanonicalWord r2 = r;
  r2[0].word = power(r2[0].word, 2);
  RelatorSet rs(t, {r, r2});
  auto rep = check_cprime(rs, {1, 6});
  ASSERT_EQ(rep.verdict, Verdict::fail);
  ASSERT_TRUE(rep.witness);
  EXPECT_TRUE(replay_piece(rs, *rep.witness));
  PieceWitness bad = *rep.witness;
  bad.length += r.size();
  EXPECT_FALSE(replay_piece(rs, bad));
}

TEST(Dehn, ProductsOfConjugatesAreTrivial) {
  std::mt19937_64 rng(8);
  RelatorSet rs = small_cancellation_set(rng, 2);
  const auto& t = rs.triple();
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<Syllable> parts;
    std::uniform_int_distribution<std::size_t> count(1, 4), which(0, rs.base().size() - 1);
    std::uniform_int_distribution<int> sgn(0, 1);
    for (std::size_t i = 0, n = count(rng); i < n; ++i) {
      Word x = random_free_word(rng, 6);
      CanonicalWord r = rs.base()[which(rng)];
      if (sgn(rng)) r = invert(r, t);
      for (const auto& s : t.split(x)) parts.push_back(s);
      parts.insert(parts.end(), r.begin(), r.end());
      for (const auto& s : t.split(inverse(x))) parts.push_back(s);
    }
    auto res = dehn_decide(parts, rs, 10);
    ASSERT_EQ(res.verdict, DehnVerdict::trivial) << res.reason;
    EXPECT_TRUE(replay_certificate(res.certificate, rs));
    for (const auto& step : res.certificate.steps) EXPECT_LT(step.length_after, step.length_before);
  }
}

TEST(Dehn, AgreesWithAbelianization) {
  std::mt19937_64 rng(9);
  RelatorSet rs = small_cancellation_set(rng, 2);
  oracle::Abelianization ab({kA, kB});
  for (const auto& r : rs.base()) ab.add_relation(flatten(r));
  int nontrivial = 0;
  for (int trial = 0; trial < 400; ++trial) {
    Word w = random_free_word(rng, 30);
    auto res = dehn_decide(canonicalize_word(w, rs.triple()), rs, 10);
    ASSERT_NE(res.verdict, DehnVerdict::inconclusive) << res.reason;
    if (!ab.trivial(w)) {
      EXPECT_EQ(res.verdict, DehnVerdict::nontrivial);
      ++nontrivial;
    }
    if (res.verdict == DehnVerdict::trivial) {
      EXPECT_TRUE(ab.trivial(w));
      EXPECT_TRUE(replay_certificate(res.certificate, rs));
    }
  }
  EXPECT_GT(nontrivial, 0);
}

TEST(Dehn, FactorsEmbed) {
  std::mt19937_64 rng(10);
  RelatorSet rs = small_cancellation_set(rng, 1);
  for (int e = 1; e < 50; ++e) {
    auto res = dehn_decide(canonicalize_word(power(letter_word(kA), static_cast<std::size_t>(e)), rs.triple()), rs);
    EXPECT_EQ(res.verdict, DehnVerdict::nontrivial);
  }
  EXPECT_THROW(dehn_decide({}, rs, 3), Error);
}

TEST(Dehn, ReplayRejectsForgedCertificate) {
  std::mt19937_64 rng(11);
  RelatorSet rs = small_cancellation_set(rng, 1);
  auto res = dehn_decide(rs.base()[0], rs);
  ASSERT_EQ(res.verdict, DehnVerdict::trivial);
  ASSERT_FALSE(res.certificate.steps.empty());
  auto forged = res.certificate;
  forged.start.push_back({Side::k, letter_word(kA)});
  EXPECT_FALSE(replay_certificate(forged, rs));
  forged = res.certificate;
  forged.steps.back().length_after += 1;
  EXPECT_FALSE(replay_certificate(forged, rs));
}

TEST(Quotient, BuildsOnlyUnderSmallCancellation) {
  std::mt19937_64 rng(12);
  auto rs = std::make_shared<RelatorSet>(small_cancellation_set(rng, 2));
  auto q = build_quotient(rs, 10);
  EXPECT_GT(q->audit.k_pairs, 0u);
  EXPECT_EQ(q->audit.inconclusive, 0u);
  EXPECT_EQ(q->is_identity(flatten(rs->base()[1])), Tri::yes);
  EXPECT_EQ(q->is_identity(letter_word(kB)), Tri::no);

  CanonicalWord r = alternating(rng, 4, 2);
  auto bad = std::make_shared<RelatorSet>(free_product(), std::vector<CanonicalWord>{r, r});
  EXPECT_THROW(build_quotient(bad, 10), Error);
}
