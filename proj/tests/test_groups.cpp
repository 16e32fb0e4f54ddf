#include <gtest/gtest.h>

#include <random>

#include "shelah/groups.hpp"
#include "support/oracles.hpp"

using namespace shelah;

namespace {

std::shared_ptr<FiniteTableGroup> s3() { return FiniteTableGroup::from_table(oracle::s3_table()); }

Word sym(int i) { return letter_word(i); }

int index_of(const FiniteTableGroup& g, const Word& w) { return g.evaluate(w); }

// Transposition (0 1) in the lexicographic listing of S3: images (1,0,2).
constexpr int kSwap01 = 2;

}  // namespace

TEST(Groups, InverseIsIdentityOnAllBackends) {
  auto g = s3();
  for (int i = 0; i < g->order(); ++i) EXPECT_EQ(g->is_identity(concat(sym(i), inverse(sym(i)))), Tri::yes);
  FreeGroup f({0, 1});
  Word w{{0, 1}, {1, -1}, {0, 1}};
  EXPECT_EQ(f.is_identity(concat(w, inverse(w))), Tri::yes);
  auto z = make_integers(0);
  EXPECT_EQ(z->is_identity(concat(sym(0), inverse(sym(0)))), Tri::yes);
}

TEST(Groups, IntegerAddition) {
  auto z = make_integers(0);
  Word three = power(sym(0), 3), five = power(sym(0), 5);
  EXPECT_EQ(exponent_sum(z->mul(three, five)), 8);
  EXPECT_EQ(z->mul(three, five), power(sym(0), 8));
}

TEST(Groups, S3AgreesWithPermutationOracle) {
  auto t = oracle::s3_table();
  auto g = s3();
  EXPECT_TRUE(g->is_associative());
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) EXPECT_EQ(index_of(*g, g->mul(sym(i), sym(j))), t[i][j]);
}

TEST(Groups, RejectsMalformedTables) {
  EXPECT_THROW(FiniteTableGroup::from_table({{0, 1}, {1, 1}}), Error);
  EXPECT_THROW(FiniteTableGroup::from_table({{0, 1}}), Error);
  EXPECT_THROW(FiniteTableGroup::from_table({}), Error);
}

TEST(Groups, ElementOwnerMismatchThrows) {
  GroupPtr a = s3(), b = s3();
  Element x{a, sym(1)}, y{b, sym(1)};
  EXPECT_THROW(mul(x, y), Error);
  EXPECT_EQ(is_identity(mul(x, inv(x))), Tri::yes);
}

TEST(Subgroups, IdentityAlwaysMember) {
  auto g = s3();
  TableSubgroup h(g, {sym(kSwap01)});
  EXPECT_EQ(in_subgroup(Word{}, h), Tri::yes);
  LetterSubgroup ls({0});
  EXPECT_EQ(in_subgroup(Word{}, ls), Tri::yes);
  TrivialSubgroup triv(g);
  EXPECT_EQ(in_subgroup(Word{}, triv), Tri::yes);
}

TEST(Subgroups, LetterSupport) {
  LetterSubgroup a({0});
  EXPECT_EQ(in_subgroup(Word{{0, 1}, {1, 1}}, a), Tri::no);
  EXPECT_EQ(in_subgroup(Word{{0, 1}, {1, 1}, {1, -1}}, a), Tri::yes);
}

TEST(Subgroups, TableMembershipMatchesClosure) {
  auto t = oracle::direct_product(oracle::cyclic_table(4), oracle::s3_table());
  auto g = FiniteTableGroup::from_table(t);
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> pick(0, g->order() - 1);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<int> gens{pick(rng), pick(rng)};
    auto ref = oracle::closure(t, gens);
    TableSubgroup h(g, {sym(gens[0]), sym(gens[1])});
    for (int x = 0; x < g->order(); ++x) EXPECT_EQ(in_subgroup(sym(x), h), from_bool(ref.count(x) != 0));
  }
}

TEST(GoodFellows, NeverWithItself) {
  auto g = s3();
  TableSubgroup h(g, {sym(kSwap01)});
  for (int x = 0; x < 6; ++x) EXPECT_EQ(good_fellows(*g, sym(x), sym(x), h), Tri::no);
  FreeGroup f({0, 1, 2});
  LetterSubgroup ls({2});
  EXPECT_EQ(good_fellows(f, Word{{0, 1}, {1, 1}}, Word{{0, 1}, {1, 1}}, ls), Tri::no);
}

TEST(GoodFellows, DistinctLettersOverTrivial) {
  FreeGroup f({0, 1});
  LetterSubgroup none({});
  EXPECT_EQ(good_fellows(f, sym(0), sym(1), none), Tri::yes);
  EXPECT_EQ(good_fellows(f, sym(0), inverse(sym(0)), none), Tri::no);
}

TEST(GoodFellows, FreeDoubleCosetsExact) {
  FreeGroup f({0, 1, 2});
  LetterSubgroup h({2});
  Word b{{1, 1}};
  Word twisted{{2, 1}, {1, 1}, {2, -1}, {2, -1}};
  EXPECT_EQ(good_fellows(f, twisted, b, h), Tri::no);
  EXPECT_EQ(good_fellows(f, Word{{2, 1}, {1, -1}}, b, h), Tri::no);
  EXPECT_EQ(good_fellows(f, Word{{1, 1}, {2, 1}, {1, 1}}, b, h), Tri::yes);
  auto sol = f.solve_double_coset(h, b, twisted, {});
  ASSERT_EQ(sol.status, Tri::yes);
  EXPECT_EQ(free_reduce(concat(inverse(sol.left), b, sol.right)), free_reduce(twisted));
}

TEST(GoodFellows, AgreesWithDoubleCosetEnumeration) {
  auto t = oracle::semidirect(13, 3, 3);
  auto g = FiniteTableGroup::from_table(t);
  // Complement Z3 = {(0, y)} = indices 0, 13, 26.
  std::vector<int> hidx{0, 13, 26};
  TableSubgroup h(g, {sym(13)});
  std::set<int> hs(hidx.begin(), hidx.end());
  for (int x = 0; x < 39; ++x)
    for (int y = 0; y < 39; ++y) {
      auto plus = oracle::double_coset(t, hs, y);
      auto minus = oracle::double_coset(t, hs, oracle::inverse_of(t, y));
      bool expected = !plus.count(x) && !minus.count(x);
      ASSERT_EQ(good_fellows(*g, sym(x), sym(y), h), from_bool(expected)) << x << "," << y;
    }
}

TEST(GoodFellows, SymmetricAndInversionInvariant) {
  auto t = oracle::direct_product(oracle::cyclic_table(2), oracle::s3_table());
  auto g = FiniteTableGroup::from_table(t);
  TableSubgroup h(g, {sym(kSwap01)});
  for (int x = 0; x < g->order(); ++x)
    for (int y = 0; y < g->order(); ++y) {
      Tri a = good_fellows(*g, sym(x), sym(y), h);
      EXPECT_EQ(a, good_fellows(*g, sym(y), sym(x), h));
      EXPECT_EQ(a, good_fellows(*g, sym(x), g->inv(sym(y)), h));
    }
}

TEST(GoodFellows, LargerSubgroupImpliesSmaller) {
  auto t = oracle::direct_product(oracle::cyclic_table(4), oracle::s3_table());
  auto g = FiniteTableGroup::from_table(t);
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> pick(0, g->order() - 1);
  for (int trial = 0; trial < 20; ++trial) {
    int a = pick(rng), b = pick(rng);
    TableSubgroup small(g, {sym(a)});
    TableSubgroup big(g, {sym(a), sym(b)});
    for (int x = 0; x < g->order(); ++x)
      for (int y = 0; y < g->order(); ++y)
        if (good_fellows(*g, sym(x), sym(y), big) == Tri::yes)
          EXPECT_EQ(good_fellows(*g, sym(x), sym(y), small), Tri::yes);
  }
}

TEST(Malnormal, TrivialSubgroupVacuous) {
  auto g = s3();
  TrivialSubgroup triv(g);
  EXPECT_EQ(is_malnormal(triv, *g), Tri::yes);
}

TEST(Malnormal, TranspositionInS3) {
  auto g = s3();
  TableSubgroup h(g, {sym(kSwap01)});
  EXPECT_EQ(is_malnormal(h, *g), Tri::yes);
}

TEST(Malnormal, DiagonalInAbelianIsNot) {
  auto t = oracle::direct_product(oracle::cyclic_table(5), oracle::cyclic_table(5));
  auto g = FiniteTableGroup::from_table(t);
  TableSubgroup diag(g, {sym(1 * 5 + 1)});
  EXPECT_EQ(is_malnormal(diag, *g), Tri::no);
}

TEST(Malnormal, FrobeniusComplement) {
  auto g = FiniteTableGroup::from_table(oracle::semidirect(13, 3, 3));
  TableSubgroup h(g, {sym(13)});
  EXPECT_EQ(is_malnormal(h, *g), Tri::yes);
  TableSubgroup kernel(g, {sym(1)});
  EXPECT_EQ(is_malnormal(kernel, *g), Tri::no);
}

TEST(Malnormal, TransitiveOnFiniteTables) {
  // Subgroup chains inside small tables: whenever both links are malnormal,
  // so is the composite.
  for (const auto& t : {oracle::s3_table(), oracle::semidirect(7, 3, 2),
                        oracle::direct_product(oracle::cyclic_table(2), oracle::s3_table())}) {
    auto g = FiniteTableGroup::from_table(t);
    const int n = g->order();
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        auto kset = oracle::closure(t, {a, b});
        auto hset = oracle::closure(t, {a});
        std::vector<std::vector<int>> sub(kset.size(), std::vector<int>(kset.size()));
        std::vector<int> kl(kset.begin(), kset.end());
        auto pos = [&](int x) { return static_cast<int>(std::find(kl.begin(), kl.end(), x) - kl.begin()); };
        for (std::size_t i = 0; i < kl.size(); ++i)
          for (std::size_t j = 0; j < kl.size(); ++j) sub[i][j] = pos(t[kl[i]][kl[j]]);
        auto kg = FiniteTableGroup::from_table(sub);
        TableSubgroup h_in_k(kg, {sym(pos(a))});
        TableSubgroup h_in_g(g, {sym(a)});
        TableSubgroup k_in_g(g, {sym(a), sym(b)});
        if (is_malnormal(h_in_k, *kg) == Tri::yes && is_malnormal(k_in_g, *g) == Tri::yes)
          EXPECT_EQ(is_malnormal(h_in_g, *g), Tri::yes);
      }
  }
}

TEST(Malnormal, FreeFactor) {
  FreeGroup f({0, 1});
  EXPECT_EQ(is_malnormal(LetterSubgroup({0}), f), Tri::yes);
}

TEST(Registry, IdempotentAndConsecutive) {
  ElementRegistry reg;
  GroupPtr f = std::make_shared<FreeGroup>(std::vector<Symbol>{0, 1});
  EXPECT_EQ(reg.register_element({f, sym(0)}), 0u);
  EXPECT_EQ(reg.register_element({f, sym(0)}), 0u);
  EXPECT_EQ(reg.register_element({f, Word{{1, 1}, {0, 1}, {0, -1}}}), 1u);
  EXPECT_EQ(reg.register_element({f, sym(1)}), 1u);
  EXPECT_THROW(reg.decode(2), Error);
}

TEST(Registry, DecodeIsBijection) {
  ElementRegistry reg;
  auto g = FiniteTableGroup::from_table(oracle::semidirect(13, 3, 3));
  GroupPtr gp = g;
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> pick(0, 38);
  std::set<int> distinct;
  for (int i = 0; i < 200; ++i) {
    Word w{{pick(rng), 1}, {pick(rng), -1}};
    distinct.insert(g->evaluate(w));
    std::size_t code = reg.register_element({gp, w});
    EXPECT_EQ(g->evaluate(reg.decode(code).word), g->evaluate(w));
  }
  EXPECT_EQ(reg.size(), distinct.size());
  std::set<int> seen;
  for (std::size_t c = 0; c < reg.size(); ++c) {
    EXPECT_EQ(reg.register_element(reg.decode(c)), c);
    seen.insert(g->evaluate(reg.decode(c).word));
  }
  EXPECT_EQ(seen, distinct);
}
