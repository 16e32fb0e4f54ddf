#pragma once

// JSON loaders for amalgams, systems and words, shared by the CLI and the
// acceptance suite.

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "shelah/amalgam.hpp"
#include "shelah/core.hpp"
#include "shelah/hesse.hpp"
#include "shelah/words.hpp"

namespace shelah {

using Table = std::vector<std::vector<int>>;

inline Table cyclic_table(int n) {
  if (n < 1) throw Error("cyclic table: order must be positive");
  Table t(n, std::vector<int>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) t[i][j] = (i + j) % n;
  return t;
}

/// Z_p ⋊ Z_q where the generator of Z_q acts by x -> r x; element y*p + x.
inline Table semidirect_table(int p, int q, int r) {
  if (p < 1 || q < 1) throw Error("semidirect table: orders must be positive");
  std::vector<int> rpow(q);
  rpow[0] = 1;
  for (int i = 1; i < q; ++i) rpow[i] = rpow[i - 1] * r % p;
  if (rpow[q - 1] * r % p != 1 % p) throw Error("semidirect table: r^q != 1 mod p");
  Table t(p * q, std::vector<int>(p * q));
  for (int a = 0; a < p * q; ++a)
    for (int b = 0; b < p * q; ++b) {
      int x1 = a % p, y1 = a / p, x2 = b % p, y2 = b / p;
      t[a][b] = ((y1 + y2) % q) * p + (x1 + rpow[y1] * x2) % p;
    }
  return t;
}

/// Symmetric group on n points, permutations in lexicographic order,
/// product = composition applying the right factor first.
inline Table symmetric_table(int n) {
  if (n < 1 || n > 5) throw Error("symmetric table: degree must be in 1..5");
  std::vector<std::vector<int>> perms;
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  do perms.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));
  const int m = static_cast<int>(perms.size());
  Table t(m, std::vector<int>(m));
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      std::vector<int> c(n);
      for (int i = 0; i < n; ++i) c[i] = perms[a][perms[b][i]];
      t[a][b] = static_cast<int>(std::find(perms.begin(), perms.end(), c) - perms.begin());
    }
  return t;
}

/// {"cyclic": n} | {"semidirect": [p, q, r]} | {"symmetric": n} | {"table": [[...]]}
inline Table table_from_json(const nlohmann::json& j) {
  if (j.contains("cyclic")) return cyclic_table(j.at("cyclic").get<int>());
  if (j.contains("semidirect")) {
    auto v = j.at("semidirect").get<std::vector<int>>();
    if (v.size() != 3) throw Error("semidirect table needs [p, q, r]");
    return semidirect_table(v[0], v[1], v[2]);
  }
  if (j.contains("symmetric")) return symmetric_table(j.at("symmetric").get<int>());
  if (j.contains("table")) return j.at("table").get<Table>();
  throw Error("table: expected one of cyclic, semidirect, symmetric, table");
}

/// Words are arrays of [symbol, sign] pairs.
inline nlohmann::json word_to_json(const Word& w) {
  nlohmann::json out = nlohmann::json::array();
  for (Letter l : w) out.push_back({l.symbol, l.sign});
  return out;
}

inline Word word_from_json(const nlohmann::json& j) {
  if (j.is_string()) return parse_word(j.get<std::string>());
  Word w;
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2) throw Error("word: expected [symbol, sign] pairs");
    const int sign = p[1].get<int>();
    if (sign != 1 && sign != -1) throw Error("word: sign must be 1 or -1");
    w.push_back({p[0].get<Symbol>(), sign});
  }
  return w;
}

/// An amalgam as loaded from JSON, with the source tables kept for oracles.
struct AmalgamSpec {
  std::string kind;  // "finite" or "free"
  Table k_table, l_table;
  std::vector<int> h_in_k, h_in_l;
  TriplePtr triple;

  const FiniteTableGroup& k_group() const { return dynamic_cast<const FiniteTableGroup&>(*triple->k); }
  const FiniteTableGroup& l_group() const { return dynamic_cast<const FiniteTableGroup&>(*triple->l); }
};

/// {"kind": "finite", "k": table, "l": table, "h_in_k": [...], "h_in_l": [...]}
/// {"kind": "free", "k": [symbols], "l": [symbols], "h": [symbols]}
inline AmalgamSpec amalgam_from_json(const nlohmann::json& j) {
  AmalgamSpec a;
  a.kind = j.value("kind", "finite");
  if (a.kind == "finite") {
    a.k_table = table_from_json(j.at("k"));
    a.l_table = table_from_json(j.at("l"));
    a.h_in_k = j.at("h_in_k").get<std::vector<int>>();
    a.h_in_l = j.at("h_in_l").get<std::vector<int>>();
    a.triple = make_finite_amalgam(a.k_table, a.h_in_k, a.l_table, a.h_in_l);
  } else if (a.kind == "free") {
    auto h = j.at("h").get<std::vector<Symbol>>();
    a.triple = make_free_amalgam(j.at("k").get<std::vector<Symbol>>(), j.at("l").get<std::vector<Symbol>>(),
                                 std::set<Symbol>(h.begin(), h.end()));
  } else {
    throw Error("amalgam: unknown kind '" + a.kind + "'");
  }
  return a;
}

/// {"entries": [{"h", "a", "b", "bprime"}]}: table indices for finite
/// amalgams (h and a in K, b and bprime in L), words otherwise.
inline std::vector<SystemEntry> system_from_json(const nlohmann::json& j, const AmalgamSpec& a) {
  std::vector<SystemEntry> out;
  std::size_t n = 0;
  for (const auto& e : j.at("entries")) {
    SystemEntry s;
    s.index = e.value("index", std::to_string(n++));
    auto elem = [&](const char* key, Side side) -> Word {
      const auto& v = e.at(key);
      if (v.is_number_integer()) {
        if (a.kind != "finite") throw Error("system: table index given for a non-finite amalgam");
        const auto& g = side == Side::k ? a.k_group() : a.l_group();
        return g.element(v.get<int>());
      }
      return word_from_json(v);
    };
    s.h = elem("h", Side::k);
    s.a = elem("a", Side::k);
    s.b = elem("b", Side::l);
    s.bprime = elem("bprime", Side::l);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace shelah
