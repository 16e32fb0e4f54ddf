#pragma once

// Subcommand implementations. Each takes the parsed config and returns a
// report; the caller decides the exit status.

#include <fstream>
#include <random>
#include <string>

#include <json.hpp>

#include "shelah/amalgam.hpp"
#include "shelah/colorings.hpp"
#include "shelah/engine.hpp"
#include "shelah/hesse.hpp"
#include "shelah/io.hpp"
#include "shelah/report.hpp"
#include "shelah/smallcancel.hpp"

namespace shelah::cli {

struct Options {
  std::uint64_t seed = 0;
  std::optional<std::size_t> budget_len, budget_pow;
};

inline Budget budget_for(const nlohmann::json& cfg, const Options& o) {
  Budget b = budget_from_json(cfg.value("budgets", nlohmann::json::object()));
  if (o.budget_len) b.torsion_len = *o.budget_len;
  if (o.budget_pow) b.torsion_pow = *o.budget_pow;
  if (b.torsion_len == 0 || b.torsion_pow == 0 || b.samples == 0 || b.dehn_steps == 0)
    throw Error("config: budgets must be positive");
  return b;
}

inline CheckResult check(std::string id, Status s, std::string detail, const Budget& b) {
  CheckResult c;
  c.id = std::move(id);
  c.status = s;
  c.detail = std::move(detail);
  c.budget = budget_json(b);
  return c;
}

inline Status status_of(Verdict v) {
  return v == Verdict::pass ? Status::pass : v == Verdict::fail ? Status::fail : Status::inconclusive;
}

inline nlohmann::json witness_json(const PieceWitness& w) {
  return {{"z_cyclic", w.z_cyclic}, {"y_cyclic", w.y_cyclic}, {"z_offset", w.z_offset},
          {"y_offset", w.y_offset}, {"length", w.length},     {"c_start", word_to_json(w.c_start)},
          {"c_end", word_to_json(w.c_end)}};
}

inline PieceWitness witness_from_json(const nlohmann::json& j) {
  PieceWitness w;
  w.z_cyclic = j.at("z_cyclic");
  w.y_cyclic = j.at("y_cyclic");
  w.z_offset = j.at("z_offset");
  w.y_offset = j.at("y_offset");
  w.length = j.at("length");
  w.c_start = word_from_json(j.at("c_start"));
  w.c_end = word_from_json(j.at("c_end"));
  return w;
}

/// Relators h^{-1} rho(b a, b' a) for a system, without the C' gate.
inline std::shared_ptr<const RelatorSet> relators_of(const std::vector<SystemEntry>& s, TriplePtr t) {
  std::vector<CanonicalWord> rels;
  std::vector<std::string> origin;
  for (const auto& e : s) {
    rels.push_back(canonicalize(relator_syllables(e), *t));
    origin.push_back(e.index);
  }
  return std::make_shared<const RelatorSet>(t, std::move(rels), std::move(origin));
}

// ---------------------------------------------------------------------------

inline Report check_amalgam(const nlohmann::json& cfg, const Options& o) {
  Report r;
  const Budget b = budget_for(cfg, o);
  AmalgamSpec a = amalgam_from_json(cfg.at("amalgam"));
  const AmalgamTriple& t = *a.triple;
  if (a.kind == "finite") {
    r.add(check("k-table-associative", a.k_group().is_associative() ? Status::pass : Status::fail, "", b));
    r.add(check("l-table-associative", a.l_group().is_associative() ? Status::pass : Status::fail, "", b));
  }
  CheckResult mal = check("h-malnormal-in-l", Status::pass, "informational", b);
  mal.data["malnormal"] = to_string(is_malnormal(*t.h_in_l, *t.l, b));
  r.add(mal);
  // Equality via canonical forms against the identity test of u v^{-1}.
  std::mt19937_64 rng(o.seed);
  auto ks = t.k->sample_elements(24), ls = t.l->sample_elements(24);
  auto random_product = [&]() {
    std::uniform_int_distribution<std::size_t> len(1, 5);
    Word w;
    Side side = rng() % 2 ? Side::k : Side::l;
    for (std::size_t i = len(rng); i > 0; --i, side = other(side)) {
      const auto& pool = side == Side::k ? ks : ls;
      const Word& x = pool[rng() % pool.size()];
      w.insert(w.end(), x.begin(), x.end());
    }
    return w;
  };
  const std::size_t n = cfg.value("samples", std::size_t{200});
  std::size_t disagree = 0, undecided = 0;
  nlohmann::json first = nullptr;
  for (std::size_t i = 0; i < n; ++i) {
    Word u = random_product(), v = i % 3 == 0 ? u : random_product();
    if (i % 3 == 1) v = flatten(canonicalize_word(u, t));  // same element, different spelling
    try {
      Tri eq = canonical_equal(canonicalize_word(u, t), canonicalize_word(v, t), t);
      const bool one = canonicalize_word(concat(u, inverse(v)), t).empty();
      if (eq == Tri::inconclusive) {
        ++undecided;
      } else if ((eq == Tri::yes) != one) {
        ++disagree;
        if (first.is_null()) first = {{"u", word_to_json(u)}, {"v", word_to_json(v)}};
      }
    } catch (const Inconclusive&) {
      ++undecided;
    }
  }
  CheckResult c = check("canonical-equality", disagree ? Status::fail : undecided ? Status::inconclusive : Status::pass,
                        std::to_string(n) + " sampled pairs", b);
  c.data = {{"pairs", n}, {"disagreements", disagree}, {"undecided", undecided}};
  if (!first.is_null()) c.replay = first;
  r.add(c);
  return r;
}

inline Report check_smallcancel(const nlohmann::json& cfg, const Options& o) {
  Report r;
  const Budget b = budget_for(cfg, o);
  AmalgamSpec a = amalgam_from_json(cfg.at("amalgam"));
  auto sys = system_from_json(cfg.at("system"), a);
  auto rs = relators_of(sys, a.triple);
  CheckResult len = check("relator-lengths", Status::pass, "", b);
  for (const auto& w : rs->base()) {
    len.data["lengths"].push_back(w.size());
    if (w.size() != 6640 && w.size() != 6641) len.status = Status::fail;
  }
  r.add(len);
  auto chi = cfg.value("chi", std::vector<long long>{1, 10});
  CPrimeReport rep = check_cprime(*rs, Ratio{chi.at(0), chi.at(1)}, b);
  CheckResult c = check("cprime", status_of(rep.verdict), rep.note, b);
  c.data = {{"chi", chi}, {"pairs", rep.pairs}, {"max_upper", rep.max_upper}, {"max_lower", rep.max_lower}};
  if (rep.witness) {
    c.replay = witness_json(*rep.witness);
    c.data["witness_replays"] = replay_piece(*rs, *rep.witness);
  }
  r.add(c);
  if (cfg.value("torsion", false) && rep.verdict == Verdict::pass) {
    auto q = build_quotient(rs, static_cast<unsigned>(chi.at(1)), b);
    ConclusionCheck tc = torsion_scan(*q, b, cfg.value("torsion_alphabet", std::size_t{3}));
    CheckResult t = check("torsion", status_of(tc.status), tc.detail, b);
    t.data = {{"instances", tc.instances}, {"inconclusive", tc.inconclusive}};
    t.replay = {{"instances", tc.replay}};
    r.add(t);
  }
  return r;
}

inline Report solve_word(const nlohmann::json& cfg, const Options& o) {
  Report r;
  const Budget b = budget_for(cfg, o);
  AmalgamSpec a = amalgam_from_json(cfg.at("amalgam"));
  auto sys = system_from_json(cfg.at("system"), a);
  auto rs = relators_of(sys, a.triple);
  const unsigned k = cfg.value("k", 10u);
  std::shared_ptr<AmalgamQuotient> q;
  try {
    q = build_quotient(rs, k, b);
  } catch (const Error& e) {
    r.add(check("quotient", Status::fail, e.what(), b));
    return r;
  }
  std::vector<Word> words;
  if (cfg.contains("word")) words.push_back(word_from_json(cfg.at("word")));
  for (const auto& w : cfg.value("words", nlohmann::json::array())) words.push_back(word_from_json(w));
  // Relators themselves may be named by index.
  for (std::size_t i : cfg.value("relators", std::vector<std::size_t>{})) words.push_back(flatten(rs->base().at(i)));
  for (std::size_t i = 0; i < words.size(); ++i) {
    DehnResult d = q->decide(words[i]);
    Status s = Status::inconclusive;
    bool replays = false;
    if (d.verdict == DehnVerdict::trivial) {
      replays = replay_certificate(d.certificate, *rs);
      s = replays ? Status::pass : Status::fail;
    } else if (d.verdict == DehnVerdict::nontrivial) {
      s = Status::pass;
    }
    CheckResult c = check("word-" + std::to_string(i), s, d.reason, b);
    c.data = {{"verdict", to_string(d.verdict)}, {"certificate_replays", replays},
              {"steps", d.certificate.steps.size()}, {"letters", words[i].size()}};
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& st : d.certificate.steps)
      steps.push_back({{"length_before", st.length_before}, {"length_after", st.length_after}});
    c.replay = {{"word", word_to_json(words[i])}, {"steps", steps}};
    r.add(c);
  }
  return r;
}

inline Report validate(const nlohmann::json& cfg, const Options& o) {
  Report r;
  const Budget b = budget_for(cfg, o);
  AmalgamSpec a = amalgam_from_json(cfg.at("amalgam"));
  auto sys = system_from_json(cfg.at("system"), a);
  SystemValidation v = validate_system(sys, *a.triple, {}, b);
  CheckResult c = check("system", status_of(v.verdict), v.witness, b);
  c.data["malnormal"] = to_string(v.malnormal);
  for (Tri t : v.entry_status) c.data["entries"].push_back(to_string(t));
  for (const auto& p : v.pairs)
    c.data["pairs"].push_back({{"i", p.i}, {"j", p.j}, {"case", to_string(p.tag)}, {"status", to_string(p.status)}});
  r.add(c);
  return r;
}

inline void add_audits(Report& r, const Engine& e, const Budget& b) {
  std::map<std::string, AuditEntry> agg;
  for (const auto& a : e.audits()) {
    auto& t = agg.try_emplace(a.id, AuditEntry{a.id, 0, 0, 0, 0, {}}).first->second;
    t.instances += a.instances;
    t.failures += a.failures;
    t.inconclusive += a.inconclusive;
    for (const auto& d : a.detail)
      if (t.detail.size() < 8) t.detail.push_back("stage " + std::to_string(a.stage) + ": " + d);
  }
  for (const auto& [id, a] : agg) {
    Status s = a.failures ? Status::fail : a.inconclusive ? Status::inconclusive : Status::pass;
    CheckResult c = check("audit-" + id, s, "", b);
    c.data = {{"instances", a.instances}, {"failures", a.failures}, {"inconclusive", a.inconclusive}};
    c.replay = {{"detail", a.detail}};
    r.add(c);
  }
}

inline EngineConfig engine_config(const nlohmann::json& cfg, const Options& o) {
  EngineConfig c = EngineConfig::from_json(cfg);
  c.budget = budget_for(cfg, o);
  return c;
}

inline Report build_stage(const nlohmann::json& cfg, const Options& o) {
  Report r;
  EngineConfig ec = engine_config(cfg, o);
  Engine e(ec, false);
  const std::size_t target = cfg.value("stage", ec.total() - 1);
  if (target >= ec.total()) throw Error("build-stage: stage " + std::to_string(target) + " out of range");
  while (e.built() <= target) e.advance_stage();
  add_audits(r, e, ec.budget);
  const StageRecord& st = e.stage(static_cast<Symbol>(target));
  CheckResult c = check("stage", Status::pass, "", ec.budget);
  c.data = {{"symbol", st.symbol}, {"values", st.values}, {"layers", st.layers.size()}, {"free", st.free}};
  for (const auto& l : st.layers) c.data["j_sizes"].push_back(l.j_entries.size());
  r.add(c);
  return r;
}

inline Report run_construction(const nlohmann::json& cfg, const Options& o) {
  Report r;
  EngineConfig ec = engine_config(cfg, o);
  Engine e(ec, false);
  e.run();
  add_audits(r, e, ec.budget);
  CheckResult p = check("presentation", Status::pass, "", ec.budget);
  p.data = e.presentation_json();
  auto inv = e.abelian_invariants();
  p.data["abelianization"] = {{"rank", inv.rank}, {"torsion", inv.torsion}};
  r.add(p);
  if (cfg.contains("witness")) {
    const auto& w = cfg.at("witness");
    WitnessCheck wc = e.witness_check(word_from_json(w.at("g")), word_from_json(w.at("za")),
                                      word_from_json(w.at("zb")), word_from_json(w.at("h")));
    Status s = wc.verdict == DehnVerdict::trivial ? (wc.certificate_replays ? Status::pass : Status::fail)
               : wc.verdict == DehnVerdict::nontrivial ? Status::fail
                                                       : Status::inconclusive;
    CheckResult c = check("witness", s, wc.reason, ec.budget);
    c.data = {{"verdict", to_string(wc.verdict)}, {"letters", wc.letters},
              {"certificate_replays", wc.certificate_replays}, {"steps", wc.certificate.steps.size()}};
    c.replay = w;
    r.add(c);
  }
  return r;
}

inline Report topology(const nlohmann::json& cfg, const Options& o) {
  Report r;
  EngineConfig ec = engine_config(cfg, o);
  Engine e(ec, false);
  e.run();
  TopologyReport t = e.topology_chain(cfg.value("k_max", std::size_t{2}));
  CheckResult n = check("nested", t.nested ? Status::pass : Status::fail, "", ec.budget);
  for (const auto& f : t.families) n.data["families"].push_back({{"k", f.k}, {"members", f.members}});
  n.data["n0"] = t.n0;
  r.add(n);
  CheckResult c = check("r1-cprime", status_of(t.r1_cprime), t.note, ec.budget);
  c.data = {{"piece_bound", t.r1_piece_bound}, {"min_length", t.r1_min_length}, {"rho_lengths", t.rho_lengths}};
  r.add(c);
  for (std::size_t k = 0; k < t.rho_outside_n0.size(); ++k) {
    CheckResult x = check("rho" + std::to_string(k + 1) + "-outside-n0", status_of(t.rho_outside_n0[k]), "", ec.budget);
    x.data = {{"common_syllables", t.rho_common_with_n0[k]}};
    r.add(x);
  }
  return r;
}

/// {"ordinals": [..] | "grid": {"a", "b"}, "coloring": {...}, "targets": [...]}
inline Report scan_colorings(const nlohmann::json& cfg, const Options& o) {
  Report r;
  const Budget b = budget_for(cfg, o);
  std::vector<Ordinal> universe;
  if (cfg.contains("grid")) {
    const auto g = cfg.at("grid");
    for (std::uint64_t x = 0; x < g.at("a").get<std::uint64_t>(); ++x)
      for (std::uint64_t y = 0; y < g.at("b").get<std::uint64_t>(); ++y)
        universe.push_back(omega_affine(x, y));
  }
  for (const auto& s : cfg.value("ordinals", nlohmann::json::array())) universe.push_back(parse_ordinal(s));
  std::sort(universe.begin(), universe.end());
  universe.erase(std::unique(universe.begin(), universe.end()), universe.end());
  ColoringPtr table;
  const auto col = cfg.value("coloring", nlohmann::json{{"source", "walks"}});
  if (col.value("source", "walks") == "walks")
    table = std::make_shared<WalksColoring>();
  else
    table = std::make_shared<SparseColoring>(SparseColoring::from_json(col.at("table")));
  auto v = check_subadditive(universe, *table);
  CheckResult c = check("subadditive", v ? Status::fail : Status::pass, "", b);
  c.data = {{"ordinals", universe.size()}};
  if (v)
    c.replay = {{"alpha", to_string(universe[v->alpha])}, {"beta", to_string(universe[v->beta])},
                {"gamma", to_string(universe[v->gamma])}, {"inequality", v->inequality}};
  r.add(c);
  std::size_t largest = 0;
  for (const auto& g : universe)
    for (std::uint64_t i = 0; i < 4; ++i) largest = std::max(largest, d_set(g, i, DMode::weak, universe, *table).size());
  CheckResult d = check("d-sets-finite", Status::pass, "", b);
  d.data = {{"largest", largest}};
  r.add(d);
  std::vector<HittingTarget> targets;
  for (const auto& t : cfg.value("targets", nlohmann::json::array()))
    targets.push_back({t.at(0).get<std::uint64_t>(), t.at(1).get<std::uint64_t>(), t.at(2).get<std::uint64_t>()});
  HittingReport h = hitting_scan(universe, universe, targets, *table);
  CheckResult hc = check("hitting", Status::pass, "coverage only", b);
  hc.data = {{"targets", h.targets_total}, {"hit", h.targets_hit}};
  r.add(hc);
  return r;
}

inline Report execute(const std::string& command, const nlohmann::json& cfg, const Options& o);

/// Re-runs the command recorded in a report and confirms every check
/// reproduces; C' witnesses are replayed directly.
inline Report verify(const nlohmann::json& cfg, const Options& o) {
  Report original = report_from_json(cfg);
  if (original.command == "verify") throw Error("verify: cannot verify a verification report");
  Options again = o;
  again.seed = original.seed;
  Report rerun = execute(original.command, original.input, again);
  Report r;
  Budget b = budget_for(original.input, again);
  for (const auto& c : original.checks) {
    const CheckResult* d = rerun.find(c.id);
    const bool same = d && d->status == c.status && d->data == c.data;
    CheckResult x = check("replay-" + c.id, same ? Status::pass : Status::fail,
                          d ? std::string("recorded ") + to_string(c.status) + ", replayed " + to_string(d->status)
                            : "check missing on replay",
                          b);
    if (c.id == "cprime" && c.replay.contains("z_cyclic")) {
      AmalgamSpec a = amalgam_from_json(original.input.at("amalgam"));
      auto rs = relators_of(system_from_json(original.input.at("system"), a), a.triple);
      const bool ok = replay_piece(*rs, witness_from_json(c.replay));
      x.data["witness_replays"] = ok;
      if (!ok) x.status = Status::fail;
    }
    r.add(x);
  }
  return r;
}

inline Report execute(const std::string& command, const nlohmann::json& cfg, const Options& o) {
  Report r;
  if (command == "check-amalgam") r = check_amalgam(cfg, o);
  else if (command == "check-smallcancel") r = check_smallcancel(cfg, o);
  else if (command == "solve-word") r = solve_word(cfg, o);
  else if (command == "validate-system") r = validate(cfg, o);
  else if (command == "build-stage") r = build_stage(cfg, o);
  else if (command == "run-construction") r = run_construction(cfg, o);
  else if (command == "scan-colorings") r = scan_colorings(cfg, o);
  else if (command == "topology-chain") r = topology(cfg, o);
  else if (command == "verify") r = verify(cfg, o);
  else throw Error("unknown command '" + command + "'");
  r.command = command;
  r.seed = o.seed;
  r.input = cfg;
  return r;
}

}  // namespace shelah::cli
