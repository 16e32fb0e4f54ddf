#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

int exit_code(const shelah::Report& r, bool escalate) {
  if (r.any(shelah::Status::fail)) return 1;
  if (escalate && r.any(shelah::Status::inconclusive)) return 1;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Amalgam, small-cancellation and stage-construction checks"};
  app.require_subcommand(1);
  std::string config_path, out_path;
  std::uint64_t seed = 0;
  std::size_t budget_len = 0, budget_pow = 0;
  bool escalate = false;
  app.add_option("--config", config_path, "JSON config (for verify: a report)")->required()->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "seed for all sampling");
  app.add_option("--budget-len", budget_len, "torsion scan: maximum canonical length")->check(CLI::PositiveNumber);
  app.add_option("--budget-pow", budget_pow, "torsion scan: maximum exponent")->check(CLI::PositiveNumber);
  app.add_flag("--escalate-inconclusive", escalate, "treat inconclusive checks as failures");
  app.add_option("--out", out_path, "write the JSON report here instead of stdout");
  for (const char* name : {"check-amalgam", "check-smallcancel", "solve-word", "validate-system", "build-stage",
                           "run-construction", "scan-colorings", "topology-chain", "verify"})
    app.add_subcommand(name, "")->fallthrough();
  CLI11_PARSE(app, argc, argv);

  try {
    std::ifstream in(config_path);
    nlohmann::json cfg = nlohmann::json::parse(in);
    shelah::cli::Options o;
    o.seed = seed;
    if (budget_len) o.budget_len = budget_len;
    if (budget_pow) o.budget_pow = budget_pow;
    shelah::Report r = shelah::cli::execute(app.get_subcommands().front()->get_name(), cfg, o);
    const std::string text = shelah::to_json(r).dump(2) + "\n";
    if (out_path.empty()) {
      std::cout << text;
    } else {
      std::ofstream out(out_path);
      if (!out) throw shelah::Error("cannot write " + out_path);
      out << text;
    }
    const auto s = shelah::to_json(r).at("summary");
    std::cerr << r.command << ": " << s.at("pass") << " pass, " << s.at("fail") << " fail, " << s.at("inconclusive")
              << " inconclusive\n";
    return exit_code(r, escalate);
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
