// kdvlab command line: one subcommand per experiment kind, plus verify.
#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include "kdvlab/experiment.hpp"
#include "kdvlab/verify.hpp"

using namespace kdvlab;

namespace {

int emit_errors(int status, const std::vector<std::string>& errors) {
  std::cerr << Json{{"status", status}, {"errors", errors}}.dump(2) << "\n";
  return status;
}

std::string default_out(const std::string& name) {
  const char* root = std::getenv("KDVLAB_OUT");
  return (std::filesystem::path(root && *root ? root : "kdvlab_out") / name).string();
}

int run(const std::string& kind, const std::string& config_path, std::optional<std::uint64_t> seed, std::string out) {
  Json j;
  try {
    j = Json::parse(read_text(config_path));
  } catch (const std::exception& e) {
    return emit_errors(2, {std::string("cannot read config: ") + e.what()});
  }
  if (!j.is_object()) return emit_errors(2, {"config: must be an object"});
  if (!j.contains("experiment")) j["experiment"] = kind;
  if (j["experiment"] != kind)
    return emit_errors(2, {"experiment: config declares '" + j["experiment"].dump() + "' but the subcommand is '" + kind + "'"});
  if (seed) j["seed"] = *seed;
  ExperimentConfig c;
  try {
    c = parse_config(j);
  } catch (const ValidationError& e) {
    return emit_errors(2, e.errors());
  }
  if (out.empty()) out = c.output.empty() ? default_out(kind) : c.output;
  const auto r = run_experiment(c, out);
  for (const auto& ch : r.checks) std::cout << (ch.passed ? "PASS " : "FAIL ") << ch.name << ": " << ch.detail << "\n";
  for (const auto& a : r.artifacts) std::cout << "wrote " << (std::filesystem::path(out) / a).string() << "\n";
  if (!r.errors.empty()) return emit_errors(r.status, r.errors);
  return r.status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical experiments on the periodic KdV equation in spectral and action coordinates"};
  app.require_subcommand(1);

  std::string config, out, level = "fast";
  std::optional<std::uint64_t> seed;
  const char* kinds[] = {"spectrum", "actions", "evolve", "perturb", "ensemble", "resonance", "scaling", "measure"};
  for (const char* k : kinds) {
    auto* sub = app.add_subcommand(k, std::string("run the '") + k + "' experiment");
    sub->add_option("--config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the master seed");
    sub->add_option("--out", out, "output directory (default: $KDVLAB_OUT/<kind>)");
  }
  std::vector<int> only;
  auto* ver = app.add_subcommand("verify", "run the acceptance battery");
  ver->add_option("--level", level, "fast or full")->check(CLI::IsMember({"fast", "full"}));
  ver->add_option("--out", out, "directory for verify.json");
  ver->add_option("--only", only, "criterion ids to run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (ver->parsed()) {
    const auto lvl = verify_level_from_string(level);
    VerifyReport rep;
    rep.level = lvl;
    auto show = [](const CriterionResult& r) { std::cout << format_line(r) << std::endl; };
    if (only.empty()) {
      rep = verify_suite(lvl, show);
    } else {
      for (int id : only) {
        try {
          rep.criteria.push_back(run_criterion(id, lvl));
        } catch (const InvalidArgument& e) {
          return emit_errors(2, {e.what()});
        }
        show(rep.criteria.back());
      }
    }
    if (!out.empty()) {
      std::filesystem::create_directories(out);
      write_text((std::filesystem::path(out) / "verify.json").string(), rep.to_json().dump(2) + "\n");
    }
    return rep.passed() ? 0 : 1;
  }
  for (auto* sub : app.get_subcommands()) return run(sub->get_name(), config, seed, out);
  return 2;
}
