#include "fpreg/config.hpp"
#include "fpreg/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <string>

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 2;
constexpr int kNumerical = 3;

int emit(int code, const std::string& kind, const std::string& message, const nlohmann::json& extra = {}) {
  nlohmann::json j = {{"error", kind}, {"message", message}, {"exit_code", code}};
  if (extra.is_object())
    for (const auto& [k, v] : extra.items()) j[k] = v;
  std::cerr << j.dump() << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace fpreg;
  const std::map<std::string, void (*)(const RunConfig&, const std::filesystem::path&)> commands = {
      {"meshgen", cmd_meshgen}, {"fitgmm", cmd_fitgmm}, {"gencloud", cmd_gencloud},
      {"solve", cmd_solve},     {"trace", cmd_trace},   {"report", cmd_report}};

  CLI::App app{"Point-set registration by Fokker-Planck transport", "fpreg"};
  std::string command;
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  app.add_option("command", command, "meshgen | fitgmm | gencloud | solve | trace | report")
      ->required()
      ->check(CLI::IsMember({"meshgen", "fitgmm", "gencloud", "solve", "trace", "report"}));
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--out", out_dir, "output directory (overrides output_dir)");
  auto* seed_opt = app.add_option("--seed", seed, "base random seed (overrides seed)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return emit(kUsage, "UsageError", e.what());
  }

  try {
    RunConfig cfg = load_config(config_path);
    if (*seed_opt) cfg.seed = seed;
    std::filesystem::path out = out_dir.empty() ? cfg.resolve(cfg.output_dir) : std::filesystem::path(out_dir);
    commands.at(command)(cfg, out);
    return kOk;
  } catch (const ConfigError& e) {
    nlohmann::json extra = nlohmann::json::object();
    if (e.line() > 0) extra = {{"line", e.line()}, {"column", e.column()}};
    return emit(kUsage, e.kind(), e.what(), extra);
  } catch (const SolveFailure& e) {
    return emit(kNumerical, e.kind(), e.what(),
                {{"residual", std::isfinite(e.residual()) ? nlohmann::json(e.residual()) : nlohmann::json(nullptr)},
                 {"step", e.step()}});
  } catch (const CollapseFailure& e) {
    return emit(kNumerical, e.kind(), e.what());
  } catch (const InterpolationFailure& e) {
    return emit(kNumerical, e.kind(), e.what(), {{"dof", e.dof()}});
  } catch (const InvalidDistanceField& e) {
    return emit(kNumerical, e.kind(), e.what());
  } catch (const Error& e) {
    return emit(kUsage, e.kind(), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return emit(kUsage, "FilesystemError", e.what());
  } catch (const nlohmann::json::exception& e) {
    return emit(kUsage, "FormatError", e.what());
  } catch (const std::exception& e) {
    return emit(1, "InternalError", e.what());
  }
}
