#include <cstdlib>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "cli.hpp"
#include "poslab/error.hpp"

using namespace poslab;

namespace {

int report_error(std::string_view code, const std::string& message) {
  std::cerr << json{{"error", code}, {"message", message}}.dump() << '\n';
  return 1;
}

void setup_logging() {
  auto logger = spdlog::stderr_logger_st("poslab");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  const char* env = std::getenv("POSLAB_LOG");
  const std::string level = env ? env : "error";
  if (level == "debug") spdlog::set_level(spdlog::level::debug);
  else if (level == "info") spdlog::set_level(spdlog::level::info);
  else if (level == "error") spdlog::set_level(spdlog::level::err);
  else throw Error(Errc::InvalidConfig, "POSLAB_LOG must be one of error, info, debug");
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<std::string, cli::Command> commands{
      {"gen", cli::cmd_gen},           {"diagnose", cli::cmd_diagnose}, {"project", cli::cmd_project},
      {"train-ae", cli::cmd_train_ae}, {"fold", cli::cmd_fold},         {"intersect", cli::cmd_intersect},
      {"dba", cli::cmd_dba},           {"complexity", cli::cmd_complexity}};

  CLI::App app{"poslab: union-of-subspaces experiments"};
  app.require_subcommand(1);
  std::string config_path, out_dir = "out";
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  for (const auto& [name, fn] : commands) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--jobs", jobs, "worker threads for independent trials")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("InvalidArgument", e.what());
  }

  try {
    setup_logging();
    const auto* sub = app.get_subcommands().front();
    cli::RunContext ctx;
    ctx.config_dir = std::filesystem::path(config_path).parent_path();
    ctx.out_dir = out_dir;
    ctx.jobs = jobs;
    if (sub->count("--seed") > 0) ctx.seed_override = seed;
    json config;
    try {
      config = json::parse(read_file(config_path));
    } catch (const json::parse_error& e) {
      throw Error(Errc::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
    }
    commands.at(sub->get_name())(config, ctx);
  } catch (const Error& e) {
    return report_error(errc_name(e.code()), e.what());
  } catch (const std::exception& e) {
    return report_error("Internal", e.what());
  }
  return 0;
}
