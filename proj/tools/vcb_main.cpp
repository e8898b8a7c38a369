#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"vcb: target classifiers over a bank of visual-concept classifiers"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(vcb::cli::kVersion));

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  long long threads = -1;
  long long seed = -1;
  app.add_option("-c,--config", config_path, "key=value config file")->option_text("FILE");
  app.add_option("-s,--set", overrides, "override a config key (repeatable)")->option_text("KEY=VALUE");
  app.add_option("-o,--out", out_dir, "run directory (overrides out_dir)");
  app.add_option("-j,--threads", threads, "worker threads (overrides threads)");
  app.add_option("--seed", seed, "master seed (overrides seed)");
  bool dump_config = false;
  app.add_flag("--print-config", dump_config, "print the effective configuration and exit");

  std::vector<std::pair<CLI::App*, const vcb::cli::CommandInfo*>> subs;
  for (const auto& info : vcb::cli::kCommands) {
    // global options may also follow the subcommand
    auto* sub = app.add_subcommand(std::string(info.name), std::string(info.help))->fallthrough();
    subs.emplace_back(sub, &info);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    vcb::RunConfig config;
    if (!config_path.empty()) config = vcb::load_config(config_path);
    for (const auto& o : overrides) config.set_assignment(o);
    if (!out_dir.empty()) {
      config.set("out_dir", std::filesystem::absolute(out_dir).string());
    }
    if (threads >= 0) config.set("threads", std::to_string(threads));
    if (seed >= 0) config.set("seed", std::to_string(seed));
    if (dump_config) {
      std::cout << vcb::encode_config(config);
      return 0;
    }
    for (const auto& [sub, info] : subs) {
      if (!sub->parsed()) continue;
      vcb::cli::Run run(std::string(info->name), config, std::cout, std::cerr);
      return info->fn(run);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
