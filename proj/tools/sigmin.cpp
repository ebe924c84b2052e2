#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>

#include "../vendor/CLI11.hpp"
#include "sigmin/bench.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Minimisation benchmarks for signal approximation and denoising"};
  app.footer(sigmin::bench_config_schema());
  app.require_subcommand(1);

  std::string config_path, out_dir, thread_list;
  long long seed = 0;
  app.add_option("--config", config_path, "Configuration file (key = value lines)");
  app.add_option("--out", out_dir, "Output directory (created if absent)");
  app.add_option("--threads", thread_list, "Comma-separated thread counts");
  auto* seed_opt =
      app.add_option("--seed", seed, "Instance and optimiser seed")->check(CLI::NonNegativeNumber);

  auto* sub_approx =
      app.add_subcommand("approx", "Optimiser comparison on an approximation instance");
  auto* sub_denoise =
      app.add_subcommand("denoise", "Optimiser comparison on the denoising instance");
  auto* sub_scale = app.add_subcommand("scale", "Per-operation thread scaling sweep");
  auto* sub_svdcmp = app.add_subcommand("svdcmp", "Truncated-SVD method comparison");
  auto* sub_demo = app.add_subcommand("demo", "Input / intermediate / output artifact triplets");
  for (CLI::App* sub : {sub_approx, sub_denoise, sub_scale, sub_svdcmp, sub_demo})
    sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    sigmin::BenchConfig cfg;
    if (const char* env = std::getenv("SIGMIN_THREADS"); env && *env)
      cfg.threads = sigmin::parse_thread_list(env);
    if (!config_path.empty()) sigmin::load_bench_config(config_path, cfg);
    if (!out_dir.empty()) cfg.out = out_dir;
    if (!thread_list.empty()) cfg.threads = sigmin::parse_thread_list(thread_list);
    if (seed_opt->count() > 0) cfg.seed = static_cast<std::uint64_t>(seed);
    cfg.check();

    if (app.got_subcommand(sub_approx)) return sigmin::cmd_approx(cfg);
    if (app.got_subcommand(sub_denoise)) return sigmin::cmd_denoise(cfg);
    if (app.got_subcommand(sub_scale)) return sigmin::cmd_scale(cfg);
    if (app.got_subcommand(sub_svdcmp)) return sigmin::cmd_svdcmp(cfg);
    if (app.got_subcommand(sub_demo)) return sigmin::cmd_demo(cfg);
  } catch (const std::exception& e) {
    std::cerr << "sigmin: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
