// fiberlab: experiments on symbolic random shifts.
//
//   fiberlab verify-brudno --preset z2-uniform --n 100000 --k 8 --seed 1
//   fiberlab verify-ar --config system.json --out reports/

#include <iostream>
#include <utility>

#include <CLI11.hpp>

#include "fiberlab/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"fiberlab: conditional complexity and fiber entropy of random shifts"};
  app.require_subcommand(1);

  fiberlab::CommandOptions opt;
  std::string preset;
  std::string config;
  std::size_t n = 0;
  std::string out;
  std::string format;
  double tolerance = 0.0;

  const std::pair<const char*, const char*> commands[] = {
      {"verify-brudno", "conditional code rate against exact and empirical fiber entropy"},
      {"verify-ar", "joint - plain - conditional rate residual"},
      {"entropy", "exact averaged entropies H^k for k up to max --k"},
      {"range", "mean range density |R_n|/n at decade checkpoints"},
      {"simulate", "dump sampled (alpha, omega) pairs"},
  };
  for (const auto& [name, description] : commands) {
    auto* sub = app.add_subcommand(name, description);
    sub->add_option("--config", config, "experiment config (JSON)");
    sub->add_option("--preset", preset, "free-monoid-uniform | z2-uniform | f2-markov");
    sub->add_option("--seed", opt.seeds, "run seed (repeatable)")->take_all()->allow_extra_args(false);
    sub->add_option("--n", n, "horizon");
    sub->add_option("--k", opt.k, "block length (repeatable)")->allow_extra_args(false);
    sub->add_option("--out", out, "output directory");
    sub->add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--tolerance", tolerance, "residual tolerance in bits")->check(CLI::NonNegativeNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : fiberlab::exit_config;
  }

  auto* sub = app.get_subcommands().front();
  opt.command = sub->get_name();
  if (sub->count("--config")) opt.config_path = config;
  if (sub->count("--preset")) opt.preset = preset;
  if (sub->count("--n")) opt.n = n;
  if (sub->count("--out")) opt.out = out;
  if (sub->count("--format")) opt.format = format;
  if (sub->count("--tolerance")) opt.tolerance = tolerance;

  return fiberlab::run_command(opt, std::cout, std::cerr);
}
