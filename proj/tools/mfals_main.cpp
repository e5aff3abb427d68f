#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mfals/error.hpp"
#include "mfals/log.hpp"
#include "mfals/run_spec.hpp"

namespace {

void print_summary(const mfals::ExecutionResult& r) {
  const auto& rep = r.report;
  std::printf("status        %s\n", rep.status.c_str());
  std::printf("levels        %zu\n", rep.levels.size());
  std::printf("pf            %.6e\n", rep.pf_indicator);
  std::printf("pf_weighted   %.6e\n", rep.pf_weighted);
  std::printf("cov           %.4f (uncorrelated %.4f)\n", rep.cov, rep.cov_uncorrelated);
  std::printf("hf calls      %zu sampling, %zu inclusive\n", rep.hf_calls, rep.hf_calls_inclusive);
  std::printf("output        %s\n", r.output_dir.string().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multifidelity active-learning subset simulation"};
  app.set_version_flag("--version", std::string(MFALS_VERSION));
  app.require_subcommand(1);

  std::string spec_path;
  mfals::Overrides overrides;
  std::uint64_t seed = 0;
  std::string method, out, verbosity;

  auto* run = app.add_subcommand("run", "Execute a run specification");
  run->add_option("spec", spec_path, "Run specification (JSON)")->required()->check(CLI::ExistingFile);
  auto* seed_opt = run->add_option("--seed", seed, "RNG seed");
  auto* method_opt = run->add_option("--method", method, "MC, SS, MF_AK_MCS or MF_AL_SS");
  auto* out_opt = run->add_option("--out", out, "Output directory");
  auto* verb_opt =
      run->add_option("--verbosity", verbosity, "summary, per_level or per_sample")
          ->check(CLI::IsMember({"summary", "per_level", "per_sample"}));
  run->add_flag("--resume", overrides.resume, "Continue from checkpoint.json in the output directory");

  auto* validate = app.add_subcommand("validate", "Parse and validate a run specification");
  validate->add_option("spec", spec_path, "Run specification (JSON)")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    mfals::logging::logger();
    mfals::RunSpec spec = mfals::parse_spec(spec_path);
    if (*validate) {
      std::cout << mfals::spec_to_json(spec).dump(2) << '\n';
      return 0;
    }
    if (*seed_opt) overrides.seed = seed;
    if (*method_opt) overrides.method = method;
    if (*out_opt) overrides.output_dir = out;
    if (*verb_opt) overrides.verbosity = verbosity;
    mfals::apply_overrides(spec, overrides);
    const mfals::ExecutionResult result = mfals::execute(spec, overrides.resume);
    print_summary(result);
    return result.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
