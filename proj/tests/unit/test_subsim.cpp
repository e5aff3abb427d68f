#include <doctest.h>

#include <cmath>
#include <memory>

#include <nlohmann/json.hpp>

#include "mfals/error.hpp"
#include "mfals/subsim.hpp"
#include "support.hpp"

using namespace mfals;

namespace {

std::vector<NamedVariable> gaussian_pair() {
  return {{"x1", RandomVariable::normal(0, 1)}, {"x2", RandomVariable::normal(0, 1)}};
}

double linear(std::span<const double> x) { return x[0] + x[1]; }

struct Fixture {
  std::shared_ptr<FunctionEvaluator> hf;
  std::shared_ptr<ModelEvaluator> lf;
  MultifidelityModel mf;

  explicit Fixture(bool perfect_lf = true, double lf_bias = 0.0)
      : hf(std::make_shared<FunctionEvaluator>(std::vector<std::string>{"x1", "x2"}, linear)),
        lf(std::make_shared<FunctionEvaluator>(
            std::vector<std::string>{"x1", "x2"},
            [perfect_lf, lf_bias](std::span<const double> x) {
              return perfect_lf ? linear(x) : 0.9 * linear(x) + lf_bias;
            })),
        mf(ParameterSpace::shared(gaussian_pair()), hf, lf) {}
};

RunConfig small_config(Method method, double threshold) {
  RunConfig c;
  c.method = method;
  c.p0 = 0.1;
  c.n_per_level = 2000;
  c.failure_threshold = threshold;
  c.rng_seed = 42;
  return c;
}

double linear_pf(double t) { return normal_cdf(-t / std::sqrt(2.0)); }

std::vector<double> mmh_chain(const ParameterSpace& space, std::size_t steps, std::size_t thin,
                              std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> z = space.sample_latent(rng);
  std::vector<double> out;
  const ProposalConfig prop;
  for (std::size_t i = 0; i < steps; ++i) {
    auto mv = mmh_propose_accept(z, prop, space, rng);
    if (mv.moved) z = std::move(mv.candidate);
    if (i % thin == 0) out.push_back(z[0]);
  }
  return out;
}

}  // namespace

TEST_CASE("MMH leaves the standard normal invariant (KS)") {
  const auto space = ParameterSpace::shared({{"x", RandomVariable::normal(0, 1)}});
  const auto xs = mmh_chain(space, 400000, 20, 7);
  const double d = testing_support::ks_statistic(xs, [](double x) { return normal_cdf(x); });
  CHECK(d < testing_support::ks_critical_001(xs.size()));
}

TEST_CASE("MMH with reflection leaves bounded marginals invariant (KS)") {
  for (const auto& rv : {RandomVariable::truncated_normal(0.0, 1.0, -1.0, 1.5),
                         RandomVariable::uniform(0.05, 0.15)}) {
    const auto space = ParameterSpace::shared({{"x", rv}});
    const auto xs = mmh_chain(space, 400000, 20, 13);
    const double d = testing_support::ks_statistic(xs, [&](double x) { return rv.cdf(x); });
    CHECK(d < testing_support::ks_critical_001(xs.size()));
    for (double x : xs) CHECK(rv.in_support(x));
  }
}

TEST_CASE("MMH consumes two uniforms per component and never moves with zero width") {
  const auto space = ParameterSpace::shared(gaussian_pair());
  Rng a(1), b(1);
  const std::vector<double> z{0.3, -0.2};
  mmh_propose_accept(z, {}, space, a);
  for (int i = 0; i < 4; ++i) uniform_open01(b);
  CHECK(a() == b());
  ProposalConfig frozen;
  frozen.scale = 0.0;
  const auto mv = mmh_propose_accept(z, frozen, space, a);
  CHECK_FALSE(mv.moved);
  CHECK(mv.candidate == z);
}

TEST_CASE("run configuration validation") {
  RunConfig c;
  CHECK_NOTHROW(c.validate());
  c.p0 = 1.5;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = RunConfig{};
  c.n_per_level = 2005;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = RunConfig{};
  c.n_chains = 3000;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = RunConfig{};
  CHECK(c.chain_count() == 2000u);
  CHECK(c.chain_length() == 10u);
  for (auto m : {Method::MC, Method::SS, Method::MF_AK_MCS, Method::MF_AL_SS}) {
    CHECK(method_from_string(to_string(m)) == m);
  }
  CHECK_THROWS_AS(method_from_string("xx"), ValidationError);
}

TEST_CASE("subset simulation level structure") {
  Fixture fx;
  SubsetSimulation sim(small_config(Method::SS, 4.5), fx.mf);
  const auto report = sim.run();
  const auto& levels = sim.levels();
  REQUIRE(levels.size() >= 2);
  CHECK(levels[0].n_chains == 2000u);
  CHECK(levels[0].chain_length == 1u);
  for (std::size_t s = 1; s < levels.size(); ++s) {
    const auto& lv = levels[s];
    CHECK(lv.n_chains == 200u);
    CHECK(lv.chain_length == 10u);
    CHECK(lv.limit == levels[s - 1].threshold);
    for (double y : lv.outputs) CHECK(y >= lv.limit);
    for (std::size_t c = 0; c < lv.n_chains; ++c) {
      // The chain starts at a seed drawn from the previous level.
      const double first = lv.outputs[c * lv.chain_length];
      const auto it = std::find(levels[s - 1].outputs.begin(), levels[s - 1].outputs.end(), first);
      CHECK(it != levels[s - 1].outputs.end());
    }
    if (!lv.final) CHECK(lv.threshold > levels[s - 1].threshold);
  }
  CHECK(levels.back().final);
  CHECK(report.converged);
  CHECK(report.status == "converged");
  CHECK(report.hf_calls == fx.hf->calls());
  CHECK(report.lf_calls == 0u);
}

TEST_CASE("subset simulation estimate on a linear limit state") {
  Fixture fx;
  auto cfg = small_config(Method::SS, 4.5);
  cfg.n_per_level = 10000;
  const auto r = run(cfg, fx.mf);
  const double exact = linear_pf(4.5);
  CHECK(r.converged);
  CHECK(std::abs(r.pf_indicator - exact) < 3.0 * r.cov * exact);
  CHECK(r.cov > 0.0);
  CHECK(r.cov < 0.3);
}

TEST_CASE("Monte Carlo estimate on a linear limit state") {
  Fixture fx;
  auto cfg = small_config(Method::MC, 2.0);
  cfg.n_per_level = 100000;
  const auto r = run(cfg, fx.mf);
  const double exact = linear_pf(2.0);
  const double se = std::sqrt(exact * (1 - exact) / 100000.0);
  CHECK(r.levels.size() == 1u);
  CHECK(std::abs(r.pf_indicator - exact) < 4.0 * se);
  CHECK(r.cov == doctest::Approx(std::sqrt((1 - r.pf_indicator) / (1e5 * r.pf_indicator))));
}

TEST_CASE("identical seeds give identical runs") {
  Fixture a, b;
  const auto ra = run(small_config(Method::MF_AL_SS, 4.5), a.mf);
  const auto rb = run(small_config(Method::MF_AL_SS, 4.5), b.mf);
  CHECK(ra.pf_indicator == rb.pf_indicator);
  CHECK(ra.pf_weighted == rb.pf_weighted);
  CHECK(ra.hf_calls == rb.hf_calls);
}

TEST_CASE("perfect low fidelity reproduces single-fidelity subset simulation") {
  Fixture ss_fx, mf_fx;
  const auto ss = run(small_config(Method::SS, 4.5), ss_fx.mf);
  const auto mf = run(small_config(Method::MF_AL_SS, 4.5), mf_fx.mf);
  CHECK(mf.hf_calls == 0u);
  CHECK(mf.init_hf_calls == 20u);
  CHECK(mf.pf_indicator == ss.pf_indicator);
  CHECK(mf.pf_weighted == ss.pf_weighted);
  CHECK(mf.levels.size() == ss.levels.size());
}

TEST_CASE("multifidelity run with a biased LF calls HF near the thresholds") {
  Fixture fx(false, 0.3);
  auto cfg = small_config(Method::MF_AL_SS, 4.5);
  cfg.n_per_level = 4000;
  const auto r = run(cfg, fx.mf);
  CHECK(r.converged);
  CHECK(r.hf_calls > 0u);
  CHECK(r.hf_calls < 4000u);
  CHECK(r.hf_calls_inclusive == r.hf_calls + r.init_hf_calls);
  const double exact = linear_pf(4.5);
  CHECK(std::abs(r.pf_indicator - exact) < 4.0 * r.cov * exact);
}

TEST_CASE("pinned levels and the max-level cap") {
  Fixture fx;
  auto cfg = small_config(Method::SS, 4.5);
  cfg.n_levels = 2;
  const auto pinned = run(cfg, fx.mf);
  CHECK(pinned.levels.size() == 2u);
  CHECK(pinned.levels.back().final);

  Fixture fy;
  auto capped = small_config(Method::SS, 4.5);
  capped.max_levels = 2;
  const auto r = run(capped, fy.mf);
  CHECK(r.levels.size() == 2u);
  CHECK_FALSE(r.converged);
  CHECK(r.status == "max_levels");
}

TEST_CASE("resuming from a checkpoint reproduces an uninterrupted run") {
  Fixture full_fx;
  const auto full = run(small_config(Method::SS, 4.5), full_fx.mf);

  Fixture part_fx;
  auto partial = small_config(Method::SS, 4.5);
  partial.max_levels = 2;
  SubsetSimulation first(partial, part_fx.mf);
  first.run();
  const auto saved = nlohmann::json::parse(first.checkpoint().dump());

  Fixture resume_fx;
  SubsetSimulation second(small_config(Method::SS, 4.5), resume_fx.mf);
  second.resume(saved);
  const auto resumed = second.run();
  CHECK(resumed.pf_indicator == full.pf_indicator);
  CHECK(resumed.pf_weighted == full.pf_weighted);
  CHECK(resumed.hf_calls == full.hf_calls);

  Fixture other_fx;
  auto other = small_config(Method::SS, 4.5);
  other.rng_seed = 43;
  SubsetSimulation mismatched(other, other_fx.mf);
  CHECK_THROWS_AS(mismatched.resume(saved), ValidationError);
}

TEST_CASE("smallest admissible level keeps one seed") {
  Fixture fx;
  RunConfig c = small_config(Method::SS, 1.0);
  c.n_per_level = 10;
  c.max_levels = 3;
  CHECK(c.seeds_per_level() == 1u);
  CHECK(c.chain_count() == 1u);
  CHECK(c.chain_length() == 10u);
  SubsetSimulation sim(c, fx.mf);
  const auto report = sim.run();
  CHECK(!sim.levels().empty());
  CHECK(std::isfinite(report.pf_indicator));
}

TEST_CASE("multifidelity run with two initial points completes") {
  Fixture fx(false, 0.3);
  RunConfig c = small_config(Method::MF_AL_SS, 4.5);
  c.n_init = 2;
  const auto report = run(c, fx.mf);
  CHECK(report.init_hf_calls == 2u);
  CHECK(report.converged);
  CHECK(report.pf_indicator > 0.0);
}

TEST_CASE("zero-width proposals repeat the seeds") {
  Fixture fx;
  RunConfig c = small_config(Method::SS, 4.5);
  c.proposal.scale = 0.0;
  SubsetSimulation sim(c, fx.mf);
  const auto first = sim.run_first_level();
  const auto next = sim.run_conditional_level(first);
  for (std::size_t ch = 0; ch < next.n_chains; ++ch) {
    const double seed = next.outputs[ch * next.chain_length];
    CHECK(seed >= first.threshold);
    for (std::size_t k = 0; k < next.chain_length; ++k) {
      CHECK(next.outputs[ch * next.chain_length + k] == seed);
      if (k > 0) CHECK(next.accepted[ch * next.chain_length + k] == 0);
    }
  }
}
