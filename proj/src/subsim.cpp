#include "mfals/subsim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mfals/error.hpp"
#include "mfals/log.hpp"

namespace mfals {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kInitStream = 0x9e3779b97f4a7c15ULL;

double reflect_into(double x, double lo, double hi) {
  const double width = hi - lo;
  double y = std::fmod(x - lo, 2.0 * width);
  if (y < 0.0) y += 2.0 * width;
  return y <= width ? lo + y : hi - (y - width);
}

std::string rng_state(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

void restore_rng(Rng& rng, const std::string& state) {
  std::istringstream is(state);
  is >> rng;
  if (!is) throw ValidationError("checkpoint RNG state is malformed");
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::MC:
      return "MC";
    case Method::SS:
      return "SS";
    case Method::MF_AK_MCS:
      return "MF_AK_MCS";
    case Method::MF_AL_SS:
      return "MF_AL_SS";
  }
  return "unknown";
}

Method method_from_string(std::string_view name) {
  for (auto m : {Method::MC, Method::SS, Method::MF_AK_MCS, Method::MF_AL_SS}) {
    if (to_string(m) == name) return m;
  }
  throw ValidationError("unknown method '" + std::string(name) +
                        "' (expected MC, SS, MF_AK_MCS or MF_AL_SS)");
}

void RunConfig::validate() const {
  if (!(p0 > 0.0 && p0 < 1.0)) throw ValidationError("p0 must lie in (0, 1)");
  if (n_per_level == 0) throw ValidationError("n_per_level must be positive");
  const double m = p0 * static_cast<double>(n_per_level);
  if (std::abs(m - std::round(m)) > 1e-9 * std::max(1.0, m) || std::round(m) < 1.0) {
    throw ValidationError("p0 * n_per_level must be a positive integer");
  }
  const std::size_t nc = chain_count();
  if (nc == 0 || n_per_level % nc != 0) {
    throw ValidationError("n_per_level must be a multiple of n_chains");
  }
  if (max_levels == 0) throw ValidationError("max_levels must be positive");
  if (n_levels && *n_levels == 0) throw ValidationError("n_levels must be positive");
  if ((method == Method::MF_AL_SS || method == Method::MF_AK_MCS) && n_init < 2) {
    throw ValidationError("n_init must be at least 2");
  }
  if (!std::isfinite(failure_threshold)) throw ValidationError("failure_threshold must be finite");
  if (!(proposal.scale >= 0.0) || !std::isfinite(proposal.scale)) {
    throw ValidationError("proposal scale must be a non-negative number");
  }
  learning.validate();
}

std::size_t RunConfig::seeds_per_level() const {
  return static_cast<std::size_t>(std::llround(p0 * static_cast<double>(n_per_level)));
}

std::size_t RunConfig::chain_count() const {
  return n_chains == 0 ? seeds_per_level() : n_chains;
}

std::size_t RunConfig::chain_length() const { return n_per_level / chain_count(); }

std::vector<double> LevelState::indicators(double threshold_value) const {
  std::vector<double> out(outputs.size());
  for (std::size_t i = 0; i < outputs.size(); ++i) out[i] = outputs[i] >= threshold_value ? 1.0 : 0.0;
  return out;
}

void initialize_correction(MultifidelityModel& mf, std::size_t n_init, Rng& rng) {
  if (n_init < 2) throw ValidationError("n_init must be at least 2");
  std::vector<std::vector<double>> points;
  points.reserve(n_init);
  for (std::size_t i = 0; i < n_init; ++i) points.push_back(mf.space().sample_latent(rng));
  mf.initialize(points);
}

MoveResult mmh_propose_accept(std::span<const double> current, const ProposalConfig& proposal,
                              const ParameterSpace& space, Rng& rng) {
  MoveResult out{std::vector<double>(current.begin(), current.end()), false};
  for (std::size_t j = 0; j < current.size(); ++j) {
    const RandomVariable& rv = space.variable(j);
    const double width = proposal.scale * rv.latent_std();
    const double u1 = uniform_open01(rng);
    const double u2 = uniform_open01(rng);
    const double z = current[j];
    double x;
    if (rv.bounded()) {
      x = z + width * (2.0 * u1 - 1.0);
      if (proposal.reflect && width > 0.0) x = reflect_into(x, rv.lower(), rv.upper());
    } else {
      x = z + width * normal_quantile(u1);
    }
    const double log_alpha = rv.log_density(x) - rv.log_density(z);
    if (x != z && log_alpha >= std::log(u2)) {
      out.candidate[j] = x;
      out.moved = true;
    }
  }
  return out;
}

SubsetSimulation::SubsetSimulation(RunConfig config, MultifidelityModel& mf)
    : config_(std::move(config)),
      mf_(mf),
      rng_(config_.rng_seed),
      init_rng_(config_.rng_seed ^ kInitStream) {
  if (config_.method == Method::MF_AK_MCS) {
    config_.learning.mode = LearningMode::MultifidelitySubsetIndependent;
  }
  if (config_.n_levels) config_.max_levels = std::max(config_.max_levels, *config_.n_levels);
  config_.validate();
}

bool SubsetSimulation::learning() const {
  return config_.method == Method::MF_AL_SS || config_.method == Method::MF_AK_MCS;
}

bool SubsetSimulation::pinned_final(std::size_t level_index) const {
  if (config_.method == Method::MC || config_.method == Method::MF_AK_MCS) return level_index == 1;
  return config_.n_levels && level_index == *config_.n_levels;
}

void SubsetSimulation::initialize() {
  const std::size_t hf0 = mf_.hf_calls();
  const std::size_t lf0 = mf_.lf_calls();
  if (learning()) initialize_correction(mf_, config_.n_init, init_rng_);
  init_hf_calls_ = mf_.hf_calls() - hf0;
  init_lf_calls_ = mf_.lf_calls() - lf0;
  hf_base_ = mf_.hf_calls();
  lf_base_ = mf_.lf_calls();
}

SubsetSimulation::Evaluation SubsetSimulation::evaluate(std::span<const double> z,
                                                        const QuantileTracker& tracker,
                                                        bool final_level) {
  if (!learning()) return {mf_.evaluate_hf(z), 0.0, kNaN, true};
  const CorrectedPrediction pred = mf_.evaluate_lf_corrected(z);
  const double t = active_threshold(config_.learning, tracker.threshold(),
                                    config_.failure_threshold, final_level);
  const double u = u_value(config_.learning, pred.mean, pred.std, t);
  if (decide_fidelity(u, config_.learning) == Fidelity::AcceptLF) {
    return {pred.mean, pred.std, u, false};
  }
  return {mf_.evaluate_hf_and_adapt(z, pred.lf), 0.0, u, true};
}

void SubsetSimulation::store(LevelState& level, std::size_t slot, std::span<const double> z,
                             const Evaluation& e, bool accepted) {
  std::copy(z.begin(), z.end(), level.samples.begin() + static_cast<std::ptrdiff_t>(slot * level.dimension));
  level.outputs[slot] = e.output;
  level.hf[slot] = e.hf ? 1 : 0;
  level.stds[slot] = e.std;
  level.u[slot] = e.u;
  level.accepted[slot] = accepted ? 1 : 0;
  level.order[slot] = eval_order_++;
  level.hf_cumulative[slot] = mf_.hf_calls();
}

namespace {

LevelState allocate(std::size_t index, std::size_t dim, std::size_t n_chains, std::size_t length) {
  LevelState l;
  l.index = index;
  l.dimension = dim;
  l.n_chains = n_chains;
  l.chain_length = length;
  const std::size_t n = n_chains * length;
  l.samples.assign(n * dim, 0.0);
  l.outputs.assign(n, 0.0);
  l.hf.assign(n, 0);
  l.stds.assign(n, 0.0);
  l.u.assign(n, kNaN);
  l.prob.assign(n, 0.0);
  l.accepted.assign(n, 0);
  l.order.assign(n, 0);
  l.hf_cumulative.assign(n, 0);
  return l;
}

}  // namespace

LevelState SubsetSimulation::run_first_level() {
  const std::size_t n = config_.n_per_level;
  LevelState level = allocate(1, mf_.space().dimension(), n, 1);
  const std::size_t hf0 = mf_.hf_calls();
  const std::size_t lf0 = mf_.lf_calls();
  const bool pinned = pinned_final(1);
  QuantileTracker tracker(config_.p0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double> z = mf_.space().sample_latent(rng_);
    const Evaluation e = evaluate(z, tracker, pinned);
    tracker.insert(e.output);
    store(level, i, z, e, true);
  }
  level.hf_calls = mf_.hf_calls() - hf0;
  level.lf_calls = mf_.lf_calls() - lf0;
  finish_level(level);
  return level;
}

LevelState SubsetSimulation::run_conditional_level(const LevelState& prev) {
  const std::size_t m = config_.seeds_per_level();
  const std::size_t nc = config_.chain_count();
  const std::size_t len = config_.chain_length();
  if (prev.size() < m) throw ValidationError("previous level has too few samples for seeding");

  std::vector<std::size_t> idx(prev.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return prev.outputs[a] > prev.outputs[b]; });
  idx.resize(m);

  LevelState level = allocate(prev.index + 1, prev.dimension, nc, len);
  level.limit = prev.outputs[idx.back()];
  if (level.limit != prev.threshold) {
    logging::logger()->warn("seed minimum {} differs from realized threshold {}", level.limit,
                            prev.threshold);
  }
  const std::size_t hf0 = mf_.hf_calls();
  const std::size_t lf0 = mf_.lf_calls();
  const bool pinned = pinned_final(level.index);
  QuantileTracker tracker(config_.p0);

  for (std::size_t c = 0; c < nc; ++c) {
    const std::size_t s = idx[c % m];
    std::vector<double> z(prev.sample(s).begin(), prev.sample(s).end());
    Evaluation cur{prev.outputs[s], prev.stds[s], prev.u[s], prev.hf[s] != 0};
    tracker.insert(cur.output);
    store(level, c * len, z, cur, true);
    for (std::size_t k = 1; k < len; ++k) {
      MoveResult mv = mmh_propose_accept(z, config_.proposal, mf_.space(), rng_);
      bool accepted = false;
      if (mv.moved) {
        const Evaluation e = evaluate(mv.candidate, tracker, pinned);
        if (e.output >= level.limit) {
          z = std::move(mv.candidate);
          cur = e;
          accepted = true;
        }
      }
      tracker.insert(cur.output);
      store(level, c * len + k, z, cur, accepted);
    }
  }
  level.hf_calls = mf_.hf_calls() - hf0;
  level.lf_calls = mf_.lf_calls() - lf0;
  finish_level(level);
  return level;
}

void SubsetSimulation::finish_level(LevelState& level) const {
  level.threshold = batch_threshold(level.outputs, config_.p0);
  level.final = pinned_final(level.index) || level.threshold >= config_.failure_threshold;
  const double t = level.final ? config_.failure_threshold : level.threshold;
  for (std::size_t i = 0; i < level.size(); ++i) {
    level.prob[i] = level.hf[i] ? (level.outputs[i] >= t ? 1.0 : 0.0)
                                : exceedance_probability(level.outputs[i], level.stds[i], t,
                                                         config_.learning.sigma_floor);
  }
  logging::logger()->info("level {}: threshold {:.6g}, {} HF / {} LF calls{}", level.index,
                          level.threshold, level.hf_calls, level.lf_calls,
                          level.final ? " (final)" : "");
}

EstimateReport SubsetSimulation::run() {
  const auto t0 = std::chrono::steady_clock::now();
  if (levels_.empty()) {
    if (learning() && !mf_.initialized()) {
      initialize();
    } else {
      hf_base_ = mf_.hf_calls();
      lf_base_ = mf_.lf_calls();
    }
    levels_.push_back(run_first_level());
    write_checkpoint();
  }
  while (!levels_.back().final && !stalled_ && levels_.size() < config_.max_levels) {
    LevelState next = run_conditional_level(levels_.back());
    if (!next.final && !(next.threshold > levels_.back().threshold)) stalled_ = true;
    levels_.push_back(std::move(next));
    write_checkpoint();
  }

  EstimateReport r = summarize(config_, levels_);
  r.hf_calls = mf_.hf_calls() - hf_base_;
  r.lf_calls = mf_.lf_calls() - lf_base_;
  r.init_hf_calls = init_hf_calls_;
  r.init_lf_calls = init_lf_calls_;
  r.lf_training_hf_calls = lf_training_hf_calls;
  r.hf_calls_inclusive = r.hf_calls + r.init_hf_calls + r.lf_training_hf_calls;
  if (mf_.initialized()) {
    r.correction_archive_size = mf_.correction().size();
    r.gp_refits = mf_.correction().refit_count();
    r.gp_variance_clamps = mf_.correction().variance_clamps();
  }
  r.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

EstimateReport summarize(const RunConfig& config, const std::vector<LevelState>& levels) {
  if (levels.empty()) throw ValidationError("no completed levels to summarize");
  EstimateReport r;
  r.method = config.method;
  r.failure_threshold = config.failure_threshold;
  std::vector<double> covs, covs_unc, covs_ind, probs;
  bool increasing = true;
  for (std::size_t s = 0; s < levels.size(); ++s) {
    const LevelState& lv = levels[s];
    if (s > 0 && !lv.final && !(lv.threshold > levels[s - 1].threshold)) increasing = false;
    const bool last = s + 1 == levels.size();
    const double t = lv.final ? config.failure_threshold : lv.threshold;
    std::vector<double> records = lv.prob;
    if (last && !lv.final) {
      // Unconverged run: score the last level against the failure threshold.
      for (std::size_t i = 0; i < lv.size(); ++i) {
        records[i] = lv.hf[i] ? (lv.outputs[i] >= config.failure_threshold ? 1.0 : 0.0)
                              : exceedance_probability(lv.outputs[i], lv.stds[i],
                                                       config.failure_threshold,
                                                       config.learning.sigma_floor);
      }
    }
    const double t_ind = last ? config.failure_threshold : t;
    const std::vector<double> ind = lv.indicators(t_ind);
    const bool first = lv.index == 1;

    LevelSummary ls;
    ls.index = lv.index;
    ls.threshold = lv.threshold;
    ls.limit = lv.limit;
    ls.probability = level_probability(records);
    ls.indicator_probability = level_probability(ind);
    const LevelCov c = level_cov(records, lv.layout(), first, config.gamma_form);
    const LevelCov ci = level_cov(ind, lv.layout(), first, config.gamma_form);
    ls.cov = c.cov;
    ls.gamma = c.gamma;
    ls.degenerate = c.degenerate;
    ls.cov_uncorrelated = cov_from(ls.probability, lv.size(), 0.0);
    ls.cov_indicator = ci.cov;
    ls.gamma_indicator = ci.gamma;
    if (!first) {
      ls.rho = chain_autocorrelation(records, lv.layout());
      ls.rho_indicator = chain_autocorrelation(ind, lv.layout());
    }
    ls.hf_calls = lv.hf_calls;
    ls.lf_calls = lv.lf_calls;
    ls.n_samples = lv.size();
    ls.n_chains = lv.n_chains;
    ls.chain_length = lv.chain_length;
    ls.final = lv.final;

    covs.push_back(ls.cov);
    covs_unc.push_back(ls.cov_uncorrelated);
    covs_ind.push_back(ls.cov_indicator);
    probs.push_back(ls.probability);
    r.levels.push_back(std::move(ls));
  }
  const LevelSummary& final_level = r.levels.back();
  r.pf_indicator = pf_indicator(config.p0, levels.size(), final_level.indicator_probability);
  r.pf_weighted = pf_weighted(probs);
  r.cov = total_cov(covs);
  r.cov_uncorrelated = total_cov(covs_unc);
  r.cov_indicator = total_cov(covs_ind);

  const bool reached = levels.back().final;
  r.converged = reached && increasing;
  r.status = r.converged ? "converged" : (!increasing ? "stalled" : "max_levels");
  const double failures =
      final_level.indicator_probability * static_cast<double>(levels.back().size());
  r.insufficient_sampling = failures < 10.0;
  return r;
}

nlohmann::json SubsetSimulation::checkpoint() const {
  nlohmann::json j;
  j["format"] = "mfals-checkpoint-1";
  j["method"] = std::string(to_string(config_.method));
  j["rng_seed"] = config_.rng_seed;
  j["rng"] = rng_state(rng_);
  j["init_rng"] = rng_state(init_rng_);
  j["counters"] = {{"hf_calls", mf_.hf_calls()},
                   {"lf_calls", mf_.lf_calls()},
                   {"hf_base", hf_base_},
                   {"lf_base", lf_base_},
                   {"init_hf_calls", init_hf_calls_},
                   {"init_lf_calls", init_lf_calls_},
                   {"lf_training_hf_calls", lf_training_hf_calls},
                   {"eval_order", eval_order_}};
  j["stalled"] = stalled_;
  j["correction"] = mf_.initialized() ? mf_.correction().to_json() : nlohmann::json(nullptr);
  auto& arr = j["levels"] = nlohmann::json::array();
  for (const LevelState& l : levels_) {
    arr.push_back({{"index", l.index},
                   {"dimension", l.dimension},
                   {"n_chains", l.n_chains},
                   {"chain_length", l.chain_length},
                   {"samples", l.samples},
                   {"outputs", l.outputs},
                   {"hf", l.hf},
                   {"stds", l.stds},
                   {"u", l.u},
                   {"prob", l.prob},
                   {"accepted", l.accepted},
                   {"order", l.order},
                   {"hf_cumulative", l.hf_cumulative},
                   {"threshold", l.threshold},
                   {"limit", l.limit},
                   {"final", l.final},
                   {"hf_calls", l.hf_calls},
                   {"lf_calls", l.lf_calls}});
  }
  return j;
}

namespace {

// JSON has no NaN/inf; nlohmann writes them as null.
std::vector<double> doubles_or_nan(const nlohmann::json& a) {
  std::vector<double> out;
  out.reserve(a.size());
  for (const auto& v : a) out.push_back(v.is_null() ? kNaN : v.get<double>());
  return out;
}

double double_or(const nlohmann::json& v, double fallback) {
  return v.is_null() ? fallback : v.get<double>();
}

}  // namespace

void SubsetSimulation::resume(const nlohmann::json& j) {
  try {
    if (j.at("format") != "mfals-checkpoint-1") throw ValidationError("unknown checkpoint format");
    if (j.at("method").get<std::string>() != to_string(config_.method) ||
        j.at("rng_seed").get<std::uint64_t>() != config_.rng_seed) {
      throw ValidationError("checkpoint was written by a run with a different method or seed");
    }
    restore_rng(rng_, j.at("rng").get<std::string>());
    restore_rng(init_rng_, j.at("init_rng").get<std::string>());
    const auto& c = j.at("counters");
    mf_.hf().set_calls(c.at("hf_calls").get<std::size_t>());
    mf_.lf().set_calls(c.at("lf_calls").get<std::size_t>());
    hf_base_ = c.at("hf_base").get<std::size_t>();
    lf_base_ = c.at("lf_base").get<std::size_t>();
    init_hf_calls_ = c.at("init_hf_calls").get<std::size_t>();
    init_lf_calls_ = c.at("init_lf_calls").get<std::size_t>();
    lf_training_hf_calls = c.at("lf_training_hf_calls").get<std::size_t>();
    eval_order_ = c.at("eval_order").get<std::uint64_t>();
    stalled_ = j.at("stalled").get<bool>();
    if (!j.at("correction").is_null()) {
      mf_.set_correction(GPSurrogate::from_json(j.at("correction"), mf_.correction_options()));
    }
    levels_.clear();
    for (const auto& l : j.at("levels")) {
      LevelState s;
      s.index = l.at("index").get<std::size_t>();
      s.dimension = l.at("dimension").get<std::size_t>();
      s.n_chains = l.at("n_chains").get<std::size_t>();
      s.chain_length = l.at("chain_length").get<std::size_t>();
      s.samples = l.at("samples").get<std::vector<double>>();
      s.outputs = l.at("outputs").get<std::vector<double>>();
      s.hf = l.at("hf").get<std::vector<std::uint8_t>>();
      s.stds = l.at("stds").get<std::vector<double>>();
      s.u = doubles_or_nan(l.at("u"));
      s.prob = l.at("prob").get<std::vector<double>>();
      s.accepted = l.at("accepted").get<std::vector<std::uint8_t>>();
      s.order = l.at("order").get<std::vector<std::uint64_t>>();
      s.hf_cumulative = l.at("hf_cumulative").get<std::vector<std::uint64_t>>();
      s.threshold = l.at("threshold").get<double>();
      s.limit = double_or(l.at("limit"), -std::numeric_limits<double>::infinity());
      s.final = l.at("final").get<bool>();
      s.hf_calls = l.at("hf_calls").get<std::size_t>();
      s.lf_calls = l.at("lf_calls").get<std::size_t>();
      if (s.dimension != mf_.space().dimension() || s.outputs.size() != s.n_chains * s.chain_length ||
          s.samples.size() != s.outputs.size() * s.dimension) {
        throw ValidationError("checkpoint level " + std::to_string(s.index) + " is inconsistent");
      }
      levels_.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed checkpoint: ") + e.what());
  }
  logging::logger()->info("resumed from checkpoint with {} completed levels", levels_.size());
}

void SubsetSimulation::write_checkpoint() const {
  if (config_.checkpoint_path.empty()) return;
  const std::filesystem::path path(config_.checkpoint_path);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error("cannot write checkpoint " + tmp.string());
    out << checkpoint().dump();
  }
  std::filesystem::rename(tmp, path);
}

EstimateReport run(const RunConfig& config, MultifidelityModel& mf) {
  SubsetSimulation sim(config, mf);
  return sim.run();
}

}  // namespace mfals
