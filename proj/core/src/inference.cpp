#include "mhmm/inference.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <numeric>
#include <semaphore>
#include <thread>

#include "mhmm/errors.hpp"
#include "mhmm/likelihood.hpp"
#include "mhmm/math.hpp"
#include "mhmm/rng.hpp"

namespace mhmm {

const char* model_tag(ModelKind kind) {
  return kind == ModelKind::MePoissonHmm ? "ME-Poisson-HMM" : "ME-Poisson";
}

namespace {

// ---------------------------------------------------------------------------
// Proposal-scale adaptation: batch rule. Every adapt_window proposals during
// burn-in the log-scale moves by min(0.1, 1/sqrt(batch)) toward the target
// acceptance rate, then freezes. Post-burn-in accepts/trials are kept for the
// reported rates.
// ---------------------------------------------------------------------------
struct AdaptiveScale {
  double log_scale = 0.0;
  long batch_trials = 0, batch_accepts = 0, batch_index = 0;
  long trials = 0, accepts = 0;

  explicit AdaptiveScale(double initial = 0.1) : log_scale(std::log(initial)) {}

  double scale() const { return std::exp(log_scale); }

  void record(bool accepted, bool adapting, double target, int window) {
    if (adapting) {
      ++batch_trials;
      if (accepted) ++batch_accepts;
      if (batch_trials >= window) {
        ++batch_index;
        const double rate =
            static_cast<double>(batch_accepts) / static_cast<double>(batch_trials);
        const double delta = std::min(0.1, 1.0 / std::sqrt(static_cast<double>(batch_index)));
        log_scale += (rate > target) ? delta : -delta;
        log_scale = std::clamp(log_scale, std::log(1e-8), std::log(50.0));
        batch_trials = 0;
        batch_accepts = 0;
      }
    } else {
      ++trials;
      if (accepted) ++accepts;
    }
  }

  double rate() const {
    return trials > 0 ? static_cast<double>(accepts) / static_cast<double>(trials) : 0.0;
  }
};

// Welford accumulator over chain states; shapes multi-component proposals by
// the marginal posterior spread seen so far.
struct ComponentSpread {
  long n = 0;
  std::vector<double> mean, m2;

  explicit ComponentSpread(std::size_t dim) : mean(dim, 0.0), m2(dim, 0.0) {}

  void observe(std::span<const double> x) {
    ++n;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double d = x[j] - mean[j];
      mean[j] += d / static_cast<double>(n);
      m2[j] += d * (x[j] - mean[j]);
    }
  }

  double sd(std::size_t j) const {
    if (n < 50 || !(m2[j] > 0.0)) return 1.0;
    return std::sqrt(m2[j] / static_cast<double>(n - 1));
  }
};

double glmm_log_prior(const ModelParameters& params, const PriorConfig& priors) {
  KahanSum lp;
  for (double b : params.beta[0]) lp.add(normal_lpdf(b, 0.0, priors.beta_prior_scale));
  for (const auto& u_i : params.u) {
    for (std::size_t j = 0; j < u_i.size(); ++j) {
      lp.add(normal_lpdf(u_i[j], 0.0, params.sigma_u[j]));
    }
  }
  for (double s : params.sigma_u) {
    lp.add(half_normal_lpdf(s, priors.sigma_half_normal_scale));
    lp.add(std::log(s));
  }
  return lp.value();
}

void relabel_to_identified(ModelParameters& p) {
  if (p.satisfies_identification()) return;
  std::swap(p.beta[0], p.beta[1]);
  std::swap(p.trans_logit_mean[0], p.trans_logit_mean[1]);
  for (auto& v : p.trans_logit_dev) std::swap(v[0], v[1]);
}

// Forward log-likelihood over cached log-emissions; transition structure only.
double hmm_loglik_cached(std::span<const double> le0, std::span<const double> le1,
                         const TransitionMatrix& P) {
  const std::array<double, 2> pi = initial_distribution(P);
  const double lp00 = std::log(P(0, 0)), lp01 = std::log(P(0, 1));
  const double lp10 = std::log(P(1, 0)), lp11 = std::log(P(1, 1));
  double a0 = std::log(pi[0]) + le0[0];
  double a1 = std::log(pi[1]) + le1[0];
  for (std::size_t t = 1; t < le0.size(); ++t) {
    const double n0 = logaddexp(a0 + lp00, a1 + lp10) + le0[t];
    const double n1 = logaddexp(a0 + lp01, a1 + lp11) + le1[t];
    a0 = n0;
    a1 = n1;
  }
  return logaddexp(a0, a1);
}

double glmm_loglik_cached(std::span<const double> le0) {
  double s = 0.0;
  for (double v : le0) s += v;
  return s;
}

struct BorrowerCache {
  std::array<std::vector<double>, 2> eta;  // x . beta_k per week
  std::array<std::vector<double>, 2> le;   // log emission pmf per week/state
  std::vector<double> re;                  // d . u_i per week
  std::vector<double> lgam;                // log(y!) per week
  double loglik = 0.0;
};

struct ChainOutput {
  std::vector<ModelParameters> draws;
  std::vector<int> iterations;
  std::vector<double> log_posterior_trace;
  // accept/trial counters, post burn-in
  std::array<std::pair<long, long>, 2> beta_rates{};
  std::pair<long, long> mu_rate{}, sigma_v_rate{};
  std::vector<std::pair<long, long>> u_rates, v_rates, sigma_u_rates;
};

class ChainRunner {
 public:
  ChainRunner(const PanelDataset& panel, const PriorConfig& priors, const McmcConfig& cfg,
              ModelKind kind, int chain_id, const ModelParameters& init)
      : panel_(panel),
        priors_(priors),
        cfg_(cfg),
        kind_(kind),
        chain_id_(chain_id),
        rng_(derive_seed(cfg.seed, 0xC0FFEE, static_cast<std::uint64_t>(chain_id))),
        cur_(init),
        n_(panel.n_borrowers()),
        p_(panel.n_covariates()),
        q_(panel.n_random_effects()),
        beta_spread_{ComponentSpread(p_), ComponentSpread(p_)},
        mu_spread_(2),
        s_beta_{AdaptiveScale(0.1), AdaptiveScale(0.1)},
        s_mu_(0.2),
        s_sigma_v_(0.3) {
    s_u_.assign(n_, AdaptiveScale(0.5));
    s_v_.assign(n_, AdaptiveScale(0.5));
    s_sigma_u_.assign(q_, AdaptiveScale(0.3));
    init_caches();
  }

  ChainOutput run() {
    ChainOutput out;
    const bool hmm = kind_ == ModelKind::MePoissonHmm;
    const auto& mask = cfg_.update_mask;
    for (int sweep = 1; sweep <= cfg_.iterations; ++sweep) {
      adapting_ = sweep <= cfg_.burn_in;
      if (mask.beta1) update_beta(0);
      if (hmm && mask.beta2) update_beta(1);
      if (mask.u) update_u();
      if (hmm && mask.v) update_v();
      if (hmm && mask.mu) update_mu();
      if (mask.sigma_u) update_sigma_u();
      if (hmm && mask.sigma_v) update_sigma_v();
      if (adapting_) {
        beta_spread_[0].observe(cur_.beta[0]);
        if (hmm) beta_spread_[1].observe(cur_.beta[1]);
        if (hmm) mu_spread_.observe(cur_.trans_logit_mean);
      }
      if (sweep > cfg_.burn_in && (sweep - cfg_.burn_in) % cfg_.thinning == 0) {
        store(out, sweep);
      }
    }
    collect_rates(out);
    return out;
  }

 private:
  void init_caches() {
    caches_.resize(n_);
    scratch_eta_.resize(n_);
    scratch_le0_.resize(n_);
    scratch_le1_.resize(n_);
    scratch_re_.resize(n_);
    cand_blik_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      const auto& b = panel_.borrowers[i];
      const std::size_t T = b.n_weeks();
      auto& c = caches_[i];
      c.lgam.resize(T);
      for (std::size_t t = 0; t < T; ++t) {
        c.lgam[t] = std::lgamma(static_cast<double>(b.counts[t]) + 1.0);
      }
      c.re.resize(T);
      for (std::size_t t = 0; t < T; ++t) c.re[t] = dot(b.re_design.row(t), cur_.u[i]);
      for (int k = 0; k < 2; ++k) {
        c.eta[k].resize(T);
        c.le[k].resize(T);
        for (std::size_t t = 0; t < T; ++t) {
          c.eta[k][t] = dot(b.covariates.row(t), cur_.beta[k]);
          c.le[k][t] = emission_log_pmf_at_log_rate(b.counts[t], c.eta[k][t] + c.re[t],
                                                    c.lgam[t]);
        }
      }
      c.loglik = borrower_loglik(i, c.le[0], c.le[1]);
      scratch_eta_[i].resize(T);
      scratch_le0_[i].resize(T);
      scratch_le1_[i].resize(T);
      scratch_re_[i].resize(T);
    }
  }

  double borrower_loglik(std::size_t i, std::span<const double> le0,
                         std::span<const double> le1) const {
    if (kind_ == ModelKind::MePoisson) return glmm_loglik_cached(le0);
    return hmm_loglik_cached(le0, le1, transition_matrix(cur_, i));
  }

  double total_loglik() const {
    KahanSum s;
    for (const auto& c : caches_) s.add(c.loglik);
    return s.value();
  }

  bool metropolis_accept(double log_ratio) {
    return std::log(1.0 - rng_.uniform()) < log_ratio;  // 1-u keeps the draw in (0,1]
  }

  void update_beta(int k) {
    std::vector<double> prop = cur_.beta[k];
    const double scale = s_beta_[k].scale();
    for (std::size_t j = 0; j < p_; ++j) {
      prop[j] += scale * beta_spread_[k].sd(j) * rng_.normal();
    }
    double delta = 0.0;
    for (std::size_t j = 0; j < p_; ++j) {
      delta += normal_lpdf(prop[j], 0.0, priors_.beta_prior_scale) -
               normal_lpdf(cur_.beta[k][j], 0.0, priors_.beta_prior_scale);
    }
    for (std::size_t i = 0; i < n_; ++i) {
      const auto& b = panel_.borrowers[i];
      auto& c = caches_[i];
      auto& eta_s = scratch_eta_[i];
      auto& le_s = scratch_le0_[i];
      for (std::size_t t = 0; t < b.n_weeks(); ++t) {
        eta_s[t] = dot(b.covariates.row(t), prop);
        le_s[t] = emission_log_pmf_at_log_rate(b.counts[t], eta_s[t] + c.re[t], c.lgam[t]);
      }
      cand_blik_[i] = (k == 0) ? borrower_loglik(i, le_s, c.le[1])
                               : borrower_loglik(i, c.le[0], le_s);
      delta += cand_blik_[i] - c.loglik;
    }
    const bool accepted = metropolis_accept(delta);
    if (accepted) {
      cur_.beta[k] = std::move(prop);
      for (std::size_t i = 0; i < n_; ++i) {
        auto& c = caches_[i];
        std::swap(c.eta[k], scratch_eta_[i]);
        std::swap(c.le[k], scratch_le0_[i]);
        c.loglik = cand_blik_[i];
      }
    }
    s_beta_[k].record(accepted, adapting_, cfg_.target_accept, cfg_.adapt_window);
  }

  void update_u() {
    const bool hmm = kind_ == ModelKind::MePoissonHmm;
    for (std::size_t i = 0; i < n_; ++i) {
      const auto& b = panel_.borrowers[i];
      auto& c = caches_[i];
      std::vector<double> prop = cur_.u[i];
      const double scale = s_u_[i].scale();
      for (std::size_t j = 0; j < q_; ++j) prop[j] += scale * rng_.normal();

      double delta = 0.0;
      for (std::size_t j = 0; j < q_; ++j) {
        delta += normal_lpdf(prop[j], 0.0, cur_.sigma_u[j]) -
                 normal_lpdf(cur_.u[i][j], 0.0, cur_.sigma_u[j]);
      }
      auto& re_s = scratch_re_[i];
      auto& le0_s = scratch_le0_[i];
      auto& le1_s = scratch_le1_[i];
      for (std::size_t t = 0; t < b.n_weeks(); ++t) {
        re_s[t] = dot(b.re_design.row(t), prop);
        le0_s[t] = emission_log_pmf_at_log_rate(b.counts[t], c.eta[0][t] + re_s[t], c.lgam[t]);
        if (hmm) {
          le1_s[t] =
              emission_log_pmf_at_log_rate(b.counts[t], c.eta[1][t] + re_s[t], c.lgam[t]);
        }
      }
      const double cand = borrower_loglik(i, le0_s, le1_s);
      delta += cand - c.loglik;
      const bool accepted = metropolis_accept(delta);
      if (accepted) {
        cur_.u[i] = std::move(prop);
        std::swap(c.re, re_s);
        std::swap(c.le[0], le0_s);
        if (hmm) std::swap(c.le[1], le1_s);
        c.loglik = cand;
      }
      s_u_[i].record(accepted, adapting_, cfg_.target_accept, cfg_.adapt_window);
    }
  }

  void update_v() {
    for (std::size_t i = 0; i < n_; ++i) {
      auto& c = caches_[i];
      std::array<double, 2> prop = cur_.trans_logit_dev[i];
      const double scale = s_v_[i].scale();
      prop[0] += scale * rng_.normal();
      prop[1] += scale * rng_.normal();

      double delta = 0.0;
      for (int k = 0; k < 2; ++k) {
        delta += normal_lpdf(prop[k], 0.0, cur_.sigma_v) -
                 normal_lpdf(cur_.trans_logit_dev[i][k], 0.0, cur_.sigma_v);
      }
      const TransitionMatrix P =
          TransitionMatrix::from_diagonals(logistic(cur_.trans_logit_mean[0] + prop[0]),
                                           logistic(cur_.trans_logit_mean[1] + prop[1]));
      const double cand = hmm_loglik_cached(c.le[0], c.le[1], P);
      delta += cand - c.loglik;
      const bool accepted = metropolis_accept(delta);
      if (accepted) {
        cur_.trans_logit_dev[i] = prop;
        c.loglik = cand;
      }
      s_v_[i].record(accepted, adapting_, cfg_.target_accept, cfg_.adapt_window);
    }
  }

  void update_mu() {
    std::array<double, 2> prop = cur_.trans_logit_mean;
    const double scale = s_mu_.scale();
    prop[0] += scale * mu_spread_.sd(0) * rng_.normal();
    prop[1] += scale * mu_spread_.sd(1) * rng_.normal();

    double delta = 0.0;
    for (int k = 0; k < 2; ++k) {
      delta += normal_lpdf(prop[k], 0.0, priors_.trans_mean_prior_scale) -
               normal_lpdf(cur_.trans_logit_mean[k], 0.0, priors_.trans_mean_prior_scale);
    }
    for (std::size_t i = 0; i < n_; ++i) {
      const auto& v = cur_.trans_logit_dev[i];
      const TransitionMatrix P = TransitionMatrix::from_diagonals(
          logistic(prop[0] + v[0]), logistic(prop[1] + v[1]));
      cand_blik_[i] = hmm_loglik_cached(caches_[i].le[0], caches_[i].le[1], P);
      delta += cand_blik_[i] - caches_[i].loglik;
    }
    const bool accepted = metropolis_accept(delta);
    if (accepted) {
      cur_.trans_logit_mean = prop;
      for (std::size_t i = 0; i < n_; ++i) caches_[i].loglik = cand_blik_[i];
    }
    s_mu_.record(accepted, adapting_, cfg_.target_accept, cfg_.adapt_window);
  }

  // Scale updates move on the log axis; the +/- (s' - s) term below is the
  // Jacobian of that parameterization. No likelihood terms involved.
  void update_sigma_u() {
    for (std::size_t j = 0; j < q_; ++j) {
      const double s_old = std::log(cur_.sigma_u[j]);
      const double s_new = s_old + s_sigma_u_[j].scale() * rng_.normal();
      const double sig_new = std::exp(s_new);
      double delta = (s_new - s_old) +
                     half_normal_lpdf(sig_new, priors_.sigma_half_normal_scale) -
                     half_normal_lpdf(cur_.sigma_u[j], priors_.sigma_half_normal_scale);
      for (std::size_t i = 0; i < n_; ++i) {
        delta += normal_lpdf(cur_.u[i][j], 0.0, sig_new) -
                 normal_lpdf(cur_.u[i][j], 0.0, cur_.sigma_u[j]);
      }
      const bool accepted = metropolis_accept(delta);
      if (accepted) cur_.sigma_u[j] = sig_new;
      s_sigma_u_[j].record(accepted, adapting_, cfg_.target_accept, cfg_.adapt_window);
    }
  }

  void update_sigma_v() {
    const double s_old = std::log(cur_.sigma_v);
    const double s_new = s_old + s_sigma_v_.scale() * rng_.normal();
    const double sig_new = std::exp(s_new);
    double delta = (s_new - s_old) +
                   half_normal_lpdf(sig_new, priors_.sigma_half_normal_scale) -
                   half_normal_lpdf(cur_.sigma_v, priors_.sigma_half_normal_scale);
    for (const auto& v : cur_.trans_logit_dev) {
      for (int k = 0; k < 2; ++k) {
        delta += normal_lpdf(v[k], 0.0, sig_new) - normal_lpdf(v[k], 0.0, cur_.sigma_v);
      }
    }
    const bool accepted = metropolis_accept(delta);
    if (accepted) cur_.sigma_v = sig_new;
    s_sigma_v_.record(accepted, adapting_, cfg_.target_accept, cfg_.adapt_window);
  }

  void store(ChainOutput& out, int sweep) {
    const double lp = total_loglik() + (kind_ == ModelKind::MePoissonHmm
                                            ? log_prior(cur_, priors_)
                                            : glmm_log_prior(cur_, priors_));
    ModelParameters draw = cur_;
    if (kind_ == ModelKind::MePoissonHmm) {
      relabel_to_identified(draw);
    } else {
      draw.beta[1] = draw.beta[0];
    }
    out.draws.push_back(std::move(draw));
    out.iterations.push_back(sweep);
    out.log_posterior_trace.push_back(lp);
  }

  void collect_rates(ChainOutput& out) const {
    auto pair_of = [](const AdaptiveScale& s) { return std::make_pair(s.accepts, s.trials); };
    out.beta_rates[0] = pair_of(s_beta_[0]);
    out.beta_rates[1] = pair_of(s_beta_[1]);
    out.mu_rate = pair_of(s_mu_);
    out.sigma_v_rate = pair_of(s_sigma_v_);
    out.u_rates.reserve(n_);
    out.v_rates.reserve(n_);
    for (const auto& s : s_u_) out.u_rates.push_back(pair_of(s));
    for (const auto& s : s_v_) out.v_rates.push_back(pair_of(s));
    for (const auto& s : s_sigma_u_) out.sigma_u_rates.push_back(pair_of(s));
  }

  const PanelDataset& panel_;
  const PriorConfig& priors_;
  const McmcConfig& cfg_;
  ModelKind kind_;
  int chain_id_;
  Rng rng_;
  ModelParameters cur_;
  std::size_t n_, p_, q_;
  bool adapting_ = true;

  std::vector<BorrowerCache> caches_;
  std::vector<std::vector<double>> scratch_eta_, scratch_le0_, scratch_le1_, scratch_re_;
  std::vector<double> cand_blik_;

  std::array<ComponentSpread, 2> beta_spread_;
  ComponentSpread mu_spread_;
  std::array<AdaptiveScale, 2> s_beta_;
  AdaptiveScale s_mu_, s_sigma_v_;
  std::vector<AdaptiveScale> s_u_, s_v_, s_sigma_u_;
};

ModelParameters initial_parameters(const PanelDataset& panel, const PriorConfig& priors,
                                   ModelKind kind) {
  const std::size_t N = panel.n_borrowers();
  const std::size_t p = panel.n_covariates();
  const std::size_t q = panel.n_random_effects();

  std::vector<double> means(N);
  for (std::size_t i = 0; i < N; ++i) {
    const auto& b = panel.borrowers[i];
    double s = 0.0;
    for (int y : b.counts) s += y;
    means[i] = s / static_cast<double>(b.n_weeks());
  }
  std::sort(means.begin(), means.end());
  const std::size_t half = std::max<std::size_t>(1, N / 2);
  auto section_mean = [&](std::size_t lo, std::size_t hi) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += means[i];
    return std::max(s / static_cast<double>(hi - lo), 0.01);
  };

  ModelParameters init;
  init.beta[0].assign(p, 0.0);
  init.beta[1].assign(p, 0.0);
  if (kind == ModelKind::MePoissonHmm) {
    // Intercepts at the log means of the low/high halves of the per-borrower
    // count averages; starts the chain near the identified labeling.
    init.beta[0][0] = std::log(section_mean(0, half));
    init.beta[1][0] = std::log(section_mean(N - std::max<std::size_t>(1, N - half), N));
  } else {
    init.beta[0][0] = std::log(section_mean(0, N));
    init.beta[1][0] = init.beta[0][0];
  }
  init.u.assign(N, std::vector<double>(q, 0.0));
  init.sigma_u.assign(q, priors.sigma_half_normal_scale);
  init.trans_logit_mean = {0.0, 0.0};
  init.trans_logit_dev.assign(N, {0.0, 0.0});
  init.sigma_v = priors.sigma_half_normal_scale;
  return init;
}

void validate_config(const McmcConfig& cfg) {
  if (cfg.chains < 1) throw ValidationError("mcmc: chains must be >= 1");
  if (cfg.iterations < 1) throw ValidationError("mcmc: iterations must be >= 1");
  if (cfg.burn_in < 0 || cfg.burn_in >= cfg.iterations) {
    throw ValidationError("mcmc: burn_in must be in [0, iterations)");
  }
  if (cfg.thinning < 1) throw ValidationError("mcmc: thinning must be >= 1");
  if (cfg.adapt_window < 1) throw ValidationError("mcmc: adapt_window must be >= 1");
  if (!(cfg.target_accept > 0.0 && cfg.target_accept < 1.0)) {
    throw ValidationError("mcmc: target_accept must be in (0,1)");
  }
  if ((cfg.iterations - cfg.burn_in) / cfg.thinning < 1) {
    throw ValidationError("mcmc: configuration leaves zero post-burn-in draws");
  }
}

PosteriorSamples run_sampler(const PanelDataset& panel, const PriorConfig& priors,
                             const McmcConfig& cfg, ModelKind kind) {
  validate_panel(panel);
  validate_config(cfg);

  const ModelParameters init = initial_parameters(panel, priors, kind);
  validate_compatible(panel, init);
  {
    const double lp0 = (kind == ModelKind::MePoissonHmm)
                           ? log_posterior(init, panel, priors)
                           : panel_loglik(panel, init) + glmm_log_prior(init, priors);
    if (!std::isfinite(lp0)) {
      throw InitError("mcmc: log-posterior is not finite at the initial point");
    }
  }

  std::vector<ChainOutput> outputs(cfg.chains);
  std::vector<std::exception_ptr> failures(cfg.chains);
  const int max_threads = cfg.threads > 0 ? cfg.threads : cfg.chains;
  std::counting_semaphore<> gate(std::max(1, max_threads));
  std::vector<std::thread> workers;
  workers.reserve(cfg.chains);
  for (int c = 0; c < cfg.chains; ++c) {
    workers.emplace_back([&, c]() {
      gate.acquire();
      try {
        ChainRunner runner(panel, priors, cfg, kind, c, init);
        outputs[c] = runner.run();
      } catch (...) {
        failures[c] = std::current_exception();
      }
      gate.release();
    });
  }
  for (auto& w : workers) w.join();
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  PosteriorSamples samples;
  samples.model = kind;
  samples.n_borrowers = panel.n_borrowers();
  samples.n_covariates = panel.n_covariates();
  samples.n_random_effects = panel.n_random_effects();
  for (int c = 0; c < cfg.chains; ++c) {
    auto& o = outputs[c];
    for (std::size_t d = 0; d < o.draws.size(); ++d) {
      samples.draws.push_back(std::move(o.draws[d]));
      samples.chain_ids.push_back(c);
      samples.iterations.push_back(o.iterations[d]);
      samples.log_posterior_trace.push_back(o.log_posterior_trace[d]);
    }
  }

  // Pool accept counts across chains.
  auto pooled = [&](auto&& extract) {
    long acc = 0, tri = 0;
    for (const auto& o : outputs) {
      const auto [a, t] = extract(o);
      acc += a;
      tri += t;
    }
    return tri > 0 ? static_cast<double>(acc) / static_cast<double>(tri) : 0.0;
  };
  auto pooled_group = [&](auto&& member, const char* label) {
    const std::size_t n = member(outputs[0]).size();
    double lo = 1.0, hi = 0.0, sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = pooled([&](const ChainOutput& o) { return member(o)[i]; });
      lo = std::min(lo, r);
      hi = std::max(hi, r);
      sum += r;
    }
    samples.acceptance_rates.emplace_back(std::string(label) + ".min", lo);
    samples.acceptance_rates.emplace_back(std::string(label) + ".mean",
                                          sum / static_cast<double>(n));
    samples.acceptance_rates.emplace_back(std::string(label) + ".max", hi);
  };

  const auto& mask = cfg.update_mask;
  if (mask.beta1) {
    samples.acceptance_rates.emplace_back(
        "beta1", pooled([](const ChainOutput& o) { return o.beta_rates[0]; }));
  }
  if (kind == ModelKind::MePoissonHmm && mask.beta2) {
    samples.acceptance_rates.emplace_back(
        "beta2", pooled([](const ChainOutput& o) { return o.beta_rates[1]; }));
  }
  if (mask.u) pooled_group([](const ChainOutput& o) -> const auto& { return o.u_rates; }, "u");
  if (kind == ModelKind::MePoissonHmm && mask.v) {
    pooled_group([](const ChainOutput& o) -> const auto& { return o.v_rates; }, "v");
  }
  if (kind == ModelKind::MePoissonHmm && mask.mu) {
    samples.acceptance_rates.emplace_back(
        "mu", pooled([](const ChainOutput& o) { return o.mu_rate; }));
  }
  if (mask.sigma_u) {
    pooled_group([](const ChainOutput& o) -> const auto& { return o.sigma_u_rates; },
                 "sigma_u");
  }
  if (kind == ModelKind::MePoissonHmm && mask.sigma_v) {
    samples.acceptance_rates.emplace_back(
        "sigma_v", pooled([](const ChainOutput& o) { return o.sigma_v_rate; }));
  }
  return samples;
}

}  // namespace

PosteriorSamples run_mcmc(const PanelDataset& panel, const PriorConfig& priors,
                          const McmcConfig& config) {
  return run_sampler(panel, priors, config, ModelKind::MePoissonHmm);
}

PosteriorSamples fit_me_poisson(const PanelDataset& panel, const PriorConfig& priors,
                                const McmcConfig& config) {
  return run_sampler(panel, priors, config, ModelKind::MePoisson);
}

std::vector<ParameterView> parameter_views(ModelKind kind, std::size_t n_borrowers,
                                           std::size_t n_covariates,
                                           std::size_t n_random_effects) {
  std::vector<ParameterView> views;
  const bool hmm = kind == ModelKind::MePoissonHmm;

  auto add = [&](std::string name, auto&& ref) {
    ParameterView v;
    v.name = std::move(name);
    v.get = [ref](const ModelParameters& p) { return ref(const_cast<ModelParameters&>(p)); };
    v.set = [ref](ModelParameters& p, double x) { ref(p) = x; };
    views.push_back(std::move(v));
  };

  const int n_states = hmm ? 2 : 1;
  for (int k = 0; k < n_states; ++k) {
    for (std::size_t j = 0; j < n_covariates; ++j) {
      add("beta[" + std::to_string(k + 1) + "][" + std::to_string(j + 1) + "]",
          [k, j](ModelParameters& p) -> double& { return p.beta[k][j]; });
    }
  }
  for (std::size_t i = 0; i < n_borrowers; ++i) {
    if (n_random_effects == 1) {
      add("u[" + std::to_string(i + 1) + "]",
          [i](ModelParameters& p) -> double& { return p.u[i][0]; });
    } else {
      for (std::size_t j = 0; j < n_random_effects; ++j) {
        add("u[" + std::to_string(i + 1) + "][" + std::to_string(j + 1) + "]",
            [i, j](ModelParameters& p) -> double& { return p.u[i][j]; });
      }
    }
  }
  if (hmm) {
    for (std::size_t i = 0; i < n_borrowers; ++i) {
      for (int k = 0; k < 2; ++k) {
        add("v[" + std::to_string(i + 1) + "][" + std::to_string(k + 1) + "]",
            [i, k](ModelParameters& p) -> double& { return p.trans_logit_dev[i][k]; });
      }
    }
    add("mu[1]", [](ModelParameters& p) -> double& { return p.trans_logit_mean[0]; });
    add("mu[2]", [](ModelParameters& p) -> double& { return p.trans_logit_mean[1]; });
  }
  if (n_random_effects == 1) {
    add("sigma_u", [](ModelParameters& p) -> double& { return p.sigma_u[0]; });
  } else {
    for (std::size_t j = 0; j < n_random_effects; ++j) {
      add("sigma_u[" + std::to_string(j + 1) + "]",
          [j](ModelParameters& p) -> double& { return p.sigma_u[j]; });
    }
  }
  if (hmm) {
    add("sigma_v", [](ModelParameters& p) -> double& { return p.sigma_v; });
  }
  return views;
}

namespace {

// Split each chain's sequence in half; returns per-half value vectors.
std::vector<std::vector<double>> split_halves(const PosteriorSamples& samples,
                                              const ParameterView& view) {
  std::map<int, std::vector<double>> by_chain;
  for (std::size_t d = 0; d < samples.draws.size(); ++d) {
    by_chain[samples.chain_ids[d]].push_back(view.get(samples.draws[d]));
  }
  std::vector<std::vector<double>> halves;
  for (auto& [id, seq] : by_chain) {
    std::size_t n = seq.size();
    if (n < 2) continue;
    if (n % 2 == 1) {
      seq.pop_back();
      --n;
    }
    halves.emplace_back(seq.begin(), seq.begin() + static_cast<long>(n / 2));
    halves.emplace_back(seq.begin() + static_cast<long>(n / 2), seq.end());
  }
  return halves;
}

double sample_var(std::span<const double> x, double mean) {
  if (x.size() < 2) return 0.0;
  double s = 0.0;
  for (double v : x) s += (v - mean) * (v - mean);
  return s / static_cast<double>(x.size() - 1);
}

double sample_mean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

// Split-chain potential scale reduction, sqrt((W + B/n) / W). Zero
// between-half variance gives exactly 1.
double split_r_hat(const std::vector<std::vector<double>>& halves) {
  if (halves.size() < 2) return 1.0;
  std::vector<double> means;
  double w = 0.0;
  for (const auto& h : halves) {
    const double m = sample_mean(h);
    means.push_back(m);
    w += sample_var(h, m);
  }
  w /= static_cast<double>(halves.size());
  const double b_over_n = sample_var(means, sample_mean(means));
  if (!(w > 0.0)) return 1.0;
  return std::sqrt((w + b_over_n) / w);
}

// Effective sample size via the variogram estimate of the autocorrelation
// sequence with Geyer initial-positive truncation.
double split_ess(const std::vector<std::vector<double>>& halves) {
  if (halves.empty()) return 0.0;
  const std::size_t m = halves.size();
  const std::size_t n = halves.front().size();
  const auto total = static_cast<double>(m * n);
  if (n < 4) return total;

  std::vector<double> means;
  double w = 0.0;
  for (const auto& h : halves) {
    const double mean = sample_mean(h);
    means.push_back(mean);
    w += sample_var(h, mean);
  }
  w /= static_cast<double>(m);
  const double var_plus = w + sample_var(means, sample_mean(means));
  if (!(var_plus > 0.0)) return total;

  double tau = 1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t t = 1; t + 1 < n; t += 2) {
    auto rho_at = [&](std::size_t lag) {
      double vario = 0.0;
      for (const auto& h : halves) {
        for (std::size_t s = 0; s + lag < n; ++s) {
          const double d = h[s] - h[s + lag];
          vario += d * d;
        }
      }
      vario /= static_cast<double>(m * (n - lag));
      return 1.0 - vario / (2.0 * var_plus);
    };
    double pair = rho_at(t) + rho_at(t + 1);
    if (pair < 0.0) break;
    pair = std::min(pair, prev_pair);  // enforce monotone decrease
    prev_pair = pair;
    tau += 2.0 * pair;
  }
  return std::clamp(total / tau, 1.0, total);
}

}  // namespace

PosteriorSummary summarize(const PosteriorSamples& samples) {
  if (samples.draws.size() < 10) {
    throw ValidationError("summarize: need at least 10 draws");
  }
  const auto views = parameter_views(samples.model, samples.n_borrowers,
                                     samples.n_covariates, samples.n_random_effects);
  PosteriorSummary summary;
  summary.parameters.reserve(views.size());
  std::vector<double> values(samples.draws.size());
  for (const auto& view : views) {
    for (std::size_t d = 0; d < samples.draws.size(); ++d) {
      values[d] = view.get(samples.draws[d]);
    }
    ParameterSummary ps;
    ps.name = view.name;
    ps.median = quantile(values, 0.5);
    ps.q75_lo = quantile(values, 0.125);
    ps.q75_hi = quantile(values, 0.875);
    ps.q90_lo = quantile(values, 0.05);
    ps.q90_hi = quantile(values, 0.95);
    summary.parameters.push_back(std::move(ps));

    if (view.name.rfind("beta[", 0) == 0) {
      const auto halves = split_halves(samples, view);
      summary.beta_diagnostics.push_back(
          {view.name, split_r_hat(halves), split_ess(halves)});
    }
  }
  return summary;
}

ModelParameters posterior_median_parameters(const PosteriorSamples& samples) {
  if (samples.draws.empty()) {
    throw ValidationError("posterior_median_parameters: no draws");
  }
  const auto views = parameter_views(samples.model, samples.n_borrowers,
                                     samples.n_covariates, samples.n_random_effects);
  ModelParameters point = samples.draws.front();
  std::vector<double> values(samples.draws.size());
  for (const auto& view : views) {
    for (std::size_t d = 0; d < samples.draws.size(); ++d) {
      values[d] = view.get(samples.draws[d]);
    }
    view.set(point, quantile(values, 0.5));
  }
  if (samples.model == ModelKind::MePoisson) point.beta[1] = point.beta[0];
  return point;
}

}  // namespace mhmm
