// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

// Escape and alignment demonstrations: cost crossover, hybrid memory, the
// neuro-game, and class alignment.

#include <algorithm>
#include <cmath>
#include <limits>

#include "demos.hpp"
#include "hallab/cca.hpp"
#include "hallab/clm.hpp"
#include "hallab/hybrid.hpp"
#include "hallab/metrics.hpp"
#include "hallab/neuro_game.hpp"
#include "hallab/random.hpp"
#include "hallab/svg.hpp"

namespace lab::demos {

using hallab::format_real;
namespace svg = hallab::svg;
namespace clm = hallab::clm;

namespace {

std::string fmt(double v) { return format_real(v); }

clm::CostParams read_costs(Params& p, clm::CostParams fallback) {
  clm::CostParams c;
  c.c_infer = p.real("c_infer", fallback.c_infer);
  c.c_query = p.real("c_query", fallback.c_query);
  c.c_update = p.real("c_update", fallback.c_update);
  c.validate();
  return c;
}

/// First N where the CLM ledger total drops below the RAG ledger total,
/// found by replaying both ledgers event by event.
std::optional<std::uint64_t> ledger_crossover(const clm::CostParams& p, std::uint64_t limit) {
  for (std::uint64_t n = 64;; n *= 2) {
    const auto rag = clm::simulate_rag(n, p);
    const auto lrn = clm::simulate_clm(n, p);
    double cr = 0.0, cc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      cr += rag.rows()[i].total();
      cc += lrn.rows()[i].total();
      if (cc < cr) return lrn.rows()[i].query_index;
    }
    if (n >= limit) return std::nullopt;
  }
}

/// Cost in quarter units, so every sum stays exact in binary64.
double dyadic(hallab::Rng& rng, std::uint64_t max_quarters) {
  return static_cast<double>(1 + hallab::uniform_below(rng, max_quarters)) / 4.0;
}

}  // namespace

// ---- clm-cost --------------------------------------------------------------

PreparedDemo clm_cost(Params& p, std::uint64_t seed) {
  const auto costs = read_costs(p, {1.0, 1.0, 287.0});
  const auto max_n = p.u64("max_n", 600);
  const auto trigger = p.u64("trigger_threshold", 3);
  const auto triples = p.u64("random_triples", 1000);
  if (max_n == 0) p.reject("max_n", "must be positive");
  if (trigger == 0) p.reject("trigger_threshold", "must be positive");

  return [=] {
    DemoResult res;
    const auto n0 = clm::crossover(costs);
    const auto ledger = ledger_crossover(costs, std::uint64_t{1} << 24);
    const auto hybrid_n0 = hallab::hybrid::hybrid_crossover(costs, trigger);
    const auto curve = hallab::hybrid::cost_curve(costs, trigger, max_n);
    res.file("crossover.csv",
             render([&](std::ostream& os) { hallab::hybrid::write_cost_curve_csv(os, curve); }));

    std::ostringstream sum;
    sum << "c_infer,c_query,c_update,trigger_threshold,N0_closed_form,N0_ledger,"
           "hybrid_crossover\n"
        << fmt(costs.c_infer) << ',' << fmt(costs.c_query) << ',' << fmt(costs.c_update) << ','
        << trigger << ',' << n0 << ',' << (ledger ? std::to_string(*ledger) : "none") << ','
        << hybrid_n0 << '\n';
    res.file("crossover_summary.csv", sum.str());

    svg::Series rag{"RAG", {}, {}}, lrn{"CLM", {}, {}}, hyb{"Hybrid", {}, {}};
    std::optional<std::uint64_t> trace_hybrid;
    for (const auto& pt : curve) {
      const auto x = static_cast<double>(pt.n);
      rag.x.push_back(x), rag.y.push_back(pt.rag);
      lrn.x.push_back(x), lrn.y.push_back(pt.clm);
      hyb.x.push_back(x), hyb.y.push_back(pt.hybrid);
      if (!trace_hybrid && pt.hybrid < pt.rag) trace_hybrid = pt.n;
    }
    svg::LineChart chart{"Cumulative cost: retrieval vs internalization", "queries N",
                         "cumulative cost", {rag, lrn, hyb},
                         svg::Marker{static_cast<double>(n0), "N0=" + std::to_string(n0)}};
    res.figure("crossover.svg", svg::render(chart));

    res.check("closed-form-matches-ledger", ledger && *ledger == n0,
              "closed form " + std::to_string(n0) + ", ledger " +
                  (ledger ? std::to_string(*ledger) : "none"));
    if (hybrid_n0 <= max_n) {
      res.check("hybrid-crossover-matches-trace", trace_hybrid && *trace_hybrid == hybrid_n0,
                "closed form " + std::to_string(hybrid_n0));
    }

    hallab::Rng rng(seed);
    std::ostringstream rows;
    rows << "c_infer,c_query,c_update,N0_closed_form,N0_ledger,match\n";
    std::uint64_t agree = 0;
    for (std::uint64_t i = 0; i < triples; ++i) {
      clm::CostParams t;
      t.c_infer = dyadic(rng, 16);
      t.c_query = dyadic(rng, 16);
      t.c_update = dyadic(rng, 256);
      const auto closed = clm::crossover(t);
      const auto sim = ledger_crossover(t, 4096);
      const bool ok = sim && *sim == closed;
      agree += ok;
      rows << fmt(t.c_infer) << ',' << fmt(t.c_query) << ',' << fmt(t.c_update) << ',' << closed
           << ',' << (sim ? std::to_string(*sim) : "none") << ',' << (ok ? 1 : 0) << '\n';
    }
    res.file("random_triples.csv", rows.str());
    res.check("random-triples-match-ledger", agree == triples,
              std::to_string(agree) + "/" + std::to_string(triples));
    return res;
  };
}

// ---- hybrid ----------------------------------------------------------------

PreparedDemo hybrid(Params& p, std::uint64_t seed) {
  hallab::hybrid::ScenarioConfig cfg;
  cfg.facts = p.u64("facts", cfg.facts);
  cfg.symbols = p.u64("symbols", cfg.symbols);
  cfg.zipf_s = p.real("zipf_s", cfg.zipf_s);
  cfg.rho = p.real("rho", cfg.rho);
  cfg.warmup_queries = p.u64("warmup_queries", cfg.warmup_queries);
  cfg.eval_queries = p.u64("eval_queries", cfg.eval_queries);
  cfg.hybrid.trigger_threshold = p.u64("trigger_threshold", cfg.hybrid.trigger_threshold);
  cfg.hybrid.w_high = p.real("w_high", cfg.hybrid.w_high);
  cfg.hybrid.w_low = p.real("w_low", cfg.hybrid.w_low);
  cfg.lossy_fact_cap = p.u64("lossy_fact_cap", cfg.lossy_fact_cap);
  cfg.costs = read_costs(p, cfg.costs);
  const auto bars = p.u64("reliance_bars", 16);
  cfg.seed = seed;
  cfg.validate();

  return [=] {
    using clm::Strategy;
    DemoResult res;
    const auto r = hallab::hybrid::run_scenario(cfg);
    res.file("strategy_table.csv", render([&](std::ostream& os) {
               hallab::hybrid::write_strategy_table_csv(os, r.rows);
             }));
    res.file("reliance.csv", render([&](std::ostream& os) {
               hallab::hybrid::write_reliance_csv(os, r.reliance);
             }));

    svg::BarChart chart{"Reliance on retrieved context around internalization", "reliance score",
                        {}, {{"before", {}}, {"after", {}}}};
    for (std::size_t i = 0; i < std::min<std::size_t>(bars, r.reliance.size()); ++i) {
      chart.categories.push_back(r.reliance[i].input);
      chart.groups[0].values.push_back(r.reliance[i].reliance_before);
      chart.groups[1].values.push_back(r.reliance[i].reliance_after);
    }
    res.figure("reliance.svg", svg::render(chart));

    const auto& rag = r.row(Strategy::kPureRag);
    const auto& hyb = r.row(Strategy::kHybrid);
    const auto& lossy = r.row(Strategy::kLossyPureClm);
    res.check("forgetting-ordering",
              rag.forgetting == 0.0 && rag.forgetting <= hyb.forgetting &&
                  hyb.forgetting < lossy.forgetting,
              "rag " + fmt(rag.forgetting) + ", hybrid " + fmt(hyb.forgetting) + ", lossy " +
                  fmt(lossy.forgetting));
    res.check("robustness-ordering", hyb.robustness > rag.robustness,
              "hybrid " + fmt(hyb.robustness) + " vs rag " + fmt(rag.robustness));
    res.check("uniform-rag-accuracy-exact", r.uniform_rag_accuracy == 1.0 - cfg.rho,
              "measured " + fmt(r.uniform_rag_accuracy) + ", 1 - rho = " + fmt(1.0 - cfg.rho));
    const bool drops = !r.reliance.empty() &&
                       std::all_of(r.reliance.begin(), r.reliance.end(), [](const auto& e) {
                         return e.reliance_after < e.reliance_before;
                       });
    res.check("reliance-drops-at-internalization", drops,
              std::to_string(r.reliance.size()) + " events");
    res.check("ledger-consistent", r.ledger.consistent());
    return res;
  };
}

// ---- neuro-game ------------------------------------------------------------

PreparedDemo neuro_game(Params& p, std::uint64_t seed) {
  hallab::neuro::GameConfig cfg;
  cfg.latent_dim = p.i32("latent_dim", cfg.latent_dim);
  cfg.sigma2 = p.real("sigma2", cfg.sigma2);
  cfg.beta = p.real("beta", cfg.beta);
  cfg.cortical_learn_rate = p.real("cortical_learn_rate", cfg.cortical_learn_rate);
  cfg.cortical_steps = p.i32("cortical_steps", cfg.cortical_steps);
  cfg.timescale_ratio = p.i32("timescale_ratio", cfg.timescale_ratio);
  cfg.hippocampal_learn_rate = p.real("hippocampal_learn_rate", cfg.hippocampal_learn_rate);
  cfg.consolidation_steps = p.i32("consolidation_steps", cfg.consolidation_steps);
  cfg.consolidation_learn_rate = p.real("consolidation_learn_rate", cfg.consolidation_learn_rate);
  cfg.consolidate_every = p.i32("consolidate_every", cfg.consolidate_every);
  cfg.replay_size = p.i32("replay_size", cfg.replay_size);
  cfg.exception_quantile = p.real("exception_quantile", cfg.exception_quantile);
  cfg.tol = p.real("tol", cfg.tol);
  cfg.max_rounds = p.i32("max_rounds", cfg.max_rounds);
  cfg.init_scale = p.real("init_scale", cfg.init_scale);
  cfg.seed = seed;
  cfg.validate();
  const int points = p.i32("points", 100);
  const int dim = p.i32("dim", 2);
  const double separation = p.real("separation", 1.0);
  const double spread = p.real("spread", 0.5);
  const auto task_seed = p.u64("task_seed", 7);
  const int directions = p.i32("stability_directions", 20);
  const double norm = p.real("stability_norm", 1e-3);
  const auto samples = p.u64("elbo_samples", 1000);
  if (points < 2) p.reject("points", "need at least 2");
  if (dim < 1) p.reject("dim", "must be positive");
  if (cfg.latent_dim > dim) p.reject("latent_dim", "cannot exceed dim");
  if (!(spread > 0.0)) p.reject("spread", "must be positive");
  if (directions < 1) p.reject("stability_directions", "must be positive");
  if (!(norm > 0.0)) p.reject("stability_norm", "must be positive");

  return [=] {
    namespace nn = hallab::neuro;
    DemoResult res;
    auto state = nn::initial_state(nn::two_cluster_task(points, dim, separation, spread, task_seed),
                                   cfg);
    const auto report = nn::solve_hne(state, cfg);
    res.file("reward_trace.csv", render([&](std::ostream& os) {
               nn::write_reward_trace_csv(os, report.trace);
             }));
    const auto stab = nn::check_stability(state, directions, norm, seed);
    std::ostringstream st;
    st << "directions,norm,max_gain_g,max_gain_h,max_gain_e\n"
       << directions << ',' << fmt(norm) << ',' << fmt(stab.max_gain_g) << ','
       << fmt(stab.max_gain_h) << ',' << fmt(stab.max_gain_e) << '\n';
    res.file("stability.csv", st.str());
    const auto snap = nn::export_snapshot(
        state.cortex, hallab::OutputSpace::numbered(static_cast<std::size_t>(state.task.classes), "c"));
    const auto& bytes = snap.descriptor_bytes();
    res.file("cortex_snapshot.bin", std::string(bytes.begin(), bytes.end()));

    // The ELBO lower-bounds the exact marginal everywhere, not just on data.
    hallab::Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::uint64_t below = 0;
    double worst = -std::numeric_limits<double>::infinity();
    for (std::uint64_t i = 0; i < samples; ++i) {
      Eigen::VectorXd x(dim);
      for (int j = 0; j < dim; ++j) x(j) = 2.0 * hallab::standard_normal(rng);
      const double gap = nn::elbo(state.cortex, x) - nn::log_marginal(state.cortex, x);
      worst = std::max(worst, gap);
      below += gap <= 1e-9;
    }

    res.check("converged", report.converged && report.rounds <= cfg.max_rounds,
              std::to_string(report.rounds) + " rounds, final change " +
                  fmt(report.final_change));
    res.check("perturbation-stable", stab.stable(cfg.tol),
              "gains g " + fmt(stab.max_gain_g) + ", h " + fmt(stab.max_gain_h) + ", e " +
                  fmt(stab.max_gain_e));
    res.check("elbo-below-marginal", below == samples, "max gap " + fmt(worst));
    return res;
  };
}

// ---- cca -------------------------------------------------------------------

namespace {

struct CcaCase {
  std::string name;
  hallab::cca::TaskProfile task;
  hallab::cca::ComputationalClass system;
  std::string expect;  // status or reason name
  std::optional<clm::CostParams> costs;
  std::string expect_strategy;
};

std::string verdict_label(const hallab::cca::Verdict& v) {
  if (v.status == hallab::cca::Status::kAligned) return "Aligned";
  return std::string(hallab::cca::to_string(*v.reason));
}

CcaCase parse_case(const json& j, const std::string& where) {
  Params c(j, where);
  CcaCase out;
  out.name = c.str("name", "");
  if (out.name.empty()) c.reject("name", "is required");
  {
    Params t(c.raw("task"), where + ".task");
    out.task.info_demand_bits = t.u64("info_demand_bits", 0);
    out.task.required_oracles = t.str_set("required_oracles");
    out.task.self_referential = t.boolean("self_referential", false);
    out.task.recurrence = t.u64("recurrence", 1);
    t.finish();
    out.task.validate();
  }
  {
    Params s(c.raw("system"), where + ".system");
    const auto base = s.str("base", "static");
    const auto cap = s.u64("capacity_bits", 0);
    if (base == "static") {
      out.system = hallab::cca::ComputationalClass::static_class(cap);
    } else if (base == "adaptive") {
      out.system = hallab::cca::ComputationalClass::adaptive(cap, s.optional_u64("update_budget_bits"));
    } else {
      s.reject("base", "expected static or adaptive");
    }
    out.system = out.system.with_oracles(s.str_set("oracles"));
    s.finish();
  }
  out.expect = c.str("expect", "");
  static const std::set<std::string> labels{"Aligned", "MissingOracle", "SelfReferential",
                                            "CapacityShortfall"};
  if (!labels.contains(out.expect)) c.reject("expect", "unknown verdict '" + out.expect + "'");
  if (c.has("costs")) {
    Params k(c.raw("costs"), where + ".costs");
    out.costs = read_costs(k, {});
    k.finish();
  }
  out.expect_strategy = c.str("expect_strategy", "");
  if (!out.expect_strategy.empty() && !out.costs) c.reject("expect_strategy", "needs costs");
  c.finish();
  return out;
}

const std::vector<std::string> kOracleIds{"halting", "fact-store", "clock"};

std::set<std::string> random_subset(hallab::Rng& rng) {
  std::set<std::string> out;
  for (const auto& id : kOracleIds) {
    if (hallab::uniform_below(rng, 3) == 0) out.insert(id);
  }
  return out;
}

}  // namespace

PreparedDemo cca(Params& p, std::uint64_t seed) {
  std::vector<CcaCase> cases;
  const auto& list = p.raw("cases");
  if (!list.is_array()) p.reject("cases", "expected an array");
  for (std::size_t i = 0; i < list.size(); ++i) {
    cases.push_back(parse_case(list[i], p.where() + ".cases[" + std::to_string(i) + "]"));
  }
  const auto random_cases = p.u64("random_cases", 10000);
  const auto cost_triples = p.u64("cost_triples", 1000);

  return [=] {
    namespace cc = hallab::cca;
    DemoResult res;
    std::ostringstream jsonl, table;
    table << "case,status,reason,expected,match,strategy,crossover\n";
    std::size_t matched = 0, strat_checked = 0, strat_matched = 0;
    for (const auto& c : cases) {
      auto v = cc::align(c.task, c.system);
      const auto label = verdict_label(v);
      const bool ok = label == c.expect;
      matched += ok;
      if (v.status == cc::Status::kMisaligned) v = cc::abstain_message(v);
      auto rec = json::parse(cc::to_record(v));
      json line;
      line["case"] = c.name;
      line["verdict"] = rec;
      std::string strategy, cross;
      if (c.costs) {
        const auto r = cc::recommend_strategy(c.task, *c.costs);
        strategy = std::string(clm::to_string(r.strategy));
        cross = std::to_string(r.crossover);
        line["recommendation"] = {{"strategy", strategy}, {"crossover", r.crossover},
                                  {"rationale", r.rationale}};
        if (!c.expect_strategy.empty()) {
          ++strat_checked;
          strat_matched += strategy == c.expect_strategy;
        }
      }
      jsonl << line.dump() << '\n';
      table << hallab::csv_field(c.name) << ',' << cc::to_string(v.status) << ','
            << (v.reason ? std::string(cc::to_string(*v.reason)) : "") << ',' << c.expect << ','
            << (ok ? 1 : 0) << ',' << strategy << ',' << cross << '\n';
    }
    res.file("verdicts.jsonl", jsonl.str());
    res.file("verdicts.csv", table.str());
    res.check("cases-match-expectations", matched == cases.size(),
              std::to_string(matched) + "/" + std::to_string(cases.size()));
    if (strat_checked > 0) {
      res.check("strategies-match-expectations", strat_matched == strat_checked,
                std::to_string(strat_matched) + "/" + std::to_string(strat_checked));
    }

    // Monotonicity over random lattice-ordered pairs A <= B.
    hallab::Rng rng(seed);
    std::uint64_t ordered = 0, monotone = 0;
    for (std::uint64_t i = 0; i < random_cases; ++i) {
      cc::TaskProfile t;
      t.info_demand_bits = hallab::uniform_below(rng, 3000);
      t.required_oracles = random_subset(rng);
      t.self_referential = hallab::uniform_below(rng, 5) == 0;
      t.recurrence = 1 + hallab::uniform_below(rng, 1000);
      const auto cap_a = hallab::uniform_below(rng, 2000);
      const bool adaptive_a = hallab::uniform_below(rng, 2) == 0;
      std::optional<std::uint64_t> budget_a;
      if (hallab::uniform_below(rng, 2) == 0) budget_a = hallab::uniform_below(rng, 1000);
      auto a = adaptive_a ? cc::ComputationalClass::adaptive(cap_a, budget_a)
                          : cc::ComputationalClass::static_class(cap_a);
      a = a.with_oracles(random_subset(rng));
      const auto cap_b = cap_a + hallab::uniform_below(rng, 500);
      const bool adaptive_b = adaptive_a || hallab::uniform_below(rng, 2) == 0;
      std::optional<std::uint64_t> budget_b;
      if (adaptive_b) {
        if (hallab::uniform_below(rng, 3) != 0) {
          budget_b = (adaptive_a && budget_a ? *budget_a : 0) + hallab::uniform_below(rng, 1000);
        }
        if (adaptive_a && !budget_a) budget_b = std::nullopt;
      }
      auto b = adaptive_b ? cc::ComputationalClass::adaptive(cap_b, budget_b)
                          : cc::ComputationalClass::static_class(cap_b);
      auto oracles_b = a.oracles;
      for (const auto& id : random_subset(rng)) oracles_b.insert(id);
      b = b.with_oracles(oracles_b);
      if (!cc::class_leq(a, b)) continue;
      ++ordered;
      const bool a_ok = cc::align(t, a).status == cc::Status::kAligned;
      const bool b_ok = cc::align(t, b).status == cc::Status::kAligned;
      monotone += !a_ok || b_ok;
    }
    res.check("align-monotone", ordered == random_cases && monotone == ordered,
              std::to_string(monotone) + "/" + std::to_string(ordered) + " ordered pairs");

    // The recommendation flips exactly at the crossover.
    std::uint64_t exact = 0;
    for (std::uint64_t i = 0; i < cost_triples; ++i) {
      clm::CostParams k;
      k.c_infer = dyadic(rng, 16);
      k.c_query = dyadic(rng, 16);
      k.c_update = dyadic(rng, 1024);
      const auto n0 = clm::crossover(k);
      cc::TaskProfile t;
      t.recurrence = n0;
      const auto at = cc::recommend_strategy(t, k);
      bool ok = at.crossover == n0 && at.strategy == clm::Strategy::kClm;
      if (n0 > 1) {
        t.recurrence = n0 - 1;
        ok &= cc::recommend_strategy(t, k).strategy == clm::Strategy::kPureRag;
      }
      exact += ok;
    }
    res.check("recommend-threshold-equals-crossover", exact == cost_triples,
              std::to_string(exact) + "/" + std::to_string(cost_triples));
    return res;
  };
}

}  // namespace lab::demos
