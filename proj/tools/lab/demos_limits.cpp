// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

// Boundary demonstrations: diagonal, halting, pumping, and the oracle escape.

#include <algorithm>
#include <cmath>
#include <limits>

#include "demos.hpp"
#include "hallab/diagonal.hpp"
#include "hallab/enumeration.hpp"
#include "hallab/halting.hpp"
#include "hallab/metrics.hpp"
#include "hallab/oracle_escape.hpp"
#include "hallab/pumping.hpp"
#include "hallab/clm.hpp"
#include "hallab/random.hpp"
#include "hallab/svg.hpp"

namespace lab::demos {

using hallab::format_real;
namespace svg = hallab::svg;

namespace {

std::string fmt(double v) { return format_real(v); }

}  // namespace

// ---- diagonal --------------------------------------------------------------

PreparedDemo diagonal(Params& p, std::uint64_t) {
  const auto symbols = p.u64("symbols", 16);
  const auto q = p.u32("q", hallab::kDefaultQuantization);
  const auto cells = p.optional_u64("cells");
  const auto window = p.u64("matrix_cells", 12);
  const auto cap = p.u64("cap", hallab::kDefaultEnumerationCap);
  if (symbols < 2) p.reject("symbols", "need at least 2 output symbols");
  if (q == 0) p.reject("q", "must be positive");
  if (window == 0) p.reject("matrix_cells", "must be positive");
  const auto family = hallab::composition_count(q, symbols);
  if (family > cap) {
    p.reject("q", "enumeration of " + std::to_string(family) + " cells exceeds cap " +
                      std::to_string(cap));
  }
  if (cells && (*cells == 0 || *cells > family)) {
    p.reject("cells", "must be in [1, " + std::to_string(family) + "]");
  }

  return [=] {
    DemoResult res;
    const auto space = hallab::OutputSpace::numbered(symbols);
    const auto scn = hallab::diagonal::DiagonalScenario::from_enumeration(space, q, cells, cap);
    const auto truth = hallab::diagonal::build_adversarial_truth(scn);
    const auto reports = hallab::diagonal::verify_diagonal(scn, truth);

    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    std::size_t violated = 0;
    for (const auto& r : reports) {
      lo = std::min(lo, r.value);
      hi = std::max(hi, r.value);
      violated += r.violated;
    }
    const double bound = 1.0 / static_cast<double>(symbols);
    const auto escaped = reports.size() - violated;

    std::ostringstream sum;
    sum << "cells,symbols,q,lower_bound,min_h_stray,max_h_stray,epsilon,violated,escaped\n"
        << reports.size() << ',' << symbols << ',' << q << ',' << fmt(bound) << ',' << fmt(lo)
        << ',' << fmt(hi) << ',' << fmt(scn.epsilon()) << ',' << violated << ',' << escaped
        << '\n';
    res.file("diagonal_summary.csv", sum.str());

    const auto shown = std::min<std::uint64_t>(window, reports.size());
    const auto small = hallab::diagonal::DiagonalScenario::from_enumeration(space, q, shown, cap);
    const auto small_truth = hallab::diagonal::build_adversarial_truth(small);
    res.file("diagonal_matrix.csv", render([&](std::ostream& os) {
               hallab::diagonal::write_diagonal_matrix_csv(os, small, small_truth);
             }));
    const auto small_reports = hallab::diagonal::verify_diagonal(small, small_truth);
    res.file("diagonal_reports.csv", render([&](std::ostream& os) {
               hallab::write_reports_csv(os, small_reports);
             }));

    res.check("min-stray-at-least-inverse-space", lo >= bound,
              "min " + fmt(lo) + " vs 1/|Y| = " + fmt(bound) + " over " +
                  std::to_string(reports.size()) + " cells");
    res.check("every-cell-violated", escaped == 0,
              std::to_string(violated) + "/" + std::to_string(reports.size()) + " violated");
    return res;
  };
}

// ---- halting ---------------------------------------------------------------

namespace {

std::string label_answer(const hallab::halting::Program& prog) {
  return std::holds_alternative<hallab::halting::NeverHalts>(prog.label())
             ? std::string(hallab::halting::kDoesntHalt)
             : std::string(hallab::halting::kHalts);
}

bool some_family_fully_violated(const hallab::halting::FailureDemo& d) {
  return d.slow_family_violated || d.never_family_violated;
}

}  // namespace

PreparedDemo halting(Params& p, std::uint64_t seed) {
  hallab::halting::BudgetSimulatorSpec spec;
  spec.budget = p.u32("budget", 1000);
  spec.confidence = p.real("confidence", 1.0);
  const auto fb = p.real_list("fallback", {0.5, 0.5});
  if (fb.size() != 2) p.reject("fallback", "expected two probabilities");
  spec.fallback = hallab::Dist(fb);
  const auto random_fallbacks = p.u64("random_fallbacks", 100);
  const auto per_family = p.u64("per_family", 16);
  const double tau = p.real("tau", hallab::kDefaultDistortTau);
  hallab::halting::make_budget_simulator(spec);  // validates budget and confidence
  if (per_family == 0) p.reject("per_family", "must be positive");
  if (!(tau >= 0.0 && tau < std::log(2.0))) p.reject("tau", "must lie in [0, ln 2)");

  return [=] {
    using namespace hallab::halting;
    DemoResult res;
    const auto h = make_budget_simulator(spec);
    const auto demo = demonstrate_failure(h, tau, per_family);
    // Programs are labeled by family and index; their text is multi-line.
    std::vector<hallab::HallucinationReport> reports;
    for (std::size_t i = 0; i < demo.slow_reports.size(); ++i) {
      reports.push_back(demo.slow_reports[i]);
      reports.back().input = "SlowHalt#" + std::to_string(i);
    }
    for (std::size_t i = 0; i < demo.never_reports.size(); ++i) {
      reports.push_back(demo.never_reports[i]);
      reports.back().input = "NeverHalt#" + std::to_string(i);
    }
    res.file("halting_reports.csv",
             render([&](std::ostream& os) { hallab::write_reports_csv(os, reports); }));
    res.check("beyond-budget-family-violated", some_family_fully_violated(demo),
              std::string("slow ") + (demo.slow_family_violated ? "all" : "not all") +
                  ", never " + (demo.never_family_violated ? "all" : "not all"));

    hallab::Rng rng(seed);
    std::uint64_t held = 0;
    for (std::uint64_t i = 0; i < random_fallbacks; ++i) {
      auto s = spec;
      const double p0 = hallab::uniform01(rng);
      s.fallback = hallab::Dist({p0, 1.0 - p0});
      held += some_family_fully_violated(demonstrate_failure(make_budget_simulator(s), tau,
                                                             per_family));
    }
    res.check("random-fallbacks-violated", held == random_fallbacks,
              std::to_string(held) + "/" + std::to_string(random_fallbacks));

    // Decider built from h plus the exception set is exact.
    std::map<std::string, std::string> exceptions;
    struct Row {
      std::string family;
      const Program* prog;
    };
    const auto fast = make_program_family(FamilyKind::kFastHalt, spec.budget, per_family);
    const auto slow = make_program_family(FamilyKind::kSlowHalt, spec.budget, per_family);
    const auto never = make_program_family(FamilyKind::kNeverHalt, spec.budget, per_family);
    std::vector<Row> rows;
    for (const auto& pr : fast) rows.push_back({"FastHalt", &pr});
    for (const auto& pr : slow) rows.push_back({"SlowHalt", &pr});
    for (const auto& pr : never) rows.push_back({"NeverHalt", &pr});
    std::vector<Program> all;
    for (const auto& r : rows) all.push_back(*r.prog);
    const auto truth = halting_truth(all);
    for (const auto& r : rows) {
      const auto text = r.prog->text();
      const auto rep = hallab::HallucinationReport::make(
          text, hallab::MetricKind::kDistort, hallab::h_distort(h, truth, text), tau);
      if (rep.violated) exceptions.emplace(text, label_answer(*r.prog));
    }
    const auto decider = decider_reduction(h, exceptions);
    const auto halts_idx = *answer_space().index_of(kHalts);
    std::ostringstream trace;
    trace << "index,family,truth,decision,from_exception_table,p_halts\n";
    std::size_t correct = 0, table_correct = 0, table_hits = 0;
    svg::Series p_series{"P_h(Halts)", {}, {}}, t_series{"halts (truth)", {}, {}};
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto d = decider.decide(*rows[i].prog);
      const auto want = label_answer(*rows[i].prog);
      const double ph = hallab::eval_plm(h, rows[i].prog->text())[halts_idx];
      correct += d.answer == want;
      if (d.from_exception_table) {
        ++table_hits;
        table_correct += d.answer == want;
      }
      trace << i << ',' << rows[i].family << ',' << hallab::csv_field(want) << ','
            << hallab::csv_field(d.answer) << ',' << (d.from_exception_table ? 1 : 0) << ','
            << fmt(ph) << '\n';
      p_series.x.push_back(static_cast<double>(i));
      p_series.y.push_back(ph);
      t_series.x.push_back(static_cast<double>(i));
      t_series.y.push_back(want == kHalts ? 1.0 : 0.0);
    }
    res.file("decider_trace.csv", trace.str());
    svg::LineChart chart{"Budget simulator vs halting truth", "program (fast | slow | never)",
                         "probability", {p_series, t_series}, std::nullopt};
    res.figure("decider_trace.svg", svg::render(chart));
    res.check("decider-exact-on-exceptions",
              table_hits == exceptions.size() && table_correct == table_hits,
              std::to_string(table_correct) + "/" + std::to_string(exceptions.size()));
    res.check("decider-exact", correct == rows.size(),
              std::to_string(correct) + "/" + std::to_string(rows.size()));
    return res;
  };
}

// ---- pumping ---------------------------------------------------------------

namespace {

hallab::ProbabilisticTruth pumping_base(std::size_t inputs) {
  hallab::ProbabilisticTruth t(hallab::OutputSpace({"0", "1"}));
  for (std::size_t i = 0; i < inputs; ++i) t.set("s" + std::to_string(i), hallab::Dist::point(2, i % 2));
  return t;
}

constexpr const char* kPatchInput = "s*";

}  // namespace

PreparedDemo pumping(Params& p, std::uint64_t seed) {
  const auto slack = p.u64("slack_bits", 32);
  std::vector<std::uint64_t> default_lengths;
  for (std::uint64_t l = 64; l <= 4096; l *= 2) default_lengths.push_back(l);
  const auto lengths = p.u64_list("lengths_bits", default_lengths);
  const auto brute = p.u64_list("brute_force_lengths_bits", {8, 16});
  const auto brute_slack = p.u64("brute_force_slack_bits", 4);
  const double tau = p.real("tau", hallab::kDefaultDistortTau);
  const auto base_inputs = p.u64("base_inputs", 8);
  const auto overhead = p.u64("escape_overhead_bits", 256);
  if (lengths.empty()) p.reject("lengths_bits", "must not be empty");
  for (auto l : lengths) {
    if (l == 0 || l % 8 != 0 || l > (1u << 20)) p.reject("lengths_bits", "need multiples of 8 in (0, 2^20]");
  }
  for (auto l : brute) {
    if (l == 0 || l % 8 != 0 || l > 16) p.reject("brute_force_lengths_bits", "need 8 or 16");
    if (brute_slack > l) p.reject("brute_force_slack_bits", "exceeds a brute-force length");
  }
  if (!(tau >= 0.0)) p.reject("tau", "must be non-negative");
  if (base_inputs == 0) p.reject("base_inputs", "must be positive");

  return [=] {
    using namespace hallab::pumping;
    DemoResult res;
    const auto base = pumping_base(base_inputs);
    const auto rule_bits = base_rule_bits(base);
    const auto onset = pumping_onset_bits(slack, tau);
    hallab::Rng rng(seed);

    std::vector<PumpingPoint> curve;
    std::ostringstream escape;
    escape << "L_bits,h_distort_before,h_distort_after,capacity_growth_bits,k_hat_bits,"
              "overhead_bits\n";
    double worst_closed = 0.0;
    bool incompressible = true, onset_ok = true, escaped = true, started_full = true;
    bool growth_ok = true;
    for (auto l : lengths) {
      const auto z = rand_patch(l / 8, rng());
      incompressible &= static_cast<double>(k_hat(z)) >= kIncompressibleRatio * static_cast<double>(l);
      const auto truth = build_patched_truth(base, kPatchInput, z);
      const auto learner = train_capacity_learner(rule_bits + slack, truth);
      const auto rep = measure_pumping(learner, truth, tau);
      const auto stored = decode_capacity_learner(learner).stored_bits;
      const double expect = static_cast<double>(l - stored) * std::log(2.0);
      worst_closed = std::max(worst_closed, std::abs(rep.value - expect));
      onset_ok &= rep.violated == (l >= onset);
      curve.push_back({l, stored, rep.value});

      // The CLM internalizes z on top of a learner that stored none of it.
      const auto empty = train_capacity_learner(rule_bits, truth);
      auto clm0 = hallab::clm::ClmState::create(base.space(), empty);
      const auto before = measure_pumping(clm0.current(), truth, tau).value;
      const auto clm1 = update(clm0, {kPatchInput, std::string(z.begin(), z.end())});
      const auto after = measure_pumping(clm1.current(), truth, tau).value;
      const auto growth = static_cast<std::int64_t>(clm1.capacity_history().back()) -
                          static_cast<std::int64_t>(clm1.capacity_history().front());
      const auto kz = static_cast<std::int64_t>(k_hat(z));
      const auto diff = growth - kz;
      started_full &= std::abs(before - static_cast<double>(l) * std::log(2.0)) <= 1e-9;
      escaped &= after == 0.0;
      growth_ok &= static_cast<std::uint64_t>(std::abs(diff)) <= overhead;
      escape << l << ',' << fmt(before) << ',' << fmt(after) << ',' << growth << ',' << kz << ','
             << diff << '\n';
    }
    res.file("pumping_curve.csv",
             render([&](std::ostream& os) { write_pumping_curve_csv(os, curve); }));
    res.file("clm_escape.csv", escape.str());

    svg::Series measured{"measured H_Distort", {}, {}}, threshold{"tau", {}, {}};
    for (const auto& pt : curve) {
      measured.x.push_back(static_cast<double>(pt.patch_bits));
      measured.y.push_back(pt.h_distort);
      threshold.x.push_back(static_cast<double>(pt.patch_bits));
      threshold.y.push_back(tau);
    }
    svg::LineChart chart{"Distortion at the patched input", "patch length L (bits)",
                         "H_Distort (nats)", {measured, threshold}, std::nullopt};
    res.figure("pumping_curve.svg", svg::render(chart));

    // Enumerable patch spaces: sum the full distribution by brute force.
    bool brute_ok = true;
    for (auto l : brute) {
      const auto z = rand_patch(l / 8, rng());
      const auto truth = build_patched_truth(base, kPatchInput, z);
      const auto learner = train_capacity_learner(rule_bits + brute_slack, truth);
      const auto dist = hallab::eval_plm(learner, kPatchInput);
      std::size_t zi = 0;
      for (auto b : z) zi = (zi << 8) | b;
      double total = 0.0;
      for (std::size_t v = 0; v < dist.size(); ++v) total += dist[v];
      const double pz = std::ldexp(1.0, -static_cast<int>(l - brute_slack));
      const auto rep = measure_pumping(learner, truth, tau);
      brute_ok &= dist.size() == (std::size_t{1} << l) && std::abs(total - 1.0) <= 1e-12 &&
                  std::abs(dist[zi] - pz) <= 1e-12 && std::abs(std::exp(-rep.value) - pz) <= 1e-12;
    }

    res.check("distortion-matches-closed-form", worst_closed <= 1e-9,
              "max |H - (L - stored) ln 2| = " + fmt(worst_closed));
    res.check("violation-onset", onset_ok, "onset at " + std::to_string(onset) + " bits");
    res.check("patches-incompressible", incompressible);
    res.check("brute-force-agrees", brute_ok);
    res.check("clm-escape-starts-at-full-distortion", started_full);
    res.check("clm-escape-reaches-zero", escaped);
    res.check("capacity-growth-tracks-k-hat", growth_ok,
              "tolerance " + std::to_string(overhead) + " bits");
    return res;
  };
}

// ---- oracle ----------------------------------------------------------------

PreparedDemo oracle(Params& p, std::uint64_t) {
  const auto base_symbols = p.u64("base_symbols", 2);
  const auto q = p.u32("q", 8);
  const auto tests = p.u64("test_inputs", 1000);
  const auto trace_inputs = p.u64("trace_inputs", 16);
  const auto max_models = p.u64("max_models", 100000);
  if (base_symbols < 1) p.reject("base_symbols", "must be positive");
  if (q == 0) p.reject("q", "must be positive");
  if (tests == 0) p.reject("test_inputs", "must be positive");
  const auto family = hallab::composition_count(q, 2 * base_symbols);
  if (family > max_models) p.reject("q", "family of " + std::to_string(family) + " models is too large");

  return [=] {
    using namespace hallab::oracle;
    DemoResult res;
    const auto space = doubled_space(hallab::OutputSpace::numbered(base_symbols));
    const auto e = hallab::enumerate_plms(space, {"s#0"}, q);

    std::ostringstream table;
    table << "model,s_star,model_answer,oracle_answer,standard_h_stray,augmented_max_h_stray,"
             "oracle_calls\n";
    double min_std = std::numeric_limits<double>::infinity(), max_aug = 0.0;
    bool metered = true;
    std::string first_trace;
    for (std::uint64_t m = 0; m < e.per_input_count(); ++m) {
      // Constant model: the enumerated distribution answers every input.
      const auto h = hallab::make_tabular(space, {}, e.cell(m));
      const auto adv = adversarial_oracle(h);
      std::vector<std::string> inputs{adv.adversarial_input()};
      for (std::uint64_t i = 1; i < tests; ++i) inputs.push_back("t#" + std::to_string(i));
      const auto r = verify_oracle_escape(h, inputs);
      double worst = 0.0;
      for (const auto& a : r.augmented_reports) worst = std::max(worst, a.value);
      min_std = std::min(min_std, r.standard_report.value);
      max_aug = std::max(max_aug, worst);
      metered &= r.oracle_calls == inputs.size();
      table << m << ',' << adv.adversarial_input() << ',' << hallab::csv_field(adv.model_answer())
            << ',' << hallab::csv_field(adv.answer(adv.adversarial_input())) << ','
            << fmt(r.standard_report.value) << ',' << fmt(worst) << ',' << r.oracle_calls << '\n';
      if (m == 0) {
        AdversarialOracle o(h);
        OracleAugmentedPlm aug(space, o);
        for (std::uint64_t i = 0; i < std::min<std::uint64_t>(trace_inputs, inputs.size()); ++i) {
          aug.eval(inputs[i]);
        }
        first_trace = render([&](std::ostream& os) { o.write_trace_csv(os); });
      }
    }
    res.file("oracle_escape.csv", table.str());
    res.file("oracle_trace.csv", first_trace);
    res.check("standard-models-stray", min_std > 0.0,
              "min H_Stray at s* = " + fmt(min_std) + " over " +
                  std::to_string(e.per_input_count()) + " models");
    res.check("augmented-models-exact", max_aug == 0.0,
              "max H_Stray = " + fmt(max_aug) + " on " + std::to_string(tests) + " inputs");
    res.check("oracle-metered", metered);
    return res;
  };
}

}  // namespace lab::demos
