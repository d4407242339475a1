#include "cubeshap/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>

#include "cubeshap/error.hpp"
#include "cubeshap/gam.hpp"
#include "cubeshap/nongam.hpp"
#include "cubeshap/shapley.hpp"
#include "parallel.hpp"

namespace cubeshap {

MetricPoint summarize(double x, const std::vector<double>& samples) {
  MetricPoint pt;
  pt.x = x;
  pt.repetitions = samples.size();
  if (samples.empty()) return pt;
  const double n = static_cast<double>(samples.size());
  pt.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  if (samples.size() > 1) {
    double ss = 0.0;
    for (double s : samples) ss += (s - pt.mean) * (s - pt.mean);
    pt.stderr_mean = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return pt;
}

double mase(const ContributionMatrix& estimate, const Matrix& truth) {
  if (estimate.values().rows() != truth.rows() || estimate.values().cols() != truth.cols())
    throw Error(Errc::ShapeMismatch, "estimate and ground truth differ in shape");
  double err = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    err += std::abs(estimate.values().flat()[i] - truth.flat()[i]);
    scale += std::abs(truth.flat()[i]);
  }
  if (scale == 0.0) throw Error(Errc::ZeroDenominator, "ground truth has no nonzero contribution");
  return err / scale;
}

namespace {

std::vector<std::string> numbered(const std::string& prefix, std::size_t n, std::size_t first = 0) {
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(first + i));
  return out;
}

double uniform01(std::mt19937_64& rng) { return std::ldexp(static_cast<double>(rng() >> 11), -53); }

}  // namespace

// ---------------------------------------------------------------------------

LinearSimRun linear_sim_once(const LinearSimConfig& cfg, std::size_t n, std::size_t repetition) {
  if (n == 0) throw Error(Errc::InvalidArgument, "reference sample size must be positive");
  if (cfg.q_min == 0 || cfg.q_min > cfg.q_max || cfg.p_min == 0 || cfg.p_min > cfg.p_max)
    throw Error(Errc::InvalidConfig, "empty sub-cube or sub-measure range");
  std::mt19937_64 rng(derive_seed(derive_seed(cfg.seed, n), repetition));

  const std::size_t q = cfg.q_min + bounded(rng, cfg.q_max - cfg.q_min + 1);
  const std::size_t p = cfg.p_min + bounded(rng, cfg.p_max - cfg.p_min + 1);
  Matrix mu(p, q), truth(p, q), xhat(p, q);
  for (auto& m : mu.flat()) m = cfg.mean_max * uniform01(rng);

  // All-zero fault vectors leave the error undefined; draw again.
  bool any = false;
  while (!any) {
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const bool beta = uniform01(rng) < cfg.fault_probability;
      const double lambda = cfg.fault_max * uniform01(rng);
      truth.flat()[i] = beta ? lambda : 0.0;
      any = any || (beta && lambda != 0.0);
    }
  }
  for (std::size_t i = 0; i < xhat.size(); ++i) xhat.flat()[i] = mu.flat()[i] + truth.flat()[i];

  auto rows = make_labels(numbered("s", p));
  const auto names = numbered("m", q, 1);
  auto cols = make_labels(names);
  std::vector<SubMeasure> subs;
  std::string expr;
  for (const auto& name : names) {
    subs.push_back({name, {AggregateOp::Sum, name}});
    expr += (expr.empty() ? "" : " + ") + name;
  }
  const auto spec = MeasureSpec::parse(expr, std::move(subs));

  std::normal_distribution<double> noise(0.0, cfg.reference_stddev);
  std::vector<ObservationMatrix> refs;
  refs.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    Matrix x(p, q);
    for (std::size_t i = 0; i < x.size(); ++i) x.flat()[i] = mu.flat()[i] + noise(rng);
    refs.emplace_back(rows, cols, std::move(x), "ref" + std::to_string(k));
  }

  EngineConfig engine;
  engine.engine = Engine::Linear;
  engine.seed = cfg.seed;
  auto estimate = attribute(spec, ObservationMatrix(rows, cols, xhat, "anomaly"), ReferenceSpec::expected(std::move(refs)),
                            engine);
  const double delta = estimate.delta_y();
  const double err = mase(estimate, truth);
  return {std::move(estimate), std::move(truth), delta, err};
}

MetricReport run_linear_sim(const LinearSimConfig& cfg) {
  MetricReport report{"rq1", "N", "mase", cfg.seed, {}};
  for (std::size_t n : cfg.sample_sizes) {
    std::vector<double> errors(cfg.repetitions);
    detail::parallel_for(cfg.repetitions, cfg.threads,
                         [&](std::size_t rep) { errors[rep] = linear_sim_once(cfg, n, rep).error; });
    report.points.push_back(summarize(static_cast<double>(n), errors));
  }
  return report;
}

// ---------------------------------------------------------------------------

DauSimRun dau_sim_once(const DauSimConfig& cfg, double decay, std::size_t repetition) {
  if (cfg.pages == 0 || cfg.users == 0 || cfg.references == 0 || cfg.faulty_counts.empty())
    throw Error(Errc::InvalidConfig, "distinct-user simulation needs pages, users, references and faulty counts");
  for (auto wf : cfg.faulty_counts)
    if (wf == 0 || wf > cfg.pages) throw Error(Errc::InvalidConfig, "faulty page count out of range");

  // Stream keyed on the decay in millionths.
  const auto decay_key = static_cast<std::uint64_t>(std::llround(decay * 1e6));
  std::mt19937_64 rng(derive_seed(derive_seed(cfg.seed, decay_key), repetition));

  const auto pages = numbered("p", cfg.pages, 1);
  const std::size_t wf = cfg.faulty_counts[bounded(rng, cfg.faulty_counts.size())];
  std::vector<std::size_t> order(cfg.pages);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < wf; ++i) std::swap(order[i], order[i + bounded(rng, cfg.pages - i)]);
  std::vector<unsigned char> is_faulty(cfg.pages, 0);
  std::vector<std::string> faulty;
  for (std::size_t i = 0; i < wf; ++i) {
    is_faulty[order[i]] = 1;
    faulty.push_back(pages[order[i]]);
  }
  std::sort(faulty.begin(), faulty.end());

  const double faulty_probability = cfg.base_probability * (1.0 - decay);
  RecordStore::Builder builder({"step", {"page"}, {"user_id"}});
  std::vector<std::string> attr(1);
  std::vector<std::optional<std::string>> meas(1);
  auto sample_views = [&](const std::string& step, bool anomalous) {
    for (std::size_t u = 0; u < cfg.users; ++u)
      for (std::size_t w = 0; w < cfg.pages; ++w) {
        const double prob = anomalous && is_faulty[w] ? faulty_probability : cfg.base_probability;
        if (uniform01(rng) < prob) {
          attr[0] = pages[w];
          meas[0] = std::to_string(u);
          builder.add(step, attr, meas);
        }
      }
  };
  sample_views("target", true);
  std::vector<std::string> refs;
  for (std::size_t k = 0; k < cfg.references; ++k) {
    refs.push_back("ref" + std::to_string(k));
    sample_views(refs.back(), false);
  }
  const RecordStore store = std::move(builder).build();

  std::map<std::string, std::set<std::string>> domain{{"page", {pages.begin(), pages.end()}}};
  const auto part = partition(CubePredicate::all({"page"}), {"page"}, domain);
  const auto spec = MeasureSpec::parse("dau", {{"dau", {AggregateOp::CountDistinct, "user_id"}}});
  EngineConfig engine;
  engine.engine = Engine::Exact;
  engine.seed = cfg.seed;
  auto c = attribute_nongam(store, part, spec, "target", refs, engine);

  std::vector<std::pair<double, std::string>> totals;
  const auto sums = c.values().row_sums();
  for (std::size_t u = 0; u < c.rows().size(); ++u) totals.emplace_back(sums[u], c.rows()[u]);
  std::sort(totals.begin(), totals.end());
  std::vector<std::string> top;
  for (std::size_t i = 0; i < wf; ++i) top.push_back(totals[i].second);
  std::size_t hits = 0;
  for (const auto& t : top) hits += std::binary_search(faulty.begin(), faulty.end(), t) ? 1 : 0;
  const double accuracy = static_cast<double>(hits) / static_cast<double>(wf);
  return {std::move(c), std::move(faulty), std::move(top), accuracy};
}

MetricReport run_dau_sim(const DauSimConfig& cfg) {
  MetricReport report{"rq2", "lambda", "accuracy", cfg.seed, {}};
  for (double decay : cfg.decays) {
    std::vector<double> acc(cfg.repetitions);
    detail::parallel_for(cfg.repetitions, cfg.threads,
                         [&](std::size_t rep) { acc[rep] = dau_sim_once(cfg, decay, rep).accuracy; });
    report.points.push_back(summarize(decay, acc));
  }
  return report;
}

// ---------------------------------------------------------------------------

RecordStore berkeley_store() {
  struct Row {
    const char* dept;
    int male_applicants, male_admitted, female_applicants, female_admitted;
  };
  static constexpr Row kRows[] = {
      {"A", 825, 512, 108, 89}, {"B", 560, 353, 25, 17},   {"C", 325, 120, 593, 201},
      {"D", 417, 138, 375, 131}, {"E", 191, 53, 393, 94}, {"F", 373, 22, 341, 25},
  };
  RecordStore::Builder builder({"gender", {"department"}, {"applicants", "admitted"}});
  for (const auto& r : kRows) {
    const std::vector<std::string> attr{r.dept};
    builder.add("male", attr,
                std::vector<std::optional<std::string>>{std::to_string(r.male_applicants),
                                                        std::to_string(r.male_admitted)});
    builder.add("female", attr,
                std::vector<std::optional<std::string>>{std::to_string(r.female_applicants),
                                                        std::to_string(r.female_admitted)});
  }
  return std::move(builder).build();
}

ContributionMatrix run_berkeley() {
  const RecordStore store = berkeley_store();
  const auto spec = MeasureSpec::parse("admitted / applicants", {{"applicants", {AggregateOp::Sum, "applicants"}},
                                                                  {"admitted", {AggregateOp::Sum, "admitted"}}});
  const auto part = partition_store(store, CubePredicate::all({"department"}), {"department"});
  const auto female = build_observation_matrix(store, part, spec, "female");
  const auto male = build_observation_matrix(store, part, spec, "male");
  EngineConfig engine;
  engine.engine = Engine::AumannRatioClosed;
  return attribute(spec, female, ReferenceSpec::baseline(male), engine);
}

}  // namespace cubeshap
