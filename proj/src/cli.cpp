#include "cubeshap/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "cubeshap/cube.hpp"
#include "cubeshap/experiments.hpp"
#include "cubeshap/gam.hpp"
#include "cubeshap/nongam.hpp"
#include "cubeshap/report.hpp"

namespace cubeshap {

int exit_code(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::Validation: return kExitValidation;
    case ErrorCategory::Numerical: return kExitNumerical;
    case ErrorCategory::Io: return kExitIo;
  }
  return 1;
}

namespace {

/// Tracks the pipeline stage so diagnostics can name it.
struct Stage {
  const char* name = "config";
};

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(Errc::Io, "cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw Error(Errc::Io, "write failed for '" + path.string() + "'");
}

ContributionMatrix attribution(const RunConfig& cfg, Stage& stage) {
  stage.name = "config";
  validate(cfg);

  stage.name = "measure";
  const auto spec = MeasureSpec::parse(cfg.measure, cfg.submeasures);

  stage.name = "ingest";
  StoreSchema schema{cfg.timestep, cfg.attributes, {}};
  for (const auto& s : spec.submeasures())
    if (s.aggregator.column != "*" &&
        std::find(schema.measures.begin(), schema.measures.end(), s.aggregator.column) == schema.measures.end())
      schema.measures.push_back(s.aggregator.column);
  const auto store = RecordStore::from_csv(cfg.input, schema);

  stage.name = "partition";
  const auto steps = store.timesteps();
  for (const auto& label : cfg.references)
    if (!steps.count(label)) throw Error(Errc::InvalidConfig, "reference time step '" + label + "' has no records");
  if (!steps.count(cfg.explicand))
    throw Error(Errc::InvalidConfig, "explicand time step '" + cfg.explicand + "' has no records");
  const auto part = partition_store(store, CubePredicate(cfg.filter), cfg.drill);

  stage.name = "attribute";
  if (!spec.all_additive()) return attribute_nongam(store, part, spec, cfg.explicand, cfg.references, cfg.engine);
  const auto xt = build_observation_matrix(store, part, spec, cfg.explicand);
  std::vector<ObservationMatrix> refs;
  for (const auto& label : cfg.references) refs.push_back(build_observation_matrix(store, part, spec, label));
  const auto ref = refs.size() == 1 ? ReferenceSpec::baseline(std::move(refs.front()))
                                    : ReferenceSpec::expected(std::move(refs));
  return attribute(spec, xt, ref, cfg.engine);
}

int report_failure(std::ostream& err, const char* stage, const Error& e) {
  err << "error [" << stage << "]: " << e.what() << '\n';
  return exit_code(e.category());
}

std::string ranking_csv(const std::vector<std::pair<std::string, double>>& ranking) {
  std::string out = "rank,sub_cube,total\n";
  char buf[64];
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", ranking[i].second);
    out += std::to_string(i + 1) + "," + ranking[i].first + "," + buf + "\n";
  }
  return out;
}

}  // namespace

ContributionMatrix run_attribution(const RunConfig& config) {
  Stage stage;
  return attribution(config, stage);
}

int cmd_attribute(const RunConfig& config, std::ostream& out, std::ostream& err) {
  Stage stage;
  try {
    const auto c = attribution(config, stage);
    stage.name = "report";
    const auto text = render(c, config.format, config.engine.seed);
    if (config.out.empty())
      out << text;
    else
      write_file(config.out, text);
    return kExitOk;
  } catch (const Error& e) {
    return report_failure(err, stage.name, e);
  }
}

int cmd_rank(const RunConfig& config, std::ostream& out, std::ostream& err) {
  Stage stage;
  try {
    const auto ranking = rank_subcubes(attribution(config, stage));
    stage.name = "report";
    std::string text;
    switch (config.format) {
      case ReportFormat::Json: text = ranking_to_json(ranking, config.engine.seed); break;
      case ReportFormat::Csv: text = ranking_csv(ranking); break;
      case ReportFormat::Table: text = ranking_to_table(ranking); break;
    }
    if (config.out.empty())
      out << text;
    else
      write_file(config.out, text);
    return kExitOk;
  } catch (const Error& e) {
    return report_failure(err, stage.name, e);
  }
}

int cmd_experiment(const ExperimentRequest& req, std::ostream& out, std::ostream& err) {
  const char* stage = "experiment";
  try {
    if (req.name != "rq1" && req.name != "rq2" && req.name != "berkeley")
      throw Error(Errc::UnknownExperiment, "unknown experiment '" + req.name + "' (rq1, rq2, berkeley)");
    std::filesystem::create_directories(req.out_dir);
    const auto base = req.out_dir / req.name;
    if (req.name == "rq1") {
      LinearSimConfig cfg;
      cfg.seed = req.seed;
      cfg.threads = req.threads;
      if (req.repetitions) cfg.repetitions = *req.repetitions;
      if (!req.points.empty()) {
        cfg.sample_sizes.clear();
        for (double x : req.points) {
          if (!(x >= 1.0) || x != std::floor(x))
            throw Error(Errc::InvalidConfig, "rq1 points are positive integer sample sizes");
          cfg.sample_sizes.push_back(static_cast<std::size_t>(x));
        }
      }
      const auto report = run_linear_sim(cfg);
      stage = "report";
      write_file(base.string() + ".json", to_json(report));
      write_file(base.string() + ".csv", to_csv(report));
      out << to_table(report);
    } else if (req.name == "rq2") {
      DauSimConfig cfg;
      cfg.seed = req.seed;
      cfg.threads = req.threads;
      if (req.repetitions) cfg.repetitions = *req.repetitions;
      if (!req.points.empty()) {
        for (double x : req.points)
          if (!(x >= 0.0 && x <= 1.0)) throw Error(Errc::InvalidConfig, "rq2 decay factors lie in [0, 1]");
        cfg.decays = req.points;
      }
      const auto report = run_dau_sim(cfg);
      stage = "report";
      write_file(base.string() + ".json", to_json(report));
      write_file(base.string() + ".csv", to_csv(report));
      out << to_table(report);
    } else {
      const auto c = run_berkeley();
      stage = "report";
      write_file(base.string() + ".json", to_json(c, req.seed));
      write_file(base.string() + ".csv", to_csv(c));
      out << to_table(c, true);
    }
    return kExitOk;
  } catch (const Error& e) {
    return report_failure(err, stage, e);
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error [" << stage << "]: " << e.what() << '\n';
    return kExitIo;
  }
}

}  // namespace cubeshap
