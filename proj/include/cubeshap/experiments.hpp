#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cubeshap/core.hpp"
#include "cubeshap/cube.hpp"

namespace cubeshap {

/// Mean and standard error of one metric at one x position.
struct MetricPoint {
  double x = 0.0;
  double mean = 0.0;
  /// Sample standard deviation over sqrt(repetitions); 0 for a single repetition.
  double stderr_mean = 0.0;
  std::size_t repetitions = 0;
};

struct MetricReport {
  std::string name;
  std::string x_label;
  std::string metric;
  std::uint64_t seed = 42;
  std::vector<MetricPoint> points;
};

MetricPoint summarize(double x, const std::vector<double>& samples);

/// sum |c_hat - truth| / sum |truth|. Throws ZeroDenominator when truth is all zero.
double mase(const ContributionMatrix& estimate, const Matrix& truth);

// --- linear simulation -------------------------------------------------------

struct LinearSimConfig {
  std::vector<std::size_t> sample_sizes{100, 200, 300, 400, 500, 600, 700, 800, 900, 1000};
  std::size_t repetitions = 100;
  std::size_t q_min = 1, q_max = 5;
  std::size_t p_min = 10, p_max = 100;
  double mean_max = 10.0;
  double fault_probability = 0.5;
  double fault_max = 10.0;
  double reference_stddev = 1.0;
  std::uint64_t seed = 42;
  unsigned threads = 1;
};

struct LinearSimRun {
  ContributionMatrix estimate;
  Matrix truth;
  /// g(explicand) minus the mean of g over the references.
  double expected_delta = 0.0;
  double error = 0.0;
};

/// One repetition at reference sample size n; the RNG stream is derived from
/// (seed, n, repetition).
LinearSimRun linear_sim_once(const LinearSimConfig& config, std::size_t n, std::size_t repetition);
MetricReport run_linear_sim(const LinearSimConfig& config);

// --- distinct-user simulation --------------------------------------------------

struct DauSimConfig {
  std::size_t pages = 5;
  std::size_t users = 10000;
  double base_probability = 0.05;
  std::vector<double> decays{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  /// Number of faulty pages is drawn uniformly from this list.
  std::vector<std::size_t> faulty_counts{1, 2, 3};
  std::size_t references = 10;
  std::size_t repetitions = 20;
  std::uint64_t seed = 42;
  unsigned threads = 1;
};

struct DauSimRun {
  ContributionMatrix attribution;
  std::vector<std::string> faulty;
  /// Pages with the most negative totals, ties broken by page id.
  std::vector<std::string> top;
  double accuracy = 0.0;
};

/// Faulty pages view with probability base * (1 - decay).
DauSimRun dau_sim_once(const DauSimConfig& config, double decay, std::size_t repetition);
MetricReport run_dau_sim(const DauSimConfig& config);

// --- admissions example --------------------------------------------------------

/// Applicants and admitted per department with gender as the time step.
RecordStore berkeley_store();
/// admitted / applicants, female explicand against male reference, ratio closed form.
ContributionMatrix run_berkeley();

}  // namespace cubeshap
