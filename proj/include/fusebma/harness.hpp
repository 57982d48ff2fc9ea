#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "fusebma/inference.hpp"
#include "fusebma/sampler.hpp"

namespace fusebma {

/// Simulation settings. Presets case1/case2/case3 fix (p, theta_star) and
/// the default (rho, sigma); every field can be overridden from a config
/// file or CLI flags.
struct ExperimentConfig {
  std::string case_id = "case1";  // case1 | case2 | case3 | custom
  int n = 100;
  double rho = 0.0;
  double sigma = 0.5;
  Eigen::VectorXd theta_star;  // required for case_id == "custom"
  int replications = 20;
  std::uint64_t seed = 1;
  SamplerConfig sampler;
  std::vector<SlabKind> methods = {SlabKind::FusionPMOM, SlabKind::NormalSlab};
  std::string out_dir = ".";
  int threads = 0;  // 0 = hardware concurrency
  bool dump_chains = false;
  double ci_level = 0.95;
};

struct GeneratedData {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  Eigen::VectorXd theta_star;
  Eigen::MatrixXd Sigma;
};

/// Synthetic regression draw: rows of X i.i.d. N_p(0, Sigma) with
/// equicorrelation rho, then columns centered and rescaled to squared norm n
/// (the standing moment conditions hold exactly), and y = X theta_star + eps
/// with eps ~ N(0, sigma^2 I). Throws if Sigma is not positive definite.
GeneratedData generate_case(const ExperimentConfig& config, Rng& rng);

/// Preset true coefficient vectors.
Eigen::VectorXd case_theta_star(const std::string& case_id);

struct CsvData {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  std::vector<std::string> column_names;  // X columns, response excluded
  std::string response_name;
};

/// Rectangular numeric CSV with a header row; the named response column
/// becomes y and the remaining columns X. Errors name the offending
/// row/column.
CsvData load_csv(const std::string& path, const std::string& response_column);

/// Per-replication outcome of one method.
struct ReplicationResult {
  int replication = 0;
  std::string method;
  MetricReport report;
  bool failed = false;
  std::string error;
};

struct ExperimentResult {
  std::vector<ReplicationResult> rows;  // ordered by (replication, method)
  // aggregate mean/sd per method over successful replications
  struct Aggregate {
    std::string method;
    int completed = 0;
    double mse = 0, mse_sd = 0, pse = 0, pse_sd = 0;
    double pb = 0, pb_sd = 0;            // normalized P_B
    double pb_paper = 0, pb_paper_sd = 0;
  };
  std::vector<Aggregate> aggregates;
  int aborted = 0;
};

/// generate -> standardize -> run_chain -> summarize -> metrics for each
/// replication and method; deterministic given config.seed. Throws if more
/// than 10% of replications abort. When write_files is set, emits
/// results.csv, replications.csv and summary.json under config.out_dir.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                bool write_files = true);

/// Flat key=value configuration text, '#' comments allowed.
std::map<std::string, std::string> parse_config_file(const std::string& path);
std::map<std::string, std::string> parse_config_text(const std::string& text);

/// Apply parsed key=value settings onto a config (unknown keys throw).
void apply_config(ExperimentConfig& config,
                  const std::map<std::string, std::string>& kv);

const char* method_name(SlabKind slab);
SlabKind method_from_name(const std::string& name);

/// Full-precision decimal formatting used for all numeric file output.
std::string format_double(double v);

}  // namespace fusebma
