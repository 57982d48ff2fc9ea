// Command-line front end: model-space enumeration, density grids, single
// dataset fits, simulation benchmarks, Bayes-factor rate experiments and
// exact enumeration posteriors.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"

#include "fusebma/harness.hpp"
#include "fusebma/nonlocal.hpp"

namespace fb = fusebma;

namespace {

std::ostream& open_or_stdout(std::ofstream& file, const std::string& path) {
  if (path.empty()) return std::cout;
  file.open(path);
  if (!file) throw std::runtime_error("cannot open output file '" + path + "'");
  return file;
}

int cmd_enumerate(int p, std::uint64_t /*seed*/, const std::string& out) {
  std::ofstream file;
  std::ostream& os = open_or_stdout(file, out);
  fb::ChainPrior prior = fb::uniform_chain_prior(p);
  std::vector<fb::IndicatorVector> models = fb::enumerate_models(p);
  os << "model_index,delta,p_delta,lambda_size,log_prior\n";
  for (std::size_t k = 0; k < models.size(); ++k) {
    fb::ModelStructure st = fb::model_structure(models[k]);
    os << k << ",\"" << models[k].str() << "\"," << st.p_delta << ','
       << st.lambda_size << ',' << fb::format_double(fb::log_prior_prob(models[k], prior))
       << "\n";
  }
  return 0;
}

int cmd_densities(double sigma2, const std::string& grid_spec, const std::string& out) {
  std::ofstream file;
  std::ostream& os = open_or_stdout(file, out);
  std::vector<double> grid = fb::parse_grid_spec(grid_spec);
  os << "theta,pmom,pimom,pemom,normal\n";
  for (const auto& row : fb::density_grid(grid, sigma2)) {
    os << fb::format_double(row.theta) << ',' << fb::format_double(row.pmom) << ','
       << fb::format_double(row.pimom) << ',' << fb::format_double(row.pemom) << ','
       << fb::format_double(row.normal) << "\n";
  }
  return 0;
}

nlohmann::json summary_to_json(const fb::PosteriorSummary& summary,
                               const Eigen::VectorXd& theta_scaled,
                               double intercept) {
  nlohmann::json j;
  nlohmann::json models = nlohmann::json::array();
  std::vector<std::pair<double, std::string>> ranked;
  for (const auto& [delta, prob] : summary.model_probs)
    ranked.emplace_back(prob, fb::IndicatorVector(delta).str());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (const auto& [prob, delta] : ranked) {
    models.push_back({{"delta", delta}, {"probability", prob}});
    if (models.size() >= 50) break;
  }
  j["model_posterior"] = models;
  j["map_model"] = summary.map_model.str();
  j["ci_level"] = summary.ci_level;
  for (int i = 0; i < summary.theta_mean.size(); ++i) {
    nlohmann::json c;
    c["mean"] = theta_scaled[i];
    c["ci_low"] = summary.theta_ci(i, 0);
    c["ci_high"] = summary.theta_ci(i, 1);
    j["coefficients"].push_back(c);
  }
  j["intercept"] = intercept;
  return j;
}

int cmd_fit(const std::string& data_path, const std::string& response,
            std::uint64_t seed, const fb::ExperimentConfig& base,
            double train_frac, std::uint64_t split_seed, const std::string& out_dir,
            bool dump_chain) {
  fb::CsvData csv = fb::load_csv(data_path, response);
  const int n = static_cast<int>(csv.y.size());

  std::vector<int> rows(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
  int n_train = n;
  if (train_frac < 1.0) {
    fb::Rng split_rng(split_seed);
    for (int i = n - 1; i > 0; --i) {
      int k = static_cast<int>(split_rng.uniform() * (i + 1));
      std::swap(rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(k)]);
    }
    n_train = std::max(2, static_cast<int>(std::lround(train_frac * n)));
  }
  Eigen::VectorXd y_train(n_train);
  Eigen::MatrixXd X_train(n_train, csv.X.cols());
  for (int i = 0; i < n_train; ++i) {
    y_train[i] = csv.y[rows[static_cast<std::size_t>(i)]];
    X_train.row(i) = csv.X.row(rows[static_cast<std::size_t>(i)]);
  }

  fb::RegressionData data = fb::standardize(y_train, X_train);
  fb::SamplerConfig sc = base.sampler;
  sc.seed = seed;
  fb::ChainPrior prior = fb::uniform_chain_prior(data.p);
  prior.conc_a = base.sampler.conc_a;
  prior.conc_b = base.sampler.conc_b;
  fb::ChainOutput chain = fb::run_chain(data, prior, sc);
  fb::PosteriorSummary summary = fb::summarize(chain, base.ci_level);

  Eigen::VectorXd theta_raw = summary.theta_mean.cwiseProduct(data.col_scale);
  double intercept = data.y_mean - theta_raw.dot(data.col_mean);
  nlohmann::json j = summary_to_json(summary, theta_raw, intercept);
  j["n"] = n;
  j["n_train"] = n_train;
  j["p"] = data.p;
  j["response"] = csv.response_name;
  j["rhat_sigma2"] = chain.diagnostics.rhat_sigma2;

  if (n_train < n) {
    double sse = 0.0;
    for (int i = n_train; i < n; ++i) {
      int r = rows[static_cast<std::size_t>(i)];
      double pred = intercept + csv.X.row(r).dot(theta_raw);
      double e = csv.y[r] - pred;
      sse += e * e;
    }
    j["test_rows"] = n - n_train;
    j["test_mse"] = sse / (n - n_train);
  }

  std::filesystem::path dir(out_dir.empty() ? "." : out_dir);
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "fit.json") << j.dump(2) << "\n";
  if (dump_chain) {
    std::ofstream chain_csv(dir / "chain.csv");
    chain_csv << "iteration,delta,sigma2\n";
    for (std::size_t i = 0; i < chain.sigma2.size(); ++i)
      chain_csv << (chain.burn_in + static_cast<long>(i) * chain.thin) << ",\""
                << chain.deltas[i].str() << "\","
                << fb::format_double(chain.sigma2[i]) << "\n";
  }
  std::cout << "wrote " << (dir / "fit.json").string() << "\n";
  return 0;
}

int cmd_exact(const std::string& data_path, const std::string& response,
              std::uint64_t seed, const fb::ExperimentConfig& base,
              const std::string& out) {
  fb::CsvData csv = fb::load_csv(data_path, response);
  fb::RegressionData data = fb::standardize(csv.y, csv.X);
  fb::ExactPosteriorConfig ec;
  ec.hyper = base.sampler.hyper;
  ec.mc.n_samples = std::max(base.sampler.step1_mc_samples, 2048);
  ec.seed = seed;
  std::vector<fb::EnumeratedModel> table = fb::enumerate_posterior(data, ec);
  std::ofstream file;
  std::ostream& os = open_or_stdout(file, out);
  os << "model_index,delta,log_marginal,log_prior,posterior_prob\n";
  for (std::size_t k = 0; k < table.size(); ++k) {
    os << k << ",\"" << table[k].delta.str() << "\","
       << fb::format_double(table[k].log_marginal) << ','
       << fb::format_double(table[k].log_prior) << ','
       << fb::format_double(table[k].posterior_prob) << "\n";
  }
  return 0;
}

int cmd_rates(std::uint64_t seed, const fb::ExperimentConfig& base,
              const std::string& n_list, const std::string& true_delta,
              const std::string& overfit_delta, int replications,
              const std::string& out_dir) {
  fb::RateConfig rc;
  rc.seed = seed;
  rc.hyper = base.sampler.hyper;
  rc.replications = replications;
  if (!n_list.empty()) {
    rc.n_grid.clear();
    std::stringstream ss(n_list);
    std::string tok;
    while (std::getline(ss, tok, ',')) rc.n_grid.push_back(std::stoi(tok));
  }
  if (!true_delta.empty()) rc.true_delta = fb::IndicatorVector::parse(true_delta);
  if (!overfit_delta.empty())
    rc.overfit_delta = fb::IndicatorVector::parse(overfit_delta);
  fb::RateResult res = fb::bf_rate_experiment(rc);

  std::filesystem::path dir(out_dir.empty() ? "." : out_dir);
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / "rates.csv");
  csv << "n,mean_log_bf_fusion,mean_log_bf_normal";
  bool decay = !res.mean_abs_theta_zero.empty();
  if (decay) csv << ",mean_abs_theta_zero,mean_abs_delta_zero";
  csv << "\n";
  for (std::size_t gi = 0; gi < res.n_grid.size(); ++gi) {
    csv << res.n_grid[gi] << ',' << fb::format_double(res.mean_log_bf_fusion[gi])
        << ',' << fb::format_double(res.mean_log_bf_normal[gi]);
    if (decay)
      csv << ',' << fb::format_double(res.mean_abs_theta_zero[gi]) << ','
          << fb::format_double(res.mean_abs_delta_zero.empty()
                                   ? 0.0
                                   : res.mean_abs_delta_zero[gi]);
    csv << "\n";
  }
  csv.close();

  nlohmann::json j;
  j["slope_fusion"] = res.slope_fusion;
  j["slope_normal"] = res.slope_normal;
  j["bootstrap_frac_fusion_steeper"] = res.bootstrap_frac_fusion_steeper;
  j["slope_theta_decay"] = res.slope_theta_decay;
  j["slope_delta_decay"] = res.slope_delta_decay;
  std::ofstream(dir / "rates.json") << j.dump(2) << "\n";
  std::cout << "slope fusion " << res.slope_fusion << ", slope normal "
            << res.slope_normal << ", fusion steeper in "
            << res.bootstrap_frac_fusion_steeper * 100.0 << "% of resamples\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian variable selection and fusion via model averaging"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  std::string config_path;
  std::string out_dir;
  app.add_option("--seed", seed, "root random seed");
  app.add_option("--config", config_path, "key=value configuration file");
  app.add_option("--out", out_dir, "output directory");

  auto* c_enum = app.add_subcommand("enumerate", "dump the model space as CSV");
  int enum_p = 3;
  std::string enum_out;
  c_enum->add_option("--p", enum_p, "number of covariates")->required();
  c_enum->add_option("--file", enum_out, "output CSV (default stdout)");

  auto* c_dens = app.add_subcommand("densities", "nonlocal density grid as CSV");
  double dens_sigma2 = 1.0;
  std::string dens_grid = "-4:4:0.01";
  std::string dens_out;
  c_dens->add_option("--sigma2", dens_sigma2, "scale parameter");
  c_dens->add_option("--grid", dens_grid, "grid spec lo:hi:step");
  c_dens->add_option("--file", dens_out, "output CSV (default stdout)");

  auto* c_fit = app.add_subcommand("fit", "fit one dataset, write posterior summary");
  std::string fit_data, fit_response;
  double train_frac = 1.0;
  std::uint64_t split_seed = 1;
  bool fit_dump = false;
  c_fit->add_option("--data", fit_data, "CSV file")->required();
  c_fit->add_option("--response", fit_response, "response column name")->required();
  c_fit->add_option("--train-frac", train_frac, "training fraction (rest held out)");
  c_fit->add_option("--split-seed", split_seed, "seed for the train/test split");
  c_fit->add_flag("--dump-chain", fit_dump, "also write the chain dump CSV");

  auto* c_sim = app.add_subcommand("simulate", "seeded simulation benchmark");

  auto* c_rates = app.add_subcommand("rates", "Bayes factor decay-rate experiment");
  std::string rates_n, rates_true, rates_over;
  int rates_reps = 50;
  c_rates->add_option("--n-grid", rates_n, "comma-separated sample sizes");
  c_rates->add_option("--true-delta", rates_true, "true model code, e.g. \"-1,0,0\"");
  c_rates->add_option("--overfit-delta", rates_over, "overfitting model code");
  c_rates->add_option("--replications", rates_reps, "replications per grid point");

  auto* c_exact = app.add_subcommand("exact", "exact enumeration posterior as CSV");
  std::string exact_data, exact_response, exact_out;
  c_exact->add_option("--data", exact_data, "CSV file")->required();
  c_exact->add_option("--response", exact_response, "response column name")->required();
  c_exact->add_option("--file", exact_out, "output CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    fb::ExperimentConfig config;
    if (!config_path.empty()) fb::apply_config(config, fb::parse_config_file(config_path));
    if (app.count("--seed")) {
      config.seed = seed;
      config.sampler.seed = seed;
    }
    if (!out_dir.empty()) config.out_dir = out_dir;

    if (*c_enum) return cmd_enumerate(enum_p, config.seed, enum_out);
    if (*c_dens) return cmd_densities(dens_sigma2, dens_grid, dens_out);
    if (*c_fit)
      return cmd_fit(fit_data, fit_response, config.seed, config, train_frac,
                     split_seed, config.out_dir, fit_dump);
    if (*c_sim) {
      fb::ExperimentResult result = fb::run_experiment(config);
      std::cout << std::left << std::setw(14) << "method" << std::setw(12) << "mse"
                << std::setw(12) << "sd" << std::setw(12) << "pse" << std::setw(12)
                << "sd" << std::setw(12) << "pb" << std::setw(12) << "sd" << "\n";
      for (const auto& agg : result.aggregates) {
        std::cout << std::left << std::setw(14) << agg.method << std::setw(12)
                  << std::setprecision(4) << agg.mse << std::setw(12) << agg.mse_sd
                  << std::setw(12) << agg.pse << std::setw(12) << agg.pse_sd
                  << std::setw(12) << agg.pb << std::setw(12) << agg.pb_sd << "\n";
      }
      return 0;
    }
    if (*c_rates)
      return cmd_rates(config.seed, config, rates_n, rates_true, rates_over,
                       rates_reps, config.out_dir);
    if (*c_exact)
      return cmd_exact(exact_data, exact_response, config.seed, config, exact_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
