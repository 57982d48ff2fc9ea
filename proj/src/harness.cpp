#include "fusebma/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace fusebma {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Eigen::VectorXd case_theta_star(const std::string& case_id) {
  auto fill = [](Eigen::VectorXd& v, int lo, int count, double value) {
    for (int i = 0; i < count; ++i) v[lo + i] = value;
  };
  if (case_id == "case1") {
    Eigen::VectorXd v(20);
    fill(v, 0, 5, 3.0);
    fill(v, 5, 5, 5.0);
    fill(v, 10, 5, 3.0);
    fill(v, 15, 5, 5.0);
    return v;
  }
  if (case_id == "case2") {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(150);
    fill(v, 140, 5, -1.5);
    fill(v, 145, 5, 1.5);
    return v;
  }
  if (case_id == "case3") {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(500);
    fill(v, 495, 5, 3.0);
    return v;
  }
  throw std::invalid_argument("unknown case id '" + case_id + "'");
}

GeneratedData generate_case(const ExperimentConfig& config, Rng& rng) {
  GeneratedData g;
  g.theta_star = config.case_id == "custom" ? config.theta_star
                                            : case_theta_star(config.case_id);
  const int p = static_cast<int>(g.theta_star.size());
  if (p < 1) throw std::invalid_argument("generate_case: empty theta_star");
  const int n = config.n;
  if (n < 2) throw std::invalid_argument("generate_case: n < 2");
  if (!(config.sigma >= 0.0))
    throw std::invalid_argument("generate_case: sigma < 0");

  g.Sigma = Eigen::MatrixXd::Constant(p, p, config.rho);
  g.Sigma.diagonal().setOnes();
  Eigen::LLT<Eigen::MatrixXd> llt(g.Sigma);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("generate_case: equicorrelation matrix not SPD");
  Eigen::MatrixXd L = llt.matrixL();

  g.X.resize(n, p);
  Eigen::VectorXd z(p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) z[j] = rng.normal();
    g.X.row(i) = (L * z).transpose();
  }
  // make the moment conditions exact so block-constant truths stay exact ties
  for (int j = 0; j < p; ++j) {
    Eigen::VectorXd c = g.X.col(j).array() - g.X.col(j).mean();
    double sq = c.squaredNorm();
    if (sq <= 0.0) throw std::runtime_error("generate_case: degenerate column");
    g.X.col(j) = c * std::sqrt(static_cast<double>(n) / sq);
  }
  g.y = g.X * g.theta_star;
  for (int i = 0; i < n; ++i) g.y[i] += config.sigma * rng.normal();
  return g;
}

CsvData load_csv(const std::string& path, const std::string& response_column) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      while (!tok.empty() && (tok.back() == '\r' || tok.back() == ' ')) tok.pop_back();
      std::size_t b = tok.find_first_not_of(' ');
      out.push_back(b == std::string::npos ? "" : tok.substr(b));
    }
    return out;
  };
  std::vector<std::string> header = split(line);
  int resp_idx = -1;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == response_column) resp_idx = static_cast<int>(j);
  if (resp_idx < 0)
    throw std::runtime_error(path + ": no column named '" + response_column + "'");

  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> cells = split(line);
    if (cells.size() != header.size())
      throw std::runtime_error(path + ": row " + std::to_string(line_no) + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(header.size()));
    std::vector<double> vals(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const std::string& cell = cells[j];
      char* end = nullptr;
      vals[j] = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size())
        throw std::runtime_error(path + ": non-numeric cell at row " +
                                 std::to_string(line_no) + ", column '" + header[j] +
                                 "'");
    }
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw std::runtime_error(path + ": no data rows");

  CsvData d;
  d.response_name = response_column;
  const int n = static_cast<int>(rows.size());
  const int p = static_cast<int>(header.size()) - 1;
  d.y.resize(n);
  d.X.resize(n, p);
  for (std::size_t j = 0; j < header.size(); ++j)
    if (static_cast<int>(j) != resp_idx) d.column_names.push_back(header[j]);
  for (int i = 0; i < n; ++i) {
    int col = 0;
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (static_cast<int>(j) == resp_idx)
        d.y[i] = rows[static_cast<std::size_t>(i)][j];
      else
        d.X(i, col++) = rows[static_cast<std::size_t>(i)][j];
    }
  }
  return d;
}

const char* method_name(SlabKind slab) {
  return slab == SlabKind::FusionPMOM ? "fusion_pmom" : "normal";
}

SlabKind method_from_name(const std::string& name) {
  if (name == "fusion_pmom") return SlabKind::FusionPMOM;
  if (name == "normal") return SlabKind::NormalSlab;
  throw std::invalid_argument("unknown method '" + name + "'");
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto trim = [](std::string s) {
      std::size_t b = s.find_first_not_of(" \t\r");
      std::size_t e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": expected key=value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void apply_config(ExperimentConfig& config,
                  const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "case") config.case_id = value;
    else if (key == "n") config.n = std::stoi(value);
    else if (key == "rho") config.rho = std::stod(value);
    else if (key == "sigma") config.sigma = std::stod(value);
    else if (key == "replications") config.replications = std::stoi(value);
    else if (key == "seed") config.seed = std::stoull(value);
    else if (key == "iterations") config.sampler.iterations = std::stoi(value);
    else if (key == "burn_in") config.sampler.burn_in = std::stoi(value);
    else if (key == "thin") config.sampler.thin = std::stoi(value);
    else if (key == "alpha") config.sampler.hyper.alpha = std::stod(value);
    else if (key == "psi") config.sampler.hyper.psi = std::stod(value);
    else if (key == "tau") config.sampler.hyper.tau = std::stod(value);
    else if (key == "conc_a") config.sampler.conc_a = std::stod(value);
    else if (key == "conc_b") config.sampler.conc_b = std::stod(value);
    else if (key == "step1_mc") config.sampler.step1_mc_samples = std::stoi(value);
    else if (key == "theta_scans") config.sampler.theta_scans = std::stoi(value);
    else if (key == "threads") config.threads = std::stoi(value);
    else if (key == "dump_chains") config.dump_chains = (value == "1" || value == "true");
    else if (key == "ci_level") config.ci_level = std::stod(value);
    else if (key == "out") config.out_dir = value;
    else if (key == "methods") {
      config.methods.clear();
      std::stringstream ms(value);
      std::string tok;
      while (std::getline(ms, tok, ',')) config.methods.push_back(method_from_name(tok));
    } else if (key == "theta_star") {
      std::stringstream ts(value);
      std::string tok;
      std::vector<double> vals;
      while (std::getline(ts, tok, ',')) vals.push_back(std::stod(tok));
      config.theta_star = Eigen::Map<Eigen::VectorXd>(vals.data(),
                                                      static_cast<long>(vals.size()));
    } else {
      throw std::runtime_error("unknown config key '" + key + "'");
    }
  }
}

namespace {

void write_chain_dump(const std::string& path, const ChainOutput& chain) {
  std::ofstream out(path);
  out << "iteration,delta,sigma2";
  for (int j = 0; j < chain.p; ++j) out << ",theta" << j;
  out << "\n";
  for (std::size_t i = 0; i < chain.theta_full.size(); ++i) {
    out << (chain.burn_in + static_cast<long>(i) * chain.thin) << ",\""
        << chain.deltas[i].str() << "\"," << format_double(chain.sigma2[i]);
    for (int j = 0; j < chain.p; ++j)
      out << ',' << format_double(chain.theta_full[i][j]);
    out << "\n";
  }
}

struct MomentAcc {
  std::vector<double> values;
  void add(double v) { values.push_back(v); }
  double mean() const {
    double s = 0.0;
    for (double v : values) s += v;
    return values.empty() ? 0.0 : s / static_cast<double>(values.size());
  }
  double sd() const {
    if (values.size() < 2) return 0.0;
    double m = mean(), s = 0.0;
    for (double v : values) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(values.size() - 1));
  }
};

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, bool write_files) {
  if (config.replications < 1)
    throw std::invalid_argument("run_experiment: replications < 1");
  const std::size_t n_methods = config.methods.size();
  if (n_methods == 0) throw std::invalid_argument("run_experiment: no methods");

  ExperimentResult result;
  result.rows.resize(static_cast<std::size_t>(config.replications) * n_methods);

  int n_threads = config.threads > 0
                      ? config.threads
                      : static_cast<int>(std::thread::hardware_concurrency());
  if (n_threads < 1) n_threads = 1;
  n_threads = std::min<int>(n_threads, config.replications);

  std::filesystem::path out_dir(config.out_dir);
  if (write_files) std::filesystem::create_directories(out_dir);

  auto worker_body = [&](int rep) {
    std::uint64_t rep_seed = derive_seed(config.seed, 0x5ec5, static_cast<std::uint64_t>(rep));
    Rng gen_rng(derive_seed(rep_seed, 0xda7a));
    GeneratedData g;
    RegressionData data;
    bool data_ok = true;
    std::string data_error;
    try {
      g = generate_case(config, gen_rng);
      data = standardize(g.y, g.X);
    } catch (const std::exception& e) {
      data_ok = false;
      data_error = e.what();
    }
    for (std::size_t mi = 0; mi < n_methods; ++mi) {
      ReplicationResult& row =
          result.rows[static_cast<std::size_t>(rep) * n_methods + mi];
      row.replication = rep;
      row.method = method_name(config.methods[mi]);
      if (!data_ok) {
        row.failed = true;
        row.error = data_error;
        continue;
      }
      try {
        SamplerConfig sc = config.sampler;
        sc.slab = config.methods[mi];
        sc.seed = derive_seed(rep_seed, 0xc4a1 + mi);
        ChainPrior prior = uniform_chain_prior(data.p);
        prior.conc_a = config.sampler.conc_a;
        prior.conc_b = config.sampler.conc_b;
        ChainOutput chain = run_chain(data, prior, sc);
        PosteriorSummary summary = summarize(chain, config.ci_level);
        // take the averaged coefficients back to the raw column scale
        summary.theta_mean =
            summary.theta_mean.cwiseProduct(data.col_scale);
        row.report = metrics(summary, g.theta_star, g.Sigma);
        if (write_files && config.dump_chains) {
          std::string name = "chain_rep" + std::to_string(rep) + "_" + row.method + ".csv";
          write_chain_dump((out_dir / name).string(), chain);
        }
      } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
      }
    }
  };

  if (n_threads == 1) {
    for (int rep = 0; rep < config.replications; ++rep) worker_body(rep);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t)
      pool.emplace_back([&] {
        for (;;) {
          int rep = next.fetch_add(1);
          if (rep >= config.replications) return;
          worker_body(rep);
        }
      });
    for (auto& th : pool) th.join();
  }

  // aggregate by method in the configured order
  for (std::size_t mi = 0; mi < n_methods; ++mi) {
    ExperimentResult::Aggregate agg;
    agg.method = method_name(config.methods[mi]);
    MomentAcc mse, pse, pb, pbp;
    for (int rep = 0; rep < config.replications; ++rep) {
      const ReplicationResult& row =
          result.rows[static_cast<std::size_t>(rep) * n_methods + mi];
      if (row.failed) continue;
      mse.add(row.report.mse);
      pse.add(row.report.pse);
      pb.add(row.report.p_b_normalized);
      pbp.add(row.report.p_b_paper);
    }
    agg.completed = static_cast<int>(mse.values.size());
    agg.mse = mse.mean();
    agg.mse_sd = mse.sd();
    agg.pse = pse.mean();
    agg.pse_sd = pse.sd();
    agg.pb = pb.mean();
    agg.pb_sd = pb.sd();
    agg.pb_paper = pbp.mean();
    agg.pb_paper_sd = pbp.sd();
    result.aggregates.push_back(agg);
  }
  for (const auto& row : result.rows)
    if (row.failed) ++result.aborted;

  if (write_files) {
    std::ofstream res((out_dir / "results.csv").string());
    res << "method,n,rho,mse,mse_sd,pse,pse_sd,pb,pb_sd\n";
    for (const auto& agg : result.aggregates) {
      res << agg.method << ',' << config.n << ',' << format_double(config.rho) << ','
          << format_double(agg.mse) << ',' << format_double(agg.mse_sd) << ','
          << format_double(agg.pse) << ',' << format_double(agg.pse_sd) << ','
          << format_double(agg.pb) << ',' << format_double(agg.pb_sd) << "\n";
    }
    res.close();

    std::ofstream reps((out_dir / "replications.csv").string());
    reps << "replication,method,status,mse,pse,pb_normalized,pb_paper,"
            "n_selection,n_fusion,error\n";
    for (const auto& row : result.rows) {
      reps << row.replication << ',' << row.method << ','
           << (row.failed ? "aborted" : "ok") << ','
           << format_double(row.report.mse) << ',' << format_double(row.report.pse)
           << ',' << format_double(row.report.p_b_normalized) << ','
           << format_double(row.report.p_b_paper) << ',' << row.report.n_selection
           << ',' << row.report.n_fusion << ",\"" << row.error << "\"\n";
    }
    reps.close();

    nlohmann::json j;
    j["case"] = config.case_id;
    j["n"] = config.n;
    j["rho"] = config.rho;
    j["sigma"] = config.sigma;
    j["replications"] = config.replications;
    j["seed"] = config.seed;
    j["iterations"] = config.sampler.iterations;
    j["burn_in"] = config.sampler.burn_in;
    j["aborted"] = result.aborted;
    for (const auto& agg : result.aggregates) {
      nlohmann::json a;
      a["completed"] = agg.completed;
      a["mse"] = agg.mse;
      a["mse_sd"] = agg.mse_sd;
      a["pse"] = agg.pse;
      a["pse_sd"] = agg.pse_sd;
      a["pb_normalized"] = agg.pb;
      a["pb_normalized_sd"] = agg.pb_sd;
      a["pb_paper"] = agg.pb_paper;
      a["pb_paper_sd"] = agg.pb_paper_sd;
      j["methods"][agg.method] = a;
    }
    std::ofstream(out_dir / "summary.json") << j.dump(2) << "\n";
  }

  int total = static_cast<int>(result.rows.size());
  if (result.aborted * 10 > total)
    throw std::runtime_error("run_experiment: " + std::to_string(result.aborted) +
                             " of " + std::to_string(total) +
                             " replication runs aborted (over 10%)");
  return result;
}

}  // namespace fusebma
