#include "ssft/artifact.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "ssft/csv.hpp"
#include "ssft/errors.hpp"
#include "ssft/pool.hpp"
#include "ssft/rng.hpp"
#include "ssft/sha256.hpp"
#include "ssft/stats.hpp"

namespace ssft {

using nlohmann::json;
using nlohmann::ordered_json;

const char* to_string(AnalysisKind a) {
  switch (a) {
    case AnalysisKind::kMetrics: return "metrics";
    case AnalysisKind::kAuc: return "auc";
    case AnalysisKind::kCurves: return "curves";
    case AnalysisKind::kRemoval: return "removal";
    case AnalysisKind::kStability: return "stability";
    case AnalysisKind::kTheory: return "theory";
  }
  return "?";
}

AnalysisKind analysis_from_string(const std::string& s) {
  if (s == "metrics") return AnalysisKind::kMetrics;
  if (s == "auc") return AnalysisKind::kAuc;
  if (s == "curves") return AnalysisKind::kCurves;
  if (s == "removal") return AnalysisKind::kRemoval;
  if (s == "stability") return AnalysisKind::kStability;
  if (s == "theory") return AnalysisKind::kTheory;
  throw ConfigError("analyses: unknown analysis '" + s + "'");
}

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

namespace {

const json& require_field(const json& j, const std::string& parent,
                          const std::string& key) {
  const std::string path = parent.empty() ? key : parent + "." + key;
  if (!j.is_object()) throw ConfigError(parent + ": expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError(path + ": missing field");
  return *it;
}

template <typename T>
T field_as(const json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(path + ": wrong type");
  }
}

template <typename T>
T get_req(const json& j, const std::string& parent, const std::string& key) {
  return field_as<T>(require_field(j, parent, key),
                     parent.empty() ? key : parent + "." + key);
}

template <typename T>
T get_opt(const json& j, const std::string& parent, const std::string& key,
          T fallback) {
  if (!j.is_object()) throw ConfigError(parent + ": expected an object");
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  return field_as<T>(*it, parent.empty() ? key : parent + "." + key);
}

TrainConfig parse_train_config(const json& j, const std::string& path) {
  TrainConfig cfg;
  cfg.loss = loss_from_string(get_opt<std::string>(j, path, "loss",
                                                   "softmax_cross_entropy"));
  cfg.optimizer =
      optimizer_from_string(get_opt<std::string>(j, path, "optimizer", "sgd"));
  cfg.learning_rate = get_opt<double>(j, path, "learning_rate", 0.1);
  cfg.batch_size = get_opt<int>(j, path, "batch_size", 10);
  cfg.max_epochs = get_opt<int>(j, path, "max_epochs", 100);
  cfg.convergence = convergence_from_string(
      get_opt<std::string>(j, path, "convergence", "stable_accuracy"));
  cfg.stable_epochs = get_opt<int>(j, path, "stable_epochs", 5);
  cfg.weight_decay = get_opt<double>(j, path, "weight_decay", 0.0);
  cfg.momentum = get_opt<double>(j, path, "momentum", 0.0);
  cfg.adam_beta1 = get_opt<double>(j, path, "adam_beta1", 0.9);
  cfg.adam_beta2 = get_opt<double>(j, path, "adam_beta2", 0.999);
  cfg.adam_epsilon = get_opt<double>(j, path, "adam_epsilon", 1e-8);
  if (cfg.learning_rate <= 0.0)
    throw ConfigError(path + ".learning_rate: must be positive");
  if (cfg.max_epochs < 0)
    throw ConfigError(path + ".max_epochs: must be non-negative");
  if (cfg.batch_size <= 0)
    throw ConfigError(path + ".batch_size: must be positive");
  return cfg;
}

ordered_json train_config_json(const TrainConfig& cfg) {
  ordered_json j;
  j["loss"] = to_string(cfg.loss);
  j["optimizer"] = to_string(cfg.optimizer);
  j["learning_rate"] = cfg.learning_rate;
  j["batch_size"] = cfg.batch_size;
  j["max_epochs"] = cfg.max_epochs;
  j["convergence"] = to_string(cfg.convergence);
  j["stable_epochs"] = cfg.stable_epochs;
  j["weight_decay"] = cfg.weight_decay;
  j["momentum"] = cfg.momentum;
  j["adam_beta1"] = cfg.adam_beta1;
  j["adam_beta2"] = cfg.adam_beta2;
  j["adam_epsilon"] = cfg.adam_epsilon;
  return j;
}

BinaryInstanceParams parse_instance(const json& j, const std::string& path,
                                    BinaryInstanceParams defaults) {
  BinaryInstanceParams p = defaults;
  p.d = get_opt<int>(j, path, "d", p.d);
  p.k = get_opt<int>(j, path, "k", p.k);
  p.n = get_opt<int>(j, path, "n", p.n);
  p.mu = get_opt<double>(j, path, "mu", p.mu);
  p.sigma = get_opt<double>(j, path, "sigma", p.sigma);
  return p;
}

ordered_json instance_json(const BinaryInstanceParams& p) {
  ordered_json j;
  j["d"] = p.d;
  j["k"] = p.k;
  j["n"] = p.n;
  j["mu"] = p.mu;
  j["sigma"] = p.sigma;
  return j;
}

TheorySuiteConfig parse_theory_config(const json& j, const std::string& path) {
  TheorySuiteConfig cfg;
  cfg.delta = get_opt<double>(j, path, "delta", cfg.delta);
  cfg.big_c = get_opt<double>(j, path, "C", cfg.big_c);
  if (j.contains("implicit_bias")) {
    const json& b = j.at("implicit_bias");
    const std::string p = path + ".implicit_bias";
    cfg.implicit_bias.instance =
        parse_instance(b, p, cfg.implicit_bias.instance);
    cfg.implicit_bias.eta = get_opt<double>(b, p, "eta", cfg.implicit_bias.eta);
    cfg.implicit_bias.iterations =
        get_opt<long>(b, p, "iterations", cfg.implicit_bias.iterations);
    cfg.implicit_bias.instances =
        get_opt<int>(b, p, "instances", cfg.implicit_bias.instances);
    cfg.implicit_bias.seed =
        get_opt<std::uint64_t>(b, p, "seed", cfg.implicit_bias.seed);
  }
  if (j.contains("representer")) {
    const json& b = j.at("representer");
    const std::string p = path + ".representer";
    cfg.representer.instance = parse_instance(b, p, cfg.representer.instance);
    cfg.representer.eta_a = get_opt<double>(b, p, "eta_a", cfg.representer.eta_a);
    cfg.representer.eta_b = get_opt<double>(b, p, "eta_b", cfg.representer.eta_b);
    cfg.representer.max_iterations_a = get_opt<long>(
        b, p, "max_iterations_a", cfg.representer.max_iterations_a);
    cfg.representer.epochs_b =
        get_opt<int>(b, p, "epochs_b", cfg.representer.epochs_b);
    cfg.representer.runs = get_opt<int>(b, p, "runs", cfg.representer.runs);
    cfg.representer.log_every =
        get_opt<int>(b, p, "log_every", cfg.representer.log_every);
    cfg.representer.seed =
        get_opt<std::uint64_t>(b, p, "seed", cfg.representer.seed);
  }
  if (j.contains("asymptotic")) {
    const json& b = j.at("asymptotic");
    const std::string p = path + ".asymptotic";
    cfg.asymptotic.instance = parse_instance(b, p, cfg.asymptotic.instance);
    cfg.asymptotic.complex_divisor =
        get_opt<double>(b, p, "lambda", cfg.asymptotic.complex_divisor);
    cfg.asymptotic.trials = get_opt<int>(b, p, "trials", cfg.asymptotic.trials);
    cfg.asymptotic.seed =
        get_opt<std::uint64_t>(b, p, "seed", cfg.asymptotic.seed);
  }
  if (j.contains("window")) {
    const json& b = j.at("window");
    const std::string p = path + ".window";
    cfg.window.instance = parse_instance(b, p, cfg.window.instance);
    cfg.window.eta_a = get_opt<double>(b, p, "eta_a", cfg.window.eta_a);
    cfg.window.eta_b = get_opt<double>(b, p, "eta_b", cfg.window.eta_b);
    cfg.window.max_iterations_a = get_opt<long>(
        b, p, "max_iterations_a", cfg.window.max_iterations_a);
    cfg.window.max_epochs_b =
        get_opt<int>(b, p, "max_epochs_b", cfg.window.max_epochs_b);
    cfg.window.trials = get_opt<int>(b, p, "trials", cfg.window.trials);
    cfg.window.seed = get_opt<std::uint64_t>(b, p, "seed", cfg.window.seed);
  }
  return cfg;
}

ordered_json theory_config_json(const TheorySuiteConfig& cfg) {
  ordered_json j;
  j["delta"] = cfg.delta;
  j["C"] = cfg.big_c;
  ordered_json b = instance_json(cfg.implicit_bias.instance);
  b["eta"] = cfg.implicit_bias.eta;
  b["iterations"] = cfg.implicit_bias.iterations;
  b["instances"] = cfg.implicit_bias.instances;
  b["seed"] = cfg.implicit_bias.seed;
  j["implicit_bias"] = b;
  ordered_json r = instance_json(cfg.representer.instance);
  r["eta_a"] = cfg.representer.eta_a;
  r["eta_b"] = cfg.representer.eta_b;
  r["max_iterations_a"] = cfg.representer.max_iterations_a;
  r["epochs_b"] = cfg.representer.epochs_b;
  r["runs"] = cfg.representer.runs;
  r["log_every"] = cfg.representer.log_every;
  r["seed"] = cfg.representer.seed;
  j["representer"] = r;
  ordered_json a = instance_json(cfg.asymptotic.instance);
  a["lambda"] = cfg.asymptotic.complex_divisor;
  a["trials"] = cfg.asymptotic.trials;
  a["seed"] = cfg.asymptotic.seed;
  j["asymptotic"] = a;
  ordered_json w = instance_json(cfg.window.instance);
  w["eta_a"] = cfg.window.eta_a;
  w["eta_b"] = cfg.window.eta_b;
  w["max_iterations_a"] = cfg.window.max_iterations_a;
  w["max_epochs_b"] = cfg.window.max_epochs_b;
  w["trials"] = cfg.window.trials;
  w["seed"] = cfg.window.seed;
  j["window"] = w;
  return j;
}

}  // namespace

DatasetSpec RunConfig::make_spec(std::uint64_t seed) const {
  if (dataset_type == "mixture") {
    MixtureParams p = mixture;
    p.rng_seed = seed;
    return build_spec(p);
  }
  ZipfParams p = zipf;
  p.rng_seed = seed;
  return build_zipf_spec(p);
}

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid json: ") + e.what());
  }

  RunConfig cfg;
  cfg.schema_version = get_opt<int>(j, "", "schema_version", 1);
  if (cfg.schema_version != 1)
    throw ConfigError("schema_version: unsupported version");

  const json& dataset = require_field(j, "", "dataset");
  cfg.dataset_type = get_opt<std::string>(dataset, "dataset", "type", "mixture");
  if (cfg.dataset_type == "mixture") {
    MixtureParams& p = cfg.mixture;
    p.d = get_opt<int>(dataset, "dataset", "d", p.d);
    p.k = get_opt<int>(dataset, "dataset", "k", p.k);
    p.n = get_opt<int>(dataset, "dataset", "n", p.n);
    p.num_classes = get_opt<int>(dataset, "dataset", "num_classes", p.num_classes);
    p.sigma = get_opt<double>(dataset, "dataset", "sigma", p.sigma);
    p.mu_typical = get_opt<double>(dataset, "dataset", "mu_typical", p.mu_typical);
    p.complex_lambda =
        get_opt<double>(dataset, "dataset", "complex_lambda", p.complex_lambda);
    p.typical_groups =
        get_opt<int>(dataset, "dataset", "typical_groups", p.typical_groups);
    p.complex_groups =
        get_opt<int>(dataset, "dataset", "complex_groups", p.complex_groups);
    p.rare_groups = get_opt<int>(dataset, "dataset", "rare_groups", p.rare_groups);
    p.typical_mass =
        get_opt<double>(dataset, "dataset", "typical_mass", p.typical_mass);
    p.mislabel_fraction = get_opt<double>(dataset, "dataset", "mislabel_fraction",
                                          p.mislabel_fraction);
    p.rare_count = get_opt<int>(dataset, "dataset", "rare_count", p.rare_count);
    p.balanced = get_opt<bool>(dataset, "dataset", "balanced", p.balanced);
    p.mislabel_from_rare = get_opt<bool>(dataset, "dataset", "mislabel_from_rare",
                                         p.mislabel_from_rare);
    p.mislabel_split_a =
        get_opt<bool>(dataset, "dataset", "mislabel_split_a", p.mislabel_split_a);
    p.mislabel_split_b =
        get_opt<bool>(dataset, "dataset", "mislabel_split_b", p.mislabel_split_b);
  } else if (cfg.dataset_type == "zipf") {
    ZipfParams& p = cfg.zipf;
    p.num_superclasses =
        get_opt<int>(dataset, "dataset", "num_superclasses", p.num_superclasses);
    p.subgroup_sizes = get_opt<std::vector<int>>(dataset, "dataset",
                                                 "subgroup_sizes", p.subgroup_sizes);
    p.scale = get_opt<double>(dataset, "dataset", "scale", p.scale);
    p.k = get_opt<int>(dataset, "dataset", "k", p.k);
    p.d = get_opt<int>(dataset, "dataset", "d", p.d);
    p.sigma = get_opt<double>(dataset, "dataset", "sigma", p.sigma);
    p.mu = get_opt<double>(dataset, "dataset", "mu", p.mu);
    p.mislabel_fraction = get_opt<double>(dataset, "dataset", "mislabel_fraction",
                                          p.mislabel_fraction);
  } else {
    throw ConfigError("dataset.type: must be 'mixture' or 'zipf'");
  }

  cfg.phase_a = parse_train_config(require_field(j, "", "phase_a"), "phase_a");
  cfg.phase_b = parse_train_config(require_field(j, "", "phase_b"), "phase_b");

  if (j.contains("analyses")) {
    cfg.analyses.clear();
    for (const auto& a : field_as<std::vector<std::string>>(j.at("analyses"), "analyses"))
      cfg.analyses.push_back(analysis_from_string(a));
  }
  const auto has = [&](AnalysisKind k) {
    return std::find(cfg.analyses.begin(), cfg.analyses.end(), k) !=
           cfg.analyses.end();
  };
  for (AnalysisKind k : {AnalysisKind::kAuc, AnalysisKind::kCurves,
                         AnalysisKind::kRemoval, AnalysisKind::kStability})
    if (has(k) && !has(AnalysisKind::kMetrics))
      throw ConfigError(std::string("analyses: ") + to_string(k) +
                        " requires metrics");

  cfg.output_dir = get_opt<std::string>(j, "", "output_dir", cfg.output_dir);
  if (j.contains("seeds")) {
    cfg.seeds = field_as<std::vector<std::uint64_t>>(j.at("seeds"), "seeds");
    if (cfg.seeds.empty()) throw ConfigError("seeds: must not be empty");
  }

  if (j.contains("removal_strategies")) {
    cfg.removal_strategies.clear();
    for (const auto& s : field_as<std::vector<std::string>>(
             j.at("removal_strategies"), "removal_strategies"))
      cfg.removal_strategies.push_back(strategy_from_string(s));
  }
  cfg.removal_counts = get_opt<std::vector<int>>(j, "", "removal_counts",
                                                 cfg.removal_counts);
  cfg.removal_seeds = get_opt<int>(j, "", "removal_seeds", cfg.removal_seeds);
  cfg.eval_count = get_opt<int>(j, "", "eval_count", cfg.eval_count);
  if (j.contains("theory"))
    cfg.theory = parse_theory_config(j.at("theory"), "theory");
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& file) {
  return parse_run_config(read_file(file));
}

std::string run_config_to_json(const RunConfig& cfg) {
  ordered_json j;
  j["schema_version"] = cfg.schema_version;
  ordered_json ds;
  ds["type"] = cfg.dataset_type;
  if (cfg.dataset_type == "mixture") {
    const MixtureParams& p = cfg.mixture;
    ds["d"] = p.d;
    ds["k"] = p.k;
    ds["n"] = p.n;
    ds["num_classes"] = p.num_classes;
    ds["sigma"] = p.sigma;
    ds["mu_typical"] = p.mu_typical;
    ds["complex_lambda"] = p.complex_lambda;
    ds["typical_groups"] = p.typical_groups;
    ds["complex_groups"] = p.complex_groups;
    ds["rare_groups"] = p.rare_groups;
    ds["typical_mass"] = p.typical_mass;
    ds["mislabel_fraction"] = p.mislabel_fraction;
    ds["rare_count"] = p.rare_count;
    ds["balanced"] = p.balanced;
    ds["mislabel_from_rare"] = p.mislabel_from_rare;
    ds["mislabel_split_a"] = p.mislabel_split_a;
    ds["mislabel_split_b"] = p.mislabel_split_b;
  } else {
    const ZipfParams& p = cfg.zipf;
    ds["num_superclasses"] = p.num_superclasses;
    ds["subgroup_sizes"] = p.subgroup_sizes;
    ds["scale"] = p.scale;
    ds["k"] = p.k;
    ds["d"] = p.d;
    ds["sigma"] = p.sigma;
    ds["mu"] = p.mu;
    ds["mislabel_fraction"] = p.mislabel_fraction;
  }
  j["dataset"] = ds;
  j["phase_a"] = train_config_json(cfg.phase_a);
  j["phase_b"] = train_config_json(cfg.phase_b);
  std::vector<std::string> analyses;
  for (AnalysisKind a : cfg.analyses) analyses.emplace_back(to_string(a));
  j["analyses"] = analyses;
  j["output_dir"] = cfg.output_dir;
  j["seeds"] = cfg.seeds;
  std::vector<std::string> strategies;
  for (RemovalStrategy s : cfg.removal_strategies)
    strategies.emplace_back(to_string(s));
  j["removal_strategies"] = strategies;
  j["removal_counts"] = cfg.removal_counts;
  j["removal_seeds"] = cfg.removal_seeds;
  j["eval_count"] = cfg.eval_count;
  j["theory"] = theory_config_json(cfg.theory);
  return j.dump(2);
}

std::string config_hash(const RunConfig& cfg) {
  return sha256_hex(run_config_to_json(cfg));
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

std::string manifest_to_json(const Manifest& m) {
  ordered_json j;
  j["run_id"] = m.run_id;
  j["seed"] = m.seed;
  j["config_hash"] = m.config_hash;
  ordered_json files;
  for (const auto& [path, hash] : m.files) files[path] = hash;
  j["files"] = files;
  return j.dump(2);
}

Manifest manifest_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("manifest: invalid json: ") + e.what());
  }
  Manifest m;
  m.run_id = j.at("run_id").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.config_hash = j.at("config_hash").get<std::string>();
  for (const auto& [key, value] : j.at("files").items())
    m.files[key] = value.get<std::string>();
  return m;
}

// ---------------------------------------------------------------------------
// File helpers and persisted formats
// ---------------------------------------------------------------------------

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write: " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_history_csv(std::ostream& out, const PredictionHistory& history) {
  out << "example_id,phase,epoch,correct,confidence\n";
  const char* phase = to_string(history.phase);
  for (std::size_t i = 0; i < history.num_examples(); ++i) {
    const auto correct = history.correct_row(i);
    const auto conf = history.confidence_row(i);
    for (std::size_t t = 0; t < correct.size(); ++t)
      out << history.example_ids[i] << ',' << phase << ',' << t << ','
          << static_cast<int>(correct[t]) << ',' << csv::fmt(conf[t]) << '\n';
  }
}

PredictionHistory read_history_csv(std::istream& in) {
  struct Row {
    int epoch;
    std::uint8_t correct;
    double confidence;
  };
  std::vector<int> order;
  std::map<int, std::vector<Row>> rows;
  std::string line;
  SplitId phase = SplitId::kA;
  if (!std::getline(in, line))
    throw ConfigError("history csv: missing header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    const int id = std::stoi(cell);
    std::getline(row, cell, ',');
    phase = cell == "B" ? SplitId::kB : SplitId::kA;
    Row r{};
    std::getline(row, cell, ',');
    r.epoch = std::stoi(cell);
    std::getline(row, cell, ',');
    r.correct = static_cast<std::uint8_t>(std::stoi(cell));
    std::getline(row, cell, ',');
    r.confidence = std::stod(cell);
    if (rows.find(id) == rows.end()) order.push_back(id);
    rows[id].push_back(r);
  }
  if (order.empty()) throw ConfigError("history csv: no rows");

  PredictionHistory h;
  h.phase = phase;
  h.epochs = static_cast<int>(rows.begin()->second.size()) - 1;
  h.example_ids = order;
  const std::size_t stride = static_cast<std::size_t>(h.epochs) + 1;
  h.correct.assign(order.size() * stride, 0);
  h.confidence.assign(order.size() * stride, 0.0);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& entries = rows.at(order[i]);
    if (entries.size() != stride)
      throw ConfigError("history csv: ragged epochs for example " +
                        std::to_string(order[i]));
    for (const Row& r : entries) {
      if (r.epoch < 0 || static_cast<std::size_t>(r.epoch) >= stride)
        throw ConfigError("history csv: epoch out of range");
      h.correct[i * stride + static_cast<std::size_t>(r.epoch)] = r.correct;
      h.confidence[i * stride + static_cast<std::size_t>(r.epoch)] =
          r.confidence;
    }
  }
  return h;
}

std::string weights_to_json(const LinearModel& model) {
  ordered_json j;
  j["binary"] = model.binary;
  j["num_classes"] = model.num_classes;
  j["dim"] = model.dim;
  j["values"] = model.weights;
  return j.dump();
}

LinearModel weights_from_json(const std::string& text) {
  json j = json::parse(text);
  LinearModel m;
  m.binary = j.at("binary").get<bool>();
  m.num_classes = j.at("num_classes").get<int>();
  m.dim = j.at("dim").get<int>();
  m.weights = j.at("values").get<std::vector<double>>();
  const std::size_t expected =
      m.binary ? static_cast<std::size_t>(m.dim)
               : static_cast<std::size_t>(m.num_classes) * m.dim;
  if (m.weights.size() != expected)
    throw ConfigError("weights json: shape does not match value count");
  return m;
}

// ---------------------------------------------------------------------------
// Theory bundle
// ---------------------------------------------------------------------------

ImplicitBiasSuiteReport implicit_bias_suite(const TheorySuiteConfig& cfg,
                                            int jobs) {
  const auto& ib = cfg.implicit_bias;
  ImplicitBiasSuiteReport report;
  report.cosines.resize(static_cast<std::size_t>(ib.instances));
  report.final_residual_norms.resize(static_cast<std::size_t>(ib.instances));
  std::vector<double> kkt(static_cast<std::size_t>(ib.instances));

  parallel_for_index(
      static_cast<std::size_t>(ib.instances), jobs, [&](std::size_t i) {
        const std::uint64_t seed =
            Rng::from_path(ib.seed, {stream::kTrial, i}).next_u64();
        BinaryInstance inst = sample_majority_instance(ib.instance, seed);
        ImplicitBiasResult res =
            implicit_bias_check(inst.x, inst.y, ib.eta, ib.iterations, seed);
        report.cosines[i] = res.cosine;
        report.final_residual_norms[i] = res.residual_norm_trace.empty()
                                             ? 0.0
                                             : res.residual_norm_trace.back();
        kkt[i] = res.svm.kkt_residual;
      });

  report.min_cosine = *std::min_element(report.cosines.begin(),
                                        report.cosines.end());
  report.mean_cosine = mean(report.cosines);
  report.max_kkt_residual = *std::max_element(kkt.begin(), kkt.end());
  return report;
}

RepresenterSuiteReport representer_suite(const TheorySuiteConfig& cfg,
                                         int jobs) {
  const auto& rp = cfg.representer;
  RepresenterSuiteReport report;
  report.runs.resize(static_cast<std::size_t>(rp.runs));

  parallel_for_index(static_cast<std::size_t>(rp.runs), jobs, [&](std::size_t i) {
    RepresenterRunSummary& summary = report.runs[i];
    summary.run = static_cast<int>(i);
    const std::uint64_t seed =
        Rng::from_path(rp.seed, {stream::kTrial, i}).next_u64();
    BinaryInstance sa = sample_first_split_instance(rp.instance, seed);
    BinaryInstance sb = sample_majority_instance(rp.instance, seed ^ 0xb);

    std::vector<double> w(static_cast<std::size_t>(rp.instance.d));
    Rng init = Rng::from_path(seed, {stream::kModelInit});
    init.fill_normal(w, 0.0, 0.01);

    // First phase to unit margin.
    bool reached = false;
    {
      std::vector<double> grad;
      double prev = std::numeric_limits<double>::infinity();
      int rising = 0;
      for (long t = 0; t < rp.max_iterations_a && !reached; ++t) {
        double loss = 0.0;
        grad.assign(w.size(), 0.0);
        for (std::size_t p = 0; p < sa.x.size(); ++p) {
          const double margin = sa.y[p] * dot(w, sa.x[p]);
          const double e = std::exp(-margin);
          loss += e;
          axpy(-e * sa.y[p], sa.x[p], grad);
        }
        if (!std::isfinite(loss))
          throw DivergenceError("representer suite: first phase diverged");
        rising = loss > prev ? rising + 1 : 0;
        if (rising >= 5)
          throw DivergenceError("representer suite: first phase diverged");
        prev = loss;
        for (std::size_t p = 0; p < w.size(); ++p) w[p] -= rp.eta_a * grad[p];
        double min_margin = std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p < sa.x.size(); ++p)
          min_margin = std::min(min_margin, sa.y[p] * dot(w, sa.x[p]));
        reached = min_margin >= 1.0;
      }
    }
    if (!reached) {
      summary.separable = false;
      return;
    }

    std::vector<bool> group_one(sb.group.size());
    for (std::size_t p = 0; p < sb.group.size(); ++p)
      group_one[p] = sb.group[p] == 1;
    RepresenterTraceResult trace =
        representer_trace(sb.x, sb.y, group_one, w, rp.eta_b, rp.epochs_b,
                          rp.log_every);
    summary.all_nonnegative = trace.all_nonnegative;
    summary.max_reconstruction_error = trace.max_reconstruction_error;
    summary.final_delta =
        trace.delta_fraction.empty() ? 0.0 : trace.delta_fraction.back();
  });

  for (const auto& r : report.runs)
    if (!r.separable || !r.all_nonnegative ||
        r.max_reconstruction_error > 1e-6)
      report.all_ok = false;
  return report;
}

namespace {

std::map<std::string, std::string> theory_bundle_files(
    const TheorySuiteConfig& cfg_in, int jobs,
    std::optional<int> trials_override) {
  TheorySuiteConfig cfg = cfg_in;
  if (trials_override) {
    cfg.asymptotic.trials = *trials_override;
    cfg.window.trials = *trials_override;
  }
  cfg.asymptotic.jobs = jobs;
  cfg.window.jobs = jobs;

  std::map<std::string, std::string> files;

  const AssumptionReport assumptions = check_assumptions(
      cfg.asymptotic.instance.n, cfg.asymptotic.instance.d,
      cfg.asymptotic.instance.k, cfg.asymptotic.instance.mu,
      cfg.asymptotic.instance.sigma, cfg.delta, cfg.big_c);
  files["reports/theory/assumptions.json"] = to_json(assumptions);

  const ImplicitBiasSuiteReport bias = implicit_bias_suite(cfg, jobs);
  {
    ordered_json j;
    j["suite"] = "implicit_bias";
    j["instances"] = cfg.implicit_bias.instances;
    j["iterations"] = cfg.implicit_bias.iterations;
    j["eta"] = cfg.implicit_bias.eta;
    j["min_cosine"] = bias.min_cosine;
    j["mean_cosine"] = bias.mean_cosine;
    j["max_kkt_residual"] = bias.max_kkt_residual;
    files["reports/theory/implicit_bias.json"] = j.dump(2);
    std::ostringstream csv;
    csv << "instance,cosine,final_residual_norm\n";
    for (std::size_t i = 0; i < bias.cosines.size(); ++i)
      csv << i << ',' << csv::fmt(bias.cosines[i]) << ','
          << csv::fmt(bias.final_residual_norms[i]) << '\n';
    files["reports/theory/implicit_bias.csv"] = csv.str();
  }

  const RepresenterSuiteReport rep = representer_suite(cfg, jobs);
  {
    ordered_json j;
    j["suite"] = "representer";
    j["runs"] = cfg.representer.runs;
    j["epochs_b"] = cfg.representer.epochs_b;
    j["all_ok"] = rep.all_ok;
    files["reports/theory/representer.json"] = j.dump(2);
    std::ostringstream csv;
    csv << "run,separable,all_nonnegative,max_reconstruction_error,final_delta\n";
    for (const auto& r : rep.runs)
      csv << r.run << ',' << (r.separable ? 1 : 0) << ','
          << (r.all_nonnegative ? 1 : 0) << ','
          << csv::fmt(r.max_reconstruction_error) << ','
          << csv::fmt(r.final_delta) << '\n';
    files["reports/theory/representer.csv"] = csv.str();
  }

  const AsymptoticReport asym = asymptotic_forgetting_trial(cfg.asymptotic);
  files["reports/theory/asymptotic.json"] = to_json(asym);
  files["reports/theory/asymptotic_trials.csv"] = outcomes_csv(asym);

  const WindowReport window = intermediate_window_trial(cfg.window);
  files["reports/theory/window.json"] = to_json(window);
  files["reports/theory/window_trials.csv"] = outcomes_csv(window);

  ordered_json summary;
  summary["assumptions"] = json::parse(files["reports/theory/assumptions.json"]);
  summary["implicit_bias"] =
      json::parse(files["reports/theory/implicit_bias.json"]);
  summary["representer"] = json::parse(files["reports/theory/representer.json"]);
  summary["asymptotic"] = json::parse(files["reports/theory/asymptotic.json"]);
  summary["window"] = json::parse(files["reports/theory/window.json"]);
  files["reports/theory/theory_report.json"] = summary.dump(2);
  return files;
}

}  // namespace

void run_theory_bundle(const TheorySuiteConfig& cfg,
                       const std::filesystem::path& out_dir, int jobs,
                       std::optional<int> trials_override) {
  for (const auto& [rel, content] :
       theory_bundle_files(cfg, jobs, trials_override))
    write_file(out_dir / rel, content);
}

// ---------------------------------------------------------------------------
// Single-run execution
// ---------------------------------------------------------------------------

namespace {

Manifest run_single_impl(const RunConfig& cfg, std::uint64_t seed,
                         const std::filesystem::path& run_dir, int jobs,
                         MetricTable* metrics_out) {
  const auto has = [&](AnalysisKind k) {
    return std::find(cfg.analyses.begin(), cfg.analyses.end(), k) !=
           cfg.analyses.end();
  };

  const DatasetSpec spec = cfg.make_spec(seed);
  TrainConfig ca = cfg.phase_a;
  ca.rng_seed = seed;
  TrainConfig cb = cfg.phase_b;
  cb.rng_seed = seed;

  TwoSplitResult run = two_split_run(spec, ca, cb, /*track_b_during_b=*/true);
  if (!run.a_converged)
    std::cerr << "warning: first phase hit max_epochs without converging (seed "
              << seed << ")\n";
  if (!run.b_converged)
    std::cerr << "warning: second phase hit max_epochs without converging (seed "
              << seed << ")\n";

  std::map<std::string, std::string> files;
  files["config.json"] = run_config_to_json(cfg);
  files["data/spec.json"] = spec_to_json(spec);
  {
    std::ostringstream a, b;
    write_split_csv(a, run.split_a);
    write_split_csv(b, run.split_b);
    files["data/split_a.csv"] = a.str();
    files["data/split_b.csv"] = b.str();
  }
  {
    std::ostringstream a, b;
    write_history_csv(a, run.history_a);
    write_history_csv(b, run.history_b);
    files["history/history_a.csv"] = a.str();
    files["history/history_b.csv"] = b.str();
    if (run.history_b_self) {
      std::ostringstream bs;
      write_history_csv(bs, *run.history_b_self);
      files["history/history_b_self.csv"] = bs.str();
    }
  }
  files["history/weights_a.json"] = weights_to_json(run.model_a);
  files["history/weights_b.json"] = weights_to_json(run.model_b);

  MetricTable metrics;
  if (has(AnalysisKind::kMetrics)) {
    metrics = compute_metrics(run.history_a, run.history_b, run.split_a);
    std::ostringstream m;
    write_metrics_csv(m, metrics);
    files["metrics/metrics.csv"] = m.str();
    if (metrics_out) *metrics_out = metrics;
  }

  ordered_json summary;
  summary["seed"] = seed;
  summary["epochs_a"] = run.history_a.epochs;
  summary["epochs_b"] = run.history_b.epochs;
  summary["a_converged"] = run.a_converged;
  summary["b_converged"] = run.b_converged;
  {
    std::map<std::string, int> counts;
    for (const Example& ex : run.split_a) counts[to_string(ex.provenance)] += 1;
    summary["split_a_provenance"] = counts;
  }

  if (has(AnalysisKind::kAuc)) {
    std::vector<AucReport> reports;
    for (MetricName m : {MetricName::kFslt, MetricName::kAccL, MetricName::kSsft,
                         MetricName::kAccF, MetricName::kConfL, MetricName::kNf,
                         MetricName::kJoint})
      reports.push_back(auc_for_metric(metrics, m));
    std::ostringstream out;
    write_auc_csv(out, reports);
    files["reports/auc.csv"] = out.str();
    for (const auto& r : reports)
      summary["auc"][r.metric_name] = r.auc;
  }

  if (has(AnalysisKind::kCurves)) {
    const CurveTables curves =
        curve_data(run.history_a, run.history_b, run.split_a);
    std::ostringstream a, b, scatter;
    write_curves_csv(a, curves.phase_a);
    write_curves_csv(b, curves.phase_b);
    files["reports/curves_phase_a.csv"] = a.str();
    files["reports/curves_phase_b.csv"] = b.str();
    scatter << "example_id,provenance,fslt,ssft\n";
    for (const auto& r : metrics.rows)
      scatter << r.example_id << ',' << to_string(r.provenance) << ','
              << epoch_to_string(r.fslt) << ',' << epoch_to_string(r.ssft)
              << '\n';
    files["reports/scatter.csv"] = scatter.str();
  }

  if (has(AnalysisKind::kRemoval)) {
    RemovalParams rp;
    rp.strategies = cfg.removal_strategies;
    rp.counts = cfg.removal_counts;
    rp.eval_count = cfg.eval_count;
    rp.jobs = jobs;
    rp.seeds.clear();
    for (int i = 0; i < cfg.removal_seeds; ++i)
      rp.seeds.push_back(
          Rng::from_path(seed, {stream::kRemoval, 0xD, static_cast<std::uint64_t>(i)})
              .next_u64());
    const RemovalCurveSet removal =
        removal_retrain(spec, cfg.phase_a, cfg.phase_b, rp);
    std::ostringstream out;
    write_removal_csv(out, removal);
    files["reports/removal.csv"] = out.str();
  }

  if (has(AnalysisKind::kTheory)) {
    for (auto& [rel, content] : theory_bundle_files(cfg.theory, jobs, std::nullopt))
      files[rel] = std::move(content);
  }

  files["reports/summary.json"] = summary.dump(2);

  Manifest manifest;
  manifest.seed = seed;
  manifest.config_hash = config_hash(cfg);
  manifest.run_id =
      "s" + std::to_string(seed) + "-" + manifest.config_hash.substr(0, 8);
  for (const auto& [rel, content] : files) {
    manifest.files[rel] = sha256_hex(content);
    write_file(run_dir / rel, content);
  }
  write_file(run_dir / "manifest.json", manifest_to_json(manifest));
  return manifest;
}

}  // namespace

Manifest run_single(const RunConfig& cfg, std::uint64_t seed,
                    const std::filesystem::path& run_dir, int jobs) {
  return run_single_impl(cfg, seed, run_dir, jobs, nullptr);
}

RunGroupResult run_group(const RunConfig& cfg,
                         const std::filesystem::path& output_root, int jobs) {
  const std::string hash8 = config_hash(cfg).substr(0, 8);
  RunGroupResult result;
  result.manifests.resize(cfg.seeds.size());
  result.run_dirs.resize(cfg.seeds.size());
  std::vector<MetricTable> tables(cfg.seeds.size());

  parallel_for_index(cfg.seeds.size(), jobs, [&](std::size_t i) {
    const std::uint64_t seed = cfg.seeds[i];
    const std::filesystem::path run_dir =
        output_root / ("s" + std::to_string(seed) + "-" + hash8);
    result.run_dirs[i] = run_dir;
    result.manifests[i] =
        run_single_impl(cfg, seed, run_dir, 1, &tables[i]);
    std::cerr << "run " << result.manifests[i].run_id << " complete\n";
  });

  const bool wants_stability =
      std::find(cfg.analyses.begin(), cfg.analyses.end(),
                AnalysisKind::kStability) != cfg.analyses.end();
  if (wants_stability && cfg.seeds.size() >= 2) {
    const StabilityReport rep = stability(tables[0], tables[1]);
    write_file(output_root / ("stability_" + hash8 + ".json"), to_json(rep));
  }
  return result;
}

std::vector<std::string> verify_manifest(const std::filesystem::path& run_dir) {
  const Manifest manifest =
      manifest_from_json(read_file(run_dir / "manifest.json"));
  std::vector<std::string> bad;
  for (const auto& [rel, hash] : manifest.files) {
    const std::filesystem::path p = run_dir / rel;
    if (!std::filesystem::exists(p)) {
      bad.push_back(rel + " (missing)");
      continue;
    }
    if (sha256_hex(read_file(p)) != hash) bad.push_back(rel + " (hash mismatch)");
  }
  return bad;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

namespace {

RunConfig apply_axis(const RunConfig& base, const std::string& axis,
                     const std::string& value) {
  json j = json::parse(run_config_to_json(base));
  json* node = &j;
  std::string remaining = axis;
  std::string walked;
  while (true) {
    const std::size_t dot = remaining.find('.');
    const std::string key = remaining.substr(0, dot);
    walked = walked.empty() ? key : walked + "." + key;
    if (!node->is_object() || !node->contains(key))
      throw ConfigError("sweep axis: no config field at '" + walked + "'");
    node = &(*node)[key];
    if (dot == std::string::npos) break;
    remaining = remaining.substr(dot + 1);
  }
  try {
    if (node->is_number_float())
      *node = std::stod(value);
    else if (node->is_number_integer() || node->is_number_unsigned())
      *node = std::stoll(value);
    else if (node->is_string())
      *node = value;
    else if (node->is_boolean())
      *node = value == "true" || value == "1";
    else
      throw ConfigError("sweep axis: field '" + axis + "' is not scalar");
  } catch (const std::invalid_argument&) {
    throw ConfigError("sweep axis: cannot parse '" + value + "' for " + axis);
  }
  return parse_run_config(j.dump());
}

std::string sanitize_component(std::string s) {
  for (char& c : s)
    if (c == '/' || c == '\\' || c == ':') c = '_';
  return s;
}

}  // namespace

SweepResult run_sweep(const RunConfig& base, const std::string& axis,
                      const std::vector<std::string>& values,
                      const std::filesystem::path& output_root, int jobs) {
  if (values.empty()) throw ConfigError("sweep: no values given");
  SweepResult sweep;
  sweep.axis = axis;
  sweep.cells.resize(values.size() * base.seeds.size());

  parallel_for_index(sweep.cells.size(), jobs, [&](std::size_t idx) {
    const std::size_t vi = idx / base.seeds.size();
    const std::size_t si = idx % base.seeds.size();
    SweepCell& cell = sweep.cells[idx];
    cell.axis_value = values[vi];
    cell.seed = base.seeds[si];
    try {
      RunConfig cfg = apply_axis(base, axis, values[vi]);
      // The sweep only needs the metric table.
      if (std::find(cfg.analyses.begin(), cfg.analyses.end(),
                    AnalysisKind::kMetrics) == cfg.analyses.end())
        cfg.analyses.push_back(AnalysisKind::kMetrics);
      const std::filesystem::path cell_dir =
          output_root /
          (sanitize_component(axis) + "=" + sanitize_component(values[vi]));
      MetricTable table;
      const Manifest manifest = run_single_impl(
          cfg, cell.seed,
          cell_dir / ("s" + std::to_string(cell.seed) + "-" +
                      config_hash(cfg).substr(0, 8)),
          1, &table);
      cell.run_id = manifest.run_id;
      cell.auc_ssft = auc_for_metric(table, MetricName::kSsft).auc;
      cell.auc_joint = auc_for_metric(table, MetricName::kJoint).auc;
      cell.ok = true;
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
    }
    std::cerr << "sweep cell " << axis << "=" << cell.axis_value << " seed "
              << cell.seed << (cell.ok ? " done" : " failed") << "\n";
  });
  return sweep;
}

void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
  out << "axis,value,seed,status,auc_ssft,auc_joint,run_id,error\n";
  for (const auto& c : sweep.cells) {
    std::string error = c.error;
    std::replace(error.begin(), error.end(), ',', ';');
    std::replace(error.begin(), error.end(), '\n', ' ');
    out << sweep.axis << ',' << c.axis_value << ',' << c.seed << ','
        << (c.ok ? "ok" : "failed") << ',' << csv::fmt(c.auc_ssft) << ','
        << csv::fmt(c.auc_joint) << ',' << c.run_id << ',' << error << '\n';
  }
}

}  // namespace ssft
