#include "symflow/cli/pipeline.hpp"

#include "symflow/nn/checkpoint.hpp"
#include "symflow/systems/allen_cahn.hpp"
#include "symflow/systems/beam.hpp"
#include "symflow/systems/toy.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace symflow::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using systems::SystemId;

namespace {

constexpr const char* kModelFormat = "symflow.model.v1";

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config: '") + key + "' has the wrong type");
  }
}

std::string integrator_name(flow::Integrator i) { return i == flow::Integrator::euler ? "euler" : "midpoint"; }

flow::Integrator integrator_from(const std::string& name) {
  if (name == "euler") return flow::Integrator::euler;
  if (name == "midpoint") return flow::Integrator::midpoint;
  throw ConfigError("sampler: integrator must be euler or midpoint");
}

flow::TrainingSet training_set(const RunConfig& config, const models::SystemSpec& spec,
                               const systems::Dataset& data) {
  flow::TrainingSet set;
  if (spec.id == SystemId::two_deltas) {
    const int batch = config.training.batch_size;
    set.stream = [batch](Rng& rng, Matrix& targets, Matrix& conds) {
      targets.resize(batch, 1);
      conds.resize(batch, 1);
      for (int i = 0; i < batch; ++i) {
        const auto [x, y] = systems::gen_two_deltas(rng);
        conds(i, 0) = x;
        targets(i, 0) = y;
      }
    };
    return set;
  }
  if (data.train.empty()) throw ConfigError("dataset has an empty training split");
  const Matrix inputs = data.rows(data.inputs, data.train);
  set.targets = spec.encode(data.rows(data.targets, data.train), inputs);
  set.conds = spec.conditions(inputs);
  return set;
}

systems::ACConfig ac_config_for(const models::SystemSpec& spec, const Vector& input) {
  systems::ACConfig c;
  c.epsilon = input[0];
  c.mu = input[1];
  const int saved = static_cast<int>(spec.target_shape[0]);
  require_shape(saved >= 2 && c.num_steps() % (saved - 1) == 0, "allen_cahn: saved slices do not divide the run");
  c.save_stride = c.num_steps() / (saved - 1);
  c.nx = static_cast<int>(spec.target_shape[1]);
  return c;
}

}  // namespace

RunConfig RunConfig::defaults(SystemId system) {
  RunConfig c;
  c.system = system;
  auto& t = c.training;
  switch (system) {
    case SystemId::two_deltas:
      t.epochs = 10000;
      t.batch_size = 256;
      break;
    case SystemId::coin_flip:
      t.epochs = 400;
      t.batch_size = 64;
      break;
    case SystemId::three_roads:
      t.epochs = 200;
      t.batch_size = 64;
      break;
    case SystemId::four_node:
      t.epochs = 150;
      t.batch_size = 64;
      break;
    case SystemId::beam:
      t.epochs = 250;
      t.batch_size = 32;
      t.learning_rate = 3e-3;
      t.final_lr_fraction = 0.02;
      break;
    case SystemId::allen_cahn:
      t.epochs = 600;
      t.batch_size = 16;
      t.learning_rate = 3e-3;
      t.final_lr_fraction = 0.05;
      break;
  }
  return c;
}

RunConfig RunConfig::from_json(const json& j, const fs::path& output_root) {
  check_keys(j, "config",
             {"system", "output_dir", "dataset", "prior", "architecture", "training", "sampler", "eval", "bifurcation"});
  if (!j.contains("system")) throw ConfigError("config: 'system' is required");
  RunConfig c = defaults(systems::system_from_string(j.at("system").get<std::string>()));
  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    check_keys(d, "dataset", {"n_records", "seed", "beam_steps", "ac_save_stride"});
    read_if(d, "n_records", c.dataset.n_records);
    read_if(d, "seed", c.dataset.seed);
    read_if(d, "beam_steps", c.dataset.beam_steps);
    read_if(d, "ac_save_stride", c.dataset.ac_save_stride);
    if (c.dataset.beam_steps < 2) throw ConfigError("dataset: beam_steps must be >= 2");
    if (c.dataset.ac_save_stride < 1) throw ConfigError("dataset: ac_save_stride must be >= 1");
  }
  if (j.contains("prior")) {
    check_keys(j.at("prior"), "prior", {"sigma"});
    double s = 0.0;
    read_if(j.at("prior"), "sigma", s);
    if (!(s > 0)) throw ConfigError("prior: sigma must be positive");
    c.prior_sigma = s;
  }
  if (j.contains("architecture")) {
    c.arch_overrides = j.at("architecture");
    models::default_arch(c.system, &c.arch_overrides);  // validates
  }
  if (j.contains("training")) {
    const json& t = j.at("training");
    check_keys(t, "training", {"epochs", "batch_size", "learning_rate", "final_lr_fraction", "matcher", "baseline", "seed"});
    read_if(t, "epochs", c.training.epochs);
    read_if(t, "batch_size", c.training.batch_size);
    read_if(t, "learning_rate", c.training.learning_rate);
    read_if(t, "final_lr_fraction", c.training.final_lr_fraction);
    read_if(t, "matcher", c.training.matcher);
    read_if(t, "baseline", c.training.baseline);
    read_if(t, "seed", c.training.seed);
    if (c.training.epochs < 0) throw ConfigError("training: epochs must be >= 0");
    if (c.training.batch_size < 1) throw ConfigError("training: batch_size must be >= 1");
    if (!(c.training.learning_rate >= 0)) throw ConfigError("training: learning_rate must be >= 0");
    if (!(c.training.final_lr_fraction >= 0 && c.training.final_lr_fraction <= 1)) {
      throw ConfigError("training: final_lr_fraction must lie in [0, 1]");
    }
    if (c.training.matcher && c.training.baseline) throw ConfigError("training: matcher applies to flow models only");
  }
  if (j.contains("sampler")) {
    const json& s = j.at("sampler");
    check_keys(s, "sampler", {"num_steps", "integrator"});
    read_if(s, "num_steps", c.sampler.num_steps);
    if (s.contains("integrator")) c.sampler.integrator = integrator_from(s.at("integrator").get<std::string>());
    if (c.sampler.num_steps < 1) throw ConfigError("sampler: num_steps must be >= 1");
  }
  if (j.contains("eval")) {
    const json& e = j.at("eval");
    check_keys(e, "eval", {"n_pred", "max_records", "seed"});
    read_if(e, "n_pred", c.eval.n_pred);
    read_if(e, "max_records", c.eval.max_records);
    read_if(e, "seed", c.eval.seed);
    if (c.eval.n_pred < 1) throw ConfigError("eval: n_pred must be >= 1");
  }
  if (j.contains("bifurcation")) {
    const json& b = j.at("bifurcation");
    check_keys(b, "bifurcation", {"mu_values", "epsilon", "n_samples", "ground_truth", "seed"});
    read_if(b, "mu_values", c.bifurcation.mu_values);
    read_if(b, "epsilon", c.bifurcation.epsilon);
    read_if(b, "n_samples", c.bifurcation.n_samples);
    read_if(b, "ground_truth", c.bifurcation.ground_truth);
    read_if(b, "seed", c.bifurcation.seed);
    if (!(c.bifurcation.epsilon > 0)) throw ConfigError("bifurcation: epsilon must be positive");
  }
  if (j.contains("output_dir")) {
    c.output_dir = j.at("output_dir").get<std::string>();
  } else {
    c.output_dir = output_root / systems::to_string(c.system);
  }
  return c;
}

json RunConfig::to_json() const {
  json j = {{"system", systems::to_string(system)},
            {"output_dir", output_dir.string()},
            {"dataset",
             {{"n_records", dataset.n_records ? dataset.n_records : systems::default_record_count(system)},
              {"seed", dataset.seed},
              {"beam_steps", dataset.beam_steps},
              {"ac_save_stride", dataset.ac_save_stride}}},
            {"architecture", arch().to_json()},
            {"training",
             {{"epochs", training.epochs},
              {"batch_size", training.batch_size},
              {"learning_rate", training.learning_rate},
              {"final_lr_fraction", training.final_lr_fraction},
              {"matcher", training.matcher},
              {"baseline", training.baseline},
              {"seed", training.seed}}},
            {"sampler", {{"num_steps", sampler.num_steps}, {"integrator", integrator_name(sampler.integrator)}}},
            {"eval", {{"n_pred", eval.n_pred}, {"max_records", eval.max_records}, {"seed", eval.seed}}},
            {"bifurcation",
             {{"mu_values", bifurcation.mu_values},
              {"epsilon", bifurcation.epsilon},
              {"n_samples", bifurcation.n_samples},
              {"ground_truth", bifurcation.ground_truth},
              {"seed", bifurcation.seed}}}};
  if (prior_sigma) j["prior"] = {{"sigma", *prior_sigma}};
  return j;
}

std::string RunConfig::hash() const {
  json j = to_json();
  j.erase("output_dir");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

models::SystemSpec RunConfig::spec() const {
  std::vector<std::size_t> shape;
  if (system == SystemId::beam) {
    shape = {static_cast<std::size_t>(dataset.beam_steps), static_cast<std::size_t>(systems::kBeamMaxSegments)};
  } else if (system == SystemId::allen_cahn) {
    systems::ACConfig probe;
    probe.save_stride = dataset.ac_save_stride;
    shape = {static_cast<std::size_t>(probe.num_saved()), static_cast<std::size_t>(probe.nx)};
  }
  models::SystemSpec s = models::system_spec(system, shape);
  if (prior_sigma) s.prior.sigma = *prior_sigma;
  return s;
}

models::ArchConfig RunConfig::arch() const {
  models::ArchConfig a = models::default_arch(system, arch_overrides.empty() ? nullptr : &arch_overrides);
  if (!arch_overrides.contains("init_seed")) a.init_seed = training.seed;
  return a;
}

std::string RunConfig::run_name() const {
  return training.baseline ? "baseline" : (training.matcher ? "flow_matched" : "flow");
}

fs::path RunConfig::checkpoint_path() const { return output_dir / (run_name() + ".ckpt.json"); }

systems::Dataset generate_dataset(const RunConfig& config) {
  return systems::build_dataset(config.system, config.dataset);
}

TrainedModel train_model(const RunConfig& config, const systems::Dataset& data, flow::TrainResult* result) {
  TrainedModel tm;
  tm.spec = config.spec();
  require_shape(data.system == systems::to_string(config.system), "dataset was generated for another system");
  if (config.system != SystemId::two_deltas) {
    require_shape(data.target_shape == tm.spec.target_shape, "dataset target shape does not match the config");
  }
  tm.arch = config.arch();
  tm.model = models::build_model(tm.spec, tm.arch);
  tm.baseline = config.training.baseline;
  tm.matched = config.training.matcher;
  tm.config_hash = config.hash();
  tm.seed = config.training.seed;

  const flow::TrainingSet set = training_set(config, tm.spec, data);
  flow::TrainConfig tc;
  tc.epochs = config.training.epochs;
  tc.batch_size = config.training.batch_size;
  tc.learning_rate = config.training.learning_rate;
  tc.final_lr_fraction = config.training.final_lr_fraction;
  tc.seed = config.training.seed;

  flow::TrainResult r;
  if (tm.baseline) {
    const prior::GaussianPrior zero(tm.spec.dim, 0.0);
    tc.fixed_time = 0.0;
    r = flow::train(*tm.model, set, zero, sym::IdentityMatcher{}, tc);
  } else {
    const auto prior = tm.spec.make_prior();
    if (tm.matched) {
      r = flow::train(*tm.model, set, *prior, sym::SymmetricMatcher(tm.spec.group), tc);
    } else {
      r = flow::train(*tm.model, set, *prior, sym::IdentityMatcher{}, tc);
    }
  }
  tm.trained_steps = r.steps;
  if (result) *result = std::move(r);
  return tm;
}

void save_model(const fs::path& path, const TrainedModel& m) {
  json j = {{"format", kModelFormat},
            {"system", systems::to_string(m.spec.id)},
            {"target_shape", m.spec.target_shape},
            {"prior", m.spec.prior.to_json()},
            {"architecture", m.arch.to_json()},
            {"model", m.model->describe()},
            {"baseline", m.baseline},
            {"matcher", m.matched},
            {"trained_steps", m.trained_steps},
            {"config_hash", m.config_hash},
            {"seed", m.seed},
            {"params", nn::params_to_json(m.model->params())}};
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << j.dump(1) << '\n';
}

TrainedModel load_model(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("checkpoint not found: " + path.string());
  std::ifstream in(path);
  const json j = json::parse(in);
  if (j.value("format", "") != kModelFormat) throw ConfigError(path.string() + ": unknown checkpoint format");
  TrainedModel m;
  m.spec = models::system_spec(systems::system_from_string(j.at("system").get<std::string>()),
                               j.at("target_shape").get<std::vector<std::size_t>>());
  m.spec.prior = prior::PriorSpec::from_json(j.at("prior"));
  m.arch = models::ArchConfig::from_json(j.at("architecture"));
  m.model = models::build_model(m.spec, m.arch);
  m.baseline = j.at("baseline").get<bool>();
  m.matched = j.at("matcher").get<bool>();
  m.trained_steps = j.at("trained_steps").get<std::int64_t>();
  m.config_hash = j.at("config_hash").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  const ParamVector p = nn::params_from_json(j.at("params"));
  require_shape(p.size() == m.model->params().size(), "checkpoint parameters do not match the architecture");
  m.model->params() = p;
  return m;
}

Matrix predict(const TrainedModel& m, const Vector& input, std::size_t n, Rng& rng,
               const flow::SamplerConfig& sampler) {
  const Matrix in_row = input.transpose();
  const Matrix cond_row = m.spec.conditions(in_row);
  const auto rows = static_cast<Eigen::Index>(n);
  Matrix conds = cond_row.replicate(rows, 1);
  Matrix inputs = in_row.replicate(rows, 1);
  Matrix z;
  if (m.baseline) {
    const Matrix zero = Matrix::Zero(1, static_cast<Eigen::Index>(m.spec.dim));
    z = m.model->forward(zero, Vector::Zero(1), cond_row).replicate(rows, 1);
  } else {
    const auto prior = m.spec.make_prior();
    Matrix x0(rows, static_cast<Eigen::Index>(m.spec.dim));
    const Vector cv = cond_row.row(0).transpose();
    for (Eigen::Index i = 0; i < rows; ++i) x0.row(i) = prior->sample(cv, rng).transpose();
    z = flow::sample_batch(*m.model, x0, conds, sampler);
  }
  return m.spec.decode(z, inputs);
}

metrics::TargetDistribution allowed_outcomes(SystemId id, const Vector& input, const Vector& target) {
  switch (id) {
    case SystemId::two_deltas:
      return metrics::TargetDistribution::uniform({Vector::Constant(1, -1.0), Vector::Constant(1, 1.0)});
    case SystemId::coin_flip:
    case SystemId::beam:
      return metrics::TargetDistribution::uniform({target, Vector(-target)});
    case SystemId::three_roads:
      return metrics::TargetDistribution::uniform(systems::three_roads_outcomes(input));
    case SystemId::four_node:
      return metrics::TargetDistribution::uniform(systems::four_node_outcomes(input[0]));
    case SystemId::allen_cahn:
      break;
  }
  throw ConfigError("allen_cahn has no finite outcome set; it is scored by its residual");
}

json EvalReport::to_json() const {
  std::string definition;
  if (metric_name == "wasserstein_1d") {
    definition = "exact W1 between the empirical prediction distribution and the allowed outcomes (quantile coupling)";
  } else if (metric_name == "wasserstein_assignment") {
    definition = "minimum-cost assignment of predictions to outcome replicas in proportion to their weights "
                 "(largest-remainder rounding), Euclidean cost, divided by the number of predictions";
  } else {
    definition = "sum of squared residuals of the semi-implicit scheme over saved slices, averaged over predictions";
  }
  return {{"system", system}, {"metric_name", metric_name}, {"metric_definition", definition}, {"records", records},
          {"per_record", per_record}, {"mean", mean}, {"config_hash", config_hash},
          {"checkpoint_hash", checkpoint_hash}};
}

EvalReport evaluate_system(const TrainedModel& m, const systems::Dataset& data, const EvalBlock& eval,
                           const flow::SamplerConfig& sampler) {
  EvalReport report;
  report.system = systems::to_string(m.spec.id);
  report.config_hash = m.config_hash;
  report.checkpoint_hash = m.config_hash;
  switch (m.spec.id) {
    case SystemId::two_deltas:
    case SystemId::coin_flip:
      report.metric_name = "wasserstein_1d";
      break;
    case SystemId::allen_cahn:
      report.metric_name = "ac_residual";
      break;
    default:
      report.metric_name = "wasserstein_assignment";
  }
  std::size_t count = data.test.size();
  if (eval.max_records > 0) count = std::min(count, eval.max_records);
  if (count == 0) throw ConfigError("evaluation: empty test split");
  double total = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t rec = data.test[k];
    const Vector input = data.inputs.row(static_cast<Eigen::Index>(rec)).transpose();
    const Vector target = data.targets.row(static_cast<Eigen::Index>(rec)).transpose();
    Rng rng(eval.seed, rec);
    const Matrix preds = predict(m, input, eval.n_pred, rng, sampler);
    double value = 0.0;
    if (m.spec.id == SystemId::allen_cahn) {
      const systems::ACConfig c = ac_config_for(m.spec, input);
      for (Eigen::Index i = 0; i < preds.rows(); ++i) {
        const Matrix u = Eigen::Map<const Matrix>(preds.row(i).data(), static_cast<Eigen::Index>(m.spec.target_shape[0]),
                                                  static_cast<Eigen::Index>(m.spec.target_shape[1]));
        value += metrics::ac_residual(c, u);
      }
      value /= static_cast<double>(preds.rows());
    } else {
      const auto dist = allowed_outcomes(m.spec.id, input, target);
      if (report.metric_name == "wasserstein_1d") {
        const Vector col = preds.col(0);
        value = metrics::wasserstein_1d({col.data(), static_cast<std::size_t>(col.size())}, dist);
      } else {
        std::vector<Vector> samples;
        for (Eigen::Index i = 0; i < preds.rows(); ++i) samples.push_back(preds.row(i).transpose());
        value = metrics::wasserstein_assignment(samples, dist);
      }
    }
    report.records.push_back(rec);
    report.per_record.push_back(value);
    total += value;
  }
  report.mean = total / static_cast<double>(count);
  return report;
}

void write_report(const fs::path& dir, const EvalReport& report) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "report.json");
    if (!out) throw std::runtime_error("cannot write " + (dir / "report.json").string());
    out << report.to_json().dump(2) << '\n';
  }
  std::ofstream csv(dir / "report.csv");
  if (!csv) throw std::runtime_error("cannot write " + (dir / "report.csv").string());
  csv.precision(17);
  csv << "system,metric,record,value,config_hash\n";
  const std::string tail = "," + report.config_hash + "\n";
  for (std::size_t i = 0; i < report.records.size(); ++i) {
    csv << report.system << ',' << report.metric_name << ',' << report.records[i] << ',' << report.per_record[i] << tail;
  }
  csv << report.system << ',' << report.metric_name << ",mean," << report.mean << tail;
}

std::vector<metrics::BifurcationPoint> bifurcation_scan(const TrainedModel& m, const BifurcationBlock& block,
                                                        const flow::SamplerConfig& sampler) {
  if (m.spec.id != SystemId::allen_cahn) throw ConfigError("bifurcation scan needs an allen_cahn model");
  if (m.baseline) throw ConfigError("bifurcation scan needs a flow model, not the regression baseline");
  if (m.trained_steps <= 0) {
    throw ConfigError("bifurcation scan refused: the model has not been trained (trained_steps = 0)");
  }
  const auto slices = static_cast<Eigen::Index>(m.spec.target_shape[0]);
  const auto width = static_cast<Eigen::Index>(m.spec.target_shape[1]);
  std::uint64_t call = 0;
  auto sample_fields = [&](double mu, double eps, std::size_t n) {
    Rng rng(block.seed, call++);
    const Matrix preds = predict(m, Vector{{eps, mu}}, n, rng, sampler);
    return Matrix(preds.rightCols(width));
  };
  (void)slices;
  return metrics::bifurcation_statistics(sample_fields, block.mu_values, block.epsilon, block.n_samples);
}

std::vector<metrics::BifurcationPoint> bifurcation_scan_ground_truth(const BifurcationBlock& block) {
  std::uint64_t call = 0;
  auto sample_fields = [&](double mu, double eps, std::size_t n) {
    systems::ACConfig c;
    c.mu = mu;
    c.epsilon = eps;
    c.save_stride = c.num_steps();
    Matrix out(static_cast<Eigen::Index>(n), c.nx);
    for (std::size_t i = 0; i < n; ++i) {
      Rng rng(block.seed, (call << 32) + i);
      const auto traj = systems::solve_allen_cahn(c, rng);
      out.row(static_cast<Eigen::Index>(i)) = traj.u.row(traj.u.rows() - 1);
    }
    ++call;
    return out;
  };
  return metrics::bifurcation_statistics(sample_fields, block.mu_values, block.epsilon, block.n_samples);
}

}  // namespace symflow::cli
