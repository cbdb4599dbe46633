#include "symflow/cli/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace symflow;

namespace {

struct Common {
  std::string config_file;
  std::string system;
  std::string output_dir;
  std::vector<std::string> sets;
};

json parse_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return text;
  }
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key.path=value, got '" + assignment + "'");
  const std::string path = assignment.substr(0, eq);
  const json value = parse_value(assignment.substr(eq + 1));
  if (value.is_object() || value.is_array()) {
    if (path != "bifurcation.mu_values") throw ConfigError("--set only overrides scalar fields: " + path);
  }
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("--set: malformed key '" + path + "'");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    json& child = (*node)[key];
    if (child.is_null()) child = json::object();
    if (!child.is_object()) throw ConfigError("--set: '" + key + "' is not a block");
    node = &child;
    start = dot + 1;
  }
}

cli::RunConfig load_config(const Common& c) {
  json doc = json::object();
  if (!c.config_file.empty()) {
    std::ifstream in(c.config_file);
    if (!in) throw ConfigError("cannot read config file " + c.config_file);
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError(c.config_file + ": " + e.what());
    }
  }
  if (!c.system.empty()) doc["system"] = c.system;
  if (!c.output_dir.empty()) doc["output_dir"] = c.output_dir;
  for (const auto& s : c.sets) apply_override(doc, s);
  const char* root = std::getenv("SYMFLOW_OUTPUT_ROOT");
  return cli::RunConfig::from_json(doc, root && *root ? fs::path(root) : fs::path("runs"));
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

systems::Dataset require_dataset(const cli::RunConfig& config) {
  const fs::path dir = config.dataset_dir();
  if (!fs::exists(dir / "metadata.json")) {
    throw ConfigError("dataset not found: expected " + (dir / "metadata.json").string() + " (run `symflow gen` first)");
  }
  systems::Dataset d = systems::read_dataset(dir);
  if (d.system != systems::to_string(config.system)) {
    throw ConfigError("dataset at " + dir.string() + " belongs to system " + d.system);
  }
  return d;
}

int cmd_gen(const cli::RunConfig& config, bool overwrite) {
  const systems::Dataset d = cli::generate_dataset(config);
  const auto outcome = systems::write_dataset(config.dataset_dir(), d, overwrite);
  write_json(config.output_dir / "config.json", {{"config", config.to_json()}, {"config_hash", config.hash()}});
  std::cout << (outcome == systems::WriteOutcome::written ? "wrote " : "verified ") << d.size() << " records ("
            << d.train.size() << " train / " << d.test.size() << " test) to " << config.dataset_dir().string() << '\n';
  return 0;
}

int cmd_train(const cli::RunConfig& config, bool overwrite) {
  const fs::path ckpt = config.checkpoint_path();
  if (fs::exists(ckpt) && !overwrite) {
    const cli::TrainedModel old = cli::load_model(ckpt);
    if (old.config_hash != config.hash()) {
      throw ConfigError(ckpt.string() + " was trained from a different config; pass --overwrite to replace it");
    }
  }
  const systems::Dataset data = require_dataset(config);
  flow::TrainResult result;
  const cli::TrainedModel m = cli::train_model(config, data, &result);
  cli::save_model(ckpt, m);
  const fs::path loss = config.output_dir / (config.run_name() + ".loss.csv");
  flow::write_loss_csv(loss, result.history);
  write_json(config.output_dir / (config.run_name() + ".train.json"),
             {{"config", config.to_json()},
              {"config_hash", config.hash()},
              {"checkpoint", ckpt.string()},
              {"trained_steps", m.trained_steps},
              {"final_loss", result.history.empty() ? 0.0 : result.history.back().mean_loss}});
  std::cout << "trained " << m.trained_steps << " steps; checkpoint " << ckpt.string() << '\n';
  return 0;
}

int cmd_eval(const cli::RunConfig& config, const std::string& checkpoint) {
  const fs::path ckpt = checkpoint.empty() ? config.checkpoint_path() : fs::path(checkpoint);
  const cli::TrainedModel m = cli::load_model(ckpt);
  if (m.spec.id != config.system) throw ConfigError(ckpt.string() + " holds a model for another system");
  const systems::Dataset data = require_dataset(config);
  cli::EvalReport report = cli::evaluate_system(m, data, config.eval, config.sampler);
  report.config_hash = config.hash();
  const fs::path dir = config.output_dir / "eval" / ckpt.filename().string().substr(0, ckpt.filename().string().find('.'));
  cli::write_report(dir, report);
  std::cout << report.metric_name << " mean " << report.mean << " over " << report.records.size() << " records; report "
            << (dir / "report.json").string() << '\n';
  return 0;
}

int cmd_sample(const cli::RunConfig& config, const std::string& checkpoint, std::size_t record, std::size_t n,
               const std::string& out_path) {
  const fs::path ckpt = checkpoint.empty() ? config.checkpoint_path() : fs::path(checkpoint);
  const cli::TrainedModel m = cli::load_model(ckpt);
  if (m.spec.id != config.system) throw ConfigError(ckpt.string() + " holds a model for another system");
  const systems::Dataset data = require_dataset(config);
  if (record >= data.size()) throw ConfigError("record " + std::to_string(record) + " out of range");
  Rng rng(config.eval.seed, record);
  const Matrix preds =
      cli::predict(m, data.inputs.row(static_cast<Eigen::Index>(record)).transpose(), n, rng, config.sampler);
  const fs::path out = out_path.empty() ? config.output_dir / ("samples_" + std::to_string(record) + ".csv")
                                        : fs::path(out_path);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream csv(out);
  if (!csv) throw std::runtime_error("cannot write " + out.string());
  csv.precision(17);
  csv << "# config_hash=" << config.hash() << " record=" << record << '\n';
  for (Eigen::Index i = 0; i < preds.rows(); ++i) {
    for (Eigen::Index k = 0; k < preds.cols(); ++k) csv << (k ? "," : "") << preds(i, k);
    csv << '\n';
  }
  std::cout << "wrote " << n << " samples to " << out.string() << '\n';
  return 0;
}

int cmd_bifurcation(const cli::RunConfig& config, const std::string& checkpoint, bool ground_truth) {
  if (config.system != systems::SystemId::allen_cahn) throw ConfigError("bifurcation needs system allen_cahn");
  const bool truth = ground_truth || config.bifurcation.ground_truth;
  std::vector<metrics::BifurcationPoint> points;
  if (truth) {
    points = cli::bifurcation_scan_ground_truth(config.bifurcation);
  } else {
    const fs::path ckpt = checkpoint.empty() ? config.checkpoint_path() : fs::path(checkpoint);
    points = cli::bifurcation_scan(cli::load_model(ckpt), config.bifurcation, config.sampler);
  }
  const std::string name = truth ? "bifurcation_ground_truth" : "bifurcation";
  fs::create_directories(config.output_dir);
  const fs::path csv = config.output_dir / (name + ".csv");
  metrics::write_bifurcation_csv(csv.string(), points);
  write_json(config.output_dir / (name + ".json"),
             {{"config_hash", config.hash()}, {"ground_truth", truth}, {"csv", csv.string()}});
  std::cout << "wrote " << csv.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"symflow: flow matching for multistable systems"};
  app.require_subcommand(1);

  Common common;
  bool overwrite = false;
  bool ground_truth = false;
  std::string checkpoint;
  std::string out_path;
  std::size_t record = 0;
  std::size_t n_samples = 100;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", common.config_file, "JSON run config");
    sub->add_option("-s,--system", common.system, "system id (overrides the config)");
    sub->add_option("-o,--output-dir", common.output_dir, "output directory (overrides the config)");
    sub->add_option("--set", common.sets, "scalar override, e.g. training.epochs=50")->take_all();
  };

  CLI::App* gen = app.add_subcommand("gen", "generate and write a dataset");
  add_common(gen);
  gen->add_flag("--overwrite", overwrite, "replace a non-matching existing dataset");

  CLI::App* train = app.add_subcommand("train", "train a model; writes checkpoint and loss CSV");
  add_common(train);
  train->add_flag("--overwrite", overwrite, "replace a checkpoint from a different config");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  add_common(eval);
  eval->add_option("--checkpoint", checkpoint, "checkpoint path (default from config)");

  CLI::App* sample = app.add_subcommand("sample", "draw predictions for one record");
  add_common(sample);
  sample->add_option("--checkpoint", checkpoint, "checkpoint path (default from config)");
  sample->add_option("--record", record, "record index")->required();
  sample->add_option("-n,--n", n_samples, "number of samples")->check(CLI::PositiveNumber);
  sample->add_option("--out", out_path, "output CSV");

  CLI::App* bif = app.add_subcommand("bifurcation", "Allen-Cahn bifurcation scan to CSV");
  add_common(bif);
  bif->add_option("--checkpoint", checkpoint, "checkpoint path (default from config)");
  bif->add_flag("--ground-truth", ground_truth, "use the solver instead of a model");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const cli::RunConfig config = load_config(common);
    if (gen->parsed()) return cmd_gen(config, overwrite);
    if (train->parsed()) return cmd_train(config, overwrite);
    if (eval->parsed()) return cmd_eval(config, checkpoint);
    if (sample->parsed()) return cmd_sample(config, checkpoint, record, n_samples, out_path);
    if (bif->parsed()) return cmd_bifurcation(config, checkpoint, ground_truth);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
