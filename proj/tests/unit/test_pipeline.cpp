#include "symflow/cli/pipeline.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace symflow;
using namespace symflow::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const fs::path& p) {
  const std::string s = slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SYMFLOW_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

RunConfig tiny(const std::string& system, int epochs, const fs::path& out) {
  return RunConfig::from_json({{"system", system},
                               {"output_dir", out.string()},
                               {"training", {{"epochs", epochs}, {"batch_size", 16}}},
                               {"architecture", {{"hidden", 8}, {"depth", 1}, {"rounds", 1}}},
                               {"sampler", {{"num_steps", 10}}},
                               {"eval", {{"n_pred", 20}, {"max_records", 5}}}});
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("config parsing rejects unknown keys and bad values") {
    CHECK_NOTHROW(RunConfig::from_json({{"system", "coin_flip"}}));
    CHECK_THROWS_AS(RunConfig::from_json({{"system", "coin_flip"}, {"trainig", json::object()}}), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json({{"system", "coin_flip"}, {"training", {{"epoch", 3}}}}), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json({{"system", "coin_flip"}, {"training", {{"epochs", "many"}}}}), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json({{"system", "coin_flip"}, {"training", {{"epochs", -1}}}}), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json({{"system", "coin_flip"}, {"architecture", {{"widht", 3}}}}), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json({{"system", "coin_flip"}, {"training", {{"matcher", true}, {"baseline", true}}}}),
                    ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json({{"system", "pendulum"}}), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json({{"system", "coin_flip"}, {"sampler", {{"integrator", "rk4"}}}}), ConfigError);
  }

  TEST_CASE("config hash is stable, canonical and ignores the output directory") {
    const RunConfig a = RunConfig::from_json({{"system", "four_node"}, {"output_dir", "/tmp/a"}});
    const RunConfig b = RunConfig::from_json({{"output_dir", "/tmp/b"}, {"system", "four_node"}});
    CHECK(a.hash() == b.hash());
    CHECK(a.hash().size() == 16);
    CHECK(RunConfig::from_json(a.to_json()).hash() == a.hash());
    const RunConfig c = RunConfig::from_json({{"system", "four_node"}, {"training", {{"matcher", true}}}});
    CHECK(c.hash() != a.hash());
    CHECK(RunConfig::defaults(systems::SystemId::four_node).training.epochs == a.training.epochs);
  }

  TEST_CASE("matcher off and on produce distinct checkpoints") {
    TempDir tmp("symflow_pipe_match");
    RunConfig off = tiny("four_node", 1, tmp.path);
    off.dataset.n_records = 30;
    RunConfig on = off;
    on.training.matcher = true;
    const auto data = generate_dataset(off);
    save_model(off.checkpoint_path(), train_model(off, data));
    save_model(on.checkpoint_path(), train_model(on, data));
    CHECK(off.checkpoint_path() != on.checkpoint_path());
    const json a = json::parse(slurp(off.checkpoint_path())), b = json::parse(slurp(on.checkpoint_path()));
    CHECK(a.at("matcher") != b.at("matcher"));
    CHECK(a.at("config_hash") != b.at("config_hash"));
    CHECK(load_model(on.checkpoint_path()).matched);
    CHECK_FALSE(load_model(off.checkpoint_path()).matched);
  }

  TEST_CASE("zero epochs keep the initialization and training is reproducible") {
    TempDir tmp("symflow_pipe_repro");
    RunConfig c = tiny("coin_flip", 0, tmp.path);
    const auto data = generate_dataset(c);
    flow::TrainResult r;
    const TrainedModel m0 = train_model(c, data, &r);
    CHECK(m0.trained_steps == 0);
    CHECK(r.history.empty());
    const auto init = models::build_model(c.spec(), c.arch());
    CHECK(m0.model->params() == init->params());

    c.training.epochs = 3;
    const TrainedModel a = train_model(c, data, &r);
    CHECK(r.history.size() == 3);
    flow::write_loss_csv(tmp.path / "loss.csv", r.history);
    CHECK(line_count(tmp.path / "loss.csv") == 4);
    save_model(tmp.path / "a.ckpt.json", a);
    save_model(tmp.path / "b.ckpt.json", train_model(c, data));
    CHECK(slurp(tmp.path / "a.ckpt.json") == slurp(tmp.path / "b.ckpt.json"));
    const TrainedModel back = load_model(tmp.path / "a.ckpt.json");
    CHECK(back.model->params() == a.model->params());
    CHECK(back.trained_steps == a.trained_steps);
    CHECK(back.config_hash == c.hash());

    c.training.seed = 5;
    CHECK(train_model(c, data).model->params() != a.model->params());
  }

  TEST_CASE("missing checkpoints are reported by path") {
    CHECK_THROWS_WITH_AS(load_model("/nonexistent/flow.ckpt.json"), doctest::Contains("/nonexistent/flow.ckpt.json"),
                         ConfigError);
  }

  TEST_CASE("regression baseline collapses to the mean on symmetric data") {
    TempDir tmp("symflow_pipe_base");
    RunConfig c = RunConfig::from_json({{"system", "two_deltas"},
                                        {"output_dir", tmp.path.string()},
                                        {"training", {{"baseline", true}, {"epochs", 300}}}});
    const auto data = generate_dataset(c);
    const TrainedModel m = train_model(c, data);
    const EvalReport rep = evaluate_system(m, data, c.eval, c.sampler);
    CHECK(rep.mean >= 0.9);
    CHECK(rep.mean <= 1.1);

    RunConfig coin = RunConfig::from_json({{"system", "coin_flip"}, {"training", {{"baseline", true}}}});
    const auto cd = generate_dataset(coin);
    const TrainedModel cm = train_model(coin, cd);
    Rng rng(0);
    double pred = 0.0, scale = 0.0;
    for (std::size_t i : cd.test) {
      const Vector in = cd.inputs.row(static_cast<Eigen::Index>(i)).transpose();
      pred += std::abs(predict(cm, in, 1, rng)(0, 0));
      scale += std::abs(in[0]);
    }
    CHECK(pred < 0.1 * scale);
  }

  TEST_CASE("evaluation report") {
    TempDir tmp("symflow_pipe_eval");
    RunConfig c = tiny("three_roads", 2, tmp.path);
    c.dataset.n_records = 50;
    const auto data = generate_dataset(c);
    const TrainedModel m = train_model(c, data);
    EvalReport rep = evaluate_system(m, data, c.eval, c.sampler);
    REQUIRE(rep.records.size() == 5);
    double mean = 0.0;
    for (double v : rep.per_record) mean += v / 5.0;
    CHECK(rep.mean == doctest::Approx(mean));
    CHECK(rep.checkpoint_hash == c.hash());
    rep.config_hash = c.hash();
    write_report(tmp.path / "eval", rep);
    const json j = json::parse(slurp(tmp.path / "eval" / "report.json"));
    CHECK(j.at("mean").get<double>() == doctest::Approx(rep.mean));
    CHECK(j.contains("metric_definition"));
    const std::string csv = slurp(tmp.path / "eval" / "report.csv");
    CHECK(csv.rfind("system,metric,record,value,config_hash\n", 0) == 0);
    CHECK(csv.find("three_roads,wasserstein_assignment,mean,") != std::string::npos);
    CHECK(line_count(tmp.path / "eval" / "report.csv") == 7);
    CHECK(evaluate_system(m, data, c.eval, c.sampler).per_record == rep.per_record);
  }

  TEST_CASE("bifurcation scans") {
    BifurcationBlock b;
    b.mu_values = {-0.1, 1.0};
    b.n_samples = 6;
    const auto pts = bifurcation_scan_ground_truth(b);
    REQUIRE(pts.size() == 2);
    for (double s : pts[0].statistics) CHECK(std::abs(s) < 1e-3);
    int pos = 0;
    for (double s : pts[1].statistics) {
      CHECK(std::abs(std::abs(s) - 1.0) < 0.05);
      pos += s > 0;
    }
    CHECK(pos > 0);
    CHECK(pos < 6);

    b.mu_values.clear();
    CHECK(bifurcation_scan_ground_truth(b).empty());

    TempDir tmp("symflow_pipe_bif");
    RunConfig c = tiny("allen_cahn", 0, tmp.path);
    c.dataset.n_records = 4;
    const auto data = generate_dataset(c);
    CHECK_THROWS_AS(bifurcation_scan(train_model(c, data), c.bifurcation, c.sampler), ConfigError);
    RunConfig coin = tiny("coin_flip", 1, tmp.path);
    CHECK_THROWS_AS(bifurcation_scan(train_model(coin, generate_dataset(coin)), c.bifurcation), ConfigError);
  }
}

TEST_SUITE("cli") {
  TEST_CASE("end to end through the binary") {
    TempDir tmp("symflow_cli_e2e");
    const std::string out = tmp.path.string();
    const std::string base = "-s coin_flip -o " + out + " --set training.epochs=5 --set eval.max_records=4 --set eval.n_pred=10";
    CHECK(run_cli("train " + base) == 1);  // no dataset yet
    CHECK(run_cli("gen " + base) == 0);
    CHECK(run_cli("gen " + base) == 0);
    CHECK(run_cli("gen " + base + " --set dataset.seed=3") == 1);
    CHECK(run_cli("eval " + base) == 1);  // no checkpoint yet
    CHECK(run_cli("train " + base) == 0);
    CHECK(fs::exists(tmp.path / "flow.ckpt.json"));
    CHECK(line_count(tmp.path / "flow.loss.csv") == 6);
    CHECK(run_cli("train " + base + " --set training.epochs=6") == 1);
    CHECK(run_cli("train " + base + " --set training.epochs=6 --overwrite") == 0);
    CHECK(run_cli("eval " + base + " --set training.epochs=6") == 0);
    const json rep = json::parse(slurp(tmp.path / "eval" / "flow" / "report.json"));
    CHECK(rep.at("records").size() == 4);
    CHECK(run_cli("sample " + base + " --set training.epochs=6 --record 3 -n 7 --out " + out + "/s.csv") == 0);
    CHECK(line_count(tmp.path / "s.csv") == 8);
    CHECK(run_cli("eval " + base + " --checkpoint " + out + "/missing.ckpt.json") == 1);
    CHECK(run_cli("gen -s coin_flip -o " + out + " --set training.epoch=5") == 1);
    CHECK(run_cli("gen -s nosuch -o " + out) == 1);
    CHECK(run_cli("frobnicate") == 1);
    {
      std::fstream f(tmp.path / "dataset" / "targets.f64", std::ios::in | std::ios::out | std::ios::binary);
      f.seekp(5);
      f.put('\x55');
    }
    CHECK(run_cli("eval " + base + " --set training.epochs=6") == 2);
  }

  TEST_CASE("ground-truth bifurcation through the binary") {
    TempDir tmp("symflow_cli_bif");
    CHECK(run_cli("bifurcation --ground-truth -s allen_cahn -o " + tmp.path.string() +
                  " --set bifurcation.n_samples=2 --set 'bifurcation.mu_values=[0.5]'") == 0);
    CHECK(line_count(tmp.path / "bifurcation_ground_truth.csv") == 3);
    CHECK(run_cli("bifurcation -s allen_cahn -o " + tmp.path.string()) == 1);
  }
}
