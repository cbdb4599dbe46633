#include "symflow/systems/dataset.hpp"

#include "symflow/systems/allen_cahn.hpp"
#include "symflow/systems/beam.hpp"
#include "symflow/systems/toy.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace symflow::systems {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kFormat = "symflow.dataset.v1";

const std::vector<std::pair<SystemId, std::string>>& names() {
  static const std::vector<std::pair<SystemId, std::string>> table{
      {SystemId::two_deltas, "two_deltas"}, {SystemId::coin_flip, "coin_flip"},
      {SystemId::three_roads, "three_roads"}, {SystemId::four_node, "four_node"},
      {SystemId::beam, "beam"}, {SystemId::allen_cahn, "allen_cahn"}};
  return table;
}

std::string hex(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int b = 0; b < 8; ++b) r |= ((v >> (8 * b)) & 0xffU) << (8 * (7 - b));
    return r;
  }
  return v;
}

void write_array(const fs::path& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const std::uint64_t bits = to_le(std::bit_cast<std::uint64_t>(m.data()[i]));
    out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
  if (!out) throw std::runtime_error("short write to " + path.string());
}

Matrix read_array(const fs::path& path, std::size_t rows, std::size_t cols) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    std::uint64_t bits = 0;
    in.read(reinterpret_cast<char*>(&bits), sizeof bits);
    if (!in) throw std::runtime_error(path.string() + " is shorter than its declared shape");
    m.data()[i] = std::bit_cast<double>(to_le(bits));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw std::runtime_error(path.string() + " is longer than its declared shape");
  }
  return m;
}

std::uint64_t checksum(const Matrix& m) {
  return fnv1a64({m.data(), static_cast<std::size_t>(m.size())});
}

json array_entry(const std::string& file, const Matrix& m) {
  return {{"file", file}, {"shape", {m.rows(), m.cols()}}, {"fnv1a64", hex(checksum(m))}};
}

Dataset toy_dataset(const std::vector<ToyRecord>& records) {
  Dataset d;
  if (records.empty()) return d;
  d.group = records.front().matching_group;
  d.inputs.resize(static_cast<Eigen::Index>(records.size()), records.front().input.size());
  d.targets.resize(static_cast<Eigen::Index>(records.size()), records.front().output.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    d.inputs.row(static_cast<Eigen::Index>(i)) = records[i].input.transpose();
    d.targets.row(static_cast<Eigen::Index>(i)) = records[i].output.transpose();
  }
  d.target_shape = {static_cast<std::size_t>(d.targets.cols())};
  return d;
}

}  // namespace

std::string to_string(SystemId id) {
  for (const auto& [k, v] : names()) {
    if (k == id) return v;
  }
  throw std::logic_error("unknown system id");
}

SystemId system_from_string(const std::string& name) {
  for (const auto& [k, v] : names()) {
    if (v == name) return k;
  }
  throw ConfigError("unknown system '" + name +
                    "' (expected two_deltas, coin_flip, three_roads, four_node, beam or allen_cahn)");
}

const std::vector<SystemId>& all_systems() {
  static const std::vector<SystemId> ids{SystemId::two_deltas, SystemId::coin_flip, SystemId::three_roads,
                                         SystemId::four_node,  SystemId::beam,      SystemId::allen_cahn};
  return ids;
}

Matrix Dataset::rows(const Matrix& m, std::span<const std::size_t> idx) const {
  Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

std::size_t default_record_count(SystemId id) {
  switch (id) {
    case SystemId::two_deltas: return 100;
    case SystemId::coin_flip: return 1000;
    case SystemId::three_roads: return 2000;
    case SystemId::four_node: return 2000;
    case SystemId::beam: return 1000;
    case SystemId::allen_cahn: return 400;
  }
  return 0;
}

std::pair<std::size_t, std::size_t> split_sizes(SystemId id, std::size_t n) {
  std::size_t train = 0;
  switch (id) {
    case SystemId::two_deltas: train = 0; break;  // training draws fresh pairs
    case SystemId::coin_flip:
    case SystemId::three_roads: train = n * 4 / 5; break;
    case SystemId::four_node:
    case SystemId::beam: train = n * 7 / 10; break;
    case SystemId::allen_cahn: train = n * 3 / 4; break;
  }
  return {train, n - train};
}

Dataset build_dataset(SystemId id, const DatasetOptions& opt) {
  const std::size_t n = opt.n_records ? opt.n_records : default_record_count(id);
  Dataset d;
  switch (id) {
    case SystemId::two_deltas: {
      d.inputs.resize(static_cast<Eigen::Index>(n), 1);
      d.targets.resize(static_cast<Eigen::Index>(n), 1);
      for (std::size_t i = 0; i < n; ++i) {
        Rng rng(opt.seed, i);
        const auto [x, y] = gen_two_deltas(rng);
        d.inputs(static_cast<Eigen::Index>(i), 0) = x;
        d.targets(static_cast<Eigen::Index>(i), 0) = y;
      }
      d.group = {sym::GroupDescriptor::Kind::sign_flip};
      d.target_shape = {1};
      d.sampling = {{"input", "N(0,1)"}, {"output", "+1 or -1, fair"}};
      break;
    }
    case SystemId::coin_flip:
      d = toy_dataset(gen_coin_flip(n, opt.seed));
      d.sampling = {{"input", "U[-100,100]"}, {"output", "x or -x, fair"}};
      break;
    case SystemId::three_roads:
      d = toy_dataset(gen_three_roads(n, opt.seed));
      d.sampling = {{"input", "U[-50,50]^2"}, {"output", "one of three road layouts, uniform"}};
      break;
    case SystemId::four_node:
      d = toy_dataset(gen_four_node(n, opt.seed));
      d.sampling = {{"input", "x ~ U[-50,50] on all four nodes"},
                    {"output", "x + 5(+1,-1,+1,-1) or its mirror, fair"},
                    {"edges", {{0, 1}, {1, 2}, {2, 3}, {3, 0}}}};
      break;
    case SystemId::beam: {
      const int steps = opt.beam_steps;
      d.inputs = Matrix::Zero(static_cast<Eigen::Index>(n), kBeamInputSize);
      d.targets = Matrix::Zero(static_cast<Eigen::Index>(n), steps * kBeamMaxSegments);
      d.aux.resize(static_cast<Eigen::Index>(n), 2);
      d.aux_columns = {"buckling_step", "direction"};
      for (std::size_t b = 0; b < n; ++b) {
        Rng rng(opt.seed, b);
        const BeamSpec spec = BeamSpec::sample(rng);
        const BeamTrajectory traj = solve_beam_trajectory(spec, rng, steps);
        const auto r = static_cast<Eigen::Index>(b);
        d.inputs(r, 0) = spec.n;
        for (int i = 0; i < spec.n; ++i) {
          d.inputs(r, 1 + i) = spec.L[i];
          d.inputs(r, 1 + kBeamMaxSegments + i) = spec.C[i];
          d.inputs(r, 1 + 2 * kBeamMaxSegments + i) = spec.K[i];
        }
        for (int s = 0; s < steps; ++s) {
          for (int k = 0; k < spec.n; ++k) d.targets(r, s * kBeamMaxSegments + k) = traj.positions[s](k + 1, 0);
        }
        d.aux(r, 0) = traj.buckling_step;
        d.aux(r, 1) = traj.direction;
      }
      d.group = {sym::GroupDescriptor::Kind::reflect_all};
      d.target_shape = {static_cast<std::size_t>(steps), static_cast<std::size_t>(kBeamMaxSegments)};
      d.sampling = {{"n", "uniform integer in [2,11]"},
                    {"L, C, K", "log-uniform on [0.5,2]"},
                    {"d", "linspace(0, sum L, steps)"},
                    {"steps", steps}};
      break;
    }
    case SystemId::allen_cahn: {
      const auto trajs = gen_ac_dataset(n, opt.seed, opt.ac_save_stride);
      const ACConfig base;
      ACConfig probe;
      probe.save_stride = opt.ac_save_stride;
      const int saved = probe.num_saved();
      d.inputs.resize(static_cast<Eigen::Index>(n), 2);
      d.targets.resize(static_cast<Eigen::Index>(n), saved * base.nx);
      for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        d.inputs(r, 0) = trajs[i].config.epsilon;
        d.inputs(r, 1) = trajs[i].config.mu;
        d.targets.row(r) = Eigen::Map<const Vector>(trajs[i].u.data(), trajs[i].u.size()).transpose();
      }
      d.group.kind = sym::GroupDescriptor::Kind::cyclic_shift;
      d.group.outer = static_cast<std::size_t>(saved);
      d.group.axis_len = static_cast<std::size_t>(base.nx);
      d.group.inner = 1;
      d.target_shape = {static_cast<std::size_t>(saved), static_cast<std::size_t>(base.nx)};
      d.sampling = {{"epsilon", "log-uniform on [0.001,0.1]"},
                    {"mu", "U[-0.1,1]"},
                    {"nx", base.nx},
                    {"dt", base.dt},
                    {"t_end", base.t_end},
                    {"init_noise_sigma", base.init_noise_sigma},
                    {"save_stride", opt.ac_save_stride}};
      break;
    }
  }
  d.system = to_string(id);
  d.seed = opt.seed;
  if (d.aux.rows() != d.targets.rows()) d.aux.resize(d.targets.rows(), 0);
  const auto [n_train, n_test] = split_sizes(id, n);
  for (std::size_t i = 0; i < n_train; ++i) d.train.push_back(i);
  for (std::size_t i = n_train; i < n_train + n_test; ++i) d.test.push_back(i);
  return d;
}

std::uint64_t fnv1a64(std::span<const double> values) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : values) {
    const std::uint64_t bits = to_le(std::bit_cast<std::uint64_t>(v));
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

json dataset_metadata(const Dataset& d) {
  json arrays = {{"inputs", array_entry("inputs.f64", d.inputs)},
                 {"targets", array_entry("targets.f64", d.targets)}};
  if (d.aux.cols() > 0) {
    arrays["aux"] = array_entry("aux.f64", d.aux);
    arrays["aux"]["columns"] = d.aux_columns;
  }
  return {{"format", kFormat},
          {"system", d.system},
          {"seed", d.seed},
          {"n_records", d.size()},
          {"group", d.group.to_json()},
          {"sampling", d.sampling},
          {"target_shape", d.target_shape},
          {"layout", "little-endian float64, row-major, one record per row"},
          {"splits", {{"train", d.train}, {"test", d.test}}},
          {"arrays", arrays}};
}

WriteOutcome write_dataset(const fs::path& dir, const Dataset& d, bool overwrite) {
  const json meta = dataset_metadata(d);
  const fs::path meta_path = dir / "metadata.json";
  if (fs::exists(meta_path) && !overwrite) {
    std::ifstream in(meta_path);
    json existing;
    try {
      existing = json::parse(in);
    } catch (const json::exception&) {
      throw ConfigError(dir.string() + " holds an unreadable dataset; pass overwrite to replace it");
    }
    if (existing != meta) {
      throw ConfigError(dir.string() + " already holds a different dataset; pass overwrite to replace it");
    }
    read_dataset(dir);  // verifies the array files against their checksums
    return WriteOutcome::verified_existing;
  }
  fs::create_directories(dir);
  write_array(dir / "inputs.f64", d.inputs);
  write_array(dir / "targets.f64", d.targets);
  if (d.aux.cols() > 0) write_array(dir / "aux.f64", d.aux);
  std::ofstream out(meta_path);
  out << meta.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + meta_path.string());
  return WriteOutcome::written;
}

Dataset read_dataset(const fs::path& dir) {
  const fs::path meta_path = dir / "metadata.json";
  if (!fs::exists(meta_path)) throw ConfigError("dataset not found: expected " + meta_path.string());
  std::ifstream in(meta_path);
  const json meta = json::parse(in);
  if (meta.at("format") != kFormat) throw ConfigError(meta_path.string() + ": unsupported dataset format");
  Dataset d;
  d.system = meta.at("system").get<std::string>();
  d.seed = meta.at("seed").get<std::uint64_t>();
  d.group = sym::GroupDescriptor::from_json(meta.at("group"));
  d.sampling = meta.at("sampling");
  d.target_shape = meta.at("target_shape").get<std::vector<std::size_t>>();
  d.train = meta.at("splits").at("train").get<std::vector<std::size_t>>();
  d.test = meta.at("splits").at("test").get<std::vector<std::size_t>>();
  auto load = [&](const std::string& key) {
    const json& a = meta.at("arrays").at(key);
    const auto shape = a.at("shape").get<std::vector<std::size_t>>();
    Matrix m = read_array(dir / a.at("file").get<std::string>(), shape.at(0), shape.at(1));
    if (hex(checksum(m)) != a.at("fnv1a64").get<std::string>()) {
      throw NumericalError("checksum mismatch in " + (dir / a.at("file").get<std::string>()).string());
    }
    return m;
  };
  d.inputs = load("inputs");
  d.targets = load("targets");
  if (meta.at("arrays").contains("aux")) {
    d.aux = load("aux");
    d.aux_columns = meta.at("arrays").at("aux").at("columns").get<std::vector<std::string>>();
  } else {
    d.aux.resize(d.targets.rows(), 0);
  }
  for (auto i : d.train) {
    if (i >= d.size()) throw ConfigError("split index out of range in " + meta_path.string());
  }
  for (auto i : d.test) {
    if (i >= d.size()) throw ConfigError("split index out of range in " + meta_path.string());
  }
  return d;
}

}  // namespace symflow::systems
