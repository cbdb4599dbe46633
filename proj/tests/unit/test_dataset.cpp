#include "symflow/systems/dataset.hpp"

#include <doctest.h>

#include <array>
#include <filesystem>
#include <fstream>

using namespace symflow;
using namespace symflow::systems;
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

std::uint64_t fnv_bytes(const std::vector<unsigned char>& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  return h;
}

Dataset small(SystemId id, std::uint64_t seed = 0) {
  DatasetOptions o;
  o.seed = seed;
  o.n_records = id == SystemId::beam ? 6 : (id == SystemId::allen_cahn ? 4 : 0);
  o.beam_steps = 20;
  return build_dataset(id, o);
}

}  // namespace

TEST_SUITE("dataset") {
  TEST_CASE("FNV-1a over little-endian doubles") {
    CHECK(fnv1a64({}) == 14695981039346656037ULL);
    const std::vector<double> v{1.0, -2.5};
    const std::vector<unsigned char> bytes{0, 0, 0, 0, 0, 0, 0xf0, 0x3f, 0, 0, 0, 0, 0, 0, 0x04, 0xc0};
    CHECK(fnv1a64(v) == fnv_bytes(bytes));
  }

  TEST_CASE("generation is deterministic and splits follow the defaults") {
    for (auto id : all_systems()) {
      const Dataset a = small(id), b = small(id), c = small(id, 9);
      CHECK(a.inputs == b.inputs);
      CHECK(a.targets == b.targets);
      CHECK(a.train.size() + a.test.size() == a.size());
      CHECK(a.targets != c.targets);
      std::size_t flat = 1;
      for (auto s : a.target_shape) flat *= s;
      CHECK(static_cast<Eigen::Index>(flat) == a.targets.cols());
    }
    const Dataset coin = build_dataset(SystemId::coin_flip, {});
    CHECK(coin.size() == 1000);
    CHECK(coin.train.size() == 800);
    CHECK(coin.test.size() == 200);
    CHECK(coin.train.back() + 1 == coin.test.front());
    CHECK(build_dataset(SystemId::two_deltas, {}).train.empty());
  }

  TEST_CASE("record i depends only on the seed and i") {
    DatasetOptions a, b;
    a.n_records = 50;
    b.n_records = 80;
    const Dataset x = build_dataset(SystemId::three_roads, a), y = build_dataset(SystemId::three_roads, b);
    CHECK(x.targets == y.targets.topRows(50));
  }

  TEST_CASE("write, read back and verify") {
    TempDir tmp("symflow_dataset_rt");
    for (auto id : all_systems()) {
      const Dataset d = small(id);
      const fs::path dir = tmp.path / to_string(id);
      CHECK(write_dataset(dir, d) == WriteOutcome::written);
      const Dataset r = read_dataset(dir);
      CHECK(r.system == to_string(id));
      CHECK(r.inputs == d.inputs);
      CHECK(r.targets == d.targets);
      CHECK(r.aux == d.aux);
      CHECK(r.train == d.train);
      CHECK(r.test == d.test);
      CHECK(r.target_shape == d.target_shape);
      CHECK(write_dataset(dir, d) == WriteOutcome::verified_existing);
    }
  }

  TEST_CASE("refuses to replace a different dataset unless asked") {
    TempDir tmp("symflow_dataset_ow");
    const fs::path dir = tmp.path / "d";
    write_dataset(dir, small(SystemId::coin_flip, 1));
    CHECK_THROWS_AS(write_dataset(dir, small(SystemId::coin_flip, 2)), ConfigError);
    CHECK(read_dataset(dir).seed == 1);
    CHECK(write_dataset(dir, small(SystemId::coin_flip, 2), true) == WriteOutcome::written);
    CHECK(read_dataset(dir).seed == 2);
  }

  TEST_CASE("corruption and missing files are reported") {
    TempDir tmp("symflow_dataset_bad");
    const fs::path dir = tmp.path / "d";
    CHECK_THROWS_WITH_AS(read_dataset(dir), doctest::Contains((dir / "metadata.json").c_str()), ConfigError);
    write_dataset(dir, small(SystemId::coin_flip));
    {
      std::fstream f(dir / "targets.f64", std::ios::in | std::ios::out | std::ios::binary);
      f.seekp(13);
      f.put('\x7f');
    }
    CHECK_THROWS_WITH(read_dataset(dir), doctest::Contains("checksum"));
    fs::resize_file(dir / "inputs.f64", 8);
    CHECK_THROWS_WITH(read_dataset(dir), doctest::Contains("shorter"));
  }

  TEST_CASE("array files are raw little-endian doubles") {
    TempDir tmp("symflow_dataset_le");
    const Dataset d = small(SystemId::coin_flip);
    write_dataset(tmp.path, d);
    std::ifstream in(tmp.path / "inputs.f64", std::ios::binary);
    std::array<unsigned char, 8> b{};
    in.read(reinterpret_cast<char*>(b.data()), 8);
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) bits = (bits << 8) | b[static_cast<std::size_t>(i)];
    CHECK(std::bit_cast<double>(bits) == d.inputs(0, 0));
    CHECK(fs::file_size(tmp.path / "inputs.f64") == 8 * static_cast<std::uintmax_t>(d.inputs.size()));
  }

  TEST_CASE("unknown system names are rejected") {
    CHECK(system_from_string("beam") == SystemId::beam);
    CHECK_THROWS_AS(system_from_string("pendulum"), ConfigError);
  }
}
