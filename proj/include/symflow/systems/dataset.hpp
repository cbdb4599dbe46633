#pragma once

#include "symflow/symmetry/group.hpp"
#include "symflow/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace symflow::systems {

enum class SystemId { two_deltas, coin_flip, three_roads, four_node, beam, allen_cahn };

std::string to_string(SystemId id);
/// Throws ConfigError for unknown names.
SystemId system_from_string(const std::string& name);
const std::vector<SystemId>& all_systems();

/// Beam records: input = [n, L(11), C(11), K(11)] zero-padded; target = node
/// x-coordinates of nodes 1..11, time-major (200 x 11), zero-padded.
inline constexpr int kBeamInputSize = 1 + 3 * 11;
/// Allen-Cahn records: input = [epsilon, mu]; target = saved field, time-major.
inline constexpr int kACSaveStride = 100;

struct DatasetOptions {
  std::size_t n_records = 0;  // 0 selects the system default
  std::uint64_t seed = 0;
  int beam_steps = 200;
  int ac_save_stride = kACSaveStride;
};

/// In-memory dataset: one row per record.
struct Dataset {
  std::string system;
  std::uint64_t seed = 0;
  sym::GroupDescriptor group;
  nlohmann::json sampling;            // human-readable sampling law
  std::vector<std::size_t> target_shape;  // unflattened shape of one target
  Matrix inputs;
  Matrix targets;
  Matrix aux;                         // per-record extras (may have zero columns)
  std::vector<std::string> aux_columns;
  std::vector<std::size_t> train, test;

  std::size_t size() const { return static_cast<std::size_t>(targets.rows()); }
  Matrix rows(const Matrix& m, std::span<const std::size_t> idx) const;
};

std::size_t default_record_count(SystemId id);
/// (train, test) sizes for n records.
std::pair<std::size_t, std::size_t> split_sizes(SystemId id, std::size_t n);

/// Generates a dataset; record i is drawn from Rng(seed, i).
Dataset build_dataset(SystemId id, const DatasetOptions& options);

/// FNV-1a over the little-endian bytes of the values.
std::uint64_t fnv1a64(std::span<const double> values);

/// Writes metadata.json plus one little-endian row-major .f64 file per array.
/// Refuses to replace an existing dataset with different content unless
/// `overwrite` is set; rewriting identical content is a no-op.
enum class WriteOutcome { written, verified_existing };
WriteOutcome write_dataset(const std::filesystem::path& dir, const Dataset& data, bool overwrite = false);
/// Reads and checksum-verifies a dataset directory.
Dataset read_dataset(const std::filesystem::path& dir);
nlohmann::json dataset_metadata(const Dataset& data);

}  // namespace symflow::systems
