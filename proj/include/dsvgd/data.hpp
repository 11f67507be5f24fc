#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dsvgd/common.hpp"
#include "dsvgd/models.hpp"

namespace dsvgd {

enum class LabelKind { Binary, ClassIndex };

struct Dataset {
  Matrix features;
  Vector labels;
  LabelKind label_kind = LabelKind::Binary;
};

struct Shard {
  std::vector<Eigen::Index> indices;  // rows of the source dataset
  LabeledBatch batch;
};

enum class PartitionMode { RatioSkew, ClassesPerClient };

struct PartitionPlan {
  Eigen::Index clients = 1;
  PartitionMode mode = PartitionMode::RatioSkew;
  double majority_fraction = 0.9;  // RatioSkew
  Eigen::Index classes_per_client = 3;
  Eigen::Index per_client_size = 200;
  std::uint64_t seed = 0;
};

// Comma-separated numeric rows, last column the class. Features are z-scored
// per column with the population std (constant columns become all zero);
// class 2 maps to +1, everything else to -1.
Dataset load_covtype(const std::string& path);

// IDX ubyte pair (image magic 0x803, label magic 0x801, big-endian headers).
// Pixels scaled to [0,1]; digit 9 dropped so labels are class indices 0..8.
Dataset load_mnist(const std::string& images_path,
                   const std::string& labels_path);

// Disjoint per-client shards, deterministic in plan.seed.
std::vector<Shard> partition(const Dataset& dataset, const PartitionPlan& plan);

// Splits off the last round(n * test_fraction) rows as a held-out set.
struct HoldoutSplit {
  Dataset train;
  Dataset test;
};
HoldoutSplit split_holdout(const Dataset& dataset, double test_fraction);

}  // namespace dsvgd
