#include "dsvgd/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "dsvgd/rng.hpp"

namespace dsvgd {

namespace {

void standardize_columns(Matrix& features) {
  const double n = static_cast<double>(features.rows());
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    const double mean = features.col(j).mean();
    const double var = (features.col(j).array() - mean).square().sum() / n;
    if (var > 0.0) {
      features.col(j) = (features.col(j).array() - mean) / std::sqrt(var);
    } else {
      features.col(j).setZero();
    }
  }
}

std::uint32_t read_be_u32(std::istream& in, const std::string& what) {
  unsigned char buf[4];
  if (!in.read(reinterpret_cast<char*>(buf), 4)) {
    throw io_error("truncated idx header while reading " + what);
  }
  return (static_cast<std::uint32_t>(buf[0]) << 24) |
         (static_cast<std::uint32_t>(buf[1]) << 16) |
         (static_cast<std::uint32_t>(buf[2]) << 8) |
         static_cast<std::uint32_t>(buf[3]);
}

// Fisher-Yates with the project RNG so shard contents are seed-stable.
void shuffle_indices(std::vector<Eigen::Index>& indices, Rng& rng) {
  for (std::size_t i = indices.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform_int(i));
    std::swap(indices[i - 1], indices[j]);
  }
}

// Split `total` into `parts.size()` integer counts proportional to `parts`
// (largest remainder, ties to the lower index).
std::vector<Eigen::Index> apportion(Eigen::Index total,
                                    const std::vector<double>& parts) {
  const double sum = [&] {
    double s = 0.0;
    for (double p : parts) s += p;
    return s;
  }();
  std::vector<Eigen::Index> counts(parts.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  Eigen::Index assigned = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const double exact = static_cast<double>(total) * parts[i] / sum;
    counts[i] = static_cast<Eigen::Index>(std::floor(exact));
    assigned += counts[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (Eigen::Index r = 0; r < total - assigned; ++r) {
    ++counts[remainders[static_cast<std::size_t>(r)].second];
  }
  return counts;
}

Shard gather(const Dataset& dataset, std::vector<Eigen::Index> indices) {
  Shard shard;
  shard.batch.features.resize(static_cast<Eigen::Index>(indices.size()),
                              dataset.features.cols());
  shard.batch.labels.resize(static_cast<Eigen::Index>(indices.size()));
  for (std::size_t i = 0; i < indices.size(); ++i) {
    shard.batch.features.row(static_cast<Eigen::Index>(i)) =
        dataset.features.row(indices[i]);
    shard.batch.labels(static_cast<Eigen::Index>(i)) =
        dataset.labels(indices[i]);
  }
  shard.indices = std::move(indices);
  return shard;
}

// Takes `count` indices off the back of `pool`; errors name the class.
std::vector<Eigen::Index> draw_from_pool(std::vector<Eigen::Index>& pool,
                                         Eigen::Index count, double label) {
  if (static_cast<Eigen::Index>(pool.size()) < count) {
    std::ostringstream msg;
    msg << "class " << label << " has " << pool.size()
        << " examples left but " << count << " are needed";
    throw usage_error(msg.str());
  }
  std::vector<Eigen::Index> out(pool.end() - count, pool.end());
  pool.resize(pool.size() - static_cast<std::size_t>(count));
  return out;
}

}  // namespace

Dataset load_covtype(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
        row.push_back(v);
      } catch (const std::exception&) {
        throw io_error(path + ":" + std::to_string(line_no) +
                       ": cannot parse '" + cell + "'");
      }
    }
    if (row.size() < 2) {
      throw io_error(path + ":" + std::to_string(line_no) +
                     ": need at least one feature and a class");
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw io_error(path + ":" + std::to_string(line_no) +
                     ": inconsistent column count");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw io_error(path + ": empty file");

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto f = static_cast<Eigen::Index>(rows.front().size()) - 1;
  Dataset out;
  out.features.resize(n, f);
  out.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < f; ++j) {
      out.features(i, j) = rows[static_cast<std::size_t>(i)]
                               [static_cast<std::size_t>(j)];
    }
    const double cls = rows[static_cast<std::size_t>(i)].back();
    out.labels(i) = (cls == 2.0) ? 1.0 : -1.0;
  }
  standardize_columns(out.features);
  if (!out.features.allFinite()) {
    throw io_error(path + ": standardization produced non-finite values");
  }
  out.label_kind = LabelKind::Binary;
  return out;
}

Dataset load_mnist(const std::string& images_path,
                   const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw io_error("cannot open " + images_path);
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw io_error("cannot open " + labels_path);

  if (read_be_u32(img, images_path) != 0x00000803u) {
    throw io_error(images_path + ": wrong magic for an idx image file");
  }
  if (read_be_u32(lab, labels_path) != 0x00000801u) {
    throw io_error(labels_path + ": wrong magic for an idx label file");
  }
  const std::uint32_t count = read_be_u32(img, images_path);
  const std::uint32_t rows = read_be_u32(img, images_path);
  const std::uint32_t cols = read_be_u32(img, images_path);
  const std::uint32_t label_count = read_be_u32(lab, labels_path);
  if (count != label_count) {
    throw io_error("image/label count mismatch: " + std::to_string(count) +
                   " vs " + std::to_string(label_count));
  }
  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
  std::vector<unsigned char> image_buf(pixels);
  std::vector<Eigen::Index> kept;
  std::vector<unsigned char> kept_labels;
  std::vector<std::vector<unsigned char>> kept_pixels;
  for (std::uint32_t i = 0; i < count; ++i) {
    if (!img.read(reinterpret_cast<char*>(image_buf.data()),
                  static_cast<std::streamsize>(pixels))) {
      throw io_error(images_path + ": truncated image data");
    }
    char label_byte = 0;
    if (!lab.read(&label_byte, 1)) {
      throw io_error(labels_path + ": truncated label data");
    }
    const auto digit = static_cast<unsigned char>(label_byte);
    if (digit > 9) throw io_error(labels_path + ": label byte out of range");
    if (digit == 9) continue;
    kept.push_back(static_cast<Eigen::Index>(i));
    kept_labels.push_back(digit);
    kept_pixels.push_back(image_buf);
  }
  if (kept.empty()) throw io_error(images_path + ": no usable examples");

  Dataset out;
  const auto n = static_cast<Eigen::Index>(kept.size());
  out.features.resize(n, static_cast<Eigen::Index>(pixels));
  out.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& px = kept_pixels[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < pixels; ++j) {
      out.features(i, static_cast<Eigen::Index>(j)) = px[j] / 255.0;
    }
    out.labels(i) = kept_labels[static_cast<std::size_t>(i)];
  }
  out.label_kind = LabelKind::ClassIndex;
  return out;
}

std::vector<Shard> partition(const Dataset& dataset,
                             const PartitionPlan& plan) {
  require(plan.clients >= 1, "need at least one client");
  require(plan.per_client_size >= 1, "per-client size must be positive");
  require(plan.majority_fraction > 0.5 && plan.majority_fraction <= 1.0,
          "majority fraction must be in (0.5, 1]");
  require(dataset.features.rows() >= plan.clients * plan.per_client_size,
          "dataset too small for the requested partition");

  // Per-class index pools, shuffled once; draws then peel off the back.
  std::map<double, std::vector<Eigen::Index>> pools;
  for (Eigen::Index i = 0; i < dataset.labels.size(); ++i) {
    pools[dataset.labels(i)].push_back(i);
  }
  Rng rng(plan.seed);
  for (auto& [label, pool] : pools) shuffle_indices(pool, rng);

  std::vector<double> classes;
  for (const auto& [label, pool] : pools) classes.push_back(label);

  std::vector<Shard> shards;
  shards.reserve(static_cast<std::size_t>(plan.clients));

  if (plan.mode == PartitionMode::RatioSkew) {
    require(classes.size() == 2, "ratio skew needs exactly two classes");
    for (Eigen::Index k = 0; k < plan.clients; ++k) {
      const double majority = classes[static_cast<std::size_t>(k % 2)];
      const double minority = classes[static_cast<std::size_t>((k + 1) % 2)];
      const auto counts = apportion(
          plan.per_client_size,
          {plan.majority_fraction, 1.0 - plan.majority_fraction});
      auto idx = draw_from_pool(pools[majority], counts[0], majority);
      auto more = draw_from_pool(pools[minority], counts[1], minority);
      idx.insert(idx.end(), more.begin(), more.end());
      std::sort(idx.begin(), idx.end());
      shards.push_back(gather(dataset, std::move(idx)));
    }
    return shards;
  }

  require(plan.classes_per_client >= 1 &&
              plan.classes_per_client <=
                  static_cast<Eigen::Index>(classes.size()),
          "classes per client must be in [1, class count]");
  // Contiguous groups of m classes, clients assigned to groups cyclically.
  const auto m = static_cast<std::size_t>(plan.classes_per_client);
  std::vector<std::vector<double>> groups;
  for (std::size_t start = 0; start < classes.size(); start += m) {
    groups.emplace_back(classes.begin() + static_cast<std::ptrdiff_t>(start),
                        classes.begin() +
                            static_cast<std::ptrdiff_t>(
                                std::min(start + m, classes.size())));
  }
  for (Eigen::Index k = 0; k < plan.clients; ++k) {
    const auto& group =
        groups[static_cast<std::size_t>(k) % groups.size()];
    const auto counts = apportion(plan.per_client_size,
                                  std::vector<double>(group.size(), 1.0));
    std::vector<Eigen::Index> idx;
    for (std::size_t c = 0; c < group.size(); ++c) {
      auto part = draw_from_pool(pools[group[c]], counts[c], group[c]);
      idx.insert(idx.end(), part.begin(), part.end());
    }
    std::sort(idx.begin(), idx.end());
    shards.push_back(gather(dataset, std::move(idx)));
  }
  return shards;
}

HoldoutSplit split_holdout(const Dataset& dataset, double test_fraction) {
  require(test_fraction > 0.0 && test_fraction < 1.0,
          "test fraction must be in (0, 1)");
  const auto n = dataset.features.rows();
  const auto test_n = static_cast<Eigen::Index>(
      std::llround(static_cast<double>(n) * test_fraction));
  require(test_n >= 1 && test_n < n, "holdout split leaves an empty side");
  HoldoutSplit out;
  out.train.features = dataset.features.topRows(n - test_n);
  out.train.labels = dataset.labels.head(n - test_n);
  out.train.label_kind = dataset.label_kind;
  out.test.features = dataset.features.bottomRows(test_n);
  out.test.labels = dataset.labels.tail(test_n);
  out.test.label_kind = dataset.label_kind;
  return out;
}

}  // namespace dsvgd
