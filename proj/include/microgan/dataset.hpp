#pragma once

#include <string>
#include <vector>

#include "microgan/augment.hpp"
#include "microgan/image.hpp"
#include "microgan/rng.hpp"

namespace microgan {

// How a dataset item came to be; augmented items carry the exact draw so
// they can be regenerated from their source.
struct ProvenanceRecord {
  int64_t index = 0;
  std::string source;
  bool augmented = false;
  AugmentParams params;
};

struct Dataset {
  std::vector<ImageU8> items;
  std::vector<ProvenanceRecord> provenance;

  int64_t size() const { return static_cast<int64_t>(items.size()); }
};

// Grows n source images to target_count: the originals first, unchanged,
// then augmented variants assigned round-robin over the sources. Item k's
// randomness comes from an independent substream of (seed, k), so the corpus
// is reproducible item by item.
Dataset expand_dataset(const std::vector<ImageU8>& sources,
                       const std::vector<std::string>& source_names,
                       int64_t target_count, const AugmentSpec& spec,
                       uint64_t seed);

// Fisher-Yates permutation of [0, n), consuming one below() per swap from
// the back.
std::vector<int64_t> shuffled_indices(int64_t n, Rng& rng);

// One epoch of batches in shuffled order. Every item appears exactly once
// across the epoch; a ragged tail batch is dropped or kept as requested.
template <typename S>
std::vector<Tensor<S>> batches(const Dataset& dataset, int64_t batch_size,
                               Rng& rng, bool drop_last) {
  if (batch_size < 1)
    fail(ErrorKind::Config, "batch_size must be >= 1");
  if (dataset.size() < 1)
    fail(ErrorKind::Config, "cannot batch an empty dataset");
  if (batch_size > dataset.size())
    fail(ErrorKind::Config,
         "batch_size " + std::to_string(batch_size) + " exceeds dataset size " +
             std::to_string(dataset.size()));

  std::vector<int64_t> order = shuffled_indices(dataset.size(), rng);
  std::vector<Tensor<S>> out;
  for (int64_t start = 0; start < dataset.size(); start += batch_size) {
    int64_t n = std::min(batch_size, dataset.size() - start);
    if (n < batch_size && drop_last) break;
    const ImageU8& first = dataset.items[static_cast<size_t>(order[start])];
    Tensor<S> batch({n, 3, first.height, first.width});
    const int64_t item = 3 * first.height * first.width;
    for (int64_t i = 0; i < n; ++i) {
      Tensor<S> t =
          to_model_range<S>(dataset.items[static_cast<size_t>(order[start + i])]);
      if (t.numel() != item)
        fail(ErrorKind::Shape, "dataset items disagree in size");
      for (int64_t j = 0; j < item; ++j) batch[i * item + j] = t[j];
    }
    out.push_back(std::move(batch));
  }
  return out;
}

}  // namespace microgan
