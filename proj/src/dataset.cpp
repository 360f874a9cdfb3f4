#include "microgan/dataset.hpp"

namespace microgan {

std::vector<int64_t> shuffled_indices(int64_t n, Rng& rng) {
  if (n < 0) fail(ErrorKind::Spec, "cannot shuffle a negative count");
  std::vector<int64_t> idx(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
  for (int64_t i = n - 1; i > 0; --i) {
    int64_t j = rng.below(i + 1);
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
  }
  return idx;
}

Dataset expand_dataset(const std::vector<ImageU8>& sources,
                       const std::vector<std::string>& source_names,
                       int64_t target_count, const AugmentSpec& spec,
                       uint64_t seed) {
  const int64_t n = static_cast<int64_t>(sources.size());
  if (n < 1) fail(ErrorKind::Config, "expand_dataset needs at least 1 source");
  if (source_names.size() != sources.size())
    fail(ErrorKind::Config, "expand_dataset got " +
                                std::to_string(source_names.size()) +
                                " names for " + std::to_string(n) + " sources");
  if (target_count < n)
    fail(ErrorKind::Config,
         "target_count " + std::to_string(target_count) +
             " is below the source count " + std::to_string(n));
  spec.validate();

  Dataset out;
  out.items.reserve(static_cast<size_t>(target_count));
  out.provenance.reserve(static_cast<size_t>(target_count));

  for (int64_t i = 0; i < n; ++i) {
    out.items.push_back(sources[static_cast<size_t>(i)]);
    ProvenanceRecord rec;
    rec.index = i;
    rec.source = source_names[static_cast<size_t>(i)];
    rec.augmented = false;
    out.provenance.push_back(std::move(rec));
  }

  for (int64_t k = n; k < target_count; ++k) {
    const int64_t src = (k - n) % n;
    Rng rng = Rng::from_stream(seed, static_cast<uint64_t>(k));
    AugmentParams params = draw_augment_params(spec, rng);
    out.items.push_back(
        apply_augment(sources[static_cast<size_t>(src)], params, spec));
    ProvenanceRecord rec;
    rec.index = k;
    rec.source = source_names[static_cast<size_t>(src)];
    rec.augmented = true;
    rec.params = params;
    out.provenance.push_back(std::move(rec));
  }
  return out;
}

}  // namespace microgan
