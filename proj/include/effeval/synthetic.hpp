#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "effeval/core.hpp"
#include "effeval/ingest.hpp"
#include "effeval/metrics.hpp"

namespace effeval::synthetic {

using Rng = std::mt19937_64;

/// Flat Dirichlet(alpha) draw of length n.
std::vector<double> dirichlet(Rng& rng, std::size_t n, double alpha = 1.0);

/// Gaussian embeddings; weights uniform or Dirichlet.
WeightedDocument random_document(Rng& rng, std::size_t tokens, std::size_t dim,
                                 bool dirichlet_weights);

/// Row-major dim x dim orthogonal matrix (Gram-Schmidt on a Gaussian draw).
std::vector<double> random_orthogonal(Rng& rng, std::size_t dim);

struct DatasetOptions {
  std::size_t segments = 100;
  std::size_t min_tokens = 5;
  std::size_t max_tokens = 20;
  std::size_t dim = 32;
  std::size_t vocabulary = 200;
  std::uint64_t seed = 42;
  std::vector<std::string> lang_pairs{"de-en", "cs-en"};
  double max_substitution = 0.6;  // hypothesis token replacement rate upper bound
  double context_noise = 0.1;     // per-occurrence perturbation of token vectors
  double human_noise = 0.05;
};

/// A self-consistent evaluation set. Hypotheses are references with a
/// random share of tokens replaced; human scores fall with that share.
/// Source embeddings are the reference vectors under a random rotation Q,
/// and the remap matrix is Q^T.
struct Dataset {
  std::size_t dim = 0;
  std::vector<SegmentRecord> records;
  std::vector<ingest::ContainerSegment> hyp;
  std::vector<ingest::ContainerSegment> ref;
  std::vector<ingest::ContainerSegment> src;
  metrics::IdfTable idf{1, {}};
  metrics::RemapMatrix remap = metrics::RemapMatrix::identity(1);
  ingest::LmPenaltyTable lm;
  ingest::SidecarManifest manifest;
};

Dataset make_dataset(const DatasetOptions& options);

struct DatasetPaths {
  std::filesystem::path segments;
  std::filesystem::path hyp;
  std::filesystem::path ref;
  std::filesystem::path src;
  std::filesystem::path idf;
  std::filesystem::path remap;
  std::filesystem::path lm;
  std::filesystem::path manifest;
};

/// Fixed file names inside `directory`.
DatasetPaths dataset_paths(const std::filesystem::path& directory);

/// Creates `directory` if needed and writes every artifact of the dataset.
DatasetPaths write_dataset(const Dataset& dataset, const std::filesystem::path& directory);

}  // namespace effeval::synthetic
