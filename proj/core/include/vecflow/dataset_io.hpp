#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "vecflow/types.hpp"

namespace vecflow {

enum class VectorFormat { kFvecs, kBvecs };

VectorFormat parse_vector_format(std::string_view name);
// Picks the format from a .fvecs/.bvecs extension, defaulting to fvecs.
VectorFormat format_from_path(const std::filesystem::path& path);

// Little-endian records of (int32 dim, dim elements).
VectorDataset decode_vectors(std::span<const std::uint8_t> bytes, VectorFormat format);
std::vector<std::uint8_t> encode_vectors(const VectorDataset& dataset, VectorFormat format);

VectorDataset read_vectors(const std::filesystem::path& path, VectorFormat format);
void write_vectors(const std::filesystem::path& path, const VectorDataset& dataset,
                   VectorFormat format);

// One comma-separated line of integer labels per point; empty lines are
// points without labels.
LabelAssignment parse_labels(std::istream& in);
LabelAssignment read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const LabelAssignment& labels);

struct ZipfLabelOptions {
  std::size_t n_points = 0;
  std::size_t n_labels = 0;
  std::uint64_t seed = 0;
  double exponent = 1.0;
  // Expected labels per point, measured after empty lists are resampled.
  double target_mean = 3.17;
};

// Per-label inclusion probabilities min(1, c / j^s) for ranks j = 1..n,
// with c chosen so the mean list length, conditioned on being non-empty,
// equals target_mean.
std::vector<double> zipf_inclusion_probabilities(std::size_t n_labels, double exponent,
                                                 double target_mean);

// Label j-1 corresponds to rank j. Each point draws every label
// independently and redraws the whole list while it is empty.
LabelAssignment gen_zipf_labels(const ZipfLabelOptions& options);

// Per-query neighbor id lists (ivecs). Missing neighbors are stored as
// kInvalidPoint (-1 on disk).
using GroundTruth = std::vector<std::vector<PointId>>;

std::vector<std::uint8_t> encode_ground_truth(const GroundTruth& gt);
GroundTruth decode_ground_truth(std::span<const std::uint8_t> bytes);
void write_ground_truth(const std::filesystem::path& path, const GroundTruth& gt);
GroundTruth read_ground_truth(const std::filesystem::path& path);

// Pads each list with kInvalidPoint up to k entries.
GroundTruth pad_ground_truth(GroundTruth gt, std::size_t k);

struct SyntheticVectorOptions {
  std::size_t n_points = 0;
  std::size_t dim = 32;
  std::uint64_t seed = 0;
  // Points lie near a random linear subspace of this dimension; 0 uses
  // the full dimension.
  std::size_t intrinsic_dim = 0;
  float noise = 0.05f;
};

// Correlated Gaussian points: a random linear map of a latent standard
// normal plus isotropic noise.
VectorDataset gen_synthetic_vectors(const SyntheticVectorOptions& options);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace vecflow
