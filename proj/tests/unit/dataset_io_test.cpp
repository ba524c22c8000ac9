#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <sstream>

#include "test_support.hpp"
#include "vecflow/dataset_io.hpp"
#include "vecflow/error.hpp"
#include "vecflow/eval.hpp"

namespace vecflow {
namespace {

namespace fs = std::filesystem;

std::vector<std::uint8_t> fvecs_record(std::int32_t dim, std::vector<float> values) {
  std::vector<std::uint8_t> out(4 + values.size() * 4);
  std::memcpy(out.data(), &dim, 4);
  std::memcpy(out.data() + 4, values.data(), values.size() * 4);
  return out;
}

fs::path temp_path(const std::string& name) {
  return fs::temp_directory_path() / ("vecflow_dataset_io_" + name);
}

TEST(DecodeVectors, ThreeRecords) {
  std::vector<std::uint8_t> bytes;
  for (int i = 0; i < 3; ++i) {
    auto r = fvecs_record(4, {1, 2, 3, 4});
    bytes.insert(bytes.end(), r.begin(), r.end());
  }
  const auto ds = decode_vectors(bytes, VectorFormat::kFvecs);
  EXPECT_EQ(ds.n_points(), 3u);
  EXPECT_EQ(ds.dim(), 4u);
  EXPECT_EQ(ds.row(2)[3], 4.0f);
}

TEST(DecodeVectors, TruncatedRecordNamesOffset) {
  auto bytes = fvecs_record(4, {1, 2, 3, 4});
  auto second = fvecs_record(4, {5, 6, 7, 8});
  bytes.insert(bytes.end(), second.begin(), second.end() - 3);
  try {
    decode_vectors(bytes, VectorFormat::kFvecs);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    // Second record payload starts at 20 + 4.
    EXPECT_NE(std::string(e.what()).find("offset 24"), std::string::npos) << e.what();
  }
}

TEST(DecodeVectors, TruncatedHeader) {
  auto bytes = fvecs_record(2, {1, 2});
  bytes.push_back(0);
  bytes.push_back(0);
  EXPECT_THROW(decode_vectors(bytes, VectorFormat::kFvecs), FormatError);
}

TEST(DecodeVectors, InconsistentDimNamesRecord) {
  auto bytes = fvecs_record(2, {1, 2});
  auto bad = fvecs_record(3, {1, 2, 3});
  bytes.insert(bytes.end(), bad.begin(), bad.end());
  try {
    decode_vectors(bytes, VectorFormat::kFvecs);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("record 1"), std::string::npos) << e.what();
  }
}

TEST(DecodeVectors, BvecsWidenToFloat) {
  std::vector<std::uint8_t> bytes = {3, 0, 0, 0, 0, 7, 255};
  const auto ds = decode_vectors(bytes, VectorFormat::kBvecs);
  EXPECT_EQ(ds.kind(), ElementKind::kUint8);
  EXPECT_EQ(ds.row(0)[2], 255.0f);
  EXPECT_EQ(encode_vectors(ds, VectorFormat::kBvecs), bytes);
}

TEST(VectorFiles, RoundTripIsBitIdentical) {
  const auto ds = testing::random_dataset(100, 16, 7);
  const auto path = temp_path("rt.fvecs");
  write_vectors(path, ds, VectorFormat::kFvecs);
  const auto back = read_vectors(path, format_from_path(path));
  EXPECT_EQ(back, ds);
  EXPECT_EQ(read_file_bytes(path), encode_vectors(ds, VectorFormat::kFvecs));
  fs::remove(path);
}

TEST(VectorFiles, MissingFileIsIoError) {
  EXPECT_THROW(read_vectors(temp_path("does_not_exist.fvecs"), VectorFormat::kFvecs), IoError);
}

TEST(ParseLabels, SortsAndDeduplicates) {
  std::istringstream in("3,1,1\n7\n");
  const auto labels = parse_labels(in);
  ASSERT_EQ(labels.n_points(), 2u);
  EXPECT_EQ(labels.lists()[0], (std::vector<Label>{1, 3}));
  EXPECT_EQ(labels.lists()[1], (std::vector<Label>{7}));
}

TEST(ParseLabels, EmptyLineIsEmptyList) {
  std::istringstream in("1\n\n2\n");
  const auto labels = parse_labels(in);
  ASSERT_EQ(labels.n_points(), 3u);
  EXPECT_TRUE(labels.labels(1).empty());
}

TEST(ParseLabels, BadTokenNamesLine) {
  std::istringstream in("1,2\n3,x\n");
  try {
    parse_labels(in);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(LabelFiles, RoundTrip) {
  const auto labels = testing::random_labels(500, 20, 0.2, 3);
  const auto path = temp_path("labels.txt");
  write_labels(path, labels);
  EXPECT_EQ(read_labels(path), labels);
  fs::remove(path);
}

TEST(ZipfLabels, MeanLabelsPerPointMatchesTarget) {
  ZipfLabelOptions opts;
  opts.n_points = 1'000'000;
  opts.n_labels = 50;
  opts.seed = 11;
  const auto labels = gen_zipf_labels(opts);
  EXPECT_NEAR(labels.mean_labels_per_point(), 3.17, 0.05);
  for (const auto& list : labels.lists()) ASSERT_FALSE(list.empty());
}

TEST(ZipfLabels, FrequenciesFollowRank) {
  ZipfLabelOptions opts;
  opts.n_points = 100'000;
  opts.n_labels = 50;
  opts.seed = 5;
  const auto labels = gen_zipf_labels(opts);
  std::vector<std::size_t> freq(50);
  for (const auto& list : labels.lists()) {
    for (const Label l : list) ++freq[l];
  }
  EXPECT_GT(freq[0], freq[9]);
  EXPECT_GT(freq[9], freq[49]);
}

TEST(ZipfLabels, ZeroExponentIsUniform) {
  ZipfLabelOptions opts;
  opts.n_points = 200'000;
  opts.n_labels = 10;
  opts.exponent = 0.0;
  opts.target_mean = 3.0;
  opts.seed = 9;
  const auto p = zipf_inclusion_probabilities(10, 0.0, 3.0);
  for (const double v : p) EXPECT_DOUBLE_EQ(v, p.front());
  const auto labels = gen_zipf_labels(opts);
  std::vector<double> freq(10);
  for (const auto& list : labels.lists()) {
    for (const Label l : list) ++freq[l];
  }
  const auto [lo, hi] = std::minmax_element(freq.begin(), freq.end());
  EXPECT_LT(*hi / *lo, 1.03);
}

TEST(ZipfLabels, TargetAboveLabelCountIsRejected) {
  ZipfLabelOptions opts;
  opts.n_points = 10;
  opts.n_labels = 3;
  opts.target_mean = 3.5;
  EXPECT_THROW(gen_zipf_labels(opts), ParameterError);
}

TEST(ZipfLabels, SeedIsDeterministic) {
  ZipfLabelOptions opts;
  opts.n_points = 5000;
  opts.n_labels = 50;
  opts.seed = 42;
  EXPECT_EQ(gen_zipf_labels(opts), gen_zipf_labels(opts));
  auto other = opts;
  other.seed = 43;
  EXPECT_NE(gen_zipf_labels(opts), gen_zipf_labels(other));
}

TEST(GroundTruthFiles, SmallRoundTrip) {
  const GroundTruth gt = {{0, 5, 9}, {2, 4, 8}};
  EXPECT_EQ(decode_ground_truth(encode_ground_truth(gt)), gt);
}

TEST(GroundTruthFiles, EmptyListsAreValid) {
  const GroundTruth gt = {{}, {}, {}};
  EXPECT_EQ(decode_ground_truth(encode_ground_truth(gt)), gt);
}

TEST(GroundTruthFiles, RaggedIsRejected) {
  EXPECT_THROW(encode_ground_truth({{1, 2}, {3}}), FormatError);
  std::vector<std::uint8_t> bytes = {1, 0, 0, 0, 5, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0};
  EXPECT_THROW(decode_ground_truth(bytes), FormatError);
}

TEST(GroundTruthFiles, OracleAnswersSurviveRoundTrip) {
  const auto data = testing::random_dataset(1000, 8, 21);
  const auto labels = testing::random_labels(1000, 6, 0.05, 22);
  const auto queries = testing::random_dataset(30, 8, 23);
  std::vector<LabelQuery> ql;
  for (std::size_t q = 0; q < 30; ++q) ql.push_back(LabelQuery::single(q % 6));
  const auto gt = compute_ground_truth(data, labels, queries, ql, 10);
  const auto path = temp_path("gt.ivecs");
  write_ground_truth(path, gt);
  EXPECT_EQ(read_ground_truth(path), gt);
  fs::remove(path);
}

TEST(GroundTruthFiles, PaddingUsesInvalidPoint) {
  const auto padded = pad_ground_truth({{4}, {1, 2, 3}}, 2);
  EXPECT_EQ(padded[0], (std::vector<PointId>{4, kInvalidPoint}));
  EXPECT_EQ(padded[1], (std::vector<PointId>{1, 2}));
  const auto bytes = encode_ground_truth(padded);
  std::int32_t second;
  std::memcpy(&second, bytes.data() + 8, 4);
  EXPECT_EQ(second, -1);
}

TEST(SyntheticVectors, DeterministicAndShaped) {
  SyntheticVectorOptions opts;
  opts.n_points = 300;
  opts.dim = 12;
  opts.seed = 4;
  const auto a = gen_synthetic_vectors(opts);
  EXPECT_EQ(a.n_points(), 300u);
  EXPECT_EQ(a.dim(), 12u);
  EXPECT_EQ(a, gen_synthetic_vectors(opts));
}

}  // namespace
}  // namespace vecflow
