#include "vecflow/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "binary_io.hpp"
#include "vecflow/error.hpp"
#include "vecflow/rng.hpp"

namespace vecflow {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double standard_normal(CounterRng& rng) {
  // Box-Muller; 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace

VectorFormat parse_vector_format(std::string_view name) {
  if (name == "fvecs") return VectorFormat::kFvecs;
  if (name == "bvecs") return VectorFormat::kBvecs;
  throw ParameterError("unknown vector format '" + std::string(name) +
                       "' (expected fvecs or bvecs)");
}

VectorFormat format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".bvecs" ? VectorFormat::kBvecs : VectorFormat::kFvecs;
}

VectorDataset decode_vectors(std::span<const std::uint8_t> bytes, VectorFormat format) {
  const std::size_t elem = format == VectorFormat::kFvecs ? 4 : 1;
  detail::ByteReader reader(bytes);
  std::vector<float> data;
  std::size_t dim = 0;
  std::size_t records = 0;
  while (!reader.done()) {
    const std::size_t record_offset = reader.offset();
    if (reader.remaining() < 4) {
      throw FormatError("truncated record header at byte offset " +
                        std::to_string(record_offset));
    }
    const auto record_dim = reader.get<std::int32_t>();
    if (record_dim <= 0) {
      throw FormatError("non-positive dimension " + std::to_string(record_dim) +
                        " at byte offset " + std::to_string(record_offset));
    }
    if (records == 0) {
      dim = static_cast<std::size_t>(record_dim);
    } else if (static_cast<std::size_t>(record_dim) != dim) {
      throw FormatError("record " + std::to_string(records) + " has dimension " +
                        std::to_string(record_dim) + ", expected " + std::to_string(dim));
    }
    if (reader.remaining() < dim * elem) {
      throw FormatError("record " + std::to_string(records) + " truncated at byte offset " +
                        std::to_string(reader.offset()) + " (need " +
                        std::to_string(dim * elem) + " bytes, have " +
                        std::to_string(reader.remaining()) + ")");
    }
    const std::size_t base = data.size();
    data.resize(base + dim);
    if (format == VectorFormat::kFvecs) {
      reader.get_array(std::span<float>(data.data() + base, dim));
    } else {
      for (std::size_t d = 0; d < dim; ++d) {
        data[base + d] = static_cast<float>(reader.get<std::uint8_t>());
      }
    }
    ++records;
  }
  if (records == 0) throw FormatError("vector file contains no records");
  return VectorDataset(records, dim, std::move(data),
                       format == VectorFormat::kFvecs ? ElementKind::kFloat32
                                                      : ElementKind::kUint8);
}

std::vector<std::uint8_t> encode_vectors(const VectorDataset& dataset, VectorFormat format) {
  detail::ByteWriter writer;
  writer.bytes().reserve(dataset.n_points() *
                         (4 + dataset.dim() * (format == VectorFormat::kFvecs ? 4 : 1)));
  for (std::size_t i = 0; i < dataset.n_points(); ++i) {
    writer.put<std::int32_t>(static_cast<std::int32_t>(dataset.dim()));
    const auto row = dataset.row(i);
    if (format == VectorFormat::kFvecs) {
      writer.put_array(row);
      continue;
    }
    for (const float v : row) {
      if (!(v >= 0.0f && v <= 255.0f) || v != std::floor(v)) {
        throw ParameterError("value " + std::to_string(v) + " in row " + std::to_string(i) +
                             " is not representable as uint8");
      }
      writer.put<std::uint8_t>(static_cast<std::uint8_t>(v));
    }
  }
  return std::move(writer.bytes());
}

VectorDataset read_vectors(const std::filesystem::path& path, VectorFormat format) {
  return decode_vectors(read_file_bytes(path), format);
}

void write_vectors(const std::filesystem::path& path, const VectorDataset& dataset,
                   VectorFormat format) {
  write_file_bytes(path, encode_vectors(dataset, format));
}

LabelAssignment parse_labels(std::istream& in) {
  std::vector<std::vector<Label>> lists;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::vector<Label> labels;
    std::string_view rest = trim(line);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string_view token = trim(rest.substr(0, comma));
      Label value = 0;
      const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
      if (token.empty() || ec != std::errc() || end != token.data() + token.size()) {
        throw ParseError("line " + std::to_string(line_no) + ": invalid label token '" +
                         std::string(token) + "'");
      }
      labels.push_back(value);
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
      if (trim(rest).empty()) {
        throw ParseError("line " + std::to_string(line_no) + ": trailing comma");
      }
    }
    lists.push_back(std::move(labels));
  }
  return LabelAssignment(std::move(lists));
}

LabelAssignment read_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open label file " + path.string());
  return parse_labels(in);
}

void write_labels(const std::filesystem::path& path, const LabelAssignment& labels) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot create label file " + path.string());
  for (const auto& list : labels.lists()) {
    for (std::size_t j = 0; j < list.size(); ++j) {
      if (j > 0) out << ',';
      out << list[j];
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing label file " + path.string());
}

std::vector<double> zipf_inclusion_probabilities(std::size_t n_labels, double exponent,
                                                 double target_mean) {
  if (n_labels == 0) throw ParameterError("n_labels must be at least 1");
  if (exponent < 0.0) throw ParameterError("Zipf exponent must be non-negative");
  if (target_mean > static_cast<double>(n_labels)) {
    throw ParameterError("target labels per point " + std::to_string(target_mean) +
                         " exceeds the label count " + std::to_string(n_labels));
  }
  if (target_mean < 1.0) {
    throw ParameterError("target labels per point must be at least 1 (every point is labeled)");
  }

  auto probabilities = [&](double c) {
    std::vector<double> p(n_labels);
    for (std::size_t j = 0; j < n_labels; ++j) {
      p[j] = std::min(1.0, c / std::pow(static_cast<double>(j + 1), exponent));
    }
    return p;
  };
  // Mean list length given at least one label.
  auto conditional_mean = [&](double c) {
    const auto p = probabilities(c);
    double sum = 0.0;
    double log_empty = 0.0;
    for (const double pj : p) {
      sum += pj;
      log_empty += pj >= 1.0 ? -INFINITY : std::log1p(-pj);
    }
    const double non_empty = -std::expm1(log_empty);
    return non_empty > 0.0 ? sum / non_empty : 1.0;
  };

  double lo = 0.0;
  double hi = std::pow(static_cast<double>(n_labels), exponent);
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (conditional_mean(mid) < target_mean) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return probabilities(0.5 * (lo + hi));
}

LabelAssignment gen_zipf_labels(const ZipfLabelOptions& options) {
  const auto p = zipf_inclusion_probabilities(options.n_labels, options.exponent,
                                              options.target_mean);
  std::vector<std::vector<Label>> lists(options.n_points);
  for (std::size_t i = 0; i < options.n_points; ++i) {
    CounterRng rng(options.seed, i);
    auto& list = lists[i];
    while (list.empty()) {
      for (std::size_t j = 0; j < p.size(); ++j) {
        if (rng.uniform() < p[j]) list.push_back(static_cast<Label>(j));
      }
    }
  }
  return LabelAssignment(std::move(lists));
}

std::vector<std::uint8_t> encode_ground_truth(const GroundTruth& gt) {
  detail::ByteWriter writer;
  for (std::size_t q = 0; q < gt.size(); ++q) {
    if (gt[q].size() != gt.front().size()) {
      throw FormatError("ground truth is ragged: query " + std::to_string(q) + " has " +
                        std::to_string(gt[q].size()) + " neighbors, query 0 has " +
                        std::to_string(gt.front().size()));
    }
    writer.put<std::int32_t>(static_cast<std::int32_t>(gt[q].size()));
    for (const PointId id : gt[q]) writer.put<std::int32_t>(static_cast<std::int32_t>(id));
  }
  return std::move(writer.bytes());
}

GroundTruth decode_ground_truth(std::span<const std::uint8_t> bytes) {
  detail::ByteReader reader(bytes);
  GroundTruth gt;
  while (!reader.done()) {
    const std::size_t record_offset = reader.offset();
    const auto k = reader.get<std::int32_t>();
    if (k < 0) {
      throw FormatError("negative neighbor count at byte offset " +
                        std::to_string(record_offset));
    }
    if (!gt.empty() && static_cast<std::size_t>(k) != gt.front().size()) {
      throw FormatError("ground truth is ragged: record " + std::to_string(gt.size()) +
                        " has " + std::to_string(k) + " neighbors, expected " +
                        std::to_string(gt.front().size()));
    }
    std::vector<PointId> ids(static_cast<std::size_t>(k));
    for (auto& id : ids) id = static_cast<PointId>(reader.get<std::int32_t>());
    gt.push_back(std::move(ids));
  }
  return gt;
}

void write_ground_truth(const std::filesystem::path& path, const GroundTruth& gt) {
  write_file_bytes(path, encode_ground_truth(gt));
}

GroundTruth read_ground_truth(const std::filesystem::path& path) {
  return decode_ground_truth(read_file_bytes(path));
}

GroundTruth pad_ground_truth(GroundTruth gt, std::size_t k) {
  for (auto& list : gt) {
    if (list.size() > k) list.resize(k);
    list.resize(k, kInvalidPoint);
  }
  return gt;
}

VectorDataset gen_synthetic_vectors(const SyntheticVectorOptions& options) {
  if (options.dim == 0) throw ParameterError("synthetic dimension must be positive");
  const std::size_t latent = options.intrinsic_dim == 0 ? options.dim : options.intrinsic_dim;
  CounterRng basis_rng(options.seed, 0xBA515);
  std::vector<double> basis(latent * options.dim);
  for (auto& b : basis) b = standard_normal(basis_rng) / std::sqrt(static_cast<double>(latent));

  VectorDataset out(options.n_points, options.dim);
  std::vector<double> z(latent);
  for (std::size_t i = 0; i < options.n_points; ++i) {
    CounterRng rng(options.seed, i + 1);
    for (auto& v : z) v = standard_normal(rng);
    auto row = out.row(i);
    for (std::size_t d = 0; d < options.dim; ++d) {
      double v = options.noise * standard_normal(rng);
      for (std::size_t t = 0; t < latent; ++t) v += z[t] * basis[t * options.dim + d];
      row[d] = static_cast<float>(v);
    }
  }
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  std::vector<std::uint8_t> bytes(size);
  if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()),
                           static_cast<std::streamsize>(size))) {
    throw IoError("failed reading " + path.string());
  }
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace vecflow
