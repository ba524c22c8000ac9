// vecflow: build, query and benchmark label-filtered vector indexes.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "vecflow/dataset_io.hpp"
#include "vecflow/engine.hpp"
#include "vecflow/error.hpp"
#include "vecflow/eval.hpp"
#include "vecflow/rng.hpp"

namespace {

using namespace vecflow;

std::uint64_t parse_threshold(const std::string& text) {
  if (text == "inf" || text == "INF" || text == "infinity") return kUnboundedThreshold;
  std::size_t used = 0;
  unsigned long long value = 0;
  try {
    value = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw ParameterError("invalid threshold '" + text + "' (expected an integer or 'inf')");
  }
  return value;
}

Metric parse_metric(const std::string& name) {
  if (name == "l2") return Metric::kL2;
  if (name == "ip") return Metric::kInnerProduct;
  throw ParameterError("unknown metric '" + name + "' (expected l2 or ip)");
}

AndPolicy parse_policy(const std::string& name) {
  if (name == "greedy") return AndPolicy::kGreedy;
  if (name == "parallel") return AndPolicy::kParallel;
  throw ParameterError("unknown policy '" + name + "' (expected greedy or parallel)");
}

void require_file(const std::string& path, const char* what) {
  if (!std::filesystem::is_regular_file(path)) {
    throw IoError(std::string(what) + " file not found: " + path);
  }
}

// Reads one label expression per line. Comma-separated lines take their
// operator from `mode`; an explicit mode also overrides '|' / '&'.
std::vector<LabelQuery> load_query_labels(const std::string& path, const std::string& mode,
                                          const std::string& policy_name) {
  require_file(path, "query label");
  const AndPolicy policy = parse_policy(policy_name);
  if (!mode.empty() && mode != "single" && mode != "or" && mode != "and") {
    throw ParameterError("unknown mode '" + mode + "' (expected single, or, and)");
  }
  std::ifstream in(path);
  std::vector<LabelQuery> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const char sep = mode == "and" ? '&' : '|';
    for (char& ch : line) {
      if (ch == ',') ch = sep;
    }
    LabelQuery q;
    try {
      q = parse_label_expression(line);
    } catch (const ParseError& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (mode == "single" && q.labels.size() != 1) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": mode 'single' but the line has " + std::to_string(q.labels.size()) +
                       " labels");
    }
    if (q.labels.size() > 1) {
      if (mode == "and") q.op = LabelOp::kAnd;
      if (mode == "or") q.op = LabelOp::kOr;
    }
    q.policy = policy;
    out.push_back(std::move(q));
  }
  return out;
}

VectorDataset load_vectors(const std::string& path, const std::string& format) {
  require_file(path, "vector");
  return read_vectors(path, format.empty() ? format_from_path(path) : parse_vector_format(format));
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot create " + path);
  out << text;
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Label-filtered approximate nearest neighbor search"};
  app.require_subcommand(1);

  // gen-vectors
  auto* gen_vectors = app.add_subcommand("gen-vectors", "Write synthetic vectors");
  std::size_t gv_n = 100000, gv_dim = 32, gv_intrinsic = 0;
  std::uint64_t gv_seed = 0;
  float gv_noise = 0.05f;
  std::string gv_out, gv_format;
  gen_vectors->add_option("--n", gv_n, "Number of vectors");
  gen_vectors->add_option("--dim", gv_dim, "Dimension");
  gen_vectors->add_option("--intrinsic-dim", gv_intrinsic, "Latent dimension (0: --dim)");
  gen_vectors->add_option("--noise", gv_noise, "Isotropic noise scale");
  gen_vectors->add_option("--seed", gv_seed, "Random seed");
  gen_vectors->add_option("--out", gv_out, "Output .fvecs/.bvecs")->required();
  gen_vectors->add_option("--format", gv_format, "fvecs or bvecs");

  // gen-labels
  auto* gen_labels = app.add_subcommand("gen-labels", "Write Zipf-distributed point labels");
  ZipfLabelOptions zipf;
  zipf.n_points = 100000;
  zipf.n_labels = 50;
  std::string gl_out;
  gen_labels->add_option("--n", zipf.n_points, "Number of points");
  gen_labels->add_option("--n-labels", zipf.n_labels, "Label universe size");
  gen_labels->add_option("--exponent", zipf.exponent, "Zipf exponent");
  gen_labels->add_option("--mean", zipf.target_mean, "Mean labels per point");
  gen_labels->add_option("--seed", zipf.seed, "Random seed");
  gen_labels->add_option("--out", gl_out, "Output label file")->required();

  // gen-query-labels
  auto* gen_qlabels =
      app.add_subcommand("gen-query-labels", "Draw query label sets from base point labels");
  std::string gq_labels, gq_out, gq_mode = "single";
  std::size_t gq_n = 1000, gq_arity = 2;
  std::uint64_t gq_seed = 0;
  gen_qlabels->add_option("--labels", gq_labels, "Base label file")->required();
  gen_qlabels->add_option("--n", gq_n, "Number of queries");
  gen_qlabels->add_option("--mode", gq_mode, "single, or, and");
  gen_qlabels->add_option("--arity", gq_arity, "Labels per multi-label query");
  gen_qlabels->add_option("--seed", gq_seed, "Random seed");
  gen_qlabels->add_option("--out", gq_out, "Output query label file")->required();

  // build
  auto* build = app.add_subcommand("build", "Build and save an index");
  std::string b_data, b_labels, b_index, b_format, b_threshold = "2000", b_metric = "l2";
  EngineConfig b_config;
  build->add_option("--data", b_data, "Base vectors")->required();
  build->add_option("--labels", b_labels, "Base labels")->required();
  build->add_option("--index", b_index, "Output index file")->required();
  build->add_option("--T", b_threshold, "Specificity threshold (integer or inf)");
  build->add_option("--R", b_config.degree, "Graph out-degree");
  build->add_option("--W", b_config.group_width, "Interleave group width");
  build->add_option("--metric", b_metric, "l2 or ip");
  build->add_option("--threads", b_config.build_threads, "Graph build threads");
  build->add_option("--format", b_format, "fvecs or bvecs (default: from extension)");

  // search
  auto* search = app.add_subcommand("search", "Run queries and print results");
  std::string s_index, s_queries, s_qlabels, s_out, s_format, s_mode, s_policy = "greedy";
  std::vector<std::size_t> s_itopk{64};
  std::size_t s_k = 10;
  std::uint64_t s_seed = 0;
  search->add_option("--index", s_index, "Index file")->required();
  search->add_option("--queries", s_queries, "Query vectors")->required();
  search->add_option("--query-labels", s_qlabels, "Query label expressions")->required();
  search->add_option("--k", s_k, "Results per query");
  search->add_option("--itopk", s_itopk, "Internal top-M width")->delimiter(',');
  search->add_option("--mode", s_mode, "single, or, and");
  search->add_option("--policy", s_policy, "greedy or parallel");
  search->add_option("--seed", s_seed, "Search seed");
  search->add_option("--out", s_out, "Output CSV (default stdout)");
  search->add_option("--format", s_format, "fvecs or bvecs");

  // ground-truth
  auto* truth = app.add_subcommand("ground-truth", "Exact filtered neighbors by full scan");
  std::string g_data, g_labels, g_queries, g_qlabels, g_gt, g_format, g_mode, g_policy = "greedy",
                                                                       g_metric = "l2";
  std::size_t g_k = 10, g_threads = 1;
  truth->add_option("--data", g_data, "Base vectors")->required();
  truth->add_option("--labels", g_labels, "Base labels")->required();
  truth->add_option("--queries", g_queries, "Query vectors")->required();
  truth->add_option("--query-labels", g_qlabels, "Query label expressions")->required();
  truth->add_option("--gt", g_gt, "Output .ivecs")->required();
  truth->add_option("--k", g_k, "Neighbors per query");
  truth->add_option("--mode", g_mode, "single, or, and");
  truth->add_option("--policy", g_policy, "greedy or parallel");
  truth->add_option("--metric", g_metric, "l2 or ip");
  truth->add_option("--workers", g_threads, "Scan threads");
  truth->add_option("--format", g_format, "fvecs or bvecs");

  // bench
  auto* bench = app.add_subcommand("bench", "Recall and QPS over a parameter grid");
  std::string e_index, e_data, e_labels, e_queries, e_qlabels, e_gt, e_out, e_format, e_mode,
      e_policy = "greedy";
  std::vector<std::string> e_thresholds;
  std::vector<std::size_t> e_itopk{16, 32, 64, 128, 256};
  BenchOptions e_opts;
  std::size_t e_R = kDefaultGraphDegree;
  bench->add_option("--index", e_index, "Index file");
  bench->add_option("--data", e_data, "Base vectors (with --T: rebuild per threshold)");
  bench->add_option("--labels", e_labels, "Base labels (with --T)");
  bench->add_option("--T", e_thresholds, "Thresholds to sweep")->delimiter(',');
  bench->add_option("--R", e_R, "Graph out-degree for rebuilt indexes");
  bench->add_option("--queries", e_queries, "Query vectors")->required();
  bench->add_option("--query-labels", e_qlabels, "Query label expressions")->required();
  bench->add_option("--gt", e_gt, "Ground truth .ivecs")->required();
  bench->add_option("--itopk", e_itopk, "itopk grid")->delimiter(',');
  bench->add_option("--k", e_opts.k, "Results per query");
  bench->add_option("--mode", e_mode, "single, or, and");
  bench->add_option("--policy", e_policy, "greedy or parallel");
  bench->add_flag("--streaming", e_opts.streaming, "Drive persistent workers at batch size 1");
  bench->add_option("--workers", e_opts.workers, "Worker threads");
  bench->add_option("--reps", e_opts.repetitions, "Timed repetitions (median reported)");
  bench->add_option("--seed", e_opts.seed, "Search seed");
  bench->add_option("--out", e_out, "Output CSV (default stdout)");
  bench->add_option("--format", e_format, "fvecs or bvecs");

  // estimate-mem
  auto* mem = app.add_subcommand("estimate-mem", "Index memory model");
  MemoryModel model;
  std::string m_index;
  mem->add_option("--index", m_index, "Report a built index instead of a model");
  mem->add_option("--N", model.n_points, "Points");
  mem->add_option("--D", model.dim, "Dimension");
  mem->add_option("--F", model.labels_per_point, "Labels per point");
  mem->add_option("--F-HS", model.hs_labels_per_point, "HS labels per point");
  mem->add_option("--F-LS", model.ls_labels_per_point, "LS labels per point");
  mem->add_option("--R", model.degree, "Per-label graph degree");
  mem->add_option("--R-single", model.single_index_degree, "Single-graph reference degree");
  mem->add_option("--b", model.element_bytes, "Bytes per element");
  mem->add_option("--n-labels", model.n_labels, "Label universe size");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen_vectors) {
      SyntheticVectorOptions opts{gv_n, gv_dim, gv_seed, gv_intrinsic, gv_noise};
      const auto format = gv_format.empty() ? format_from_path(gv_out) : parse_vector_format(gv_format);
      auto data = gen_synthetic_vectors(opts);
      if (format == VectorFormat::kBvecs) {
        // Map to 0..255 so the values survive the byte encoding.
        for (float& v : data.data()) v = std::clamp(std::round(v * 32.0f + 128.0f), 0.0f, 255.0f);
      }
      write_vectors(gv_out, data, format);
    } else if (*gen_labels) {
      write_labels(gl_out, gen_zipf_labels(zipf));
    } else if (*gen_qlabels) {
      require_file(gq_labels, "label");
      const auto base = read_labels(gq_labels);
      if (base.n_points() == 0) throw ParameterError("label file " + gq_labels + " is empty");
      std::vector<LabelQuery> queries;
      CounterRng rng(gq_seed, 0x91);
      while (queries.size() < gq_n) {
        const auto labels = base.labels(rng.below(base.n_points()));
        if (labels.empty()) continue;
        if (gq_mode == "single") {
          queries.push_back(LabelQuery::single(labels[rng.below(labels.size())]));
          continue;
        }
        std::vector<Label> picked;
        const std::size_t want = std::min(gq_arity, labels.size());
        if (gq_mode == "and" && want < 2) continue;
        std::vector<Label> pool(labels.begin(), labels.end());
        for (std::size_t i = 0; i < want; ++i) {
          const std::size_t j = i + rng.below(pool.size() - i);
          std::swap(pool[i], pool[j]);
          picked.push_back(pool[i]);
        }
        if (gq_mode == "and") {
          queries.push_back(LabelQuery::all_of(std::move(picked)));
        } else if (gq_mode == "or") {
          queries.push_back(LabelQuery::any_of(std::move(picked)));
        } else {
          throw ParameterError("unknown mode '" + gq_mode + "' (expected single, or, and)");
        }
      }
      write_query_labels(gq_out, queries);
    } else if (*build) {
      require_file(b_labels, "label");
      auto data = load_vectors(b_data, b_format);
      const auto labels = read_labels(b_labels);
      b_config.threshold = parse_threshold(b_threshold);
      b_config.metric = parse_metric(b_metric);
      const auto index = VecFlowIndex::build(std::move(data), labels, b_config);
      index.save(b_index);
      std::fprintf(stderr, "built index: %zu HS labels, %zu LS labels, %zu bytes\n",
                   index.partition().hs_labels.size(), index.partition().ls_labels.size(),
                   index.footprint().total());
    } else if (*search) {
      require_file(s_index, "index");
      const auto index = VecFlowIndex::load(s_index);
      const auto queries = load_vectors(s_queries, s_format);
      const auto qlabels = load_query_labels(s_qlabels, s_mode, s_policy);
      SearchParams params;
      params.k = s_k;
      params.itopk = s_itopk.empty() ? params.itopk : s_itopk.front();
      params.rng_seed = s_seed;
      write_text(s_out, format_results(index.search_batch(queries, qlabels, params)));
    } else if (*truth) {
      require_file(g_labels, "label");
      const auto data = load_vectors(g_data, g_format);
      const auto labels = read_labels(g_labels);
      const auto queries = load_vectors(g_queries, g_format);
      const auto qlabels = load_query_labels(g_qlabels, g_mode, g_policy);
      write_ground_truth(g_gt, compute_ground_truth(data, labels, queries, qlabels, g_k,
                                                    parse_metric(g_metric), g_threads));
    } else if (*bench) {
      require_file(e_gt, "ground truth");
      const auto gt = read_ground_truth(e_gt);
      const auto queries = load_vectors(e_queries, e_format);
      const auto qlabels = load_query_labels(e_qlabels, e_mode, e_policy);
      BenchReport report;
      if (!e_thresholds.empty()) {
        if (e_data.empty() || e_labels.empty()) {
          throw ParameterError("--T sweeps rebuild the index and need --data and --labels");
        }
        require_file(e_labels, "label");
        const auto data = load_vectors(e_data, e_format);
        const auto labels = read_labels(e_labels);
        std::vector<std::uint64_t> thresholds;
        for (const auto& t : e_thresholds) thresholds.push_back(parse_threshold(t));
        EngineConfig config;
        config.degree = e_R;
        report = threshold_sweep(data, labels, config, thresholds, queries, qlabels, gt, e_itopk,
                                 e_opts);
      } else {
        if (e_index.empty()) throw ParameterError("bench needs --index or --T with --data/--labels");
        require_file(e_index, "index");
        const auto index = VecFlowIndex::load(e_index);
        report = bench_sweep(index, queries, qlabels, gt, e_itopk, e_opts);
      }
      write_text(e_out, report.to_csv());
    } else if (*mem) {
      if (!m_index.empty()) {
        require_file(m_index, "index");
        const auto index = VecFlowIndex::load(m_index);
        const auto f = index.footprint();
        std::printf("component,bytes\n");
        std::printf("vectors,%zu\nhs_graphs,%zu\nhs_mapping,%zu\nhs_metadata,%zu\n", f.vectors,
                    f.hs_graphs, f.hs_mapping, f.hs_metadata);
        std::printf("ls_vectors,%zu\nls_mapping,%zu\nls_metadata,%zu\npredicates,%zu\n",
                    f.ls_vectors, f.ls_mapping, f.ls_metadata, f.predicates);
        std::printf("total,%zu\n", f.total());
        model = memory_model_of(index);
      }
      const auto e = estimate_memory(model);
      std::printf("component,GiB\n");
      std::printf("hs,%.2f\nls,%.2f\ntotal,%.2f\nmapping,%.2f\nlabel_metadata,%.6f\n",
                  e.hs / kBytesPerGiB, e.ls / kBytesPerGiB, e.total / kBytesPerGiB,
                  e.mapping / kBytesPerGiB, e.label_metadata / kBytesPerGiB);
      std::printf("single_index,%.2f\n", e.single_index / kBytesPerGiB);
    }
  } catch (const vecflow::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
