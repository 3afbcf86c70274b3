#include "oni/experiments/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <utility>

#include "oni/baselines.hpp"
#include "oni/experiments/csv.hpp"
#include "oni/nn/dataset.hpp"
#include "oni/nn/mlp.hpp"
#include "oni/nn/theorems.hpp"
#include "oni/oni.hpp"
#include "oni/oni_grad.hpp"
#include "oni/random.hpp"

namespace oni::experiments {

namespace {

namespace fs = std::filesystem;

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::BadSpec, what); }

struct Context {
  const ExperimentSpec& spec;
  std::ostream& log;
  RunOutcome outcome;

  void write(const CsvTable& table, const std::string& file) {
    const fs::path path = spec.out_dir / file;
    emit_csv(table, path);
    outcome.files.push_back(path);
  }

  void fail(const std::string& check) {
    if (outcome.exit_code == kExitOk) {
      outcome.exit_code = kExitValidation;
      outcome.message = check;
    }
  }
};

long long positive(const ExperimentSpec& spec, const std::string& key, long long min = 1) {
  const long long value = spec.get_int(key);
  if (value < min) bad("parameter '" + key + "' must be >= " + std::to_string(min));
  return value;
}

std::pair<int, int> parse_shape(const std::string& text) {
  int rows = 0, cols = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%dx%d%c", &rows, &cols, &tail) != 2 || rows < 1 || cols < 1) {
    bad("shape must look like 5x7, got '" + text + "'");
  }
  return {rows, cols};
}

int parse_count(const std::string& text) {
  char* end = nullptr;
  const long value = std::strtol(text.c_str(), &end, 10);
  if (text.empty() || end != text.c_str() + text.size() || value < 0 || value > 100000) {
    bad("expected a nonnegative integer, got '" + text + "'");
  }
  return int(value);
}

struct Distribution {
  std::string kind;
  double a = 0.0, b = 1.0;
};

Distribution parse_dist(const std::string& text) {
  Distribution d;
  char kind[16] = {};
  char close = 0;
  int used = 0;
  if (std::sscanf(text.c_str(), "%15[a-z](%lf,%lf%c%n", kind, &d.a, &d.b, &close, &used) != 4 ||
      close != ')' || std::size_t(used) != text.size()) {
    bad("dist must look like normal(3,1) or uniform(0,1), got '" + text + "'");
  }
  d.kind = kind;
  if (d.kind == "normal" && d.b > 0.0) return d;
  if (d.kind == "uniform" && d.b > d.a) return d;
  bad("unsupported distribution '" + text + "'");
}

Matrix draw(const Distribution& d, int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  if (d.kind == "normal") return rng.normal_matrix(rows, cols, d.a, d.b);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = d.a + (d.b - d.a) * rng.uniform();
  return m;
}

struct Flags {
  bool centering;
  bool compact;
};

Flags parse_flags(const std::string& name) {
  static const std::map<std::string, Flags> table = {{"plain", {false, false}},
                                                     {"center", {true, false}},
                                                     {"compact", {false, true}},
                                                     {"accel", {true, true}}};
  const auto it = table.find(name);
  if (it == table.end()) bad("unknown variant '" + name + "' (plain, center, compact, accel)");
  return it->second;
}

OniConfig oni_config(int t, Flags flags, double scale = 1.0) {
  OniConfig cfg;
  cfg.iterations = t;
  cfg.centering = flags.centering;
  cfg.compact_bound = flags.compact;
  cfg.scale = scale;
  return cfg;
}

void run_converge(Context& ctx) {
  const auto& spec = ctx.spec;
  const int rows = int(positive(spec, "rows"));
  const int cols = int(positive(spec, "cols"));
  const int t_max = int(positive(spec, "T_max", 0));
  const int seeds = int(positive(spec, "seeds"));
  const Distribution dist = parse_dist(spec.get("dist"));
  const auto variants = spec.get_list("variants");
  if (variants.empty()) bad("no variants given");

  CsvTable table{{"variant", "seed", "iter", "delta_row", "delta_col", "sigma_min", "sigma_max"}, {}};
  for (const auto& name : variants) {
    const Flags flags = parse_flags(name);
    for (int s = 0; s < seeds; ++s) {
      const Matrix z = draw(dist, rows, cols, derive_seed(spec.seed, std::uint64_t(s)));
      const auto cache = oni_forward(z, oni_config(t_max, flags)).cache;
      double previous = 0.0;
      for (int t = 0; t <= t_max; ++t) {
        const Matrix w = cache.b_list[std::size_t(t)] * cache.v;
        const auto diag = orthogonality_error(w);
        table.add({name, (long long)s, (long long)t, diag.delta_row, diag.delta_col,
                   diag.sigmas(diag.sigmas.size() - 1), diag.sigmas(0)});
        if (t > 0 && diag.delta_row > previous * (1.0 + 1e-12)) {
          ctx.fail(name + " seed " + std::to_string(s) + ": delta_row rises at iter " +
                   std::to_string(t));
        }
        previous = diag.delta_row;
      }
    }
  }
  ctx.write(table, "convergence.csv");
}

Matrix group_olm(const Matrix& z, int group) {
  Matrix w(z.rows(), z.cols());
  for (Eigen::Index start = 0; start < z.rows(); start += group) {
    const Eigen::Index count = std::min<Eigen::Index>(group, z.rows() - start);
    w.middleRows(start, count) = olm_orthogonalize(compact_spectral_bound(z.middleRows(start, count)).v);
  }
  return w;
}

void run_table_a2(Context& ctx) {
  const auto& spec = ctx.spec;
  const int rows = int(positive(spec, "rows"));
  const int cols = int(positive(spec, "cols"));
  const int seeds = int(positive(spec, "seeds"));
  const int t = int(positive(spec, "T", 0));
  std::vector<std::pair<std::string, int>> groups;
  for (const auto& g : spec.get_list("groups")) {
    groups.emplace_back(g, g == "full" ? rows : parse_count(g));
    if (groups.back().second < 1) bad("group size must be >= 1");
  }
  if (groups.empty()) bad("no groups given");

  OniConfig cfg = oni_config(t, {false, true});
  CsvTable table{{"method", "group", "seed", "delta_row", "delta_col"}, {}};
  CsvTable summary{{"method", "group", "delta_row_mean", "delta_col_mean"}, {}};
  for (const auto& [label, size] : groups) {
    double sums[2][2] = {{0, 0}, {0, 0}};
    for (int s = 0; s < seeds; ++s) {
      const Matrix z = Rng(derive_seed(spec.seed, std::uint64_t(s))).normal_matrix(rows, cols);
      // The full matrix is one group even when it has more rows than columns.
      const Matrix oni_w = size >= rows ? oni_forward(z, cfg).w : group_oni_forward(z, size, cfg);
      const Matrix olm_w = group_olm(z, std::min(size, rows));
      const auto a = orthogonality_error(oni_w);
      const auto b = orthogonality_error(olm_w);
      table.add({"ONI", label, (long long)s, a.delta_row, a.delta_col});
      table.add({"OLM", label, (long long)s, b.delta_row, b.delta_col});
      sums[0][0] += a.delta_row;
      sums[0][1] += a.delta_col;
      sums[1][0] += b.delta_row;
      sums[1][1] += b.delta_col;
    }
    summary.add({"ONI", label, sums[0][0] / seeds, sums[0][1] / seeds});
    summary.add({"OLM", label, sums[1][0] / seeds, sums[1][1] / seeds});
    if (std::abs(sums[0][0] - sums[1][0]) / seeds > 1e-3 ||
        std::abs(sums[0][1] - sums[1][1]) / seeds > 1e-3) {
      ctx.fail("ONI and OLM disagree for group " + label);
    }
  }
  ctx.write(table, "table_a2.csv");
  ctx.write(summary, "table_a2_summary.csv");
}

void run_gradcheck(Context& ctx) {
  const auto& spec = ctx.spec;
  const double h = spec.get_real("h");
  const double tol = spec.get_real("tol");
  std::vector<int> ts;
  for (const auto& t : spec.get_list("T")) ts.push_back(parse_count(t));
  CsvTable table{{"shape", "flags", "T", "max_rel_error"}, {}};
  std::uint64_t draw_index = 0;
  for (const auto& shape_text : spec.get_list("shapes")) {
    const auto [rows, cols] = parse_shape(shape_text);
    for (const auto& flag_name : spec.get_list("flags")) {
      const Flags flags = parse_flags(flag_name);
      for (int t : ts) {
        Rng rng(derive_seed(spec.seed, draw_index++));
        const Matrix z = rng.normal_matrix(rows, cols);
        const Matrix dw = rng.normal_matrix(rows, cols);
        const double err = gradient_check(z, oni_config(t, flags), dw, h).max_rel_error;
        table.add({shape_text, flag_name, (long long)t, err});
        if (!(err <= tol)) {
          ctx.fail("gradcheck " + shape_text + " " + flag_name + " T=" + std::to_string(t) +
                   ": max_rel_error " + format_real(err) + " > " + format_real(tol));
        }
      }
    }
  }
  ctx.write(table, "gradcheck.csv");
}

void run_theorems(Context& ctx) {
  const auto& spec = ctx.spec;
  const int n = int(positive(spec, "n"));
  const int d = int(positive(spec, "d"));
  const long samples = long(positive(spec, "samples", 2));
  const double norm_tol = spec.get_real("norm_tol");
  const double cov_tol = spec.get_real("cov_tol");

  CsvTable table{{"property", "n", "d", "scale", "value", "tolerance", "applies", "passed"}, {}};
  const auto row = [&](const std::string& name, double scale, double value, double tol,
                       bool applies) {
    const bool passed = value <= tol;
    table.add({name, (long long)n, (long long)d, scale, value, tol, (long long)applies,
               (long long)passed});
    if (applies && !passed) {
      ctx.fail(name + ": " + format_real(value) + " > " + format_real(tol));
    }
  };

  const auto t1 = nn::theorem1_check(n, d, samples, derive_seed(spec.seed, 0), norm_tol, cov_tol);
  row("norm_preservation", 1.0, t1.norm_error, norm_tol, n >= d);
  row("output_covariance", 1.0, t1.cov_error, cov_tol, n <= d);
  row("gradient_norm_preservation", 1.0, t1.grad_norm_error, norm_tol, n <= d);
  row("gradient_covariance", 1.0, t1.grad_cov_error, cov_tol, n >= d);

  const double root2 = std::sqrt(2.0);
  const auto t2 = nn::theorem2_check(n, d, samples, derive_seed(spec.seed, 1), root2);
  row("jacobian_isometry_deviation", root2, t2.max_deviation, cov_tol, n <= d);
  row("jacobian_off_diagonal", root2, t2.max_off_diagonal, cov_tol, n <= d);
  const auto unit = nn::theorem2_check(n, d, samples, derive_seed(spec.seed, 1), 1.0);
  const double diagonal_gap = (unit.expectation.diagonal().array() - 0.5).abs().maxCoeff();
  row("jacobian_unit_scale_diagonal_gap", 1.0, diagonal_gap, cov_tol, n <= d);
  row("jacobian_unit_scale_off_diagonal", 1.0, unit.max_off_diagonal, cov_tol, n <= d);
  ctx.write(table, "theorems.csv");
}

nn::MlpConfig mlp_config(const ExperimentSpec& spec, const nn::Dataset& train) {
  nn::MlpConfig cfg;
  cfg.method = nn::parse_method(spec.get("method"));
  cfg.depth = int(spec.get_int("depth"));
  cfg.width = int(spec.get_int("width"));
  cfg.input_dim = int(train.dim());
  cfg.output_dim = train.classes;
  cfg.scale = spec.get_real("scale");
  cfg.iterations = int(spec.get_int("T"));
  cfg.centering = spec.get_bool("centering");
  cfg.compact_bound = spec.get_bool("compact");
  cfg.gains = spec.get_bool("gains");
  cfg.lr = spec.get_real("lr");
  cfg.momentum = spec.get_real("momentum");
  cfg.weight_decay = spec.get_real("weight_decay");
  cfg.batch_size = int(spec.get_int("batch_size"));
  cfg.epochs = int(spec.get_int("epochs"));
  cfg.seed = spec.seed;
  return cfg;
}

void run_train_mlp(Context& ctx) {
  const auto& spec = ctx.spec;
  nn::Dataset train, test;
  const std::string source = spec.get("data");
  if (source == "synth") {
    const int classes = int(positive(spec, "classes", 2));
    const int dim = int(positive(spec, "dim"));
    const double separation = spec.get_real("separation");
    train = nn::synth_dataset(derive_seed(spec.seed, 100), int(positive(spec, "n_per_class")),
                              classes, dim, separation);
    test = nn::synth_dataset(derive_seed(spec.seed, 101), int(positive(spec, "test_per_class")),
                             classes, dim, separation);
  } else if (source == "idx") {
    train = nn::load_idx(spec.get("train_images"), spec.get("train_labels"));
    test = nn::load_idx(spec.get("test_images"), spec.get("test_labels"));
    train.classes = test.classes = std::max(train.classes, test.classes);
  } else {
    bad("data must be synth or idx, got '" + source + "'");
  }

  const nn::MlpConfig cfg = mlp_config(spec, train);
  nn::Mlp net(cfg);

  // Probe batch: evenly strided samples so every class shows up.
  const Eigen::Index probe_count = std::min<Eigen::Index>(512, train.size());
  const Eigen::Index stride = train.size() / probe_count;
  Matrix probe_x(probe_count, train.dim());
  std::vector<int> probe_y;
  for (Eigen::Index k = 0; k < probe_count; ++k) {
    probe_x.row(k) = train.features.row(k * stride);
    probe_y.push_back(train.labels[std::size_t(k * stride)]);
  }
  const auto probe = nn::probe_magnitudes(net, probe_x, probe_y);
  CsvTable probe_table{{"layer", "activation", "gradient"}, {}};
  for (std::size_t l = 0; l < probe.activation.size(); ++l) {
    probe_table.add({(long long)(l + 1), probe.activation[l], probe.gradient[l]});
  }
  ctx.write(probe_table, "probe.csv");

  const long track = long(spec.get_int("track_steps"));
  CsvTable ortho{{"step", "layer", "delta_row", "delta_col", "sigma_max"}, {}};
  const auto record = [&](const nn::Mlp& model, long step) {
    if (step > track) return;
    for (std::size_t l = 0; l < model.layers().size(); ++l) {
      const auto d = orthogonality_error(model.layers()[l].effective_weight());
      ortho.add({(long long)step, (long long)(l + 1), d.delta_row, d.delta_col, d.sigmas(0)});
    }
  };
  if (track > 0) record(net, 0);

  const auto curve = nn::train_mlp(net, train, test, track > 0 ? nn::StepCallback(record)
                                                               : nn::StepCallback());
  CsvTable table{{"epoch", "train_loss", "train_error", "test_error"}, {}};
  for (const auto& m : curve) {
    table.add({(long long)m.epoch, m.train_loss, m.train_error, m.test_error});
    if (!std::isfinite(m.train_loss)) ctx.fail("training loss is not finite at epoch " +
                                               std::to_string(m.epoch));
  }
  ctx.write(table, "curve.csv");
  if (track > 0) ctx.write(ortho, "orthogonality.csv");
}

void run_bench(Context& ctx) {
  const auto& spec = ctx.spec;
  const int repeats = int(positive(spec, "repeats"));
  CsvTable table{{"rows", "cols", "T", "repeats", "seconds_per_call"}, {}};
  for (const auto& shape_text : spec.get_list("shapes")) {
    const auto [rows, cols] = parse_shape(shape_text);
    const Matrix z = Rng(derive_seed(spec.seed, 0)).normal_matrix(rows, cols);
    for (const auto& t_text : spec.get_list("T")) {
      const int t = parse_count(t_text);
      const OniConfig cfg = oni_config(t, {true, true});
      double checksum = 0.0;
      const auto start = std::chrono::steady_clock::now();
      for (int r = 0; r < repeats; ++r) checksum += oni_forward(z, cfg).w(0, 0);
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
      const double per_call = elapsed.count() / repeats;
      table.add({(long long)rows, (long long)cols, (long long)t, (long long)repeats, per_call});
      ctx.log << shape_text << " T=" << t << ": " << per_call * 1e3 << " ms"
              << (std::isfinite(checksum) ? "" : " (non-finite output)") << "\n";
    }
  }
  ctx.write(table, "bench.csv");
}

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadSpec:
    case ErrorCode::BadConfig:
      return kExitBadSpec;
    case ErrorCode::IoError:
      return kExitIo;
    default:
      return kExitError;
  }
}

RunOutcome run_experiment(const ExperimentSpec& spec, std::ostream& log) {
  Context ctx{spec, log, {}};
  try {
    default_params(spec.name);
    std::error_code ec;
    fs::create_directories(spec.out_dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + spec.out_dir.string() + ": " + ec.message());
    {
      const fs::path manifest = spec.out_dir / "manifest.txt";
      std::ofstream out(manifest, std::ios::binary | std::ios::trunc);
      const std::string text = manifest_text(spec);
      out.write(text.data(), std::streamsize(text.size()));
      if (!out) throw Error(ErrorCode::IoError, "cannot write " + manifest.string());
      ctx.outcome.files.push_back(manifest);
    }

    if (spec.name == "converge") run_converge(ctx);
    else if (spec.name == "table-a2") run_table_a2(ctx);
    else if (spec.name == "gradcheck") run_gradcheck(ctx);
    else if (spec.name == "theorems") run_theorems(ctx);
    else if (spec.name == "train-mlp") run_train_mlp(ctx);
    else if (spec.name == "bench") run_bench(ctx);
  } catch (const Error& e) {
    ctx.outcome.exit_code = exit_code_for(e.code());
    ctx.outcome.message = e.what();
  }
  return ctx.outcome;
}

}  // namespace oni::experiments
