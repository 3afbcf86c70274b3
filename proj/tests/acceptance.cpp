// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Usage: acceptance [work_dir]

#include <Eigen/SVD>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "oni/baselines.hpp"
#include "oni/experiments/csv.hpp"
#include "oni/experiments/runner.hpp"
#include "oni/experiments/spec.hpp"
#include "oni/oni.hpp"
#include "oni/random.hpp"

namespace fs = std::filesystem;
using namespace oni;
using namespace oni::experiments;

namespace {

constexpr std::uint64_t kSeed = 2024;

struct Verdict {
  bool passed = true;
  std::string detail;
};

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

// Column lookup over read_csv output.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  explicit Table(const fs::path& path) {
    auto all = read_csv(path);
    header = all.front();
    rows.assign(all.begin() + 1, all.end());
  }
  std::size_t col(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::runtime_error("missing column " + name);
    return std::size_t(it - header.begin());
  }
  double real(std::size_t row, const std::string& name) const {
    return parse_real(rows[row][col(name)]);
  }
  const std::string& text(std::size_t row, const std::string& name) const {
    return rows[row][col(name)];
  }
};

RunOutcome run(const fs::path& dir, std::vector<std::string> args) {
  args.push_back("--out");
  args.push_back(dir.string());
  args.push_back("--seed");
  args.push_back(std::to_string(kSeed));
  std::ostringstream log;
  return run_experiment(parse_command_line(args), log);
}

bool ran(const RunOutcome& out, Verdict& v) {
  if (out.exit_code == kExitOk) return true;
  v.passed = false;
  v.detail = "exit " + std::to_string(out.exit_code) + ": " + out.message;
  return false;
}

Verdict criterion1(const fs::path& dir) {
  Verdict v;
  const auto out = run(dir, {"converge", "--rows", "64", "--cols", "256", "--dist", "normal(3,1)",
                             "--T_max", "10", "--seeds", "10", "--variants", "plain"});
  if (!ran(out, v)) return v;
  Table t(dir / "convergence.csv");
  std::map<std::string, std::map<long, double>> delta;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    delta[t.text(r, "seed")][long(t.real(r, "iter"))] = t.real(r, "delta_row");
  }
  double worst_ratio = 0.0;
  for (const auto& [seed, by_t] : delta) {
    for (long k = 2; k <= 10; ++k) {
      if (!(by_t.at(k) < by_t.at(k - 1))) {
        v.passed = false;
        v.detail = "seed " + seed + " not decreasing at T=" + std::to_string(k);
        return v;
      }
    }
    worst_ratio = std::max(worst_ratio, by_t.at(10) / by_t.at(1));
  }
  v.passed = worst_ratio < 0.1;
  v.detail = "10 seeds strictly decreasing, max delta(10)/delta(1) = " + num(worst_ratio);
  return v;
}

Verdict criterion2(const fs::path& dir) {
  Verdict v;
  const auto out = run(dir, {"converge", "--rows", "64", "--cols", "256", "--dist", "normal(3,1)",
                             "--T_max", "8", "--seeds", "10", "--variants", "plain,accel"});
  if (!ran(out, v)) return v;
  Table t(dir / "convergence.csv");
  std::map<std::string, std::map<long, double>> mean;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    mean[t.text(r, "variant")][long(t.real(r, "iter"))] += t.real(r, "delta_row") / 10.0;
  }
  double worst_gap = -1e300;
  for (long k = 1; k <= 8; ++k) {
    const double gap = mean["accel"][k] - mean["plain"][k];
    worst_gap = std::max(worst_gap, gap);
    if (gap > 0.0) v.passed = false;
  }
  v.detail = "max over T of mean(accel) - mean(plain) = " + num(worst_gap);
  return v;
}

Verdict criterion3(const fs::path& dir) {
  Verdict v;
  const auto out = run(dir, {"table-a2", "--rows", "64", "--cols", "32", "--seeds", "20", "--T",
                             "30", "--groups", "full,32,16"});
  if (!ran(out, v)) return v;
  Table t(dir / "table_a2_summary.csv");
  std::map<std::string, std::pair<double, double>> oni;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.text(r, "method") == "ONI") {
      oni[t.text(r, "group")] = {t.real(r, "delta_row_mean"), t.real(r, "delta_col_mean")};
    }
  }
  const auto within = [](double x, double target, double tol) {
    return std::abs(x - target) <= tol;
  };
  const auto& full = oni.at("full");
  const auto& g32 = oni.at("32");
  const auto& g16 = oni.at("16");
  v.passed = full.second <= 0.05 && within(full.first, 5.657, 0.05) && within(g32.first, 8.0, 0.05) &&
             within(g32.second, 5.657, 0.05) && within(g16.first, 9.85, 0.3) &&
             within(g16.second, 8.07, 0.3);
  v.detail = "full " + num(full.first) + "/" + num(full.second) + ", G32 " + num(g32.first) + "/" +
             num(g32.second) + ", G16 " + num(g16.first) + "/" + num(g16.second);
  return v;
}

Verdict criterion4(const fs::path& dir) {
  Verdict v;
  fs::create_directories(dir);
  CsvTable table{{"rows", "cols", "bound", "instance", "rel_diff"}, {}};
  const std::pair<int, int> shapes[] = {{8, 32}, {32, 8}, {64, 64}};
  double worst = 0.0;
  std::uint64_t draw = 0;
  for (const auto& [rows, cols] : shapes) {
    for (bool compact : {false, true}) {
      for (int i = 0; i < 20; ++i) {
        const Matrix z = Rng(derive_seed(kSeed, draw++)).normal_matrix(rows, cols);
        OniConfig cfg;
        cfg.iterations = 30;
        cfg.compact_bound = compact;
        const auto result = oni_forward(z, cfg);
        const Matrix& bounded = result.cache.v;
        const Matrix oracle = inverse_sqrt_psd(Matrix(bounded * bounded.transpose())) * bounded;
        const double rel = (result.w - oracle).norm() / oracle.norm();
        worst = std::max(worst, rel);
        table.add({(long long)rows, (long long)cols, compact ? "compact" : "frobenius",
                   (long long)i, rel});
      }
    }
  }
  emit_csv(table, dir / "oracle.csv");
  v.passed = worst < 1e-6;
  v.detail = "120 instances, max relative difference " + num(worst);
  return v;
}

Verdict criterion5(const fs::path& dir) {
  Verdict v;
  const auto out = run(dir, {"gradcheck", "--shapes", "5x7,7x5", "--T", "0,1,3,5,10", "--flags",
                             "plain,center,compact,accel", "--h", "1e-5", "--tol", "1e-5"});
  if (!ran(out, v)) return v;
  Table t(dir / "gradcheck.csv");
  double worst = 0.0;
  for (std::size_t r = 0; r < t.rows.size(); ++r) worst = std::max(worst, t.real(r, "max_rel_error"));
  v.passed = t.rows.size() == 40 && worst <= 1e-5;
  v.detail = std::to_string(t.rows.size()) + " configurations, max relative error " + num(worst);
  return v;
}

Verdict criterion6(const fs::path& dir) {
  Verdict v;
  fs::create_directories(dir);
  CsvTable table{{"draw", "rows", "cols", "T", "centering", "compact", "sigma_max",
                  "max_recurrence_gap", "min_increment"},
                 {}};
  Rng rng(derive_seed(kSeed, 6));
  double worst_sigma = 0.0, worst_gap = 0.0, worst_step = 0.0;
  for (int draw = 0; draw < 100; ++draw) {
    const int rows = 2 + int(rng.below(11));
    const int cols = 2 + int(rng.below(11));
    OniConfig cfg;
    cfg.iterations = int(rng.below(31));
    cfg.centering = rng.below(2) == 1;
    cfg.compact_bound = rng.below(2) == 1;
    const Matrix z = rng.normal_matrix(rows, cols);
    const auto result = oni_forward(z, cfg);

    std::vector<Vector> sigmas;
    for (const auto& b : result.cache.b_list) {
      sigmas.push_back(Eigen::JacobiSVD<Matrix>(Matrix(b * result.cache.v)).singularValues());
    }
    double gap = 0.0, step = 0.0;
    for (std::size_t k = 1; k < sigmas.size(); ++k) {
      const Vector& s = sigmas[k - 1];
      const Vector next = (3.0 * s.array() - s.array().cube()) / 2.0;
      gap = std::max(gap, (sigmas[k] - next).cwiseAbs().maxCoeff());
      step = std::min(step, (sigmas[k] - s).minCoeff());
    }
    const double top = sigmas.back()(0);
    worst_sigma = std::max(worst_sigma, top);
    worst_gap = std::max(worst_gap, gap);
    worst_step = std::min(worst_step, step);
    table.add({(long long)draw, (long long)rows, (long long)cols, (long long)cfg.iterations,
               (long long)cfg.centering, (long long)cfg.compact_bound, top, gap, step});
  }
  emit_csv(table, dir / "spectral.csv");
  v.passed = worst_sigma <= 1.0 + 1e-9 && worst_gap <= 1e-9 && worst_step >= -1e-9;
  v.detail = "100 draws, max sigma " + num(worst_sigma) + ", max recurrence gap " +
             num(worst_gap) + ", min increment " + num(worst_step);
  return v;
}

Verdict criterion7(const fs::path& dir) {
  Verdict v;
  const auto out = run(dir, {"theorems", "--n", "16", "--d", "16", "--samples", "100000",
                             "--norm_tol", "1e-9", "--cov_tol", "0.05"});
  if (!ran(out, v)) return v;
  Table t(dir / "theorems.csv");
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.text(r, "applies") == "1" && t.text(r, "passed") != "1") v.passed = false;
    v.detail += (v.detail.empty() ? "" : ", ") + t.text(r, "property") + " " +
                num(t.real(r, "value"));
  }
  return v;
}

struct MlpRun {
  double probe_ratio = 0.0;
  double final_train_error = 1.0;
};

MlpRun read_mlp(const fs::path& dir) {
  MlpRun m;
  Table probe(dir / "probe.csv");
  m.probe_ratio = probe.real(0, "gradient") / probe.real(probe.rows.size() - 1, "gradient");
  Table curve(dir / "curve.csv");
  m.final_train_error = curve.real(curve.rows.size() - 1, "train_error");
  return m;
}

Verdict criterion8(const fs::path& dir) {
  Verdict v;
  const std::vector<std::string> common = {
      "train-mlp", "--data", "synth", "--n_per_class", "800", "--classes", "10", "--dim", "64",
      "--separation", "3", "--method", "oni", "--depth", "20", "--width", "64", "--T", "15",
      "--epochs", "5", "--lr", "0.1", "--momentum", "0"};
  auto unit = common, root2 = common;
  unit.insert(unit.end(), {"--scale", "1"});
  root2.insert(root2.end(), {"--scale", "1.4142135623730951"});
  if (!ran(run(dir / "scale1", unit), v) || !ran(run(dir / "scale_root2", root2), v)) return v;
  const auto a = read_mlp(dir / "scale1");
  const auto b = read_mlp(dir / "scale_root2");
  v.passed = a.probe_ratio < 0.1 && b.probe_ratio > 0.1 && b.final_train_error < a.final_train_error;
  v.detail = "layer1/layer20 gradient ratio " + num(a.probe_ratio) + " (scale 1) vs " +
             num(b.probe_ratio) + " (sqrt2); epoch-5 train error " + num(a.final_train_error) +
             " vs " + num(b.final_train_error);
  return v;
}

// Per (step, layer), the attainable orthogonality error: rows for wide, columns for tall.
std::map<long, std::map<long, double>> read_delta(const fs::path& dir) {
  Table t(dir / "orthogonality.csv");
  std::map<long, std::map<long, double>> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    out[long(t.real(r, "layer"))][long(t.real(r, "step"))] =
        std::min(t.real(r, "delta_row"), t.real(r, "delta_col"));
  }
  return out;
}

double max_drift(const std::map<long, std::map<long, double>>& delta) {
  double drift = -1e300;
  for (const auto& [layer, by_step] : delta) {
    for (const auto& [step, d] : by_step) drift = std::max(drift, d - by_step.at(0));
  }
  return drift;
}

Verdict criterion9(const fs::path& dir, std::string& note) {
  Verdict v;
  const std::vector<std::string> common = {"train-mlp", "--depth", "3", "--width", "64",
                                           "--epochs", "4", "--lr", "0.1", "--momentum", "0",
                                           "--track_steps", "100"};
  auto orth = common, oni = common, oni_short = common;
  orth.insert(orth.end(), {"--method", "orth_init"});
  oni.insert(oni.end(), {"--method", "oni", "--T", "30"});
  oni_short.insert(oni_short.end(), {"--method", "oni", "--T", "5"});
  if (!ran(run(dir / "orth_init", orth), v) || !ran(run(dir / "oni", oni), v) ||
      !ran(run(dir / "oni_t5", oni_short), v)) {
    return v;
  }

  const auto orth_delta = read_delta(dir / "orth_init");
  double start = 0.0, weakest_peak = 1e300;
  for (const auto& [layer, by_step] : orth_delta) {
    start = std::max(start, by_step.at(0));
    double peak = 0.0;
    for (const auto& [step, d] : by_step) peak = std::max(peak, d);
    weakest_peak = std::min(weakest_peak, peak);
  }
  const double drift = max_drift(read_delta(dir / "oni"));
  v.passed = start <= 1e-6 && weakest_peak > 0.1 && drift <= 1e-6;
  v.detail = "orth_init delta " + num(start) + " at step 0, every layer exceeds " +
             num(weakest_peak) + " by step 100; ONI T=30 max increase " + num(drift);
  note = "ONI T=5 max increase " + num(max_drift(read_delta(dir / "oni_t5")));
  return v;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Verdict criterion10(const fs::path& first, const fs::path& second) {
  Verdict v;
  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(first)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".csv") continue;
    const fs::path rel = fs::relative(entry.path(), first);
    ++compared;
    if (!fs::exists(second / rel) || slurp(entry.path()) != slurp(second / rel)) {
      v.passed = false;
      v.detail = rel.string() + " differs between runs";
      return v;
    }
  }
  v.passed = compared > 0;
  v.detail = std::to_string(compared) + " CSV files byte-identical across two runs";
  return v;
}

struct Criterion {
  int id;
  const char* title;
  double budget_seconds;  // 0: no runtime bound
  std::function<Verdict(const fs::path&, std::string&)> check;
};

bool report(int id, const char* title, Verdict v, double seconds, double budget) {
  if (budget > 0.0 && seconds > budget) {
    v.passed = false;
    v.detail += "; runtime over " + num(budget) + " s";
  }
  std::printf("criterion %d [%s]: %s (%s; %.1f s)\n", id, title, v.passed ? "PASS" : "FAIL",
              v.detail.c_str(), seconds);
  std::fflush(stdout);
  return v.passed;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work =
      argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "oni_acceptance";
  fs::remove_all(work);

  const auto plain = [](Verdict (*f)(const fs::path&)) {
    return [f](const fs::path& dir, std::string&) { return f(dir); };
  };
  const std::vector<Criterion> criteria = {
      {1, "newton convergence", 5, plain(criterion1)},
      {2, "centering and compact bound accelerate", 5, plain(criterion2)},
      {3, "group orthogonality errors", 10, plain(criterion3)},
      {4, "eigendecomposition oracle", 10, plain(criterion4)},
      {5, "finite-difference gradients", 30, plain(criterion5)},
      {6, "spectral bound and recurrence", 0, plain(criterion6)},
      {7, "norm and covariance preservation", 30, plain(criterion7)},
      {8, "sqrt2 scaling in a deep relu mlp", 300, plain(criterion8)},
      {9, "orthogonality under training", 60, criterion9},
  };

  bool all_passed = true;
  for (const char* run_name : {"run1", "run2"}) {
    const bool first = std::string(run_name) == "run1";
    for (const auto& c : criteria) {
      const fs::path dir = work / run_name / ("c" + std::to_string(c.id));
      std::string note;
      const auto start = std::chrono::steady_clock::now();
      Verdict v;
      try {
        v = c.check(dir, note);
      } catch (const std::exception& e) {
        v = {false, std::string("exception: ") + e.what()};
      }
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
      if (first) {
        all_passed &= report(c.id, c.title, v, elapsed.count(), c.budget_seconds);
        if (!note.empty()) std::printf("  note: %s\n", note.c_str());
      }
    }
  }
  all_passed &= report(10, "determinism", criterion10(work / "run1", work / "run2"), 0.0, 0.0);
  std::printf("%s\n", all_passed ? "all criteria passed" : "some criteria failed");
  return all_passed ? 0 : 1;
}
