#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ickd/checksum.hpp"
#include "ickd/config.hpp"
#include "ickd/error.hpp"
#include "ickd/kernels.hpp"
#include "ickd/net.hpp"
#include "ickd/train.hpp"
#include "verify.hpp"

namespace {

using namespace ickd;

constexpr const char* kVersion = "1.0.0";

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string kernels;
  bool quiet = false;
};

void attach_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path,
                  "Config file with section.key = value lines");
  cmd->add_option("--set", o.overrides,
                  "Override one config key, key=value; repeatable")
      ->take_all();
  cmd->add_option("--out", o.out_dir, "Output directory")
      ->capture_default_str();
  cmd->add_option("--seed", o.seed, "Override train.seed")
      ->each([&o](const std::string&) { o.seed_set = true; });
  cmd->add_option("--kernels", o.kernels,
                  "Force a kernel lane (scalar, avx2, neon)");
  cmd->add_flag("--quiet", o.quiet, "Suppress summary output");
}

AppConfig load_app(const CommonOpts& o) {
  AppConfig cfg =
      o.config_path.empty() ? AppConfig{} : parse_config_file(o.config_path);
  for (const std::string& ov : o.overrides) apply_override(cfg, ov);
  if (o.seed_set) cfg.train.seed = o.seed;
  if (!o.kernels.empty() && !kernels::force_lane(o.kernels)) {
    throw InvalidArgument("kernel lane '" + o.kernels +
                          "' is unknown or unavailable on this machine");
  }
  return cfg;
}

std::string path_in(const CommonOpts& o, const std::string& name) {
  return (std::filesystem::path(o.out_dir) / name).string();
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("write to '" + path + "' failed");
}

std::string fmt_double(double v) {
  std::array<char, 32> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), r.ptr);
}

std::uint64_t file_checksum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  Fnv1a64 h;
  std::array<char, 4096> chunk{};
  while (in.read(chunk.data(), chunk.size()) || in.gcount() > 0)
    h.update(chunk.data(), static_cast<std::size_t>(in.gcount()));
  return h.digest();
}

std::uint64_t dataset_checksum(const LabeledDataset& ds) {
  Fnv1a64 h;
  h.update_u64(ds.sample_count());
  h.update_u64(ds.dim);
  h.update_f64(ds.features);
  h.update(ds.labels.data(), ds.labels.size() * sizeof(std::uint16_t));
  return h.digest();
}

std::string timestamp_utc() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Records what produced this output directory. Contains a timestamp, so it
// is exempt from byte-for-byte determinism; the CSVs and checkpoints are not.
void write_manifest(const CommonOpts& o, const std::string& command,
                    const DataBundle& data,
                    const std::vector<std::string>& outputs) {
  nlohmann::json j;
  j["command"] = command;
  j["version"] = kVersion;
  j["generated_at"] = timestamp_utc();
  j["config"] = o.config_path;
  j["overrides"] = o.overrides;
  if (!o.config_path.empty())
    j["config_checksum"] = to_hex(file_checksum(o.config_path));
  j["train_checksum"] = to_hex(dataset_checksum(data.train));
  j["test_checksum"] = to_hex(dataset_checksum(data.test));
  j["outputs"] = outputs;
  write_text(path_in(o, "manifest.json"), j.dump(2) + "\n");
}

void prepare_out(const CommonOpts& o) {
  std::filesystem::create_directories(o.out_dir);
}

MlpModel load_teacher(const AppConfig& cfg) {
  if (cfg.teacher_checkpoint.empty()) {
    throw InvalidArgument(
        "teacher.checkpoint must name a trained teacher checkpoint");
  }
  return load_checkpoint(cfg.teacher_checkpoint);
}

int cmd_train_teacher(const CommonOpts& o) {
  AppConfig cfg = load_app(o);
  DataBundle data = make_datasets(cfg.data);
  cfg.train.mode = TrainMode::ce_only;
  prepare_out(o);
  write_manifest(o, "train-teacher", data, {"metrics.csv", "teacher.ckpt"});
  TrainResult res;
  try {
    res = train_teacher(cfg.teacher.architecture(), data.train, data.test,
                        cfg.train);
  } catch (const TrainAbort& e) {
    write_text(path_in(o, "metrics.csv"), e.partial_metrics.to_csv());
    throw;
  }
  write_text(path_in(o, "metrics.csv"), res.metrics.to_csv());
  save_checkpoint(res.model, path_in(o, "teacher.ckpt"));
  if (!o.quiet) {
    std::cout << "train-teacher: final test_acc="
              << fmt_double(res.metrics.final_test_acc) << "\n";
  }
  return kExitOk;
}

int cmd_distill(const CommonOpts& o) {
  AppConfig cfg = load_app(o);
  const MlpModel teacher = load_teacher(cfg);
  DataBundle data = make_datasets(cfg.data);
  cfg.train.mode = TrainMode::offline;
  prepare_out(o);
  write_manifest(o, "distill", data, {"metrics.csv", "student.ckpt"});
  TrainResult res;
  try {
    res = distill_offline(teacher, cfg.student.architecture(), data.train,
                          data.test, cfg.train);
  } catch (const TrainAbort& e) {
    write_text(path_in(o, "metrics.csv"), e.partial_metrics.to_csv());
    throw;
  }
  write_text(path_in(o, "metrics.csv"), res.metrics.to_csv());
  save_checkpoint(res.model, path_in(o, "student.ckpt"));
  if (!o.quiet) {
    std::cout << "distill: ablation=" << to_string(cfg.train.ablation)
              << " final test_acc=" << fmt_double(res.metrics.final_test_acc)
              << "\n";
  }
  return kExitOk;
}

int cmd_online(const CommonOpts& o) {
  AppConfig cfg = load_app(o);
  DataBundle data = make_datasets(cfg.data);
  cfg.train.mode = TrainMode::online;
  prepare_out(o);
  write_manifest(o, "online", data,
                 {"metrics1.csv", "metrics2.csv", "student1.ckpt",
                  "student2.ckpt"});
  OnlineResult res;
  try {
    res = distill_online(cfg.student.architecture(),
                         cfg.second_student().architecture(), data.train,
                         data.test, cfg.train);
  } catch (const TrainAbort& e) {
    write_text(path_in(o, "metrics1.csv"), e.partial_metrics.to_csv());
    throw;
  }
  write_text(path_in(o, "metrics1.csv"), res.metrics1.to_csv());
  write_text(path_in(o, "metrics2.csv"), res.metrics2.to_csv());
  save_checkpoint(res.model1, path_in(o, "student1.ckpt"));
  save_checkpoint(res.model2, path_in(o, "student2.ckpt"));
  if (!o.quiet) {
    std::cout << "online: bank_rebuilds=" << res.bank_rebuilds
              << " test_acc1=" << fmt_double(res.metrics1.final_test_acc)
              << " test_acc2=" << fmt_double(res.metrics2.final_test_acc)
              << "\n";
  }
  return kExitOk;
}

int cmd_teacher_free(const CommonOpts& o) {
  AppConfig cfg = load_app(o);
  DataBundle data = make_datasets(cfg.data);
  cfg.train.mode = TrainMode::teacher_free;
  prepare_out(o);
  write_manifest(o, "teacher-free", data,
                 {"baseline_metrics.csv", "metrics.csv", "baseline.ckpt",
                  "student.ckpt"});
  TeacherFreeResult res;
  try {
    res = distill_teacher_free(cfg.student.architecture(), data.train,
                               data.test, cfg.train);
  } catch (const TrainAbort& e) {
    write_text(path_in(o, "metrics.csv"), e.partial_metrics.to_csv());
    throw;
  }
  write_text(path_in(o, "baseline_metrics.csv"), res.baseline_metrics.to_csv());
  write_text(path_in(o, "metrics.csv"), res.student_metrics.to_csv());
  save_checkpoint(res.baseline, path_in(o, "baseline.ckpt"));
  save_checkpoint(res.student, path_in(o, "student.ckpt"));
  if (!o.quiet) {
    std::cout << "teacher-free: baseline test_acc="
              << fmt_double(res.baseline_metrics.final_test_acc)
              << " student test_acc="
              << fmt_double(res.student_metrics.final_test_acc) << "\n";
  }
  return kExitOk;
}

int cmd_ablate(const CommonOpts& o) {
  AppConfig cfg = load_app(o);
  const MlpModel teacher = load_teacher(cfg);
  DataBundle data = make_datasets(cfg.data);
  prepare_out(o);
  write_manifest(o, "ablate", data, {"summary.csv"});

  struct CellStats {
    Ablation row;
    bool use_a;
    bool use_b;
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t n = 0;
  };
  std::vector<CellStats> cells;
  for (const Ablation row : cfg.ablate.rows) {
    for (const auto& [use_a, use_b] : cfg.ablate.weightings) {
      std::vector<double> accs;
      for (const std::uint64_t seed : cfg.ablate.seeds) {
        TrainConfig tc = cfg.train;
        tc.mode = TrainMode::offline;
        tc.ablation = row;
        tc.loss.use_a_weights = use_a;
        tc.loss.use_b_weights = use_b;
        tc.seed = seed;
        const TrainResult res = distill_offline(
            teacher, cfg.student.architecture(), data.train, data.test, tc);
        accs.push_back(res.metrics.final_test_acc);
      }
      CellStats c{row, use_a, use_b, 0.0, 0.0, accs.size()};
      for (double a : accs) c.mean += a;
      c.mean /= static_cast<double>(accs.size());
      if (accs.size() > 1) {
        double ss = 0.0;
        for (double a : accs) ss += (a - c.mean) * (a - c.mean);
        c.stddev = std::sqrt(ss / static_cast<double>(accs.size() - 1));
      }
      cells.push_back(c);
    }
  }

  std::ostringstream csv;
  csv << "ablation,use_a,use_b,mean_acc,stddev_acc,n_seeds\n";
  for (const CellStats& c : cells) {
    csv << to_string(c.row) << ',' << (c.use_a ? 1 : 0) << ','
        << (c.use_b ? 1 : 0) << ',' << fmt_double(c.mean) << ','
        << fmt_double(c.stddev) << ',' << c.n << "\n";
  }
  for (const auto& [use_a, use_b] : cfg.ablate.weightings) {
    const CellStats* full = nullptr;
    const CellStats* kd_only = nullptr;
    for (const CellStats& c : cells) {
      if (c.use_a != use_a || c.use_b != use_b) continue;
      if (c.row == Ablation::full) full = &c;
      if (c.row == Ablation::kd_only) kd_only = &c;
    }
    if (full && kd_only) {
      csv << "#delta full-kd_only=" << fmt_double(full->mean - kd_only->mean)
          << " use_a=" << (use_a ? 1 : 0) << " use_b=" << (use_b ? 1 : 0)
          << "\n";
    }
  }
  const std::string text = csv.str();
  write_text(path_in(o, "summary.csv"), text);
  if (!o.quiet) std::cout << text;
  return kExitOk;
}

void apply_sweep_value(TrainConfig& tc, SweepAxis axis,
                       const std::string& value) {
  const auto bad = [&value]() {
    return ConfigError("bad sweep value '" + value + "'", 0, 1);
  };
  if (axis == SweepAxis::k_positive) {
    if (value == "all") {
      tc.retrieval.k_positive = static_cast<std::size_t>(-1);
      return;
    }
    std::size_t parsed = 0;
    const auto r =
        std::from_chars(value.data(), value.data() + value.size(), parsed);
    if (r.ec != std::errc{} || r.ptr != value.data() + value.size())
      throw bad();
    tc.retrieval.k_positive = parsed;
    return;
  }
  double parsed = 0.0;
  const auto r =
      std::from_chars(value.data(), value.data() + value.size(), parsed);
  if (r.ec != std::errc{} || r.ptr != value.data() + value.size()) throw bad();
  switch (axis) {
    case SweepAxis::beta1: tc.retrieval.beta1 = parsed; break;
    case SweepAxis::beta2: tc.retrieval.beta2 = parsed; break;
    case SweepAxis::gamma_picd: tc.loss.gamma_picd = parsed; break;
    case SweepAxis::gamma_nicd: tc.loss.gamma_nicd = parsed; break;
    case SweepAxis::k_positive: break;
  }
}

int cmd_sweep(const CommonOpts& o) {
  AppConfig cfg = load_app(o);
  const MlpModel teacher = load_teacher(cfg);
  DataBundle data = make_datasets(cfg.data);
  prepare_out(o);
  write_manifest(o, "sweep", data, {"sweep.csv"});

  std::ostringstream csv;
  csv << "axis,value,seed,final_acc\n";
  double best_mean = -1.0;
  std::string best_value;
  for (const std::string& value : cfg.sweep.values) {
    double sum = 0.0;
    for (const std::uint64_t seed : cfg.sweep.seeds) {
      TrainConfig tc = cfg.train;
      tc.mode = TrainMode::offline;
      tc.seed = seed;
      apply_sweep_value(tc, cfg.sweep.axis, value);
      const TrainResult res = distill_offline(
          teacher, cfg.student.architecture(), data.train, data.test, tc);
      sum += res.metrics.final_test_acc;
      csv << to_string(cfg.sweep.axis) << ',' << value << ',' << seed << ','
          << fmt_double(res.metrics.final_test_acc) << "\n";
    }
    const double mean = sum / static_cast<double>(cfg.sweep.seeds.size());
    if (mean > best_mean) {
      best_mean = mean;
      best_value = value;
    }
  }
  csv << "#argmax value=" << best_value
      << " mean_acc=" << fmt_double(best_mean) << "\n";
  const std::string text = csv.str();
  write_text(path_in(o, "sweep.csv"), text);
  if (!o.quiet) {
    std::cout << "sweep: axis=" << to_string(cfg.sweep.axis) << " argmax value="
              << best_value << " mean_acc=" << fmt_double(best_mean) << "\n";
  }
  return kExitOk;
}

constexpr const char* kMetricsHeader =
    "epoch,ce,kd,picd,nicd,total,train_acc,test_acc,bank_checksum,wall_ms";

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

int cmd_plotdata(const CommonOpts& o, const std::vector<std::string>& inputs) {
  static constexpr std::array<const char*, 8> kSeries = {
      "ce", "kd", "picd", "nicd", "total", "train_acc", "test_acc", "wall_ms"};
  static constexpr std::array<std::size_t, 8> kField = {1, 2, 3, 4,
                                                        5, 6, 7, 9};
  prepare_out(o);
  std::ostringstream csv;
  csv << "run,epoch,series,value\n";
  std::size_t rows = 0;
  for (const std::string& input : inputs) {
    std::ifstream in(input, std::ios::binary);
    if (!in) throw Error("cannot open '" + input + "' for reading");
    // Every command writes "metrics.csv", so the stem alone would collide
    // across runs; the parent directory disambiguates.
    const std::filesystem::path in_path(input);
    const std::string parent = in_path.parent_path().filename().string();
    const std::string stem = in_path.stem().string();
    const std::string run = parent.empty() ? stem : parent + "/" + stem;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line_no == 1) {
        if (line != kMetricsHeader)
          throw ConfigError("unrecognized metrics header in '" + input + "'",
                            1, 1);
        continue;
      }
      if (line.empty() || line[0] == '#') continue;
      const std::vector<std::string> fields = split_fields(line);
      if (fields.size() != 10) {
        throw ConfigError("expected 10 fields in '" + input + "'", line_no, 1);
      }
      const auto field_column = [&fields](std::size_t idx) {
        std::size_t col = 1;
        for (std::size_t i = 0; i < idx; ++i) col += fields[i].size() + 1;
        return col;
      };
      std::size_t epoch = 0;
      {
        const std::string& f = fields[0];
        const auto r = std::from_chars(f.data(), f.data() + f.size(), epoch);
        if (r.ec != std::errc{} || r.ptr != f.data() + f.size())
          throw ConfigError("bad epoch in '" + input + "'", line_no, 1);
      }
      if (fields[8].size() != 16 ||
          fields[8].find_first_not_of("0123456789abcdef") !=
              std::string::npos) {
        throw ConfigError("bad bank_checksum in '" + input + "'", line_no,
                          field_column(8));
      }
      for (std::size_t s = 0; s < kSeries.size(); ++s) {
        const std::string& f = fields[kField[s]];
        double v = 0.0;
        const auto r = std::from_chars(f.data(), f.data() + f.size(), v);
        if (r.ec != std::errc{} || r.ptr != f.data() + f.size()) {
          throw ConfigError(std::string("bad ") + kSeries[s] + " value in '" +
                                input + "'",
                            line_no, field_column(kField[s]));
        }
        csv << run << ',' << epoch << ',' << kSeries[s] << ','
            << fmt_double(v) << "\n";
        ++rows;
      }
    }
    if (line_no == 0)
      throw ConfigError("empty metrics file '" + input + "'", 1, 1);
  }
  write_text(path_in(o, "plot.csv"), csv.str());
  if (!o.quiet) std::cout << "plotdata: wrote " << rows << " rows\n";
  return kExitOk;
}

int cmd_verify(const std::string& inject_fault, const std::string& lane) {
  if (!lane.empty() && !kernels::force_lane(lane)) {
    throw InvalidArgument("kernel lane '" + lane +
                          "' is unknown or unavailable on this machine");
  }
  return ickd::tools::run_verify(std::cout, inject_fault) ? kExitOk
                                                          : kExitCheckFailed;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"In-context knowledge distillation laboratory"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  CommonOpts opts;
  CLI::App* c_teacher =
      app.add_subcommand("train-teacher", "Train a teacher with plain CE");
  attach_common(c_teacher, opts);
  CLI::App* c_distill = app.add_subcommand(
      "distill", "Distill a student from a teacher checkpoint");
  attach_common(c_distill, opts);
  CLI::App* c_online = app.add_subcommand(
      "online", "Train two students jointly, each distilling from the other");
  attach_common(c_online, opts);
  CLI::App* c_teacher_free = app.add_subcommand(
      "teacher-free", "Train a CE baseline, then distill a student from it");
  attach_common(c_teacher_free, opts);
  CLI::App* c_ablate =
      app.add_subcommand("ablate", "Run the loss-term ablation grid");
  attach_common(c_ablate, opts);
  CLI::App* c_sweep =
      app.add_subcommand("sweep", "Sweep one retrieval or loss knob");
  attach_common(c_sweep, opts);

  CLI::App* c_plotdata = app.add_subcommand(
      "plotdata", "Reshape metrics CSVs into long run,epoch,series,value form");
  std::vector<std::string> plot_inputs;
  c_plotdata->add_option("inputs", plot_inputs, "Metrics CSV files")
      ->required()
      ->expected(-1);
  c_plotdata->add_option("--out", opts.out_dir, "Output directory")
      ->capture_default_str();
  c_plotdata->add_flag("--quiet", opts.quiet, "Suppress summary output");

  CLI::App* c_verify =
      app.add_subcommand("verify", "Run the invariant battery");
  std::string inject_fault;
  std::string verify_lane;
  c_verify->add_option("--inject-fault", inject_fault)->group("");
  c_verify->add_option("--kernels", verify_lane,
                       "Force a kernel lane (scalar, avx2, neon)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (c_teacher->parsed()) return cmd_train_teacher(opts);
    if (c_distill->parsed()) return cmd_distill(opts);
    if (c_online->parsed()) return cmd_online(opts);
    if (c_teacher_free->parsed()) return cmd_teacher_free(opts);
    if (c_ablate->parsed()) return cmd_ablate(opts);
    if (c_sweep->parsed()) return cmd_sweep(opts);
    if (c_plotdata->parsed()) return cmd_plotdata(opts, plot_inputs);
    if (c_verify->parsed()) return cmd_verify(inject_fault, verify_lane);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const NumericInstability& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumericError;
  } catch (const DegenerateVector& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumericError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitOk;
}
