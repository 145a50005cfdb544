#include "doctest.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <span>
#include <string>

#include "ickd/config.hpp"
#include "ickd/data.hpp"
#include "ickd/error.hpp"
#include "ickd/rng.hpp"

using namespace ickd;

namespace {

std::filesystem::path temp_file(const std::string& name,
                                const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path, std::ios::binary);
  out << content;
  out.close();
  return path;
}

} // namespace

TEST_SUITE("config") {

TEST_CASE("defaults cover a full run out of the box") {
  const AppConfig cfg;
  CHECK(cfg.data.kind == DataKind::blobs);
  CHECK(cfg.data.classes == 10);
  CHECK(cfg.data.per_class == 50);
  CHECK(cfg.data.test_per_class == 20);
  CHECK(cfg.data.dim == 8);
  CHECK(cfg.data.spread == doctest::Approx(0.35));
  CHECK(cfg.data.seed == 7);
  CHECK(cfg.teacher.widths == std::vector<std::size_t>{8, 64, 10});
  CHECK(cfg.student.widths == std::vector<std::size_t>{8, 4, 10});
  CHECK(cfg.second_student().widths == cfg.student.widths);
  CHECK(cfg.train.epochs == 60);
  CHECK(cfg.train.batch_size == 64);
  CHECK(cfg.train.lr.initial == doctest::Approx(0.05));
  CHECK(cfg.train.lr.decay_epochs == std::vector<std::size_t>{30, 45});
  CHECK(cfg.train.momentum == doctest::Approx(0.9));
  CHECK(cfg.train.weight_decay == doctest::Approx(5e-4));
  CHECK(cfg.train.loss.alpha == doctest::Approx(0.5));
  CHECK(cfg.train.loss.tau_kd == doctest::Approx(4.0));
  CHECK(cfg.train.loss.gamma_picd == doctest::Approx(2.0));
  CHECK(cfg.train.loss.gamma_nicd == doctest::Approx(10.0));
  CHECK(cfg.train.retrieval.beta1 == doctest::Approx(1.0));
  CHECK(cfg.train.retrieval.beta2 == doctest::Approx(4.0));
  CHECK(cfg.train.retrieval.k_positive == 100);
  CHECK(cfg.train.retrieval.n_negative == 8);
  CHECK(cfg.ablate.rows.size() == 4);
  CHECK(cfg.ablate.seeds == std::vector<std::uint64_t>{1, 2, 3, 4, 5});
  CHECK(cfg.sweep.axis == SweepAxis::gamma_picd);
  CHECK(cfg.sweep.values ==
        std::vector<std::string>{"0", "1", "2", "4", "8"});
  CHECK_NOTHROW(cfg.train.validate());
}

TEST_CASE("a config file can set every key") {
  const std::string text =
      "# exercising the whole grammar\n"
      "data.kind = spirals\n"
      "data.classes = 3\n"
      "data.per_class = 12\n"
      "data.test_per_class = 4\n"
      "data.dim = 2\n"
      "data.spread = 0.5\n"
      "data.noise = 0.1\n"
      "data.seed = 99\n"
      "data.split_seed = 7\n"
      "data.train_file = train.bin\n"
      "data.test_file = test.bin\n"
      "\n"
      "teacher.widths = 2, 32, 3\n"
      "teacher.feature_layer = 1\n"
      "teacher.checkpoint = t.ckpt\n"
      "student.widths = 2,8,3\n"
      "student.feature_layer = 1\n"
      "student2.widths = 2,16,3\n"
      "student2.feature_layer = 1\n"
      "\n"
      "train.epochs = 9\n"
      "train.batch_size = 7\n"
      "train.lr = 0.2\n"
      "train.decay_epochs = 4, 6\n"
      "train.decay_factor = 0.5\n"
      "train.momentum = 0.8\n"
      "train.weight_decay = 0.001\n"
      "train.seed = 42\n"
      "train.ablation = kd_picd\n"
      "\n"
      "loss.alpha = 0.4\n"
      "loss.tau_kd = 3\n"
      "loss.tau1 = 2\n"
      "loss.tau_nicd = 1.5\n"
      "loss.gamma_picd = 1\n"
      "loss.gamma_nicd = 5\n"
      "loss.use_a_weights = false\n"
      "loss.use_b_weights = 0\n"
      "loss.scale_t_squared = true\n"
      "\n"
      "retrieval.beta1 = 2\n"
      "retrieval.beta2 = 8\n"
      "retrieval.k_positive = 25\n"
      "retrieval.n_negative = 3\n"
      "retrieval.softmax_over_all = true\n"
      "retrieval.random_negatives = 1\n"
      "\n"
      "online.mirror = true\n"
      "online.seed1 = 11\n"
      "online.seed2 = 12\n"
      "\n"
      "ablate.rows = kd_only, full\n"
      "ablate.weightings = on_on, off_on, on_off\n"
      "ablate.seeds = 4, 5\n"
      "sweep.axis = k_positive\n"
      "sweep.values = 1, 5, all\n"
      "sweep.seeds = 8\n";
  const auto path = temp_file("ickd_cfg_full.ini", text);
  const AppConfig cfg = parse_config_file(path.string());
  std::filesystem::remove(path);

  CHECK(cfg.data.kind == DataKind::spirals);
  CHECK(cfg.data.classes == 3);
  CHECK(cfg.data.per_class == 12);
  CHECK(cfg.data.test_per_class == 4);
  CHECK(cfg.data.dim == 2);
  CHECK(cfg.data.spread == doctest::Approx(0.5));
  CHECK(cfg.data.noise == doctest::Approx(0.1));
  CHECK(cfg.data.seed == 99);
  CHECK(cfg.data.split_seed == 7);
  CHECK(cfg.data.train_file == "train.bin");
  CHECK(cfg.data.test_file == "test.bin");
  CHECK(cfg.teacher.widths == std::vector<std::size_t>{2, 32, 3});
  CHECK(cfg.teacher.feature_layer == 1);
  CHECK(cfg.teacher_checkpoint == "t.ckpt");
  CHECK(cfg.student.widths == std::vector<std::size_t>{2, 8, 3});
  CHECK(cfg.student2.widths == std::vector<std::size_t>{2, 16, 3});
  CHECK(cfg.second_student().widths == cfg.student2.widths);
  CHECK(cfg.train.epochs == 9);
  CHECK(cfg.train.batch_size == 7);
  CHECK(cfg.train.lr.initial == doctest::Approx(0.2));
  CHECK(cfg.train.lr.decay_epochs == std::vector<std::size_t>{4, 6});
  CHECK(cfg.train.lr.decay_factor == doctest::Approx(0.5));
  CHECK(cfg.train.momentum == doctest::Approx(0.8));
  CHECK(cfg.train.weight_decay == doctest::Approx(0.001));
  CHECK(cfg.train.seed == 42);
  CHECK(cfg.train.ablation == Ablation::kd_picd);
  CHECK(cfg.train.loss.alpha == doctest::Approx(0.4));
  CHECK(cfg.train.loss.tau_kd == doctest::Approx(3.0));
  CHECK(cfg.train.loss.tau1 == doctest::Approx(2.0));
  CHECK(cfg.train.loss.tau_nicd == doctest::Approx(1.5));
  CHECK(cfg.train.loss.gamma_picd == doctest::Approx(1.0));
  CHECK(cfg.train.loss.gamma_nicd == doctest::Approx(5.0));
  CHECK(cfg.train.loss.use_a_weights == false);
  CHECK(cfg.train.loss.use_b_weights == false);
  CHECK(cfg.train.loss.scale_t_squared == true);
  CHECK(cfg.train.retrieval.beta1 == doctest::Approx(2.0));
  CHECK(cfg.train.retrieval.beta2 == doctest::Approx(8.0));
  CHECK(cfg.train.retrieval.k_positive == 25);
  CHECK(cfg.train.retrieval.n_negative == 3);
  CHECK(cfg.train.retrieval.softmax_over_all == true);
  CHECK(cfg.train.retrieval.random_negatives == true);
  CHECK(cfg.train.mirror_in_context == true);
  CHECK(cfg.train.seed1 == 11);
  CHECK(cfg.train.seed2 == 12);
  REQUIRE(cfg.ablate.rows.size() == 2);
  CHECK(cfg.ablate.rows[0] == Ablation::kd_only);
  CHECK(cfg.ablate.rows[1] == Ablation::full);
  REQUIRE(cfg.ablate.weightings.size() == 3);
  CHECK(cfg.ablate.weightings[1] == std::pair<bool, bool>{false, true});
  CHECK(cfg.ablate.weightings[2] == std::pair<bool, bool>{true, false});
  CHECK(cfg.ablate.seeds == std::vector<std::uint64_t>{4, 5});
  CHECK(cfg.sweep.axis == SweepAxis::k_positive);
  CHECK(cfg.sweep.values == std::vector<std::string>{"1", "5", "all"});
  CHECK(cfg.sweep.seeds == std::vector<std::uint64_t>{8});
}

TEST_CASE("comments, blanks, and crlf endings are tolerated") {
  const auto path = temp_file("ickd_cfg_crlf.ini",
                              "# comment\r\n"
                              "\r\n"
                              "   \t\n"
                              "  train.epochs = 3\r\n"
                              "\ttrain.seed\t=\t5\n");
  const AppConfig cfg = parse_config_file(path.string());
  std::filesystem::remove(path);
  CHECK(cfg.train.epochs == 3);
  CHECK(cfg.train.seed == 5);
}

TEST_CASE("parse errors carry 1-based line and column") {
  const auto unknown = temp_file("ickd_cfg_unknown.ini",
                                 "train.epochs = 3\n"
                                 "  bogus.key = 1\n");
  try {
    parse_config_file(unknown.string());
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 3);
    CHECK(std::string(e.what()).find("bogus.key") != std::string::npos);
  }
  std::filesystem::remove(unknown);

  const auto bad_value = temp_file("ickd_cfg_badval.ini",
                                   "train.epochs = abc\n");
  try {
    parse_config_file(bad_value.string());
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 1);
    CHECK(e.column() == 16);
    CHECK(std::string(e.what()).find("abc") != std::string::npos);
  }
  std::filesystem::remove(bad_value);

  const auto no_eq = temp_file("ickd_cfg_noeq.ini", "train.epochs 3\n");
  CHECK_THROWS_AS(parse_config_file(no_eq.string()), ConfigError);
  std::filesystem::remove(no_eq);

  const auto bad_key = temp_file("ickd_cfg_badkey.ini", "Train.Epochs = 3\n");
  CHECK_THROWS_AS(parse_config_file(bad_key.string()), ConfigError);
  std::filesystem::remove(bad_key);

  const auto bad_bool = temp_file("ickd_cfg_badbool.ini",
                                  "loss.use_a_weights = yes\n");
  CHECK_THROWS_AS(parse_config_file(bad_bool.string()), ConfigError);
  std::filesystem::remove(bad_bool);

  const auto bad_enum = temp_file("ickd_cfg_badenum.ini",
                                  "train.ablation = everything\n");
  CHECK_THROWS_AS(parse_config_file(bad_enum.string()), ConfigError);
  std::filesystem::remove(bad_enum);

  CHECK_THROWS_AS(parse_config_file("/nonexistent/ickd.ini"), Error);
}

TEST_CASE("overrides apply on top of the parsed file") {
  AppConfig cfg;
  apply_override(cfg, "train.epochs=5");
  CHECK(cfg.train.epochs == 5);
  apply_override(cfg, "loss.gamma_picd = 0");
  CHECK(cfg.train.loss.gamma_picd == doctest::Approx(0.0));
  apply_override(cfg, "student.widths=4,12,3");
  CHECK(cfg.student.widths == std::vector<std::size_t>{4, 12, 3});
  CHECK_THROWS_AS(apply_override(cfg, "no_equals_sign"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "bogus.key=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "train.epochs=x"), ConfigError);
}

TEST_CASE("kind names round out") {
  CHECK(std::string(to_string(DataKind::blobs)) == "blobs");
  CHECK(std::string(to_string(DataKind::spirals)) == "spirals");
  CHECK(std::string(to_string(DataKind::file)) == "file");
  CHECK(std::string(to_string(SweepAxis::k_positive)) == "k_positive");
  CHECK(std::string(to_string(SweepAxis::beta1)) == "beta1");
  CHECK(std::string(to_string(SweepAxis::beta2)) == "beta2");
  CHECK(std::string(to_string(SweepAxis::gamma_picd)) == "gamma_picd");
  CHECK(std::string(to_string(SweepAxis::gamma_nicd)) == "gamma_nicd");
}

TEST_CASE("blob datasets split per class without overlap") {
  DataConfig dc;
  dc.classes = 4;
  dc.per_class = 9;
  dc.test_per_class = 3;
  dc.dim = 5;
  dc.spread = 0.3;
  dc.seed = 123;

  const DataBundle bundle = make_datasets(dc);
  CHECK(bundle.train.sample_count() == 36);
  CHECK(bundle.test.sample_count() == 12);
  CHECK(bundle.train.dim == 5);
  const auto train_hist = bundle.train.class_histogram();
  const auto test_hist = bundle.test.class_histogram();
  for (std::size_t c = 0; c < 4; ++c) {
    CHECK(train_hist[c] == 9);
    CHECK(test_hist[c] == 3);
  }

  // Train and test partition the generated pool: every row appears in the
  // pool and never on both sides.
  const LabeledDataset pool = gen_blobs(4, 12, 5, 0.3, 123);
  const auto key = [](std::span<const double> row) {
    std::string k;
    k.resize(row.size() * sizeof(double));
    std::memcpy(k.data(), row.data(), k.size());
    return k;
  };
  std::set<std::string> pool_rows;
  for (std::size_t i = 0; i < pool.sample_count(); ++i) {
    pool_rows.insert(key(pool.row(i)));
  }
  std::set<std::string> train_rows;
  for (std::size_t i = 0; i < bundle.train.sample_count(); ++i) {
    const auto k = key(bundle.train.row(i));
    CHECK(pool_rows.count(k) == 1);
    train_rows.insert(k);
  }
  for (std::size_t i = 0; i < bundle.test.sample_count(); ++i) {
    const auto k = key(bundle.test.row(i));
    CHECK(pool_rows.count(k) == 1);
    CHECK(train_rows.count(k) == 0);
  }

  // A zero split seed is shorthand for the stream derived from data.seed.
  DataConfig explicit_split = dc;
  explicit_split.split_seed = mix_seed(dc.seed, kSplitTag);
  const DataBundle same = make_datasets(explicit_split);
  CHECK(same.train.features == bundle.train.features);
  CHECK(same.test.features == bundle.test.features);

  DataConfig other_split = dc;
  other_split.split_seed = 999;
  const DataBundle moved = make_datasets(other_split);
  CHECK(moved.train.features != bundle.train.features);

  const DataBundle again = make_datasets(dc);
  CHECK(again.train.features == bundle.train.features);
  CHECK(again.test.labels == bundle.test.labels);
}

TEST_CASE("spiral datasets come out two-dimensional") {
  DataConfig dc;
  dc.kind = DataKind::spirals;
  dc.classes = 3;
  dc.per_class = 10;
  dc.test_per_class = 2;
  dc.noise = 0.1;
  dc.seed = 5;
  const DataBundle bundle = make_datasets(dc);
  CHECK(bundle.train.dim == 2);
  CHECK(bundle.train.sample_count() == 30);
  CHECK(bundle.test.sample_count() == 6);
}

TEST_CASE("dataset config validation") {
  DataConfig dc;
  dc.per_class = 1;
  CHECK_THROWS_AS(make_datasets(dc), InvalidArgument);
  dc = DataConfig{};
  dc.test_per_class = 0;
  CHECK_THROWS_AS(make_datasets(dc), InvalidArgument);
  dc = DataConfig{};
  dc.kind = DataKind::file;
  CHECK_THROWS_AS(make_datasets(dc), InvalidArgument);
}

TEST_CASE("file kind loads saved datasets verbatim") {
  DataConfig gen;
  gen.classes = 3;
  gen.per_class = 6;
  gen.test_per_class = 2;
  gen.dim = 4;
  gen.seed = 31;
  const DataBundle made = make_datasets(gen);

  const auto train_path =
      std::filesystem::temp_directory_path() / "ickd_cfg_train.bin";
  const auto test_path =
      std::filesystem::temp_directory_path() / "ickd_cfg_test.bin";
  save_dataset(made.train, train_path.string());
  save_dataset(made.test, test_path.string());

  DataConfig fc;
  fc.kind = DataKind::file;
  fc.train_file = train_path.string();
  fc.test_file = test_path.string();
  const DataBundle loaded = make_datasets(fc);
  std::filesystem::remove(train_path);
  std::filesystem::remove(test_path);

  CHECK(loaded.train.features == made.train.features);
  CHECK(loaded.train.labels == made.train.labels);
  CHECK(loaded.test.features == made.test.features);
  CHECK(loaded.test.labels == made.test.labels);
}

TEST_CASE("model config resolves the feature layer") {
  ModelConfig mc;
  mc.widths = {4, 8, 6, 3};
  const MlpModel dflt = mc.init(1);
  CHECK(dflt.feature_layer_index == 2);
  mc.feature_layer = 1;
  const MlpModel moved = mc.init(1);
  CHECK(moved.feature_layer_index == 1);
  CHECK(dflt.parameters == moved.parameters);

  ModelConfig bad;
  bad.widths = {4};
  CHECK_THROWS_AS(bad.architecture(), InvalidArgument);
}

} // TEST_SUITE
