#include "ickd/config.hpp"

#include "ickd/error.hpp"
#include "ickd/rng.hpp"

#include <charconv>
#include <fstream>
#include <numeric>

namespace ickd {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                          s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

[[noreturn]] void bad_value(const std::string& key, std::string_view value,
                            std::size_t line, std::size_t column) {
    throw ConfigError("bad value '" + std::string(value) + "' for " + key, line,
                      column);
}

double parse_double(const std::string& key, std::string_view value,
                    std::size_t line, std::size_t column) {
    double out = 0.0;
    const auto result = std::from_chars(value.data(), value.data() + value.size(),
                                        out);
    if (result.ec != std::errc() || result.ptr != value.data() + value.size()) {
        bad_value(key, value, line, column);
    }
    return out;
}

std::uint64_t parse_u64(const std::string& key, std::string_view value,
                        std::size_t line, std::size_t column) {
    std::uint64_t out = 0;
    const auto result = std::from_chars(value.data(), value.data() + value.size(),
                                        out);
    if (result.ec != std::errc() || result.ptr != value.data() + value.size()) {
        bad_value(key, value, line, column);
    }
    return out;
}

std::size_t parse_size(const std::string& key, std::string_view value,
                       std::size_t line, std::size_t column) {
    return std::size_t(parse_u64(key, value, line, column));
}

bool parse_bool(const std::string& key, std::string_view value,
                std::size_t line, std::size_t column) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    bad_value(key, value, line, column);
}

std::vector<std::string> split_commas(std::string_view value) {
    std::vector<std::string> items;
    while (true) {
        const std::size_t comma = value.find(',');
        items.emplace_back(trim(value.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        value.remove_prefix(comma + 1);
    }
    return items;
}

std::vector<std::size_t> parse_size_list(const std::string& key,
                                         std::string_view value,
                                         std::size_t line, std::size_t column) {
    std::vector<std::size_t> out;
    for (const std::string& item : split_commas(value)) {
        out.push_back(parse_size(key, item, line, column));
    }
    return out;
}

std::vector<std::uint64_t> parse_u64_list(const std::string& key,
                                          std::string_view value,
                                          std::size_t line, std::size_t column) {
    std::vector<std::uint64_t> out;
    for (const std::string& item : split_commas(value)) {
        out.push_back(parse_u64(key, item, line, column));
    }
    return out;
}

Ablation parse_ablation(const std::string& key, std::string_view value,
                        std::size_t line, std::size_t column) {
    if (value == "none") return Ablation::none;
    if (value == "kd_only") return Ablation::kd_only;
    if (value == "kd_picd") return Ablation::kd_picd;
    if (value == "kd_nicd") return Ablation::kd_nicd;
    if (value == "full") return Ablation::full;
    if (value == "ickd_all") return Ablation::ickd_all;
    bad_value(key, value, line, column);
}

void apply_key(AppConfig& cfg, const std::string& key, std::string_view value,
               std::size_t line, std::size_t key_column,
               std::size_t value_column) {
    const auto dbl = [&] { return parse_double(key, value, line, value_column); };
    const auto u64 = [&] { return parse_u64(key, value, line, value_column); };
    const auto size = [&] { return parse_size(key, value, line, value_column); };
    const auto boolean = [&] {
        return parse_bool(key, value, line, value_column);
    };

    if (key == "data.kind") {
        if (value == "blobs") cfg.data.kind = DataKind::blobs;
        else if (value == "spirals") cfg.data.kind = DataKind::spirals;
        else if (value == "file") cfg.data.kind = DataKind::file;
        else bad_value(key, value, line, value_column);
    } else if (key == "data.classes") {
        cfg.data.classes = size();
    } else if (key == "data.per_class") {
        cfg.data.per_class = size();
    } else if (key == "data.test_per_class") {
        cfg.data.test_per_class = size();
    } else if (key == "data.dim") {
        cfg.data.dim = size();
    } else if (key == "data.spread") {
        cfg.data.spread = dbl();
    } else if (key == "data.noise") {
        cfg.data.noise = dbl();
    } else if (key == "data.seed") {
        cfg.data.seed = u64();
    } else if (key == "data.split_seed") {
        cfg.data.split_seed = u64();
    } else if (key == "data.train_file") {
        cfg.data.train_file = std::string(value);
    } else if (key == "data.test_file") {
        cfg.data.test_file = std::string(value);
    } else if (key == "teacher.widths") {
        cfg.teacher.widths = parse_size_list(key, value, line, value_column);
    } else if (key == "teacher.feature_layer") {
        cfg.teacher.feature_layer = size();
    } else if (key == "teacher.checkpoint") {
        cfg.teacher_checkpoint = std::string(value);
    } else if (key == "student.widths") {
        cfg.student.widths = parse_size_list(key, value, line, value_column);
    } else if (key == "student.feature_layer") {
        cfg.student.feature_layer = size();
    } else if (key == "student2.widths") {
        cfg.student2.widths = parse_size_list(key, value, line, value_column);
    } else if (key == "student2.feature_layer") {
        cfg.student2.feature_layer = size();
    } else if (key == "train.epochs") {
        cfg.train.epochs = size();
    } else if (key == "train.batch_size") {
        cfg.train.batch_size = size();
    } else if (key == "train.lr") {
        cfg.train.lr.initial = dbl();
    } else if (key == "train.decay_epochs") {
        cfg.train.lr.decay_epochs =
            parse_size_list(key, value, line, value_column);
    } else if (key == "train.decay_factor") {
        cfg.train.lr.decay_factor = dbl();
    } else if (key == "train.momentum") {
        cfg.train.momentum = dbl();
    } else if (key == "train.weight_decay") {
        cfg.train.weight_decay = dbl();
    } else if (key == "train.seed") {
        cfg.train.seed = u64();
    } else if (key == "train.ablation") {
        cfg.train.ablation = parse_ablation(key, value, line, value_column);
    } else if (key == "loss.alpha") {
        cfg.train.loss.alpha = dbl();
    } else if (key == "loss.tau_kd") {
        cfg.train.loss.tau_kd = dbl();
    } else if (key == "loss.tau1") {
        cfg.train.loss.tau1 = dbl();
    } else if (key == "loss.tau_nicd") {
        cfg.train.loss.tau_nicd = dbl();
    } else if (key == "loss.gamma_picd") {
        cfg.train.loss.gamma_picd = dbl();
    } else if (key == "loss.gamma_nicd") {
        cfg.train.loss.gamma_nicd = dbl();
    } else if (key == "loss.use_a_weights") {
        cfg.train.loss.use_a_weights = boolean();
    } else if (key == "loss.use_b_weights") {
        cfg.train.loss.use_b_weights = boolean();
    } else if (key == "loss.scale_t_squared") {
        cfg.train.loss.scale_t_squared = boolean();
    } else if (key == "retrieval.beta1") {
        cfg.train.retrieval.beta1 = dbl();
    } else if (key == "retrieval.beta2") {
        cfg.train.retrieval.beta2 = dbl();
    } else if (key == "retrieval.k_positive") {
        cfg.train.retrieval.k_positive = size();
    } else if (key == "retrieval.n_negative") {
        cfg.train.retrieval.n_negative = size();
    } else if (key == "retrieval.softmax_over_all") {
        cfg.train.retrieval.softmax_over_all = boolean();
    } else if (key == "retrieval.random_negatives") {
        cfg.train.retrieval.random_negatives = boolean();
    } else if (key == "online.mirror") {
        cfg.train.mirror_in_context = boolean();
    } else if (key == "online.seed1") {
        cfg.train.seed1 = u64();
    } else if (key == "online.seed2") {
        cfg.train.seed2 = u64();
    } else if (key == "ablate.rows") {
        cfg.ablate.rows.clear();
        for (const std::string& item : split_commas(value)) {
            cfg.ablate.rows.push_back(
                parse_ablation(key, item, line, value_column));
        }
    } else if (key == "ablate.weightings") {
        cfg.ablate.weightings.clear();
        for (const std::string& item : split_commas(value)) {
            if (item == "on_on") cfg.ablate.weightings.emplace_back(true, true);
            else if (item == "off_on") cfg.ablate.weightings.emplace_back(false, true);
            else if (item == "on_off") cfg.ablate.weightings.emplace_back(true, false);
            else if (item == "off_off") cfg.ablate.weightings.emplace_back(false, false);
            else bad_value(key, item, line, value_column);
        }
    } else if (key == "ablate.seeds") {
        cfg.ablate.seeds = parse_u64_list(key, value, line, value_column);
    } else if (key == "sweep.axis") {
        if (value == "k_positive") cfg.sweep.axis = SweepAxis::k_positive;
        else if (value == "beta1") cfg.sweep.axis = SweepAxis::beta1;
        else if (value == "beta2") cfg.sweep.axis = SweepAxis::beta2;
        else if (value == "gamma_picd") cfg.sweep.axis = SweepAxis::gamma_picd;
        else if (value == "gamma_nicd") cfg.sweep.axis = SweepAxis::gamma_nicd;
        else bad_value(key, value, line, value_column);
    } else if (key == "sweep.values") {
        cfg.sweep.values.clear();
        for (const std::string& item : split_commas(value)) {
            if (item.empty()) bad_value(key, value, line, value_column);
            cfg.sweep.values.push_back(item);
        }
    } else if (key == "sweep.seeds") {
        cfg.sweep.seeds = parse_u64_list(key, value, line, value_column);
    } else {
        throw ConfigError("unknown key '" + key + "'", line, key_column);
    }
}

void apply_line(AppConfig& cfg, std::string_view raw, std::size_t line) {
    std::size_t start = 0;
    while (start < raw.size() && (raw[start] == ' ' || raw[start] == '\t')) {
        ++start;
    }
    const std::string_view body = trim(raw.substr(start));
    if (body.empty() || body.front() == '#') return;

    const std::size_t eq = raw.find('=', start);
    if (eq == std::string_view::npos) {
        throw ConfigError("expected 'key = value'", line, start + 1);
    }
    const std::string key{trim(raw.substr(start, eq - start))};
    if (key.empty()) throw ConfigError("empty key", line, start + 1);
    for (char c : key) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
                        c == '_' || c == '.';
        if (!ok) throw ConfigError("malformed key '" + key + "'", line, start + 1);
    }

    std::size_t value_start = eq + 1;
    while (value_start < raw.size() &&
           (raw[value_start] == ' ' || raw[value_start] == '\t')) {
        ++value_start;
    }
    const std::string_view value = trim(raw.substr(value_start));
    apply_key(cfg, key, value, line, start + 1, value_start + 1);
}

void append_rows(LabeledDataset& dst, const LabeledDataset& src,
                 const std::vector<std::size_t>& rows) {
    for (std::size_t i : rows) {
        const auto row = src.row(i);
        dst.features.insert(dst.features.end(), row.begin(), row.end());
        dst.labels.push_back(src.labels[i]);
    }
}

} // namespace

MlpArchitecture ModelConfig::architecture() const {
    MlpArchitecture arch;
    arch.layer_widths = widths;
    arch.validate();
    return arch;
}

MlpModel ModelConfig::init(std::uint64_t seed) const {
    const MlpArchitecture arch = architecture();
    const std::size_t feature_index =
        feature_layer ? *feature_layer : arch.layer_widths.size() - 2;
    return init_model(arch, seed, feature_index);
}

AppConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config: " + path);

    AppConfig cfg;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        apply_line(cfg, raw, line);
    }
    return cfg;
}

void apply_override(AppConfig& cfg, const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("override '" + assignment + "' must be key=value", 0, 0);
    }
    const std::string key{trim(std::string_view(assignment).substr(0, eq))};
    const std::string_view value =
        trim(std::string_view(assignment).substr(eq + 1));
    apply_key(cfg, key, value, 0, 0, 0);
}

const char* to_string(DataKind kind) {
    switch (kind) {
    case DataKind::blobs: return "blobs";
    case DataKind::spirals: return "spirals";
    case DataKind::file: return "file";
    }
    return "unknown";
}

const char* to_string(SweepAxis axis) {
    switch (axis) {
    case SweepAxis::k_positive: return "k_positive";
    case SweepAxis::beta1: return "beta1";
    case SweepAxis::beta2: return "beta2";
    case SweepAxis::gamma_picd: return "gamma_picd";
    case SweepAxis::gamma_nicd: return "gamma_nicd";
    }
    return "unknown";
}

DataBundle make_datasets(const DataConfig& cfg) {
    if (cfg.kind == DataKind::file) {
        if (cfg.train_file.empty() || cfg.test_file.empty()) {
            throw InvalidArgument(
                "data.kind=file needs data.train_file and data.test_file");
        }
        return {load_dataset(cfg.train_file), load_dataset(cfg.test_file)};
    }
    if (cfg.per_class < 2) {
        throw InvalidArgument("data.per_class must be at least 2");
    }
    if (cfg.test_per_class < 1) {
        throw InvalidArgument("data.test_per_class must be at least 1");
    }

    const std::size_t total = cfg.per_class + cfg.test_per_class;
    const LabeledDataset full =
        cfg.kind == DataKind::blobs
            ? gen_blobs(cfg.classes, total, cfg.dim, cfg.spread, cfg.seed)
            : gen_spirals(cfg.classes, total, cfg.noise, cfg.seed);

    const std::uint64_t split_seed =
        cfg.split_seed != 0 ? cfg.split_seed : mix_seed(cfg.seed, kSplitTag);

    DataBundle bundle;
    bundle.train.dim = full.dim;
    bundle.train.class_count = full.class_count;
    bundle.test.dim = full.dim;
    bundle.test.class_count = full.class_count;
    for (std::size_t c = 0; c < cfg.classes; ++c) {
        std::vector<std::size_t> rows(total);
        std::iota(rows.begin(), rows.end(), c * total);
        SplitMix64 rng(mix_seed(split_seed, c));
        shuffle(rows, rng);
        append_rows(bundle.train, full,
                    {rows.begin(), rows.begin() + std::ptrdiff_t(cfg.per_class)});
        append_rows(bundle.test, full,
                    {rows.begin() + std::ptrdiff_t(cfg.per_class), rows.end()});
    }
    bundle.train.validate();
    bundle.test.validate();
    return bundle;
}

} // namespace ickd
