#pragma once

// Dataset-level orchestration: per-image attacks, ACC / ASR summaries,
// ablation sweeps, transfer evaluation, and the on-disk run layout
//
//   <out>/manifest.json       resolved config, oracle descriptor, dataset hashes
//   <out>/results.csv         one row per image
//   <out>/results/<id>.json   full per-image record (gene, trace, ...)
//   <out>/adv/<id>.png        best perturbed image (clean copy if not attacked)
//   <out>/summary.json, summary.csv

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "wrinkle/error.hpp"
#include "wrinkle/ga.hpp"
#include "wrinkle/image_io.hpp"
#include "wrinkle/oracle.hpp"

namespace wrinkle {

inline constexpr const char* kVersion = "wrinkle 0.1.0";

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Dataset

struct DatasetEntry {
  std::string filename;
  std::size_t label = 0;
  std::string label_name;
};

struct Dataset {
  fs::path dir;
  std::vector<DatasetEntry> entries;
};

/// Reads `<dir>/index.csv`: rows of `filename,label-index,label-name`. A
/// header row starting with "filename" is skipped.
inline Dataset load_dataset(const fs::path& dir) {
  const fs::path index = dir / "index.csv";
  std::ifstream in(index);
  if (!in) throw IoError("cannot read dataset index " + index.string());
  Dataset ds{dir, {}};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string col; std::getline(ss, col, ',');) cols.push_back(col);
    if (lineno == 1 && !cols.empty() && cols[0] == "filename") continue;
    if (cols.size() < 2)
      throw IoError(index.string() + ":" + std::to_string(lineno) + ": expected filename,label");
    DatasetEntry e;
    e.filename = cols[0];
    try {
      std::size_t used = 0;
      const long v = std::stol(cols[1], &used);
      if (used != cols[1].size() || v < 0) throw std::invalid_argument("label");
      e.label = static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      throw IoError(index.string() + ":" + std::to_string(lineno) + ": bad label index");
    }
    e.label_name = cols.size() > 2 ? cols[2] : std::to_string(e.label);
    ds.entries.push_back(std::move(e));
  }
  return ds;
}

inline void write_dataset_index(const Dataset& ds) {
  std::string csv = "filename,label,label_name\n";
  for (const auto& e : ds.entries)
    csv += e.filename + "," + std::to_string(e.label) + "," + e.label_name + "\n";
  write_file_atomic(ds.dir / "index.csv", csv);
}

/// FNV-1a 64 of a file's bytes, hex encoded.
inline std::string file_hash(const fs::path& path) {
  const std::string bytes = detail::read_file(path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Loads an entry and brings it to the oracle's input resolution.
inline Image load_for_oracle(const Dataset& ds, const DatasetEntry& e,
                             const Oracle& oracle) {
  Image img = load_image(ds.dir / e.filename);
  if (auto size = oracle.input_size())
    img = resize_bilinear(img, size->height, size->width);
  return img;
}

inline std::string image_id(const DatasetEntry& e) {
  return fs::path(e.filename).stem().string();
}

// ---------------------------------------------------------------------------
// Per-image records and summaries

enum class ImageStatus { Attacked, CleanError, Error };

NLOHMANN_JSON_SERIALIZE_ENUM(ImageStatus, {{ImageStatus::Attacked, "attacked"},
                                           {ImageStatus::CleanError, "clean-error"},
                                           {ImageStatus::Error, "error"}})

/// One image's outcome. An image counts as attacked when the oracle
/// classified it correctly before the attack; aborted attacks stay attacked
/// and unsuccessful.
struct AttackResult {
  std::string image_id;
  std::string filename;
  std::size_t label = 0;
  std::string label_name;
  ImageStatus status = ImageStatus::Error;
  std::int64_t clean_pred = -1;
  bool success = false;
  bool aborted = false;
  bool oracle_failure = false;  // aborted, or clean prediction failed
  std::int64_t queries = 0;
  int generations = 0;
  int restarts = 0;
  std::optional<WrinkleGene> gene;
  double best_fitness = 0.0;
  double s_ladv = 0.0;
  double s_perc = 0.0;
  std::int64_t adv_pred = -1;
  std::string output;  // relative to the run directory
  std::vector<double> trace;
  int render_height = 0;
  int render_width = 0;
  double duration_s = 0.0;
  std::string error;
};

inline void to_json(nlohmann::json& j, const AttackResult& r) {
  j = nlohmann::json{{"image_id", r.image_id},       {"filename", r.filename},
                     {"label", r.label},             {"label_name", r.label_name},
                     {"status", r.status},           {"clean_pred", r.clean_pred},
                     {"success", r.success},         {"aborted", r.aborted},
                     {"oracle_failure", r.oracle_failure},
                     {"queries", r.queries},         {"generations", r.generations},
                     {"restarts", r.restarts},       {"best_fitness", r.best_fitness},
                     {"s_ladv", r.s_ladv},           {"s_perc", r.s_perc},
                     {"adv_pred", r.adv_pred},       {"output", r.output},
                     {"trace", r.trace},             {"render_height", r.render_height},
                     {"render_width", r.render_width}, {"duration_s", r.duration_s},
                     {"error", r.error}};
  j["gene"] = r.gene ? nlohmann::json(*r.gene) : nlohmann::json(nullptr);
}

inline void from_json(const nlohmann::json& j, AttackResult& r) {
  r.image_id = j.at("image_id").get<std::string>();
  r.filename = j.at("filename").get<std::string>();
  r.label = j.at("label").get<std::size_t>();
  r.label_name = j.value("label_name", std::string());
  r.status = j.at("status").get<ImageStatus>();
  r.clean_pred = j.at("clean_pred").get<std::int64_t>();
  r.success = j.at("success").get<bool>();
  r.aborted = j.value("aborted", false);
  r.oracle_failure = j.value("oracle_failure", false);
  r.queries = j.at("queries").get<std::int64_t>();
  r.generations = j.value("generations", 0);
  r.restarts = j.value("restarts", 0);
  r.best_fitness = j.at("best_fitness").get<double>();
  r.s_ladv = j.at("s_ladv").get<double>();
  r.s_perc = j.at("s_perc").get<double>();
  r.adv_pred = j.at("adv_pred").get<std::int64_t>();
  r.output = j.value("output", std::string());
  r.trace = j.value("trace", std::vector<double>{});
  r.render_height = j.value("render_height", 0);
  r.render_width = j.value("render_width", 0);
  r.duration_s = j.value("duration_s", 0.0);
  r.error = j.value("error", std::string());
  if (j.contains("gene") && !j.at("gene").is_null()) r.gene = j.at("gene").get<WrinkleGene>();
}

struct Summary {
  std::int64_t total = 0;
  std::int64_t clean_correct = 0;
  std::int64_t clean_errors = 0;
  std::int64_t load_errors = 0;   // images that could not be scored at all
  std::int64_t attacked = 0;
  std::int64_t successes = 0;
  std::int64_t aborted = 0;
  double clean_acc = 0.0;
  double post_acc = 0.0;
  double asr = 0.0;
  double mean_queries = 0.0;
  double mean_s_perc_success = 0.0;

  bool operator==(const Summary&) const = default;
};

/// ACC over all images (errors count as misclassified); ASR over images
/// that were correctly classified before the attack.
inline Summary summarize(const std::vector<AttackResult>& records) {
  Summary s;
  double query_sum = 0.0;
  double perc_sum = 0.0;
  s.total = static_cast<std::int64_t>(records.size());
  for (const auto& r : records) {
    switch (r.status) {
      case ImageStatus::CleanError: ++s.clean_errors; break;
      case ImageStatus::Error: ++s.load_errors; break;
      case ImageStatus::Attacked:
        ++s.clean_correct;
        ++s.attacked;
        query_sum += static_cast<double>(r.queries);
        if (r.aborted) ++s.aborted;
        if (r.success) {
          ++s.successes;
          perc_sum += r.s_perc;
        }
        break;
    }
  }
  if (s.total > 0) {
    s.clean_acc = static_cast<double>(s.clean_correct) / static_cast<double>(s.total);
    s.post_acc = static_cast<double>(s.clean_correct - s.successes) /
                 static_cast<double>(s.total);
  }
  if (s.attacked > 0) {
    s.asr = static_cast<double>(s.successes) / static_cast<double>(s.attacked);
    s.mean_queries = query_sum / static_cast<double>(s.attacked);
  }
  if (s.successes > 0) s.mean_s_perc_success = perc_sum / static_cast<double>(s.successes);
  return s;
}

inline void to_json(nlohmann::json& j, const Summary& s) {
  j = nlohmann::json{{"total", s.total},
                     {"clean_correct", s.clean_correct},
                     {"clean_errors", s.clean_errors},
                     {"load_errors", s.load_errors},
                     {"attacked", s.attacked},
                     {"successes", s.successes},
                     {"aborted", s.aborted},
                     {"clean_acc", s.clean_acc},
                     {"post_acc", s.post_acc},
                     {"asr", s.asr},
                     {"mean_queries", s.mean_queries},
                     {"mean_s_perc_success", s.mean_s_perc_success}};
}
inline void from_json(const nlohmann::json& j, Summary& s) {
  s.total = j.at("total");
  s.clean_correct = j.at("clean_correct");
  s.clean_errors = j.at("clean_errors");
  s.load_errors = j.at("load_errors");
  s.attacked = j.at("attacked");
  s.successes = j.at("successes");
  s.aborted = j.at("aborted");
  s.clean_acc = j.at("clean_acc");
  s.post_acc = j.at("post_acc");
  s.asr = j.at("asr");
  s.mean_queries = j.at("mean_queries");
  s.mean_s_perc_success = j.at("mean_s_perc_success");
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Per-image CSV; excludes wall-clock fields so identical runs produce
/// identical files.
inline std::string results_csv(const std::vector<AttackResult>& records) {
  std::string out =
      "image_id,label,clean_pred,status,success,aborted,queries,generations,"
      "best_fitness,s_ladv,s_perc,adv_pred,output\n";
  for (const auto& r : records) {
    out += r.image_id + "," + std::to_string(r.label) + "," +
           std::to_string(r.clean_pred) + "," + nlohmann::json(r.status).get<std::string>() +
           "," + (r.success ? "1" : "0") + "," + (r.aborted ? "1" : "0") + "," +
           std::to_string(r.queries) + "," + std::to_string(r.generations) + "," +
           format_double(r.best_fitness) + "," + format_double(r.s_ladv) + "," +
           format_double(r.s_perc) + "," + std::to_string(r.adv_pred) + "," + r.output +
           "\n";
  }
  return out;
}

inline std::string summary_csv(const Summary& s) {
  return "total,clean_correct,attacked,successes,aborted,clean_acc,post_acc,asr,"
         "mean_queries,mean_s_perc_success\n" +
         std::to_string(s.total) + "," + std::to_string(s.clean_correct) + "," +
         std::to_string(s.attacked) + "," + std::to_string(s.successes) + "," +
         std::to_string(s.aborted) + "," + format_double(s.clean_acc) + "," +
         format_double(s.post_acc) + "," + format_double(s.asr) + "," +
         format_double(s.mean_queries) + "," + format_double(s.mean_s_perc_success) +
         "\n";
}

inline nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

inline void write_json_file(const fs::path& path, const nlohmann::json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

/// Reloads every per-image record of a run, in results.csv order.
inline std::vector<AttackResult> load_results(const fs::path& run_dir) {
  const fs::path csv = run_dir / "results.csv";
  std::ifstream in(csv);
  if (!in) throw IoError("cannot read " + csv.string());
  std::vector<AttackResult> out;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::string id = line.substr(0, line.find(','));
    out.push_back(read_json_file(run_dir / "results" / (id + ".json")).get<AttackResult>());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset attack

struct RunOptions {
  std::optional<fs::path> out_dir;
  int workers = 1;
  bool random_baseline = false;
  /// Fully resolved caller configuration, copied into the manifest verbatim.
  nlohmann::json config_snapshot = nullptr;
};

struct RunReport {
  std::vector<AttackResult> results;
  Summary summary;
};

/// Per-image GA seed: the master seed mixed with the image's file name, so
/// the schedule is shared by every run over the same dataset.
inline std::uint64_t image_seed(std::uint64_t master, const DatasetEntry& e) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : e.filename) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(master ^ h);
}

inline nlohmann::json build_manifest(const Dataset& ds, const Oracle& oracle,
                                     const AttackConfig& cfg, const RunOptions& opt) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : ds.entries) {
    nlohmann::json item{{"filename", e.filename}, {"label", e.label},
                        {"label_name", e.label_name}};
    std::error_code ec;
    item["fnv1a64"] = fs::exists(ds.dir / e.filename, ec) ? file_hash(ds.dir / e.filename)
                                                          : std::string("missing");
    entries.push_back(std::move(item));
  }
  return nlohmann::json{{"version", kVersion},
                        {"config", opt.config_snapshot},
                        {"mode", opt.random_baseline ? "random-baseline" : "ga"},
                        {"attack", cfg},
                        {"master_seed", cfg.ga.seed},
                        {"oracle", oracle.descriptor()},
                        {"model_id", oracle.model_id()},
                        {"dataset", {{"dir", fs::absolute(ds.dir).string()},
                                     {"entries", std::move(entries)}}}};
}

inline AttackResult attack_entry(const Dataset& ds, const DatasetEntry& e,
                                 const Oracle& oracle, const AttackConfig& base,
                                 const PerceptualMetric* metric, const RunOptions& opt) {
  const std::optional<fs::path>& out_dir = opt.out_dir;
  const auto t0 = std::chrono::steady_clock::now();
  AttackResult r;
  r.image_id = image_id(e);
  r.filename = e.filename;
  r.label = e.label;
  r.label_name = e.label_name;
  std::optional<Image> output;
  try {
    const Image x = load_for_oracle(ds, e, oracle);
    require_valid(x, e.filename.c_str());
    r.render_height = x.height;
    r.render_width = x.width;
    const ProbVector clean = require_valid_probs(oracle.predict(x));
    if (e.label >= clean.size())
      throw UsageError(e.filename + ": label outside the oracle's class range");
    r.clean_pred = static_cast<std::int64_t>(clean.argmax());
    if (clean.argmax() != e.label) {
      r.status = ImageStatus::CleanError;
      r.adv_pred = r.clean_pred;
      output = quantize(x);
    } else {
      r.status = ImageStatus::Attacked;
      AttackConfig cfg = base;
      cfg.ga.seed = image_seed(base.ga.seed, e);
      AttackOutcome o = opt.random_baseline
                            ? run_random_baseline(x, e.label, oracle, cfg, metric)
                            : run_attack(x, e.label, oracle, cfg, metric, 1);
      r.success = o.success;
      r.aborted = o.aborted;
      r.oracle_failure = o.aborted;
      r.error = o.error;
      r.queries = o.queries;
      r.generations = o.generations;
      r.restarts = o.restarts;
      r.trace = o.trace;
      if (o.best) {
        r.gene = o.best->gene;
        r.best_fitness = o.best->fitness;
        r.s_ladv = o.best->s_ladv;
        r.s_perc = o.best->s_perc;
        r.adv_pred = static_cast<std::int64_t>(o.best->predicted);
        output = *o.best->image;
      } else {
        r.adv_pred = r.clean_pred;
        output = quantize(x);
      }
    }
  } catch (const OracleError& err) {
    r.status = ImageStatus::Error;
    r.oracle_failure = true;
    r.error = err.what();
  } catch (const Error& err) {
    // The image could not be scored at all (unreadable, bad label, clean
    // prediction failed). Attack-time oracle failures are reported through
    // AttackOutcome::aborted instead.
    r.status = ImageStatus::Error;
    r.error = err.what();
  }
  if (out_dir && output) {
    r.output = "adv/" + r.image_id + ".png";
    save_image(*output, *out_dir / r.output);
  }
  r.duration_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

/// Attacks every image of the dataset. Images the oracle already gets wrong
/// are recorded as clean errors and not attacked. Per-image failures are
/// recorded and the run continues. With an output directory, the manifest is
/// written first so it exists even if the run dies.
inline RunReport attack_dataset(const Dataset& ds, const Oracle& oracle,
                                const AttackConfig& cfg,
                                const PerceptualMetric* metric = nullptr,
                                const RunOptions& opt = {}) {
  cfg.validate();
  if (opt.out_dir) {
    fs::create_directories(*opt.out_dir / "adv");
    fs::create_directories(*opt.out_dir / "results");
    write_json_file(*opt.out_dir / "manifest.json", build_manifest(ds, oracle, cfg, opt));
  }
  RunReport report;
  report.results.resize(ds.entries.size());
  parallel_for(ds.entries.size(), opt.workers, [&](std::size_t i) {
    report.results[i] = attack_entry(ds, ds.entries[i], oracle, cfg, metric, opt);
    if (opt.out_dir)
      write_json_file(*opt.out_dir / "results" / (report.results[i].image_id + ".json"),
                      report.results[i]);
  });
  report.summary = summarize(report.results);
  if (opt.out_dir) {
    write_file_atomic(*opt.out_dir / "results.csv", results_csv(report.results));
    write_file_atomic(*opt.out_dir / "summary.csv", summary_csv(report.summary));
    write_json_file(*opt.out_dir / "summary.json", report.summary);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Ablation sweeps

enum class SweepAxis { Budget, Population, Alpha1, Alpha2, Components };

inline SweepAxis parse_axis(const std::string& name) {
  static const std::map<std::string, SweepAxis> axes{
      {"budget", SweepAxis::Budget},   {"population", SweepAxis::Population},
      {"alpha1", SweepAxis::Alpha1},   {"alpha2", SweepAxis::Alpha2},
      {"components", SweepAxis::Components}};
  const auto it = axes.find(name);
  if (it == axes.end())
    throw UsageError("unknown sweep axis '" + name +
                     "' (expected budget, population, alpha1, alpha2, components)");
  return it->second;
}

inline const char* axis_name(SweepAxis a) {
  switch (a) {
    case SweepAxis::Budget: return "budget";
    case SweepAxis::Population: return "population";
    case SweepAxis::Alpha1: return "alpha1";
    case SweepAxis::Alpha2: return "alpha2";
    case SweepAxis::Components: return "components";
  }
  return "?";
}

/// Returns `base` with one axis set to `value`; throws UsageError on values
/// the axis cannot take.
inline AttackConfig apply_axis(AttackConfig cfg, SweepAxis axis, const std::string& value) {
  auto as_int = [&] {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != value.size() || value.empty())
      throw UsageError(std::string(axis_name(axis)) + ": expected an integer, got '" + value + "'");
    return v;
  };
  auto as_double = [&] {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != value.size() || value.empty())
      throw UsageError(std::string(axis_name(axis)) + ": expected a number, got '" + value + "'");
    return v;
  };
  switch (axis) {
    case SweepAxis::Budget: cfg.ga.budget = as_int(); break;
    case SweepAxis::Population: cfg.ga.population = as_int(); break;
    case SweepAxis::Alpha1: cfg.perceptual.alpha1 = as_double(); break;
    case SweepAxis::Alpha2: cfg.fitness.alpha2 = as_double(); break;
    case SweepAxis::Components: cfg.mask = parse_mask(value); break;
  }
  cfg.validate();
  return cfg;
}

struct SweepRow {
  std::string value;
  Summary summary;
};

/// Runs attack_dataset once per axis value with everything else fixed.
/// Every cell shares the same master seed, hence the same per-image seeds.
inline std::vector<SweepRow> ablation_sweep(SweepAxis axis,
                                            const std::vector<std::string>& values,
                                            const AttackConfig& base, const Dataset& ds,
                                            const Oracle& oracle,
                                            const PerceptualMetric* metric = nullptr,
                                            const RunOptions& opt = {}) {
  if (values.empty()) throw UsageError("sweep: no axis values given");
  std::vector<AttackConfig> cells;
  for (const auto& v : values) cells.push_back(apply_axis(base, axis, v));
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < values.size(); ++i) {
    RunOptions cell_opt = opt;
    if (opt.out_dir) {
      std::string cell = std::string(axis_name(axis)) + "=" + values[i];
      for (char& c : cell)
        if (c == '+') c = '_';
      cell_opt.out_dir = *opt.out_dir / cell;
    }
    rows.push_back({values[i], attack_dataset(ds, oracle, cells[i], metric, cell_opt).summary});
  }
  return rows;
}

inline std::string sweep_csv(SweepAxis axis, const std::vector<SweepRow>& rows) {
  std::string out = "axis,value,asr,acc,mean_s_perc,attacked,successes\n";
  for (const auto& r : rows)
    out += std::string(axis_name(axis)) + "," + r.value + "," + format_double(r.summary.asr) +
           "," + format_double(r.summary.post_acc) + "," +
           format_double(r.summary.mean_s_perc_success) + "," +
           std::to_string(r.summary.attacked) + "," + std::to_string(r.summary.successes) +
           "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Transfer evaluation

struct TransferReport {
  std::int64_t count = 0;
  std::int64_t clean_correct = 0;
  std::int64_t adv_correct = 0;
  double clean_acc = 0.0;
  double adv_acc = 0.0;
  std::string model_id;
};

inline void to_json(nlohmann::json& j, const TransferReport& t) {
  j = nlohmann::json{{"count", t.count},           {"clean_correct", t.clean_correct},
                     {"adv_correct", t.adv_correct}, {"clean_acc", t.clean_acc},
                     {"adv_acc", t.adv_acc},       {"model_id", t.model_id}};
}

/// Scores a second oracle on the clean images and on the saved perturbed
/// images of a finished run.
inline TransferReport transfer_eval(const fs::path& run_dir, const Oracle& oracle) {
  const nlohmann::json manifest = read_json_file(run_dir / "manifest.json");
  Dataset ds;
  try {
    ds.dir = manifest.at("dataset").at("dir").get<std::string>();
    for (const auto& item : manifest.at("dataset").at("entries"))
      ds.entries.push_back({item.at("filename").get<std::string>(),
                            item.at("label").get<std::size_t>(),
                            item.value("label_name", std::string())});
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed manifest: ") + e.what());
  }
  const std::vector<AttackResult> results = load_results(run_dir);
  std::map<std::string, const AttackResult*> by_file;
  for (const auto& r : results) by_file[r.filename] = &r;

  TransferReport t;
  for (const auto& e : ds.entries) {
    const auto it = by_file.find(e.filename);
    if (it == by_file.end() || it->second->output.empty()) continue;
    Image clean = load_for_oracle(ds, e, oracle);
    Image adv = load_image(run_dir / it->second->output);
    if (auto size = oracle.input_size()) adv = resize_bilinear(adv, size->height, size->width);
    ++t.count;
    if (oracle.predict(clean).argmax() == e.label) ++t.clean_correct;
    if (oracle.predict(adv).argmax() == e.label) ++t.adv_correct;
  }
  if (t.count == 0) throw UsageError("transfer: no saved images to evaluate");
  t.clean_acc = static_cast<double>(t.clean_correct) / static_cast<double>(t.count);
  t.adv_acc = static_cast<double>(t.adv_correct) / static_cast<double>(t.count);
  t.model_id = oracle.model_id();
  return t;
}

}  // namespace wrinkle
