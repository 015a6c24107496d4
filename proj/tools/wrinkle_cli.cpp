// wrinkle: command-line driver for attacks, rendering, sweeps and transfer.
//
// Exit codes: 0 success, 2 usage, 3 I/O, 4 oracle failure, 5 internal error.

#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "wrinkle/wrinkle.hpp"

namespace {

using namespace wrinkle;

enum ExitCode : int { kOk = 0, kUsage = 2, kIo = 3, kOracle = 4, kInternal = 5 };

// Flags that override the config file. Unset flags leave it alone.
struct OverrideFlags {
  std::optional<std::string> config;
  std::optional<std::string> dataset;
  std::optional<std::string> out;
  std::optional<std::string> oracle_kind;
  std::optional<std::string> oracle_generator;
  std::optional<std::uint64_t> oracle_seed;
  std::optional<int> classes;
  std::optional<double> gain;
  std::optional<int> input_height;
  std::optional<int> input_width;
  std::optional<std::string> oracle_weights;
  std::optional<std::string> endpoint;
  std::optional<double> timeout;
  std::optional<int> retries;
  std::optional<std::vector<std::string>> labels;
  std::optional<std::uint64_t> seed;
  std::optional<int> budget;
  std::optional<int> population;
  std::optional<int> elite;
  std::optional<double> mutation_rate;
  std::optional<int> immigrants;
  std::optional<int> stagnation;
  std::optional<int> tournament;
  std::optional<double> alpha1;
  std::optional<double> alpha2;
  std::optional<double> eta;
  std::optional<std::string> components;
  std::optional<std::string> perceptual;
  std::optional<std::string> perceptual_endpoint;
  std::optional<int> workers;
};

void add_oracle_flags(CLI::App* cmd, OverrideFlags& f) {
  cmd->add_option("--oracle", f.oracle_kind, "builtin | remote")
      ->check(CLI::IsMember({"builtin", "remote"}));
  cmd->add_option("--oracle-generator", f.oracle_generator, "builtin weights: toy | quadrant | weights")
      ->check(CLI::IsMember({"toy", "quadrant", "weights"}));
  cmd->add_option("--oracle-seed", f.oracle_seed, "seed of the toy oracle weights");
  cmd->add_option("--classes", f.classes, "class count of the toy oracle");
  cmd->add_option("--gain", f.gain, "logit gain of the quadrant oracle");
  cmd->add_option("--input-height", f.input_height, "builtin oracle input height");
  cmd->add_option("--input-width", f.input_width, "builtin oracle input width");
  cmd->add_option("--oracle-weights", f.oracle_weights, "builtin oracle weight JSON");
  cmd->add_option("--endpoint", f.endpoint, "remote oracle base URL");
  cmd->add_option("--timeout", f.timeout, "remote timeout in seconds");
  cmd->add_option("--retries", f.retries, "remote retry count");
  cmd->add_option("--labels", f.labels, "label prompts sent to the remote oracle")->delimiter(',');
}

void add_attack_flags(CLI::App* cmd, OverrideFlags& f) {
  cmd->add_option("--config", f.config, "JSON config file or run manifest");
  cmd->add_option("--dataset", f.dataset, "dataset directory containing index.csv");
  cmd->add_option("--out", f.out, "output directory");
  add_oracle_flags(cmd, f);
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--budget", f.budget, "oracle queries per image");
  cmd->add_option("--population", f.population, "population size");
  cmd->add_option("--elite", f.elite, "elite size");
  cmd->add_option("--mutation-rate", f.mutation_rate, "per-coordinate mutation probability");
  cmd->add_option("--immigrants", f.immigrants, "random immigrants per generation");
  cmd->add_option("--stagnation", f.stagnation, "generations without improvement before restart");
  cmd->add_option("--tournament", f.tournament, "tournament size");
  cmd->add_option("--alpha1", f.alpha1, "SSIM / learned-distance blend weight");
  cmd->add_option("--alpha2", f.alpha2, "attack / perceptual weight for failed candidates");
  cmd->add_option("--eta", f.eta, "perceptual preference among successful candidates");
  cmd->add_option("--components", f.components, "wrinkle scales: full, L, M, S, L+M, ...");
  cmd->add_option("--perceptual", f.perceptual, "learned perceptual backend: none | external")
      ->check(CLI::IsMember({"none", "external"}));
  cmd->add_option("--perceptual-endpoint", f.perceptual_endpoint, "perceptual backend base URL");
  cmd->add_option("--workers", f.workers, "parallel per-image attacks");
}

template <typename T>
void set_if(T& dst, const std::optional<T>& src) {
  if (src) dst = *src;
}

RunConfig resolve(const OverrideFlags& f) {
  RunConfig c = f.config ? load_run_config(*f.config) : RunConfig{};
  set_if(c.dataset, f.dataset);
  set_if(c.output, f.out);
  set_if(c.oracle.kind, f.oracle_kind);
  set_if(c.oracle.generator, f.oracle_generator);
  set_if(c.oracle.seed, f.oracle_seed);
  set_if(c.oracle.classes, f.classes);
  set_if(c.oracle.gain, f.gain);
  set_if(c.oracle.input_height, f.input_height);
  set_if(c.oracle.input_width, f.input_width);
  if (f.oracle_weights) {
    c.oracle.weights_path = *f.oracle_weights;
    if (!f.oracle_generator) c.oracle.generator = "weights";
  }
  if (f.endpoint) {
    c.oracle.remote.url = *f.endpoint;
    if (!f.oracle_kind) c.oracle.kind = "remote";
  }
  set_if(c.oracle.remote.timeout_s, f.timeout);
  set_if(c.oracle.remote.retries, f.retries);
  set_if(c.oracle.labels, f.labels);
  auto& a = c.attack;
  set_if(a.ga.seed, f.seed);
  set_if(a.ga.budget, f.budget);
  set_if(a.ga.population, f.population);
  set_if(a.ga.elite, f.elite);
  set_if(a.ga.mutation_rate, f.mutation_rate);
  set_if(a.ga.immigrants, f.immigrants);
  set_if(a.ga.stagnation, f.stagnation);
  set_if(a.ga.tournament, f.tournament);
  set_if(a.perceptual.alpha1, f.alpha1);
  set_if(a.fitness.alpha2, f.alpha2);
  set_if(a.fitness.eta, f.eta);
  if (f.components) a.mask = parse_mask(*f.components);
  if (f.perceptual)
    a.perceptual.backend =
        *f.perceptual == "external" ? PerceptualBackend::External : PerceptualBackend::None;
  if (f.perceptual_endpoint) {
    RemoteEndpoint ep = c.perceptual_endpoint.value_or(RemoteEndpoint{});
    ep.url = *f.perceptual_endpoint;
    c.perceptual_endpoint = ep;
  }
  set_if(c.workers, f.workers);
  if (c.workers < 1) throw UsageError("--workers must be >= 1");
  a.validate();
  return c;
}

void print_summary(const Summary& s) {
  std::printf("images          %lld\n", static_cast<long long>(s.total));
  std::printf("clean ACC       %.4f\n", s.clean_acc);
  std::printf("post-attack ACC %.4f\n", s.post_acc);
  std::printf("ASR             %.4f  (%lld / %lld)\n", s.asr,
              static_cast<long long>(s.successes), static_cast<long long>(s.attacked));
  std::printf("mean queries    %.2f\n", s.mean_queries);
  std::printf("mean S_perc     %.4f  (successes)\n", s.mean_s_perc_success);
  if (s.aborted > 0) std::printf("aborted         %lld\n", static_cast<long long>(s.aborted));
  if (s.load_errors > 0)
    std::printf("unscored        %lld\n", static_cast<long long>(s.load_errors));
}

int cmd_attack(const OverrideFlags& f, bool random_baseline) {
  const RunConfig c = resolve(f);
  if (c.dataset.empty()) throw UsageError("missing --dataset");
  const Dataset ds = load_dataset(c.dataset);
  const auto oracle = make_oracle(c.oracle);
  const auto metric = make_perceptual_metric(c);
  RunOptions opt;
  opt.out_dir = c.output;
  opt.workers = c.workers;
  opt.random_baseline = random_baseline;
  opt.config_snapshot = c;
  const RunReport report = attack_dataset(ds, *oracle, c.attack, metric.get(), opt);
  print_summary(report.summary);
  std::printf("results in %s\n", c.output.c_str());
  for (const auto& r : report.results)
    if (r.oracle_failure) {
      std::cerr << "oracle error on " << r.filename << ": " << r.error << "\n";
      return kOracle;
    }
  return kOk;
}

int cmd_sweep(const OverrideFlags& f, const std::string& axis_name,
              const std::vector<std::string>& values) {
  const SweepAxis axis = parse_axis(axis_name);
  const RunConfig c = resolve(f);
  if (c.dataset.empty()) throw UsageError("missing --dataset");
  const Dataset ds = load_dataset(c.dataset);
  const auto oracle = make_oracle(c.oracle);
  const auto metric = make_perceptual_metric(c);
  RunOptions opt;
  opt.out_dir = c.output;
  opt.workers = c.workers;
  opt.config_snapshot = c;
  const auto rows = ablation_sweep(axis, values, c.attack, ds, *oracle, metric.get(), opt);
  const std::string csv = sweep_csv(axis, rows);
  std::filesystem::create_directories(c.output);
  write_file_atomic(std::filesystem::path(c.output) / "sweep.csv", csv);
  std::cout << csv;
  return kOk;
}

int cmd_transfer(const OverrideFlags& f, const std::string& run_dir,
                 const std::optional<std::string>& out) {
  const RunConfig c = resolve(f);
  if (!std::filesystem::is_directory(run_dir))
    throw IoError("run directory not found: " + run_dir);
  const auto oracle = make_oracle(c.oracle);
  const TransferReport t = transfer_eval(run_dir, *oracle);
  const std::filesystem::path path =
      out ? std::filesystem::path(*out) : std::filesystem::path(run_dir) / "transfer.json";
  write_json_file(path, t);
  std::printf("images       %lld\nclean ACC    %.4f\nperturbed ACC %.4f\n",
              static_cast<long long>(t.count), t.clean_acc, t.adv_acc);
  return kOk;
}

Image normalized_gray(const Grid<double>& g) {
  Image out(g.height, g.width, 1);
  if (g.values.empty()) return out;
  const auto [lo, hi] = std::minmax_element(g.values.begin(), g.values.end());
  const double span = *hi - *lo;
  for (std::size_t k = 0; k < g.values.size(); ++k)
    out.data[k] = span > 0 ? (g.values[k] - *lo) / span : 0.0;
  return out;
}

int cmd_render(const std::string& gene_path, const std::string& input,
               const std::string& output, bool dump_field) {
  const nlohmann::json j = read_json_file(gene_path);
  WrinkleGene gene;
  int height = 0, width = 0;
  try {
    if (j.contains("gene")) {  // a per-image attack record
      if (j.at("gene").is_null()) throw UsageError("record carries no gene: " + gene_path);
      gene = j.at("gene").get<WrinkleGene>();
      height = j.value("render_height", 0);
      width = j.value("render_width", 0);
    } else {
      gene = j.get<WrinkleGene>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("malformed gene file " + gene_path + ": " + e.what());
  }
  Image x = load_image(input);
  if (height > 0 && width > 0) x = resize_bilinear(x, height, width);
  require_valid(x, "render");
  const RenderLayers layers = render_layers(x, gene);
  save_image(layers.output, output);
  if (dump_field) {
    const std::filesystem::path out(output);
    const auto stem = (out.parent_path() / out.stem()).string();
    save_image(normalized_gray(layers.field), stem + "_field.png");
    Grid<double> mag(layers.field.height, layers.field.width);
    for (std::size_t k = 0; k < mag.values.size(); ++k)
      mag.values[k] = std::hypot(layers.displacement.du.values[k],
                                 layers.displacement.dv.values[k]);
    save_image(normalized_gray(mag), stem + "_displacement.png");
    Image light(layers.brightness.height, layers.brightness.width, 1);
    for (std::size_t k = 0; k < light.data.size(); ++k)
      light.data[k] = std::clamp(layers.brightness.values[k], 0.0, 1.0);
    save_image(light, stem + "_brightness.png");
  }
  return kOk;
}

int cmd_synth(const std::string& out, int count, std::uint64_t seed, int size, double gain) {
  if (count < 1) throw UsageError("--count must be >= 1");
  const Dataset ds = write_quadrant_dataset(out, count, seed, size);
  const LinearOracle oracle = build_quadrant_oracle(gain, {size, size});
  write_json_file(std::filesystem::path(out) / "oracle.json", oracle.weights_json());
  std::printf("wrote %zu images, index.csv and oracle.json to %s\n", ds.entries.size(),
              out.c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wrinkle: wrinkle-field structural attacks on black-box classifiers"};
  app.require_subcommand(1);

  OverrideFlags attack_flags;
  bool random_baseline = false;
  auto* attack = app.add_subcommand("attack", "attack every image of a dataset");
  add_attack_flags(attack, attack_flags);
  attack->add_flag("--random-baseline", random_baseline,
                   "score one uniform random gene per image instead of searching");

  OverrideFlags sweep_flags;
  std::string axis;
  std::vector<std::string> values;
  auto* sweep = app.add_subcommand("sweep", "ablation sweep over one configuration axis");
  add_attack_flags(sweep, sweep_flags);
  sweep->add_option("--axis", axis, "budget | population | alpha1 | alpha2 | components")
      ->required();
  sweep->add_option("--values", values, "comma-separated axis values")
      ->required()
      ->delimiter(',');

  OverrideFlags transfer_flags;
  std::string run_dir;
  std::optional<std::string> transfer_out;
  auto* transfer = app.add_subcommand("transfer", "score saved perturbed images on another oracle");
  transfer->add_option("--config", transfer_flags.config, "JSON config file");
  add_oracle_flags(transfer, transfer_flags);
  transfer->add_option("--run", run_dir, "directory of a finished attack run")->required();
  transfer->add_option("--out", transfer_out, "report path (default <run>/transfer.json)");

  std::string gene_path, input, output;
  bool dump_field = false;
  auto* render = app.add_subcommand("render", "apply a saved gene to an image");
  render->add_option("--gene", gene_path, "gene JSON or per-image result JSON")->required();
  render->add_option("--input", input, "input image (PNG or PPM)")->required();
  render->add_option("--output", output, "output PNG")->required();
  render->add_flag("--dump-field", dump_field,
                   "also write _field, _displacement and _brightness PNGs");

  std::string synth_out;
  int synth_count = 20;
  std::uint64_t synth_seed = 0;
  int synth_size = 64;
  double synth_gain = 12.0;
  auto* synth = app.add_subcommand("synth", "write a synthetic quadrant dataset and oracle");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--count", synth_count, "number of images");
  synth->add_option("--seed", synth_seed, "scene seed");
  synth->add_option("--size", synth_size, "image edge in pixels");
  synth->add_option("--gain", synth_gain, "quadrant oracle logit gain");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*attack) return cmd_attack(attack_flags, random_baseline);
    if (*sweep) return cmd_sweep(sweep_flags, axis, values);
    if (*transfer) return cmd_transfer(transfer_flags, run_dir, transfer_out);
    if (*render) return cmd_render(gene_path, input, output, dump_field);
    if (*synth) return cmd_synth(synth_out, synth_count, synth_seed, synth_size, synth_gain);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const OracleError& e) {
    std::cerr << "oracle error: " << e.what() << "\n";
    return kOracle;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}
