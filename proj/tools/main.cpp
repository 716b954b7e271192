// Command line front end. Talks to the toolkit exclusively through the C
// API in nexprune.h; everything here is argument plumbing and file output.
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nexprune.h"

using nlohmann::json;

namespace {

// Exit codes: 0 success, 2 validation/config error, 3 pruning target
// shortfall, 4 numeric failure.
constexpr int kExitValidation = 2;
constexpr int kExitShortfall = 3;
constexpr int kExitNumeric = 4;

[[noreturn]] void die(nx_status status, const std::string& context) {
  std::cerr << "error (" << nx_status_name(status) << ") in " << context << ": "
            << nx_last_error() << "\n";
  std::exit(status == NX_ERR_NUMERIC ? kExitNumeric : kExitValidation);
}

void check(nx_status status, const std::string& context) {
  if (status != NX_OK) die(status, context);
}

std::string take_string(char* s) {
  std::string out = s ? s : "";
  nx_string_free(s);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) {
    std::cerr << "error: cannot open " << path << "\n";
    std::exit(kExitValidation);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out.good()) {
    std::cerr << "error: cannot write " << path << "\n";
    std::exit(kExitValidation);
  }
  out << content;
}

// Shared flags for loading or constructing a network.
struct NetSource {
  std::string checkpoint;
  std::string preset;
  std::string arch_json_path;
  int classes = 10;
  std::uint64_t seed = 0;

  void add_flags(CLI::App* cmd, bool checkpoint_only = false) {
    if (!checkpoint_only) {
      cmd->add_option("--arch", preset,
                      "Built-in preset: cnn-small, vgg-small, resnet-small");
      cmd->add_option("--arch-json", arch_json_path,
                      "Architecture description file (structure only)");
      cmd->add_option("--classes", classes, "Class count for fresh networks");
    }
    cmd->add_option("--checkpoint", checkpoint, "Checkpoint directory to load");
  }

  nx_network* open(std::uint64_t init_seed) const {
    nx_network* net = nullptr;
    if (!checkpoint.empty()) {
      check(nx_network_load(checkpoint.c_str(), &net), "loading checkpoint");
    } else if (!preset.empty()) {
      check(nx_network_build(preset.c_str(), classes, init_seed, &net),
            "building preset");
    } else if (!arch_json_path.empty()) {
      const std::string text = read_file(arch_json_path);
      check(nx_network_from_json(text.c_str(), init_seed, &net),
            "building from architecture file");
    } else {
      std::cerr << "error: no network source; pass --checkpoint, --arch or "
                   "--arch-json\n";
      std::exit(kExitValidation);
    }
    return net;
  }
};

json sampling_json(const std::string& strategy, int samples, std::uint64_t seed) {
  return json{{"strategy", strategy}, {"num_samples", samples}, {"seed", seed}};
}

std::string csv_escape(const json& v) {
  if (v.is_null()) return "-";
  if (v.is_string()) return v.get<std::string>();
  std::ostringstream ss;
  ss.precision(10);
  if (v.is_number_float())
    ss << v.get<double>();
  else
    ss << v;
  return ss.str();
}

// Config files are JSON objects with one section per subcommand, keyed by
// long option name: {"prune": {"tau": 2.0, "criterion": "nexp"}}. Explicit
// command-line flags win over file values; sections for subcommands other
// than the invoked one are allowed so one file can drive a pipeline.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool,
                        std::string) const override {
    json out = json::object();
    for (const CLI::App* sub : app->get_subcommands([](const CLI::App*) { return true; })) {
      json section = json::object();
      for (const CLI::Option* opt : sub->get_options({})) {
        if (!opt->get_configurable() || opt->get_lnames().empty()) continue;
        const std::string& name = opt->get_lnames()[0];
        if (opt->count() == 1)
          section[name] = opt->results().at(0);
        else if (opt->count() > 1)
          section[name] = opt->results();
        else if (default_also && !opt->get_default_str().empty())
          section[name] = opt->get_default_str();
      }
      if (!section.empty()) out[sub->get_name()] = std::move(section);
    }
    return out.dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json root;
    try {
      input >> root;
    } catch (const json::exception& e) {
      throw CLI::FileError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object())
      throw CLI::FileError("config root must be a JSON object");
    auto scalar = [](const json& v) {
      return v.is_string() ? v.get<std::string>() : v.dump();
    };
    std::vector<CLI::ConfigItem> items;
    for (const auto& [section, body] : root.items()) {
      if (!body.is_object())
        throw CLI::FileError("config section '" + section +
                             "' must be an object of option values");
      for (const auto& [key, value] : body.items()) {
        CLI::ConfigItem item;
        item.parents = {section};
        item.name = key;
        if (value.is_array())
          for (const json& e : value) item.inputs.push_back(scalar(e));
        else
          item.inputs.push_back(scalar(value));
        items.push_back(std::move(item));
      }
    }
    return items;
  }
};

void write_csv_file(const std::string& path, const std::string& schema,
                    const json& config, const std::vector<std::string>& columns,
                    const std::vector<std::vector<json>>& rows) {
  std::ostringstream out;
  out << "# nexprune-csv " << schema << "\n";
  out << "# config: " << config.dump() << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i)
    out << (i ? "," : "") << columns[i];
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << csv_escape(row[i]);
    out << "\n";
  }
  write_file(path, out.str());
}

nx_dataset* open_dataset(const std::string& dir, const std::string& context) {
  nx_dataset* data = nullptr;
  check(nx_dataset_load(dir.c_str(), &data), context);
  return data;
}

double eval_accuracy(nx_network* net, nx_dataset* data) {
  double acc = 0.0;
  check(nx_evaluate(net, data, &acc, nullptr), "evaluating");
  return acc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structural pruning toolkit: expressiveness scoring, coupled "
               "channel removal, and analysis for small conv networks"};
  app.require_subcommand(1);

  // make-dataset ----------------------------------------------------------
  auto* mk = app.add_subcommand("make-dataset", "Generate a synthetic dataset");
  struct {
    std::string out, test_out;
    int samples = 2000, classes = 10, channels = 3, height = 16, width = 16;
    float jitter = 1.5f, blob_sigma = 2.5f, noise_sigma = 0.15f;
    float split = 0.0f;
    std::uint64_t seed = 0;
  } mkopt;
  mk->add_option("--out", mkopt.out, "Output dataset directory")->required();
  mk->add_option("--samples", mkopt.samples);
  mk->add_option("--classes", mkopt.classes);
  mk->add_option("--channels", mkopt.channels);
  mk->add_option("--height", mkopt.height);
  mk->add_option("--width", mkopt.width);
  mk->add_option("--jitter", mkopt.jitter);
  mk->add_option("--blob-sigma", mkopt.blob_sigma);
  mk->add_option("--noise-sigma", mkopt.noise_sigma);
  mk->add_option("--seed", mkopt.seed);
  mk->add_option("--split", mkopt.split,
                 "Train fraction; writes the remainder to --test-out");
  mk->add_option("--test-out", mkopt.test_out, "Test split directory");

  // train ------------------------------------------------------------------
  auto* tr = app.add_subcommand("train", "Train a network");
  NetSource tr_src;
  tr_src.add_flags(tr);
  struct {
    std::string data, out, log_csv;
    int epochs = 60, batch_size = 128;
    float lr = 0.1f, decay_factor = 10.0f;
    std::vector<int> decay_epochs;
    std::uint64_t seed = 0;
    std::string eval_data;
  } tropt;
  tr->add_option("--data", tropt.data, "Training dataset directory")->required();
  tr->add_option("--out", tropt.out, "Checkpoint output directory")->required();
  tr->add_option("--epochs", tropt.epochs);
  tr->add_option("--batch-size", tropt.batch_size);
  tr->add_option("--lr", tropt.lr);
  tr->add_option("--decay-factor", tropt.decay_factor);
  tr->add_option("--decay-epoch", tropt.decay_epochs,
                 "Epoch at which lr drops (repeatable)");
  tr->add_option("--seed", tropt.seed);
  tr->add_option("--log", tropt.log_csv, "Per-epoch training log CSV");
  tr->add_option("--eval-data", tropt.eval_data, "Report accuracy on this set");

  // score ------------------------------------------------------------------
  auto* sc = app.add_subcommand("score", "Compute a per-filter score map");
  NetSource sc_src;
  sc_src.add_flags(sc);
  struct {
    std::string data, criterion = "nexp", aggregation = "mean";
    std::string sampling = "random";
    int samples = 60;
    float alpha = 0.5f, scale = 1.0f;
    std::uint64_t seed = 0;
    std::string out_json, out_csv;
  } scopt;
  sc->add_option("--data", scopt.data, "Dataset directory (expressiveness input)");
  sc->add_option("--criterion", scopt.criterion, "nexp | l1 | hybrid | random");
  sc->add_option("--aggregation", scopt.aggregation, "mean | min | max | median");
  sc->add_option("--sampling", scopt.sampling, "random | kmeans | noise | full");
  sc->add_option("--samples", scopt.samples, "Scoring batch size");
  sc->add_option("--alpha", scopt.alpha, "Hybrid blend weight");
  sc->add_option("--scale", scopt.scale, "Positive factor applied before binarization");
  sc->add_option("--seed", scopt.seed);
  sc->add_option("--out-json", scopt.out_json, "Score map JSON output");
  sc->add_option("--out-csv", scopt.out_csv, "Score map CSV output");

  // prune ------------------------------------------------------------------
  auto* pr = app.add_subcommand("prune", "Prune a network to a target ratio");
  NetSource pr_src;
  pr_src.add_flags(pr);
  struct {
    std::string data, out, summary, trajectory, eval_data;
    std::string criterion = "nexp", aggregation = "mean", sampling = "random";
    std::string ratio_kind = "flops", scope = "global", schedule = "iterative";
    double tau = 2.0, kappa = 0.05;
    int steps_max = 100, update_every = 1, samples = 64;
    float alpha = 0.5f;
    std::uint64_t seed = 0;
    int ft_epochs = 0, ft_batch = 128;
    float ft_lr = 0.01f;
  } propt;
  pr->add_option("--data", propt.data, "Dataset for scoring and fine-tuning");
  pr->add_option("--out", propt.out, "Pruned checkpoint directory");
  pr->add_option("--summary", propt.summary, "Run summary JSON path");
  pr->add_option("--trajectory", propt.trajectory, "Per-step trajectory CSV");
  pr->add_option("--eval-data", propt.eval_data, "Report accuracy on this set");
  pr->add_option("--criterion", propt.criterion, "nexp | l1 | hybrid | random");
  pr->add_option("--aggregation", propt.aggregation);
  pr->add_option("--sampling", propt.sampling);
  pr->add_option("--tau", propt.tau, "Target compression ratio (base/pruned)");
  pr->add_option("--ratio-kind", propt.ratio_kind, "flops | params");
  pr->add_option("--kappa", propt.kappa, "Fraction of groups removed per step");
  pr->add_option("--steps-max", propt.steps_max);
  pr->add_option("--scope", propt.scope, "global | local");
  pr->add_option("--schedule", propt.schedule, "iterative | one-shot");
  pr->add_option("--update-every", propt.update_every,
                 "Steps between score refreshes");
  pr->add_option("--samples", propt.samples, "Scoring batch size");
  pr->add_option("--alpha", propt.alpha, "Hybrid blend weight");
  pr->add_option("--seed", propt.seed);
  pr->add_option("--ft-epochs", propt.ft_epochs, "Fine-tune epochs per step");
  pr->add_option("--ft-lr", propt.ft_lr);
  pr->add_option("--ft-batch-size", propt.ft_batch);

  // report -----------------------------------------------------------------
  auto* rp = app.add_subcommand("report", "Print cost breakdown of a network");
  NetSource rp_src;
  rp_src.add_flags(rp);
  std::string rp_out;
  rp->add_option("--out", rp_out, "Write JSON here instead of stdout");

  // compare-maps -----------------------------------------------------------
  auto* cm = app.add_subcommand("compare-maps", "Compare two score maps");
  NetSource cm_src;
  cm_src.add_flags(cm);
  struct {
    std::string a, b, scope = "all", out;
    int first_n = 0;
  } cmopt;
  cm->add_option("--a", cmopt.a, "First score map JSON")->required();
  cm->add_option("--b", cmopt.b, "Second score map JSON")->required();
  cm->add_option("--scope", cmopt.scope, "all | first-n");
  cm->add_option("--first-n", cmopt.first_n, "Layer count for first-n scope");
  cm->add_option("--out", cmopt.out, "Write comparison JSON here");

  // hybrid-sweep -----------------------------------------------------------
  auto* hs = app.add_subcommand(
      "hybrid-sweep", "Prune over a (tau, alpha) grid and report accuracy");
  NetSource hs_src;
  hs_src.add_flags(hs, /*checkpoint_only=*/true);
  struct {
    std::string data, eval_data, out;
    std::vector<double> taus = {1.5, 2.0, 3.0};
    std::vector<double> alphas = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
    int samples = 64, ft_epochs = 0, ft_batch = 128;
    float ft_lr = 0.01f;
    std::uint64_t seed = 0;
  } hsopt;
  hs->add_option("--data", hsopt.data, "Scoring and fine-tune dataset")->required();
  hs->add_option("--eval-data", hsopt.eval_data, "Accuracy dataset")->required();
  hs->add_option("--out", hsopt.out, "Sweep CSV")->required();
  hs->add_option("--tau", hsopt.taus, "Target ratios (repeatable)");
  hs->add_option("--alpha", hsopt.alphas, "Blend weights (repeatable)");
  hs->add_option("--samples", hsopt.samples);
  hs->add_option("--ft-epochs", hsopt.ft_epochs);
  hs->add_option("--ft-lr", hsopt.ft_lr);
  hs->add_option("--ft-batch-size", hsopt.ft_batch);
  hs->add_option("--seed", hsopt.seed);

  // pai-sweep --------------------------------------------------------------
  auto* ps = app.add_subcommand(
      "pai-sweep", "Prune at initialization over a parameter-ratio grid, then train");
  NetSource ps_src;
  ps_src.add_flags(ps);
  struct {
    std::string data, eval_data, out, criterion = "nexp";
    std::vector<double> exponents = {0.0, 0.25, 0.5, 0.75, 1.0};
    int samples = 64, epochs = 40, batch_size = 128;
    float lr = 0.1f;
    std::vector<int> decay_epochs;
    std::uint64_t seed = 0;
  } psopt;
  ps->add_option("--data", psopt.data, "Training dataset")->required();
  ps->add_option("--eval-data", psopt.eval_data, "Accuracy dataset")->required();
  ps->add_option("--out", psopt.out, "Sweep CSV")->required();
  ps->add_option("--criterion", psopt.criterion, "nexp | l1 | random");
  ps->add_option("--exponent", psopt.exponents,
                 "log10 of the target parameter ratio (repeatable)");
  ps->add_option("--samples", psopt.samples);
  ps->add_option("--epochs", psopt.epochs);
  ps->add_option("--batch-size", psopt.batch_size);
  ps->add_option("--lr", psopt.lr);
  ps->add_option("--decay-epoch", psopt.decay_epochs);
  ps->add_option("--seed", psopt.seed);

  // The config option lives on the root app (config files are only applied
  // there) and must precede the subcommand name.
  app.set_config("--config", "",
                 "JSON config file, one section per subcommand; explicit "
                 "flags win (write before the subcommand)");
  app.config_formatter(std::make_shared<JsonConfig>());

  CLI11_PARSE(app, argc, argv);

  // ------------------------------------------------------------------ run
  if (mk->parsed()) {
    json cfg{{"num_samples", mkopt.samples}, {"num_classes", mkopt.classes},
             {"channels", mkopt.channels},   {"height", mkopt.height},
             {"width", mkopt.width},         {"jitter", mkopt.jitter},
             {"blob_sigma", mkopt.blob_sigma}, {"noise_sigma", mkopt.noise_sigma},
             {"seed", mkopt.seed}};
    nx_dataset* data = nullptr;
    check(nx_dataset_synthesize(cfg.dump().c_str(), &data), "synthesizing dataset");
    if (mkopt.split > 0.0f) {
      if (mkopt.test_out.empty()) {
        std::cerr << "error: --split needs --test-out\n";
        return kExitValidation;
      }
      nx_dataset* train_set = nullptr;
      nx_dataset* test_set = nullptr;
      check(nx_dataset_split(data, mkopt.split, mkopt.seed, &train_set, &test_set),
            "splitting dataset");
      check(nx_dataset_save(train_set, mkopt.out.c_str()), "saving train split");
      check(nx_dataset_save(test_set, mkopt.test_out.c_str()), "saving test split");
      int n_train = 0, n_test = 0;
      nx_dataset_info(train_set, &n_train, nullptr, nullptr, nullptr, nullptr);
      nx_dataset_info(test_set, &n_test, nullptr, nullptr, nullptr, nullptr);
      std::cout << "wrote " << n_train << " train / " << n_test << " test samples\n";
      nx_dataset_free(train_set);
      nx_dataset_free(test_set);
    } else {
      check(nx_dataset_save(data, mkopt.out.c_str()), "saving dataset");
      std::cout << "wrote " << mkopt.samples << " samples to " << mkopt.out << "\n";
    }
    nx_dataset_free(data);
    return 0;
  }

  if (tr->parsed()) {
    nx_network* net = tr_src.open(tropt.seed);
    nx_dataset* data = open_dataset(tropt.data, "loading training data");
    json cfg{{"epochs", tropt.epochs},     {"batch_size", tropt.batch_size},
             {"lr", tropt.lr},             {"decay_factor", tropt.decay_factor},
             {"decay_epochs", tropt.decay_epochs}, {"seed", tropt.seed}};
    char* log_json = nullptr;
    check(nx_train(net, data, cfg.dump().c_str(), &log_json), "training");
    const json log = json::parse(take_string(log_json));
    if (!tropt.log_csv.empty()) {
      std::vector<std::vector<json>> rows;
      for (const json& e : log)
        rows.push_back({e["epoch"], e["loss"], e["train_accuracy"], e["lr"]});
      write_csv_file(tropt.log_csv, "train-log v1", cfg,
                     {"epoch", "loss", "train_accuracy", "lr"}, rows);
    }
    check(nx_network_save(net, tropt.out.c_str()), "saving checkpoint");
    if (!log.empty()) {
      const json& last = log.back();
      std::cout << "final epoch " << last["epoch"] << ": loss " << last["loss"]
                << ", train accuracy " << last["train_accuracy"] << "\n";
    }
    if (!tropt.eval_data.empty()) {
      nx_dataset* eval_set = open_dataset(tropt.eval_data, "loading eval data");
      std::cout << "eval accuracy: " << eval_accuracy(net, eval_set) << "\n";
      nx_dataset_free(eval_set);
    }
    nx_dataset_free(data);
    nx_network_free(net);
    return 0;
  }

  if (sc->parsed()) {
    nx_network* net = sc_src.open(scopt.seed);
    nx_dataset* data = nullptr;
    if (!scopt.data.empty()) data = open_dataset(scopt.data, "loading dataset");
    json cfg{{"criterion", scopt.criterion},
             {"aggregation", scopt.aggregation},
             {"alpha", scopt.alpha},
             {"pre_binarize_scale", scopt.scale},
             {"seed", scopt.seed},
             {"sampling", sampling_json(scopt.sampling, scopt.samples, scopt.seed)}};
    nx_score_map* map = nullptr;
    check(nx_score(net, data, cfg.dump().c_str(), &map), "scoring");
    if (!scopt.out_json.empty())
      check(nx_score_map_save_json(map, net, scopt.out_json.c_str()),
            "writing score map JSON");
    if (!scopt.out_csv.empty())
      check(nx_score_map_save_csv(map, net, scopt.out_csv.c_str()),
            "writing score map CSV");
    int layers = 0;
    nx_score_map_num_layers(map, &layers);
    std::cout << "scored " << layers << " conv layers ("
              << scopt.criterion << ")\n";
    nx_score_map_free(map);
    if (data) nx_dataset_free(data);
    nx_network_free(net);
    return 0;
  }

  if (pr->parsed()) {
    nx_network* net = pr_src.open(propt.seed);
    nx_dataset* data = nullptr;
    if (!propt.data.empty()) data = open_dataset(propt.data, "loading dataset");
    json cfg{{"criterion", propt.criterion},
             {"aggregation", propt.aggregation},
             {"alpha", propt.alpha},
             {"seed", propt.seed},
             {"target_ratio", propt.tau},
             {"ratio_kind", propt.ratio_kind},
             {"kappa", propt.kappa},
             {"steps_max", propt.steps_max},
             {"scope", propt.scope},
             {"schedule", propt.schedule},
             {"score_update_every", propt.update_every},
             {"sampling", sampling_json(propt.sampling, propt.samples, propt.seed)}};
    if (propt.ft_epochs > 0)
      cfg["fine_tune"] = json{{"epochs", propt.ft_epochs},
                              {"batch_size", propt.ft_batch},
                              {"lr", propt.ft_lr},
                              {"seed", propt.seed}};
    nx_prune_run* run = nullptr;
    check(nx_prune(net, data, cfg.dump().c_str(), &run), "pruning");
    char* summary_c = nullptr;
    check(nx_prune_run_summary_json(run, &summary_c), "summarizing run");
    const json summary = json::parse(take_string(summary_c));
    if (!propt.summary.empty()) write_file(propt.summary, summary.dump(2));
    if (!propt.trajectory.empty()) {
      std::vector<std::vector<json>> rows;
      for (const json& s : summary["trajectory"])
        rows.push_back({s["step"], s["groups_removed"], s["flops_ratio"],
                        s["params_ratio"], s["msp"], s["psp"]});
      write_csv_file(propt.trajectory, "prune-trajectory v1", cfg,
                     {"step", "groups_removed", "flops_ratio", "params_ratio",
                      "msp", "psp"},
                     rows);
    }
    if (!propt.out.empty())
      check(nx_network_save(net, propt.out.c_str()), "saving pruned checkpoint");
    const json& rep = summary["report"];
    std::cout << "steps " << summary["steps"] << ", flops ratio "
              << rep["flops_ratio"] << ", params ratio " << rep["params_ratio"]
              << ", msp " << rep["msp"] << "%, psp " << rep["psp"] << "%\n";
    if (!propt.eval_data.empty()) {
      nx_dataset* eval_set = open_dataset(propt.eval_data, "loading eval data");
      std::cout << "eval accuracy: " << eval_accuracy(net, eval_set) << "\n";
      nx_dataset_free(eval_set);
    }
    const bool shortfall = summary["shortfall"].get<bool>();
    if (run) nx_prune_run_free(run);
    if (data) nx_dataset_free(data);
    nx_network_free(net);
    if (shortfall) {
      std::cerr << "warning: target ratio not reached\n";
      return kExitShortfall;
    }
    return 0;
  }

  if (rp->parsed()) {
    nx_network* net = rp_src.open(0);
    char* cost_json = nullptr;
    check(nx_network_cost_json(net, &cost_json), "computing costs");
    const std::string text = take_string(cost_json);
    if (rp_out.empty())
      std::cout << text << "\n";
    else
      write_file(rp_out, text);
    nx_network_free(net);
    return 0;
  }

  if (cm->parsed()) {
    nx_network* net = cm_src.open(0);
    nx_score_map* a = nullptr;
    nx_score_map* b = nullptr;
    check(nx_score_map_load_json(cmopt.a.c_str(), net, &a), "loading map A");
    check(nx_score_map_load_json(cmopt.b.c_str(), net, &b), "loading map B");
    char* cmp_json = nullptr;
    check(nx_score_map_compare(a, b, cmopt.scope.c_str(), cmopt.first_n, &cmp_json),
          "comparing maps");
    const std::string text = take_string(cmp_json);
    if (cmopt.out.empty())
      std::cout << text << "\n";
    else
      write_file(cmopt.out, text);
    nx_score_map_free(a);
    nx_score_map_free(b);
    nx_network_free(net);
    return 0;
  }

  if (hs->parsed()) {
    nx_network* base = hs_src.open(hsopt.seed);
    nx_dataset* data = open_dataset(hsopt.data, "loading dataset");
    nx_dataset* eval_set = open_dataset(hsopt.eval_data, "loading eval data");
    const double base_acc = eval_accuracy(base, eval_set);

    std::vector<std::vector<json>> rows;
    for (double tau : hsopt.taus) {
      for (double alpha : hsopt.alphas) {
        nx_network* net = nullptr;
        check(nx_network_clone(base, &net), "cloning network");
        json cfg{{"criterion", "hybrid"},
                 {"alpha", alpha},
                 {"seed", hsopt.seed},
                 {"target_ratio", tau},
                 {"sampling", sampling_json("random", hsopt.samples, hsopt.seed)}};
        if (hsopt.ft_epochs > 0)
          cfg["fine_tune"] = json{{"epochs", hsopt.ft_epochs},
                                  {"batch_size", hsopt.ft_batch},
                                  {"lr", hsopt.ft_lr},
                                  {"seed", hsopt.seed}};
        nx_prune_run* run = nullptr;
        check(nx_prune(net, data, cfg.dump().c_str(), &run), "pruning");
        char* summary_c = nullptr;
        check(nx_prune_run_summary_json(run, &summary_c), "summarizing run");
        const json summary = json::parse(take_string(summary_c));
        const double acc = eval_accuracy(net, eval_set);
        rows.push_back({tau, alpha, summary["report"]["flops_ratio"],
                        summary["report"]["params_ratio"], acc, acc - base_acc});
        std::cout << "tau " << tau << " alpha " << alpha << ": accuracy " << acc
                  << " (delta " << acc - base_acc << ")\n";
        nx_prune_run_free(run);
        nx_network_free(net);
      }
    }
    json cfg{{"seed", hsopt.seed},
             {"samples", hsopt.samples},
             {"ft_epochs", hsopt.ft_epochs},
             {"base_accuracy", base_acc}};
    write_csv_file(hsopt.out, "hybrid-sweep v1", cfg,
                   {"tau", "alpha", "flops_ratio", "params_ratio", "accuracy",
                    "delta_accuracy"},
                   rows);
    nx_dataset_free(eval_set);
    nx_dataset_free(data);
    nx_network_free(base);
    return 0;
  }

  if (ps->parsed()) {
    nx_dataset* data = open_dataset(psopt.data, "loading dataset");
    nx_dataset* eval_set = open_dataset(psopt.eval_data, "loading eval data");
    std::vector<std::vector<json>> rows;
    for (double r : psopt.exponents) {
      const double target = std::pow(10.0, r);
      nx_network* net = ps_src.open(psopt.seed);
      json summary;
      if (target > 1.0) {
        json cfg{{"criterion", psopt.criterion},
                 {"seed", psopt.seed},
                 {"target_ratio", target},
                 {"ratio_kind", "params"},
                 {"schedule", "one-shot"},
                 {"sampling", sampling_json("random", psopt.samples, psopt.seed)}};
        nx_prune_run* run = nullptr;
        check(nx_prune(net, data, cfg.dump().c_str(), &run), "pruning");
        char* summary_c = nullptr;
        check(nx_prune_run_summary_json(run, &summary_c), "summarizing run");
        summary = json::parse(take_string(summary_c));
        nx_prune_run_free(run);
      }
      json tc{{"epochs", psopt.epochs},
              {"batch_size", psopt.batch_size},
              {"lr", psopt.lr},
              {"decay_epochs", psopt.decay_epochs},
              {"seed", psopt.seed}};
      check(nx_train(net, data, tc.dump().c_str(), nullptr), "training");
      const double acc = eval_accuracy(net, eval_set);
      const double achieved =
          summary.is_null() ? 1.0
                            : summary["report"]["params_ratio"].get<double>();
      rows.push_back({r, target, achieved, acc});
      std::cout << "r " << r << " target " << target << "x achieved " << achieved
                << "x: accuracy " << acc << "\n";
      nx_network_free(net);
    }
    json cfg{{"criterion", psopt.criterion},
             {"seed", psopt.seed},
             {"epochs", psopt.epochs}};
    write_csv_file(psopt.out, "pai-sweep v1", cfg,
                   {"exponent", "target_params_ratio", "achieved_params_ratio",
                    "accuracy"},
                   rows);
    nx_dataset_free(eval_set);
    nx_dataset_free(data);
    return 0;
  }

  return 0;
}
