#include "nexprune.h"

#include <cstring>
#include <exception>
#include <string>

#include <json.hpp>

#include "nexprune/architectures.hpp"
#include "nexprune/analysis.hpp"
#include "nexprune/error.hpp"
#include "nexprune/model_graph.hpp"
#include "nexprune/pruning.hpp"
#include "nexprune/sampling.hpp"
#include "nexprune/scoring.hpp"
#include "nexprune/serialize.hpp"
#include "nexprune/synthetic.hpp"
#include "nexprune/trainer.hpp"

using nlohmann::json;
using namespace nexprune;

struct nx_network {
  NetworkGraph net;
};
struct nx_dataset {
  Dataset data;
};
struct nx_score_map {
  ScoreMap map;
};
struct nx_prune_run {
  PruneResult res;
};

namespace {

thread_local std::string g_last_error;

nx_status status_from(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return NX_ERR_INVALID_ARGUMENT;
    case ErrorCode::ShapeMismatch: return NX_ERR_SHAPE_MISMATCH;
    case ErrorCode::Io: return NX_ERR_IO;
    case ErrorCode::Numeric: return NX_ERR_NUMERIC;
    case ErrorCode::LayerCollapse: return NX_ERR_LAYER_COLLAPSE;
    case ErrorCode::KeyMismatch: return NX_ERR_KEY_MISMATCH;
  }
  return NX_ERR_UNKNOWN;
}

template <typename F>
nx_status guarded(F&& f) {
  try {
    f();
    return NX_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_from(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return NX_ERR_UNKNOWN;
  } catch (...) {
    g_last_error = "unknown failure";
    return NX_ERR_UNKNOWN;
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require_arg(bool cond, const char* what) {
  require(cond, ErrorCode::InvalidArgument, what);
}

json parse_config(const char* config_json) {
  if (config_json == nullptr || config_json[0] == '\0') return json::object();
  json j = json::parse(config_json, nullptr, false);
  require(!j.is_discarded(), ErrorCode::InvalidArgument, "config is not valid JSON");
  require(j.is_object(), ErrorCode::InvalidArgument, "config must be a JSON object");
  return j;
}

SamplingConfig sampling_from_json(const json& j, std::uint64_t fallback_seed) {
  SamplingConfig cfg;
  cfg.seed = fallback_seed;
  if (!j.contains("sampling")) return cfg;
  const json& s = j.at("sampling");
  if (s.contains("strategy"))
    cfg.strategy = sampling_strategy_from_name(s.at("strategy").get<std::string>());
  cfg.num_samples = s.value("num_samples", cfg.num_samples);
  cfg.seed = s.value("seed", cfg.seed);
  cfg.kmeans_max_iters = s.value("kmeans_max_iters", cfg.kmeans_max_iters);
  cfg.noise_lo = s.value("noise_lo", cfg.noise_lo);
  cfg.noise_hi = s.value("noise_hi", cfg.noise_hi);
  return cfg;
}

struct ScoreSpec {
  Criterion criterion = Criterion::Nexp;
  NexpConfig nexp;
  SamplingConfig sampling;
  float alpha = 0.5f;
  std::uint64_t seed = 0;
};

ScoreSpec score_spec_from_json(const json& j) {
  ScoreSpec spec;
  spec.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("criterion"))
    spec.criterion = criterion_from_name(j.at("criterion").get<std::string>());
  if (j.contains("aggregation"))
    spec.nexp.aggregation =
        aggregation_from_name(j.at("aggregation").get<std::string>());
  spec.nexp.pre_binarize_scale = j.value("pre_binarize_scale", 1.0f);
  spec.alpha = j.value("alpha", 0.5f);
  spec.sampling = sampling_from_json(j, spec.seed);
  return spec;
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig cfg;
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.lr = j.value("lr", cfg.lr);
  cfg.decay_factor = j.value("decay_factor", cfg.decay_factor);
  if (j.contains("decay_epochs"))
    cfg.decay_epochs = j.at("decay_epochs").get<std::vector<int>>();
  cfg.seed = j.value("seed", cfg.seed);
  return cfg;
}

const Dataset& dataset_or_empty(const nx_dataset* data, Criterion criterion) {
  static const Dataset empty{};
  const bool needs_data =
      criterion == Criterion::Nexp || criterion == Criterion::Hybrid;
  if (data == nullptr) {
    require(!needs_data, ErrorCode::InvalidArgument,
            "this criterion requires a dataset");
    return empty;
  }
  return data->data;
}

}  // namespace

extern "C" {

const char* nx_status_name(nx_status status) {
  switch (status) {
    case NX_OK: return "ok";
    case NX_ERR_INVALID_ARGUMENT: return "invalid-argument";
    case NX_ERR_SHAPE_MISMATCH: return "shape-mismatch";
    case NX_ERR_IO: return "io";
    case NX_ERR_NUMERIC: return "numeric";
    case NX_ERR_LAYER_COLLAPSE: return "layer-collapse";
    case NX_ERR_KEY_MISMATCH: return "key-mismatch";
    case NX_ERR_UNKNOWN: return "unknown";
  }
  return "unknown";
}

const char* nx_last_error(void) { return g_last_error.c_str(); }

void nx_string_free(char* s) { delete[] s; }

const char* nx_version(void) { return "0.1.0"; }

nx_status nx_network_build(const char* preset, int num_classes, uint64_t seed,
                           nx_network** out) {
  return guarded([&] {
    require_arg(preset != nullptr && out != nullptr, "preset and out are required");
    *out = new nx_network{build_preset(preset, num_classes, seed)};
  });
}

nx_status nx_network_from_json(const char* arch_json, uint64_t seed,
                               nx_network** out) {
  return guarded([&] {
    require_arg(arch_json != nullptr && out != nullptr,
                "arch_json and out are required");
    *out = new nx_network{network_from_json(arch_json, seed)};
  });
}

nx_status nx_network_to_json(const nx_network* net, char** out_json) {
  return guarded([&] {
    require_arg(net != nullptr && out_json != nullptr, "net and out are required");
    *out_json = dup_string(network_to_json(net->net));
  });
}

nx_status nx_network_load(const char* checkpoint_dir, nx_network** out) {
  return guarded([&] {
    require_arg(checkpoint_dir != nullptr && out != nullptr,
                "checkpoint_dir and out are required");
    *out = new nx_network{load_network(checkpoint_dir)};
  });
}

nx_status nx_network_save(const nx_network* net, const char* checkpoint_dir) {
  return guarded([&] {
    require_arg(net != nullptr && checkpoint_dir != nullptr,
                "net and checkpoint_dir are required");
    save_network(net->net, checkpoint_dir);
  });
}

nx_status nx_network_clone(const nx_network* net, nx_network** out) {
  return guarded([&] {
    require_arg(net != nullptr && out != nullptr, "net and out are required");
    *out = new nx_network{net->net};
  });
}

void nx_network_free(nx_network* net) { delete net; }

nx_status nx_network_cost(const nx_network* net, int64_t* flops, int64_t* params,
                          int64_t* buffers) {
  return guarded([&] {
    require_arg(net != nullptr, "net is required");
    const CostReport rep = cost_report(net->net);
    if (flops) *flops = rep.total_flops;
    if (params) *params = rep.total_params;
    if (buffers) *buffers = rep.total_buffers;
  });
}

nx_status nx_network_cost_json(const nx_network* net, char** out_json) {
  return guarded([&] {
    require_arg(net != nullptr && out_json != nullptr, "net and out are required");
    const CostReport rep = cost_report(net->net);
    json j;
    j["layers"] = json::array();
    for (const LayerCost& c : rep.layers)
      j["layers"].push_back({{"name", c.name},
                             {"kind", c.kind},
                             {"flops", c.flops},
                             {"params", c.params},
                             {"buffers", c.buffers}});
    j["total_flops"] = rep.total_flops;
    j["total_params"] = rep.total_params;
    j["total_buffers"] = rep.total_buffers;
    *out_json = dup_string(j.dump(2));
  });
}

nx_status nx_dataset_synthesize(const char* config_json, nx_dataset** out) {
  return guarded([&] {
    require_arg(out != nullptr, "out is required");
    const json j = parse_config(config_json);
    SyntheticConfig cfg;
    cfg.num_samples = j.value("num_samples", cfg.num_samples);
    cfg.num_classes = j.value("num_classes", cfg.num_classes);
    cfg.channels = j.value("channels", cfg.channels);
    cfg.height = j.value("height", cfg.height);
    cfg.width = j.value("width", cfg.width);
    cfg.jitter = j.value("jitter", cfg.jitter);
    cfg.blob_sigma = j.value("blob_sigma", cfg.blob_sigma);
    cfg.noise_sigma = j.value("noise_sigma", cfg.noise_sigma);
    cfg.seed = j.value("seed", cfg.seed);
    *out = new nx_dataset{make_synthetic_dataset(cfg)};
  });
}

nx_status nx_dataset_load(const char* dir, nx_dataset** out) {
  return guarded([&] {
    require_arg(dir != nullptr && out != nullptr, "dir and out are required");
    *out = new nx_dataset{load_dataset(dir)};
  });
}

nx_status nx_dataset_save(const nx_dataset* data, const char* dir) {
  return guarded([&] {
    require_arg(data != nullptr && dir != nullptr, "data and dir are required");
    save_dataset(data->data, dir);
  });
}

nx_status nx_dataset_split(const nx_dataset* data, float train_fraction,
                           uint64_t seed, nx_dataset** out_train,
                           nx_dataset** out_test) {
  return guarded([&] {
    require_arg(data != nullptr && out_train != nullptr && out_test != nullptr,
                "data and outputs are required");
    auto [train_set, test_set] = stratified_split(data->data, train_fraction, seed);
    *out_train = new nx_dataset{std::move(train_set)};
    *out_test = new nx_dataset{std::move(test_set)};
  });
}

nx_status nx_dataset_info(const nx_dataset* data, int* num_samples,
                          int* num_classes, int* channels, int* height,
                          int* width) {
  return guarded([&] {
    require_arg(data != nullptr, "data is required");
    if (num_samples) *num_samples = data->data.size();
    if (num_classes) *num_classes = data->data.num_classes;
    if (channels) *channels = data->data.images.dim(1);
    if (height) *height = data->data.images.dim(2);
    if (width) *width = data->data.images.dim(3);
  });
}

void nx_dataset_free(nx_dataset* data) { delete data; }

nx_status nx_train(nx_network* net, const nx_dataset* data,
                   const char* config_json, char** out_log_json) {
  return guarded([&] {
    require_arg(net != nullptr && data != nullptr, "net and data are required");
    const TrainConfig cfg = train_config_from_json(parse_config(config_json));
    const std::vector<EpochStats> stats = train(net->net, data->data, cfg);
    if (out_log_json) {
      json j = json::array();
      for (const EpochStats& s : stats)
        j.push_back({{"epoch", s.epoch},
                     {"loss", s.loss},
                     {"train_accuracy", s.train_accuracy},
                     {"lr", s.lr}});
      *out_log_json = dup_string(j.dump());
    }
  });
}

nx_status nx_evaluate(nx_network* net, const nx_dataset* data,
                      double* out_accuracy, double* out_loss) {
  return guarded([&] {
    require_arg(net != nullptr && data != nullptr, "net and data are required");
    if (out_accuracy) *out_accuracy = evaluate_accuracy(net->net, data->data);
    if (out_loss) *out_loss = evaluate_loss(net->net, data->data);
  });
}

nx_status nx_score(nx_network* net, const nx_dataset* data,
                   const char* config_json, nx_score_map** out) {
  return guarded([&] {
    require_arg(net != nullptr && out != nullptr, "net and out are required");
    const ScoreSpec spec = score_spec_from_json(parse_config(config_json));
    const Dataset& ds = dataset_or_empty(data, spec.criterion);
    const Scorer scorer = make_scorer(spec.criterion, ds, spec.sampling, spec.nexp,
                                      spec.alpha, spec.seed);
    *out = new nx_score_map{scorer(net->net)};
  });
}

nx_status nx_score_map_save_json(const nx_score_map* map, const nx_network* net,
                                 const char* path) {
  return guarded([&] {
    require_arg(map != nullptr && net != nullptr && path != nullptr,
                "map, net and path are required");
    save_score_map_json(map->map, net->net, path);
  });
}

nx_status nx_score_map_save_csv(const nx_score_map* map, const nx_network* net,
                                const char* path) {
  return guarded([&] {
    require_arg(map != nullptr && net != nullptr && path != nullptr,
                "map, net and path are required");
    save_score_map_csv(map->map, net->net, path);
  });
}

nx_status nx_score_map_load_json(const char* path, const nx_network* net,
                                 nx_score_map** out) {
  return guarded([&] {
    require_arg(path != nullptr && net != nullptr && out != nullptr,
                "path, net and out are required");
    *out = new nx_score_map{load_score_map_json(path, net->net)};
  });
}

nx_status nx_score_map_num_layers(const nx_score_map* map, int* out_layers) {
  return guarded([&] {
    require_arg(map != nullptr && out_layers != nullptr,
                "map and out are required");
    *out_layers = static_cast<int>(map->map.scores.size());
  });
}

nx_status nx_score_map_layer(const nx_score_map* map, int index,
                             int* out_layer_id, int* out_num_filters) {
  return guarded([&] {
    require_arg(map != nullptr, "map is required");
    require_arg(index >= 0 && index < static_cast<int>(map->map.scores.size()),
                "layer index out of range");
    auto it = map->map.scores.begin();
    std::advance(it, index);
    if (out_layer_id) *out_layer_id = it->first;
    if (out_num_filters) *out_num_filters = static_cast<int>(it->second.size());
  });
}

nx_status nx_score_map_values(const nx_score_map* map, int layer_id, float* buf,
                              int buf_len) {
  return guarded([&] {
    require_arg(map != nullptr && buf != nullptr, "map and buf are required");
    auto it = map->map.scores.find(layer_id);
    require(it != map->map.scores.end(), ErrorCode::KeyMismatch,
            "no scores for layer " + std::to_string(layer_id));
    require_arg(buf_len >= static_cast<int>(it->second.size()),
                "buffer too small");
    std::memcpy(buf, it->second.data(), it->second.size() * sizeof(float));
  });
}

nx_status nx_score_map_compare(const nx_score_map* a, const nx_score_map* b,
                               const char* scope, int first_n, char** out_json) {
  return guarded([&] {
    require_arg(a != nullptr && b != nullptr && out_json != nullptr,
                "maps and out are required");
    CompareScope sc = CompareScope::All;
    if (scope != nullptr && std::string(scope) == "first-n")
      sc = CompareScope::FirstN;
    else
      require_arg(scope == nullptr || std::string(scope) == "all",
                  "scope must be \"all\" or \"first-n\"");
    const MapComparison cmp = compare_score_maps(a->map, b->map, sc, first_n);
    json j;
    j["euclidean"] = cmp.euclidean;
    j["cosine"] = cmp.cosine;
    j["pearson"] = cmp.pearson.has_value() ? json(*cmp.pearson) : json(nullptr);
    j["ssim"] = cmp.ssim_value;
    *out_json = dup_string(j.dump());
  });
}

nx_status nx_score_map_cosine(const nx_score_map* a, const nx_score_map* b,
                              double* out_cosine) {
  return guarded([&] {
    require_arg(a != nullptr && b != nullptr && out_cosine != nullptr,
                "maps and out are required");
    *out_cosine = map_cosine(a->map, b->map);
  });
}

void nx_score_map_free(nx_score_map* map) { delete map; }

nx_status nx_prune(nx_network* net, const nx_dataset* data,
                   const char* config_json, nx_prune_run** out) {
  return guarded([&] {
    require_arg(net != nullptr && out != nullptr, "net and out are required");
    const json j = parse_config(config_json);
    const ScoreSpec spec = score_spec_from_json(j);

    PruneConfig cfg;
    cfg.target_ratio = j.value("target_ratio", cfg.target_ratio);
    if (j.contains("ratio_kind")) {
      const std::string rk = j.at("ratio_kind").get<std::string>();
      require(rk == "flops" || rk == "params", ErrorCode::InvalidArgument,
              "ratio_kind must be \"flops\" or \"params\"");
      cfg.ratio_kind = rk == "flops" ? RatioKind::Flops : RatioKind::Params;
    }
    cfg.kappa = j.value("kappa", cfg.kappa);
    cfg.steps_max = j.value("steps_max", cfg.steps_max);
    if (j.contains("scope"))
      cfg.scope = prune_scope_from_name(j.at("scope").get<std::string>());
    if (j.contains("schedule"))
      cfg.schedule = prune_schedule_from_name(j.at("schedule").get<std::string>());
    cfg.score_update_every = j.value("score_update_every", cfg.score_update_every);

    const Dataset& ds = dataset_or_empty(data, spec.criterion);
    const Scorer scorer = make_scorer(spec.criterion, ds, spec.sampling, spec.nexp,
                                      spec.alpha, spec.seed);

    FineTuner fine_tune = nullptr;
    if (j.contains("fine_tune")) {
      require(data != nullptr, ErrorCode::InvalidArgument,
              "fine-tuning requires a dataset");
      const TrainConfig tc = train_config_from_json(j.at("fine_tune"));
      const Dataset& train_data = data->data;
      fine_tune = [tc, &train_data](NetworkGraph& n, int step) {
        TrainConfig per_step = tc;
        per_step.seed = tc.seed + static_cast<std::uint64_t>(step);
        train(n, train_data, per_step);
      };
    }

    *out = new nx_prune_run{run_pruning(net->net, cfg, scorer, fine_tune)};
  });
}

nx_status nx_prune_run_summary_json(const nx_prune_run* run, char** out_json) {
  return guarded([&] {
    require_arg(run != nullptr && out_json != nullptr, "run and out are required");
    const PruneResult& r = run->res;
    json j;
    j["steps"] = r.steps;
    j["shortfall"] = r.shortfall;
    j["guard_skips"] = r.guard_skips;
    j["trajectory"] = json::array();
    for (const PruneStepRecord& s : r.trajectory)
      j["trajectory"].push_back({{"step", s.step},
                                 {"groups_removed", s.groups_removed},
                                 {"flops_ratio", s.flops_ratio},
                                 {"params_ratio", s.params_ratio},
                                 {"msp", s.msp},
                                 {"psp", s.psp}});
    j["removals"] = json::array();
    for (const RemovalRecord& rec : r.removals) {
      json anchors = json::array();
      for (const auto& [layer, ch] : rec.anchors)
        anchors.push_back({layer, ch});
      j["removals"].push_back(
          {{"step", rec.step}, {"score", rec.score}, {"anchors", anchors}});
    }
    j["report"] = {{"base_flops", r.final_report.base_flops},
                   {"pruned_flops", r.final_report.pruned_flops},
                   {"base_params", r.final_report.base_params},
                   {"pruned_params", r.final_report.pruned_params},
                   {"flops_ratio", r.final_report.flops_ratio},
                   {"params_ratio", r.final_report.params_ratio},
                   {"msp", r.final_report.msp},
                   {"psp", r.final_report.psp}};
    *out_json = dup_string(j.dump(2));
  });
}

void nx_prune_run_free(nx_prune_run* run) { delete run; }

}  // extern "C"
