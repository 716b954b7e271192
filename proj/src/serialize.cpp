#include "nexprune/serialize.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "nexprune/architectures.hpp"
#include "nexprune/error.hpp"

namespace nexprune {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Raw little-endian float32 blobs. The toolchain targets little-endian
// hosts only; manifests record the encoding for forward compatibility.
void write_blob(const fs::path& path, const float* data, std::int64_t count) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::Io, "cannot open for write: " + path.string());
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(count * sizeof(float)));
  require(out.good(), ErrorCode::Io, "write failed: " + path.string());
}

void read_blob(const fs::path& path, float* data, std::int64_t count) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  require(in.good(), ErrorCode::Io, "cannot open: " + path.string());
  const auto size = in.tellg();
  require(size == static_cast<std::streamoff>(count * sizeof(float)), ErrorCode::Io,
          "blob size mismatch: " + path.string());
  in.seekg(0);
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(float)));
  require(in.good(), ErrorCode::Io, "read failed: " + path.string());
}

json layer_structure(const LayerSpec& l) {
  json j;
  j["kind"] = layer_kind_name(l.kind);
  j["name"] = l.name;
  j["inputs"] = l.inputs;
  switch (l.kind) {
    case LayerKind::Conv2d:
      j["in_channels"] = l.in_channels;
      j["out_channels"] = l.out_channels;
      j["kernel_h"] = l.kernel_h;
      j["kernel_w"] = l.kernel_w;
      j["stride"] = l.stride;
      j["padding"] = l.padding;
      break;
    case LayerKind::BatchNorm2d:
      j["channels"] = static_cast<int>(l.gamma.numel());
      break;
    case LayerKind::MaxPool2d:
    case LayerKind::AvgPool2d:
      j["pool_h"] = l.pool_h;
      j["pool_w"] = l.pool_w;
      j["pool_stride"] = l.pool_stride;
      break;
    case LayerKind::Linear:
      j["in_features"] = l.in_features;
      j["out_features"] = l.out_features;
      break;
    default:
      break;
  }
  return j;
}

LayerSpec layer_from_structure(const json& j) {
  LayerSpec l;
  l.kind = layer_kind_from_name(j.at("kind").get<std::string>());
  l.name = j.at("name").get<std::string>();
  l.inputs = j.at("inputs").get<std::vector<int>>();
  switch (l.kind) {
    case LayerKind::Conv2d:
      l.in_channels = j.at("in_channels").get<int>();
      l.out_channels = j.at("out_channels").get<int>();
      l.kernel_h = j.at("kernel_h").get<int>();
      l.kernel_w = j.at("kernel_w").get<int>();
      l.stride = j.at("stride").get<int>();
      l.padding = j.at("padding").get<int>();
      l.weight = Tensor({l.out_channels, l.in_channels, l.kernel_h, l.kernel_w});
      l.bias = Tensor({l.out_channels});
      break;
    case LayerKind::BatchNorm2d: {
      const int c = j.at("channels").get<int>();
      l.gamma = Tensor({c});
      l.beta = Tensor({c});
      l.running_mean = Tensor({c});
      l.running_var = Tensor({c});
      break;
    }
    case LayerKind::MaxPool2d:
    case LayerKind::AvgPool2d:
      l.pool_h = j.at("pool_h").get<int>();
      l.pool_w = j.at("pool_w").get<int>();
      l.pool_stride = j.at("pool_stride").get<int>();
      break;
    case LayerKind::Linear:
      l.in_features = j.at("in_features").get<int>();
      l.out_features = j.at("out_features").get<int>();
      l.weight = Tensor({l.out_features, l.in_features});
      l.bias = Tensor({l.out_features});
      break;
    default:
      break;
  }
  return l;
}

// Every parameter or buffer tensor of a layer, with a stable tag.
std::vector<std::pair<std::string, Tensor*>> layer_tensors(LayerSpec& l) {
  std::vector<std::pair<std::string, Tensor*>> out;
  if (l.kind == LayerKind::Conv2d || l.kind == LayerKind::Linear) {
    out.emplace_back("weight", &l.weight);
    out.emplace_back("bias", &l.bias);
  } else if (l.kind == LayerKind::BatchNorm2d) {
    out.emplace_back("gamma", &l.gamma);
    out.emplace_back("beta", &l.beta);
    out.emplace_back("running_mean", &l.running_mean);
    out.emplace_back("running_var", &l.running_var);
  }
  return out;
}

json parse_json(const std::string& text, const std::string& what) {
  json j = json::parse(text, nullptr, false);
  require(!j.is_discarded(), ErrorCode::Io, "invalid JSON in " + what);
  return j;
}

}  // namespace

std::string network_to_json(const NetworkGraph& net) {
  json j;
  j["format"] = "nexprune-arch";
  j["version"] = 1;
  j["input_shape"] = net.input_shape;
  j["layers"] = json::array();
  for (const LayerSpec& l : net.layers) j["layers"].push_back(layer_structure(l));
  return j.dump(2);
}

NetworkGraph network_from_json(const std::string& json_text, std::uint64_t seed) {
  json j = parse_json(json_text, "architecture description");
  require(j.value("format", "") == "nexprune-arch", ErrorCode::Io,
          "not an architecture description");
  NetworkGraph net;
  net.input_shape = j.at("input_shape").get<std::vector<int>>();
  for (const json& lj : j.at("layers")) net.layers.push_back(layer_from_structure(lj));
  init_parameters(net, seed);
  net.validate();
  return net;
}

void save_network(const NetworkGraph& net, const std::string& dir) {
  net.validate();
  fs::create_directories(dir);
  json manifest;
  manifest["format"] = "nexprune-checkpoint";
  manifest["version"] = 1;
  manifest["encoding"] = "float32-le";
  manifest["input_shape"] = net.input_shape;
  manifest["layers"] = json::array();
  NetworkGraph& mut = const_cast<NetworkGraph&>(net);
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    json lj = layer_structure(net.layers[li]);
    if (net.layers[li].kind == LayerKind::BatchNorm2d)
      lj["running_count"] = net.layers[li].running_count;
    json blobs = json::array();
    for (auto& [tag, tensor] : layer_tensors(mut.layers[li])) {
      const std::string file = std::to_string(li) + "." + tag + ".bin";
      write_blob(fs::path(dir) / file, tensor->data(), tensor->numel());
      blobs.push_back({{"tag", tag}, {"file", file}, {"shape", tensor->shape()}});
    }
    lj["blobs"] = std::move(blobs);
    manifest["layers"].push_back(std::move(lj));
  }
  write_text_file((fs::path(dir) / "manifest.json").string(), manifest.dump(2));
}

NetworkGraph load_network(const std::string& dir) {
  const json manifest =
      parse_json(read_text_file((fs::path(dir) / "manifest.json").string()),
                 "checkpoint manifest");
  require(manifest.value("format", "") == "nexprune-checkpoint", ErrorCode::Io,
          "not a checkpoint directory: " + dir);
  NetworkGraph net;
  net.input_shape = manifest.at("input_shape").get<std::vector<int>>();
  for (const json& lj : manifest.at("layers")) {
    LayerSpec l = layer_from_structure(lj);
    if (l.kind == LayerKind::BatchNorm2d)
      l.running_count = lj.value("running_count", std::int64_t{0});
    net.layers.push_back(std::move(l));
  }
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    const json& lj = manifest.at("layers").at(li);
    for (auto& [tag, tensor] : layer_tensors(net.layers[li])) {
      bool found = false;
      for (const json& bj : lj.at("blobs")) {
        if (bj.at("tag").get<std::string>() != tag) continue;
        const auto shape = bj.at("shape").get<std::vector<int>>();
        require(shape == tensor->shape(), ErrorCode::ShapeMismatch,
                "blob shape mismatch for " + net.layers[li].name + "." + tag);
        read_blob(fs::path(dir) / bj.at("file").get<std::string>(), tensor->data(),
                  tensor->numel());
        found = true;
        break;
      }
      require(found, ErrorCode::Io,
              "missing blob for " + net.layers[li].name + "." + tag);
    }
  }
  net.validate();
  return net;
}

void save_dataset(const Dataset& data, const std::string& dir) {
  data.validate();
  fs::create_directories(dir);
  json manifest;
  manifest["format"] = "nexprune-dataset";
  manifest["version"] = 1;
  manifest["encoding"] = "float32-le/int32-le";
  manifest["shape"] = data.images.shape();
  manifest["num_classes"] = data.num_classes;
  write_blob(fs::path(dir) / "images.bin", data.images.data(), data.images.numel());
  std::ofstream lab(fs::path(dir) / "labels.bin", std::ios::binary);
  require(lab.good(), ErrorCode::Io, "cannot write labels");
  static_assert(sizeof(int) == 4);
  lab.write(reinterpret_cast<const char*>(data.labels.data()),
            static_cast<std::streamsize>(data.labels.size() * sizeof(int)));
  require(lab.good(), ErrorCode::Io, "label write failed");
  write_text_file((fs::path(dir) / "manifest.json").string(), manifest.dump(2));
}

Dataset load_dataset(const std::string& dir) {
  const json manifest =
      parse_json(read_text_file((fs::path(dir) / "manifest.json").string()),
                 "dataset manifest");
  require(manifest.value("format", "") == "nexprune-dataset", ErrorCode::Io,
          "not a dataset directory: " + dir);
  Dataset data;
  const auto shape = manifest.at("shape").get<std::vector<int>>();
  data.images = Tensor(shape);
  data.num_classes = manifest.at("num_classes").get<int>();
  read_blob(fs::path(dir) / "images.bin", data.images.data(), data.images.numel());
  data.labels.resize(static_cast<std::size_t>(shape.at(0)));
  std::ifstream lab(fs::path(dir) / "labels.bin", std::ios::binary);
  require(lab.good(), ErrorCode::Io, "cannot read labels");
  lab.read(reinterpret_cast<char*>(data.labels.data()),
           static_cast<std::streamsize>(data.labels.size() * sizeof(int)));
  require(lab.good(), ErrorCode::Io, "label read failed");
  data.validate();
  return data;
}

std::string architecture_fingerprint(const NetworkGraph& net) {
  std::string fp;
  for (int conv : net.conv_layers()) {
    const LayerSpec& l = net.layers[static_cast<std::size_t>(conv)];
    fp += l.name + ":" + std::to_string(l.out_channels) + ";";
  }
  return fp;
}

namespace {

// %.9g reproduces any float32 exactly on read-back.
std::string format_score(float v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
  return buf;
}

}  // namespace

void save_score_map_json(const ScoreMap& map, const NetworkGraph& net,
                         const std::string& path) {
  json j;
  j["format"] = "nexprune-score-map";
  j["version"] = 1;
  j["fingerprint"] = architecture_fingerprint(net);
  j["provenance"] = map.provenance;
  j["layers"] = json::array();
  for (const auto& [layer, vals] : map.scores) {
    json lj;
    lj["layer"] = layer;
    lj["name"] = net.layers[static_cast<std::size_t>(layer)].name;
    lj["scores"] = vals;
    j["layers"].push_back(std::move(lj));
  }
  write_text_file(path, j.dump(2));
}

ScoreMap load_score_map_json(const std::string& path, const NetworkGraph& net) {
  const json j = parse_json(read_text_file(path), "score map");
  require(j.value("format", "") == "nexprune-score-map", ErrorCode::Io,
          "not a score map file: " + path);
  require(j.at("fingerprint").get<std::string>() == architecture_fingerprint(net),
          ErrorCode::KeyMismatch,
          "score map belongs to a different architecture");
  ScoreMap map;
  map.provenance = j.value("provenance", "");
  for (const json& lj : j.at("layers"))
    map.scores[lj.at("layer").get<int>()] = lj.at("scores").get<std::vector<float>>();
  return map;
}

void save_score_map_csv(const ScoreMap& map, const NetworkGraph& net,
                        const std::string& path) {
  CsvTable t;
  t.schema = "score-map v1";
  json cfg;
  cfg["fingerprint"] = architecture_fingerprint(net);
  cfg["provenance"] = map.provenance;
  t.config_json = cfg.dump();
  t.columns = {"layer", "name", "filter", "score"};
  for (const auto& [layer, vals] : map.scores)
    for (std::size_t f = 0; f < vals.size(); ++f)
      t.rows.push_back({std::to_string(layer),
                        net.layers[static_cast<std::size_t>(layer)].name,
                        std::to_string(f), format_score(vals[f])});
  write_csv(t, path);
}

void write_csv(const CsvTable& table, const std::string& path) {
  std::string out = "# nexprune-csv " + table.schema + "\n";
  if (!table.config_json.empty()) out += "# config: " + table.config_json + "\n";
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i) out += ",";
    out += table.columns[i];
  }
  out += "\n";
  for (const auto& row : table.rows) {
    require(row.size() == table.columns.size(), ErrorCode::InvalidArgument,
            "csv row width mismatch");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ",";
      out += row[i];
    }
    out += "\n";
  }
  write_text_file(path, out);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::Io, "cannot open: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  require(!in.bad(), ErrorCode::Io, "read failed: " + path);
  return text;
}

void write_text_file(const std::string& path, const std::string& content) {
  if (fs::path(path).has_parent_path())
    fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::Io, "cannot open for write: " + path);
  out << content;
  require(out.good(), ErrorCode::Io, "write failed: " + path);
}

}  // namespace nexprune
