#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nexprune/dataset.hpp"
#include "nexprune/network.hpp"
#include "nexprune/scoring.hpp"

namespace nexprune {

// Checkpoint directory layout: manifest.json describing the graph plus one
// raw little-endian float32 blob per parameter tensor. Round trips are
// bit exact.
void save_network(const NetworkGraph& net, const std::string& dir);
NetworkGraph load_network(const std::string& dir);

// Structure-only JSON (no weights). Loading initializes fresh parameters
// from the seed.
std::string network_to_json(const NetworkGraph& net);
NetworkGraph network_from_json(const std::string& json_text, std::uint64_t seed);

// Dataset directory: manifest.json + images.bin (float32 LE) +
// labels.bin (int32 LE).
void save_dataset(const Dataset& data, const std::string& dir);
Dataset load_dataset(const std::string& dir);

// Identifies the conv structure a score map belongs to: layer names and
// filter counts. Loading a map against a different structure fails.
std::string architecture_fingerprint(const NetworkGraph& net);

void save_score_map_json(const ScoreMap& map, const NetworkGraph& net,
                         const std::string& path);
ScoreMap load_score_map_json(const std::string& path, const NetworkGraph& net);

// CSV with a two-line comment preamble: schema tag and the JSON config
// that produced the file. Scores print with %.9g so float32 round-trips.
void save_score_map_csv(const ScoreMap& map, const NetworkGraph& net,
                        const std::string& path);

struct CsvTable {
  std::string schema;       // e.g. "score-map v1"
  std::string config_json;  // provenance, written as a comment
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

void write_csv(const CsvTable& table, const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace nexprune
