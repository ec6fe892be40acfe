// SPDX-License-Identifier: Apache-2.0
#include <bit>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "cldistill/model.h"

namespace cldistill {
namespace {

using ordered_json = nlohmann::ordered_json;

void append_f64_le(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double read_f64_le(const char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i)
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void save_checkpoint(const ToyVQLAModel& model, const std::filesystem::path& path) {
  ordered_json manifest;
  manifest["format"] = "cldistill-checkpoint";
  manifest["version"] = 1;
  manifest["dtype"] = "f64";
  ordered_json meta;
  meta["period"] = model.period;
  meta["seed"] = model.seed();
  meta["scenario_hash"] = model.scenario_hash;
  meta["class_ids"] = model.class_ids();
  ordered_json cfg;
  cfg["d_img"] = model.config().d_img;
  cfg["d_h"] = model.config().d_h;
  cfg["vocab"] = model.config().vocab;
  cfg["l_q"] = model.config().l_q;
  meta["config"] = cfg;
  manifest["meta"] = meta;

  std::string blob;
  ordered_json params = ordered_json::array();
  std::size_t offset = 0;
  for (const auto& [name, tensor] : model.parameters()) {
    ordered_json p;
    p["name"] = name;
    p["shape"] = tensor.shape();
    p["offset"] = offset;
    p["count"] = tensor.size();
    params.push_back(p);
    for (double v : tensor.data()) append_f64_le(blob, v);
    offset += tensor.size() * 8;
  }
  manifest["params"] = params;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path.string());
  out << manifest.dump() << '\n' << blob;
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

ToyVQLAModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("checkpoint: missing manifest line");
  ordered_json manifest;
  try {
    manifest = ordered_json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("checkpoint: corrupt manifest: ") + e.what());
  }
  if (manifest.value("format", "") != "cldistill-checkpoint" ||
      manifest.value("dtype", "") != "f64")
    throw std::runtime_error("checkpoint: unrecognized format");

  std::string blob((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());

  const auto& meta = manifest.at("meta");
  ModelConfig cfg;
  cfg.d_img = meta.at("config").at("d_img").get<std::size_t>();
  cfg.d_h = meta.at("config").at("d_h").get<std::size_t>();
  cfg.vocab = meta.at("config").at("vocab").get<std::size_t>();
  cfg.l_q = meta.at("config").at("l_q").get<std::size_t>();

  ToyVQLAModel model(cfg, meta.at("class_ids").get<std::vector<int>>(),
                     meta.at("seed").get<std::uint64_t>());
  model.period = meta.at("period").get<int>();
  model.scenario_hash = meta.value("scenario_hash", "");

  auto params = model.parameters();
  const auto& entries = manifest.at("params");
  if (entries.size() != params.size())
    throw std::runtime_error("checkpoint: parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& entry = entries[i];
    auto& [name, tensor] = params[i];
    if (entry.at("name").get<std::string>() != name)
      throw std::runtime_error("checkpoint: unexpected parameter " +
                               entry.at("name").get<std::string>());
    if (entry.at("shape").get<Shape>() != tensor.shape())
      throw std::runtime_error("checkpoint: shape mismatch for " + name);
    const auto offset = entry.at("offset").get<std::size_t>();
    const auto count = entry.at("count").get<std::size_t>();
    if (count != tensor.size())
      throw std::runtime_error("checkpoint: element count mismatch for " + name);
    if (offset + count * 8 > blob.size())
      throw std::runtime_error("checkpoint: blob truncated (need " +
                               std::to_string(offset + count * 8) + " bytes, have " +
                               std::to_string(blob.size()) + ")");
    auto values = tensor.data();
    for (std::size_t k = 0; k < count; ++k)
      values[k] = read_f64_le(blob.data() + offset + k * 8);
  }
  return model;
}

}  // namespace cldistill
