#include "lace/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "lace/errors.hpp"

namespace lace {

using nlohmann::json;
using nlohmann::ordered_json;

static_assert(std::endian::native == std::endian::little, "checkpoint payload assumes little-endian");

namespace {

constexpr const char* kMagic = "LACE-CHECKPOINT 1";

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

}  // namespace

std::string checkpoint_bytes(const LaceModel& model, const TrainConfig& config) {
  ordered_json manifest;
  TrainConfig stored = config;
  stored.model = model.config();
  manifest["config"] = to_json(stored);
  manifest["graph_hash"] = hex(model.graph().hash());
  manifest["relations"] = model.graph().relations;
  manifest["words"] = model.vocab().words.tokens();
  manifest["types"] = model.vocab().types.tokens();
  manifest["lowercase"] = model.vocab().lowercase;
  ordered_json params = ordered_json::array();
  std::size_t offset = 0;
  for (const auto& p : model.params().items()) {
    params.push_back({{"name", p.name}, {"shape", p.value.shape()}, {"offset", offset}});
    offset += p.value.size();
  }
  manifest["params"] = std::move(params);
  manifest["count"] = offset;

  std::string out = std::string(kMagic) + "\n" + manifest.dump() + "\n";
  const std::size_t header = out.size();
  out.resize(header + offset * sizeof(double));
  char* dst = out.data() + header;
  for (const auto& p : model.params().items()) {
    std::memcpy(dst, p.value.data().data(), p.value.size() * sizeof(double));
    dst += p.value.size() * sizeof(double);
  }
  return out;
}

void save_checkpoint(const LaceModel& model, const TrainConfig& config,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  const std::string bytes = checkpoint_bytes(model, config);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

LoadedCheckpoint checkpoint_from_bytes(const std::string& bytes, const CorrelationGraph& graph) {
  const std::size_t first = bytes.find('\n');
  if (first == std::string::npos || bytes.compare(0, first, kMagic) != 0) {
    throw ParseError("not a checkpoint (missing '" + std::string(kMagic) + "' header)");
  }
  const std::size_t second = bytes.find('\n', first + 1);
  if (second == std::string::npos) throw ParseError("checkpoint manifest is truncated");
  json manifest;
  try {
    manifest = json::parse(bytes.substr(first + 1, second - first - 1));
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("checkpoint manifest: ") + e.what());
  }

  try {
    const std::string expected = manifest.at("graph_hash").get<std::string>();
    if (expected != hex(graph.hash())) {
      throw ConfigError("checkpoint was trained on graph " + expected + " but graph " +
                        hex(graph.hash()) + " was supplied");
    }
    const TrainConfig config = config_from_json(manifest.at("config"));
    EncoderVocab vocab;
    // Stored order is row order, so everything goes in as reserved entries.
    vocab.words = Vocabulary(manifest.at("words").get<std::vector<std::string>>(), {}, 0);
    vocab.types = Vocabulary(manifest.at("types").get<std::vector<std::string>>(), {}, 1);
    vocab.lowercase = manifest.at("lowercase").get<bool>();

    const std::size_t count = manifest.at("count").get<std::size_t>();
    const std::size_t payload = bytes.size() - second - 1;
    if (payload != count * sizeof(double)) {
      throw ParseError("checkpoint payload has " + std::to_string(payload) + " bytes, expected " +
                       std::to_string(count * sizeof(double)));
    }
    const char* src = bytes.data() + second + 1;
    ParamStore store;
    for (const json& p : manifest.at("params")) {
      Tensor t(p.at("shape").get<Shape>());
      const std::size_t offset = p.at("offset").get<std::size_t>();
      if (offset + t.size() > count) throw ParseError("checkpoint parameter overruns payload");
      std::memcpy(t.data().data(), src + offset * sizeof(double), t.size() * sizeof(double));
      store.add(p.at("name").get<std::string>(), std::move(t));
    }
    return {config, LaceModel(config.model, std::move(vocab), graph, std::move(store))};
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint manifest: ") + e.what());
  }
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, const CorrelationGraph& graph) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_bytes(ss.str(), graph);
}

}  // namespace lace
