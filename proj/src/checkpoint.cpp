#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "slrtm/errors.hpp"
#include "slrtm/model.hpp"

namespace slrtm {

namespace {

constexpr int kFormatVersion = 1;

std::string hash_hex(std::uint64_t h) {
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

struct BlockShape {
  std::string name;
  std::size_t rows;
  std::size_t cols;
};

std::vector<BlockShape> block_shapes(const ModelParams& p) {
  const auto& d = p.dims;
  return {
      {"word_in_emb", d.vocab, d.d_w},  {"word_out_emb", d.vocab, d.d_s},
      {"topic_emb", d.topics, d.d_k},   {"lstm_wx", 4 * d.d_h, d.d_x()},
      {"lstm_wh", 4 * d.d_h, d.d_h},    {"lstm_b", 4 * d.d_h, 1},
      {"proj_h", d.d_s, d.d_h},         {"proj_y", d.d_s, d.d_w},
      {"proj_k", d.d_s, d.d_k},         {"out_bias", d.d_s, 1},
  };
}

}  // namespace

void save_checkpoint(const std::string& dir, const ModelParams& params,
                     const Vocabulary& vocab, OutputMode mode) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create checkpoint directory: " + dir);
  if (vocab.size() != params.dims.vocab)
    throw CheckpointError("vocabulary size does not match model");

  nlohmann::json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["topics"] = params.dims.topics;
  manifest["d_w"] = params.dims.d_w;
  manifest["d_k"] = params.dims.d_k;
  manifest["d_h"] = params.dims.d_h;
  manifest["d_s"] = params.dims.d_s;
  manifest["mode"] = output_mode_name(mode);
  manifest["vocab_size"] = vocab.size();
  manifest["vocab_hash"] = hash_hex(vocab.content_hash());
  auto blocks = nlohmann::json::array();
  for (const auto& b : block_shapes(params))
    blocks.push_back({{"name", b.name}, {"rows", b.rows}, {"cols", b.cols}});
  manifest["blocks"] = blocks;

  {
    std::ofstream out(fs::path(dir) / "manifest.json");
    if (!out) throw IoError("cannot write manifest.json in " + dir);
    out << manifest.dump(2) << '\n';
  }
  {
    std::ofstream out(fs::path(dir) / "params.bin", std::ios::binary);
    if (!out) throw IoError("cannot write params.bin in " + dir);
    std::vector<float> buf;
    for (const auto& block : params.blocks()) {
      buf.resize(block.size());
      for (std::size_t i = 0; i < block.size(); ++i)
        buf[i] = static_cast<float>(block[i]);
      out.write(reinterpret_cast<const char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
  }
  write_vocabulary(vocab, (fs::path(dir) / "vocab.tsv").string());
}

LoadedModel load_checkpoint(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path base(dir);
  if (!fs::is_directory(base))
    throw IoError("checkpoint directory not found: " + dir);

  nlohmann::json manifest;
  {
    std::ifstream in(base / "manifest.json");
    if (!in) throw IoError("cannot open manifest.json in " + dir);
    try {
      in >> manifest;
    } catch (const nlohmann::json::exception& e) {
      throw CheckpointError(std::string("bad manifest.json: ") + e.what());
    }
  }
  if (manifest.value("format_version", -1) != kFormatVersion)
    throw CheckpointError("unsupported checkpoint format version");

  LoadedModel m;
  m.vocab = read_vocabulary((base / "vocab.tsv").string());
  const std::string want_hash = manifest.at("vocab_hash").get<std::string>();
  if (hash_hex(m.vocab.content_hash()) != want_hash)
    throw CheckpointError("vocabulary hash mismatch in " + dir);
  if (m.vocab.size() != manifest.at("vocab_size").get<std::size_t>())
    throw CheckpointError("vocabulary size mismatch in " + dir);

  ModelDims dims;
  dims.vocab = m.vocab.size();
  dims.topics = manifest.at("topics").get<std::size_t>();
  dims.d_w = manifest.at("d_w").get<std::size_t>();
  dims.d_k = manifest.at("d_k").get<std::size_t>();
  dims.d_h = manifest.at("d_h").get<std::size_t>();
  dims.d_s = manifest.at("d_s").get<std::size_t>();
  m.mode = output_mode_from_name(manifest.at("mode").get<std::string>());
  m.params = ModelParams::zeros(dims);

  const auto expect = block_shapes(m.params);
  const auto& got = manifest.at("blocks");
  if (got.size() != expect.size())
    throw CheckpointError("unexpected parameter block count");
  for (std::size_t i = 0; i < expect.size(); ++i) {
    if (got[i].at("name").get<std::string>() != expect[i].name ||
        got[i].at("rows").get<std::size_t>() != expect[i].rows ||
        got[i].at("cols").get<std::size_t>() != expect[i].cols)
      throw CheckpointError("parameter block mismatch: " + expect[i].name);
  }

  std::ifstream in(base / "params.bin", std::ios::binary);
  if (!in) throw IoError("cannot open params.bin in " + dir);
  in.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  if (bytes != m.params.total_size() * sizeof(float))
    throw CheckpointError("params.bin size does not match manifest shapes");
  std::vector<float> buf;
  for (auto block : m.params.blocks()) {
    buf.resize(block.size());
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!in) throw CheckpointError("params.bin truncated");
    for (std::size_t i = 0; i < block.size(); ++i)
      block[i] = static_cast<double>(buf[i]);
  }
  return m;
}

}  // namespace slrtm
