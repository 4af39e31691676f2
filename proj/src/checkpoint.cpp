#include "flp/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace flp {

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::vector<std::pair<std::string, const void*>> block_names(const Policy& p) {
  std::vector<std::pair<std::string, const void*>> out;
  out.emplace_back("input", &p.input);
  for (std::size_t l = 0; l < p.layers.size(); ++l) out.emplace_back("layer" + std::to_string(l + 1), &p.layers[l]);
  out.emplace_back("head_hidden", &p.head_hidden);
  out.emplace_back("head_out", &p.head_out);
  return out;
}

template <typename M>
std::string encode_block(const M& m) {
  std::string bytes;
  bytes.reserve(static_cast<std::size_t>(m.size()) * 8);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const auto bits = std::bit_cast<std::uint64_t>(static_cast<double>(m(r, c)));
      for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
    }
  return base64_encode(bytes);
}

template <typename M>
void decode_block(const std::string& data, M& m, const std::string& name) {
  const std::string bytes = base64_decode(data);
  if (bytes.size() != static_cast<std::size_t>(m.size()) * 8)
    throw Error("payload holds " + std::to_string(bytes.size() / 8) + " values, expected " + std::to_string(m.size()),
                name + ".data");
  std::size_t pos = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos++])) << (8 * b);
      m(r, c) = std::bit_cast<double>(bits);
    }
}

int header_int(const nlohmann::json& h, const char* key) {
  if (!h.contains(key) || !h[key].is_number_integer()) throw Error("missing or non-integer header field", key);
  return h[key].get<int>();
}

}  // namespace

std::string base64_encode(std::string_view bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (static_cast<unsigned char>(bytes[i]) << 16) |
                            (static_cast<unsigned char>(bytes[i + 1]) << 8) | static_cast<unsigned char>(bytes[i + 2]);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const std::uint32_t v = static_cast<unsigned char>(bytes[i]) << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (rest == 2) {
    const std::uint32_t v = (static_cast<unsigned char>(bytes[i]) << 16) | (static_cast<unsigned char>(bytes[i + 1]) << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::string base64_decode(std::string_view text) {
  std::array<int, 256> lut;
  lut.fill(-1);
  for (int i = 0; i < 64; ++i) lut[static_cast<unsigned char>(kAlphabet[i])] = i;
  if (text.size() % 4 != 0) throw Error("base64 length is not a multiple of 4", "data");
  std::string out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int vals[4];
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char ch = text[i + static_cast<std::size_t>(k)];
      if (ch == '=' && i + 4 == text.size() && k >= 2) {
        vals[k] = 0;
        ++pad;
        continue;
      }
      if (pad) throw Error("misplaced base64 padding", "data");
      vals[k] = lut[static_cast<unsigned char>(ch)];
      if (vals[k] < 0) throw Error("invalid base64 character", "data");
    }
    const std::uint32_t v = (vals[0] << 18) | (vals[1] << 12) | (vals[2] << 6) | vals[3];
    out += static_cast<char>((v >> 16) & 0xFF);
    if (pad < 2) out += static_cast<char>((v >> 8) & 0xFF);
    if (pad < 1) out += static_cast<char>(v & 0xFF);
  }
  return out;
}

std::string checkpoint_to_string(const Policy& params) {
  params.check_consistent();
  std::ostringstream out;
  nlohmann::ordered_json header;
  header["version"] = kCheckpointVersion;
  header["L"] = params.num_layers();
  header["d"] = params.hidden();
  header["feat"] = kNodeFeatures;
  out << header.dump() << '\n';
  auto emit = [&out](const std::string& name, const auto& m) {
    nlohmann::ordered_json line;
    line["name"] = name;
    line["rows"] = m.rows();
    line["cols"] = m.cols();
    line["data"] = encode_block(m);
    out << line.dump() << '\n';
  };
  emit("input", params.input);
  for (std::size_t l = 0; l < params.layers.size(); ++l) emit("layer" + std::to_string(l + 1), params.layers[l]);
  emit("head_hidden", params.head_hidden);
  emit("head_out", params.head_out);
  return out.str();
}

Policy checkpoint_from_string(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw Error("checkpoint is empty", "header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error&) {
    throw Error("corrupt checkpoint header", "header");
  }
  const int version = header_int(header, "version");
  if (version != kCheckpointVersion)
    throw Error("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                    std::to_string(kCheckpointVersion) + ")",
                "version");
  const int layers = header_int(header, "L");
  const int hidden = header_int(header, "d");
  const int feat = header_int(header, "feat");
  if (feat != kNodeFeatures) throw Error("feature width " + std::to_string(feat) + " is not 7", "feat");
  if (layers < 0) throw Error("negative layer count", "L");
  if (hidden < 1) throw Error("hidden width must be >= 1", "d");

  Policy p = Policy::zeros(layers, hidden);
  const auto names = block_names(p);
  for (const auto& [name, _] : names) {
    if (!std::getline(in, line)) throw Error("missing weight block", name);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw Error("corrupt weight block", name);
    }
    if (!j.contains("name") || j["name"] != name) throw Error("expected weight block '" + name + "'", name + ".name");
    const std::string data = j.value("data", "");
    auto check_dims = [&](Eigen::Index rows, Eigen::Index cols) {
      if (j.value("rows", -1) != rows) throw Error("dimension mismatch", name + ".rows");
      if (j.value("cols", -1) != cols) throw Error("dimension mismatch", name + ".cols");
    };
    if (name == "input") {
      check_dims(p.input.rows(), p.input.cols());
      decode_block(data, p.input, name);
    } else if (name == "head_hidden") {
      check_dims(p.head_hidden.rows(), p.head_hidden.cols());
      decode_block(data, p.head_hidden, name);
    } else if (name == "head_out") {
      check_dims(p.head_out.rows(), p.head_out.cols());
      decode_block(data, p.head_out, name);
    } else {
      auto& w = p.layers[std::stoul(name.substr(5)) - 1];
      check_dims(w.rows(), w.cols());
      decode_block(data, w, name);
    }
  }
  return p;
}

void save_checkpoint(const Policy& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint '" + path.string() + "'");
  out << checkpoint_to_string(params);
}

Policy load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_string(ss.str());
}

}  // namespace flp
