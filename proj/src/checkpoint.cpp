#include "ima/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "ima/error.hpp"

namespace ima::model {

namespace {

constexpr std::string_view kMagic = "ima-checkpoint";
constexpr int kVersion = 1;

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text, const std::string& where) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw Error(ErrorCode::kMalformedRecord, "checkpoint: bad number '" + text + "' in " + where);
  return v;
}

int parse_int(const std::string& text, const std::string& key) {
  int v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw Error(ErrorCode::kMalformedRecord, "checkpoint: bad integer for " + key);
  return v;
}

}  // namespace

void write_checkpoint(std::ostream& out, ModelParams& params) {
  const ModelConfig& c = params.config;
  out << kMagic << ' ' << kVersion << '\n';
  out << "variant " << to_string(c.variant) << '\n';
  out << "hidden " << c.hidden << '\n';
  out << "embed_dim " << c.embed_dim << '\n';
  out << "attention_hidden " << c.attention_hidden << '\n';
  out << "iterations " << c.iterations << '\n';
  out << "attention_tanh " << (c.attention_tanh ? 1 : 0) << '\n';
  out << "gate_combine " << to_string(c.gate_combine) << '\n';
  for (const nn::ParamRef& ref : params.refs()) {
    out << "tensor " << ref.name << ' ' << ref.shape.size();
    for (std::size_t dim : ref.shape) out << ' ' << dim;
    out << '\n';
    // Storage is column-major; emit row-major.
    const std::size_t rows = ref.shape[0];
    const std::size_t cols = ref.shape.size() > 1 ? ref.shape[1] : 1;
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) {
        if (i + j > 0) out << ' ';
        out << format_double(ref.data[j * rows + i]);
      }
    out << '\n';
  }
  out << "end\n";
  if (!out) throw Error(ErrorCode::kIoError, "checkpoint: write failed");
}

ModelParams read_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != std::string(kMagic) + " " + std::to_string(kVersion))
    throw Error(ErrorCode::kMalformedRecord, "checkpoint: missing header");

  std::map<std::string, std::string> header;
  while (true) {
    if (!std::getline(in, line)) throw Error(ErrorCode::kMalformedRecord, "checkpoint: truncated");
    if (line.starts_with("tensor ") || line == "end") break;
    const auto space = line.find(' ');
    if (space == std::string::npos)
      throw Error(ErrorCode::kMalformedRecord, "checkpoint: bad header line '" + line + "'");
    header[line.substr(0, space)] = line.substr(space + 1);
  }
  auto field = [&](const std::string& key) -> const std::string& {
    const auto it = header.find(key);
    if (it == header.end()) throw Error(ErrorCode::kMalformedRecord, "checkpoint: missing " + key);
    return it->second;
  };
  ModelConfig c;
  c.variant = variant_from_string(field("variant"));
  c.hidden = parse_int(field("hidden"), "hidden");
  c.embed_dim = parse_int(field("embed_dim"), "embed_dim");
  c.attention_hidden = parse_int(field("attention_hidden"), "attention_hidden");
  c.iterations = parse_int(field("iterations"), "iterations");
  c.attention_tanh = parse_int(field("attention_tanh"), "attention_tanh") != 0;
  c.gate_combine = gate_combine_from_string(field("gate_combine"));

  ModelParams params = ModelParams::zeros(c);
  for (const nn::ParamRef& ref : params.refs()) {
    if (line == "end") throw Error(ErrorCode::kMalformedRecord, "checkpoint: missing " + ref.name);
    std::istringstream head(line);
    std::string tag, name;
    std::size_t rank = 0;
    head >> tag >> name >> rank;
    std::vector<std::size_t> shape(rank);
    for (auto& dim : shape) head >> dim;
    if (!head || name != ref.name)
      throw Error(ErrorCode::kMalformedRecord, "checkpoint: expected tensor " + ref.name);
    if (shape != ref.shape)
      throw Error(ErrorCode::kShapeMismatch, "checkpoint: shape of " + ref.name);
    if (!std::getline(in, line))
      throw Error(ErrorCode::kMalformedRecord, "checkpoint: no values for " + ref.name);
    std::istringstream values(line);
    const std::size_t rows = ref.shape[0];
    const std::size_t cols = ref.shape.size() > 1 ? ref.shape[1] : 1;
    std::string token;
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) {
        if (!(values >> token))
          throw Error(ErrorCode::kMalformedRecord, "checkpoint: too few values for " + ref.name);
        ref.data[j * rows + i] = parse_double(token, ref.name);
      }
    if (values >> token)
      throw Error(ErrorCode::kMalformedRecord, "checkpoint: too many values for " + ref.name);
    if (!std::getline(in, line)) throw Error(ErrorCode::kMalformedRecord, "checkpoint: truncated");
  }
  if (line != "end") throw Error(ErrorCode::kMalformedRecord, "checkpoint: unexpected '" + line + "'");
  return params;
}

void save_checkpoint(const std::filesystem::path& path, ModelParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  write_checkpoint(out, params);
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  return read_checkpoint(in);
}

}  // namespace ima::model
