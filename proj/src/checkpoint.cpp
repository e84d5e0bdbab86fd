// Copyright 2026 The rflow Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <bit>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "rflow/error.hpp"
#include "rflow/model.hpp"
#include "rflow/text_format.hpp"

namespace rflow {

namespace {

constexpr char kMagic[4] = {'V', 'F', 'L', 'W'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

class ByteReader {
 public:
  explicit ByteReader(const std::string& bytes) : bytes_(bytes) {}

  void need(std::size_t n, const std::string& field) const {
    if (bytes_.size() - pos_ < n) throw FormatError("checkpoint truncated while reading " + field);
  }
  std::uint32_t u32(const std::string& field) {
    need(4, field);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * i);
    return v;
  }
  double f64(const std::string& field) {
    need(8, field);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * i);
    return std::bit_cast<double>(v);
  }
  std::string str(std::size_t n, const std::string& field) {
    need(n, field);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

std::string config_block(const Model& model, std::size_t n_tensors) {
  const auto& c = model.config;
  std::ostringstream os;
  os << "vocab_size=" << c.vocab_size << '\n'
     << "embed_dim=" << c.embed_dim << '\n'
     << "frame_dim=" << c.frame_dim << '\n'
     << "cond_dim=" << c.cond_dim << '\n'
     << "hidden_dim=" << c.hidden_dim << '\n'
     << "n_hidden_layers=" << c.n_hidden_layers << '\n'
     << "time_embed_dim=" << c.time_embed_dim << '\n'
     << "n_speakers=" << c.n_speakers << '\n'
     << "speaker_embed_dim=" << c.speaker_embed_dim << '\n'
     << "sigma=" << format_double(c.sigma) << '\n'
     << "round=" << model.round << '\n'
     << "adam_step=" << model.params.adam_step << '\n'
     << "tensors=" << n_tensors << '\n';
  return os.str();
}

void put_tensor(std::string& out, const std::string& name, const Tensor& t) {
  put_u32(out, static_cast<std::uint32_t>(name.size()));
  out += name;
  put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (auto d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
  for (double v : t.data()) put_f64(out, v);
}

}  // namespace

std::string checkpoint_bytes(const Model& model) {
  const auto specs = param_inventory(model.config);
  std::string out(kMagic, 4);
  put_u32(out, kVersion);
  const std::string config = config_block(model, 3 * specs.size());
  put_u32(out, static_cast<std::uint32_t>(config.size()));
  out += config;
  for (std::size_t i = 0; i < specs.size(); ++i) put_tensor(out, specs[i].name, model.params.weights[i]);
  for (std::size_t i = 0; i < specs.size(); ++i) put_tensor(out, "adam.m/" + specs[i].name, model.params.adam_m[i]);
  for (std::size_t i = 0; i < specs.size(); ++i) put_tensor(out, "adam.v/" + specs[i].name, model.params.adam_v[i]);
  return out;
}

Model parse_checkpoint(const std::string& bytes) {
  ByteReader in(bytes);
  if (in.str(4, "magic") != std::string(kMagic, 4)) throw FormatError("checkpoint: bad magic bytes");
  const auto version = in.u32("version");
  if (version != kVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version) + " (expected " +
                      std::to_string(kVersion) + ")");
  }
  const auto config_len = in.u32("config length");
  const std::string config_text = in.str(config_len, "config block");

  std::map<std::string, std::string> kv;
  std::istringstream lines(config_text);
  for (std::string line; std::getline(lines, line);) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("checkpoint config: malformed line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto take_u64 = [&](const char* key) -> std::uint64_t {
    auto it = kv.find(key);
    if (it == kv.end()) throw FormatError(std::string("checkpoint config: missing ") + key);
    auto v = parse_u64(it->second);
    if (!v) throw FormatError(std::string("checkpoint config: bad value for ") + key);
    kv.erase(it);
    return *v;
  };

  Model model;
  auto& c = model.config;
  c.vocab_size = take_u64("vocab_size");
  c.embed_dim = take_u64("embed_dim");
  c.frame_dim = take_u64("frame_dim");
  c.cond_dim = take_u64("cond_dim");
  c.hidden_dim = take_u64("hidden_dim");
  c.n_hidden_layers = take_u64("n_hidden_layers");
  c.time_embed_dim = take_u64("time_embed_dim");
  c.n_speakers = take_u64("n_speakers");
  c.speaker_embed_dim = take_u64("speaker_embed_dim");
  {
    auto it = kv.find("sigma");
    if (it == kv.end()) throw FormatError("checkpoint config: missing sigma");
    auto v = parse_double(it->second);
    if (!v) throw FormatError("checkpoint config: bad value for sigma");
    c.sigma = *v;
    kv.erase(it);
  }
  model.round = static_cast<std::uint32_t>(take_u64("round"));
  model.params.adam_step = take_u64("adam_step");
  const auto n_tensors = take_u64("tensors");
  if (!kv.empty()) throw FormatError("checkpoint config: unknown key '" + kv.begin()->first + "'");
  try {
    c.validate();
  } catch (const ValidationError& e) {
    throw FormatError(std::string("checkpoint config: ") + e.what());
  }

  const auto specs = param_inventory(c);
  if (n_tensors != 3 * specs.size()) {
    throw FormatError("checkpoint: tensor count " + std::to_string(n_tensors) + " does not match config (" +
                      std::to_string(3 * specs.size()) + ")");
  }
  auto read_tensor = [&](const std::string& expected_name, const Shape& expected_shape) {
    const auto name_len = in.u32("name length of " + expected_name);
    const auto name = in.str(name_len, "name of " + expected_name);
    if (name != expected_name) {
      throw FormatError("checkpoint: expected tensor '" + expected_name + "', found '" + name + "'");
    }
    const auto rank = in.u32("rank of " + name);
    Shape shape;
    for (std::uint32_t r = 0; r < rank; ++r) shape.push_back(in.u32("dims of " + name));
    if (shape != expected_shape) {
      throw FormatError("checkpoint: tensor '" + name + "' has shape " + shape_string(shape) + ", expected " +
                        shape_string(expected_shape));
    }
    std::vector<double> data(shape_size(shape));
    in.need(8 * data.size(), "payload of " + name);
    for (auto& v : data) v = in.f64("payload of " + name);
    return Tensor(std::move(shape), std::move(data));
  };
  for (const auto& s : specs) model.params.weights.push_back(read_tensor(s.name, s.shape));
  for (const auto& s : specs) model.params.adam_m.push_back(read_tensor("adam.m/" + s.name, s.shape));
  for (const auto& s : specs) model.params.adam_v.push_back(read_tensor("adam.v/" + s.name, s.shape));
  if (!in.at_end()) throw FormatError("checkpoint: trailing bytes after last tensor");
  return model;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  const std::string bytes = checkpoint_bytes(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_checkpoint(bytes);
}

}  // namespace rflow
