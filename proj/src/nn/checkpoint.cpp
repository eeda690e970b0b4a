// Copyright 2026 The mtsot Authors
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

#include "mtsot/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <memory>

#include <fmt/core.h>
#include <openssl/evp.h>

#include "mtsot/errors.hpp"

namespace mtsot::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

namespace {

constexpr char kMagic[8] = {'M', 'T', 'S', 'O', 'T', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

template <class I>
void put(std::ostream& out, I v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class I>
I get(std::istream& in, const std::string& what) {
  I v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
    throw FormatError(fmt::format("checkpoint truncated reading {}", what));
  return v;
}

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
      throw Error("SHA-256 initialization failed");
  }
  void update(const void* data, std::size_t n) {
    if (n && EVP_DigestUpdate(ctx_.get(), data, n) != 1) throw Error("SHA-256 update failed");
  }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), md, &len) != 1) throw Error("SHA-256 finalization failed");
    std::string out;
    for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", md[i]);
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ToyModel<float>& model,
                     const TrainableMask& mask, const nlohmann::json& extra) {
  nlohmann::ordered_json header;
  header["model"] = model.config.to_json();
  header["adapters"] = model.adapters ? nlohmann::ordered_json{{"bottleneck", model.adapters->bottleneck}}
                                      : nlohmann::ordered_json(nullptr);
  nlohmann::ordered_json tensors = nlohmann::ordered_json::array();
  for (const auto& p : model.params)
    tensors.push_back({{"name", p.name}, {"kind", param_kind_name(p.kind)}, {"shape", {p.rows, p.cols}}});
  header["tensors"] = std::move(tensors);
  header["extra"] = extra;
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& p : model.params)
    out.write(reinterpret_cast<const char*>(p.value.data()),
              static_cast<std::streamsize>(p.size() * sizeof(float)));
  for (const auto& f : mask.flags)
    out.write(reinterpret_cast<const char*>(f.data()), static_cast<std::streamsize>(f.size()));
  if (!out) throw Error(fmt::format("write failed for {}", path.string()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(fmt::format("cannot open {}", path.string()));
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw FormatError("not a checkpoint file");
  if (const auto v = get<std::uint32_t>(in, "version"); v != kVersion)
    throw FormatError(fmt::format("unsupported checkpoint version {}", v));
  const auto n = get<std::uint64_t>(in, "header length");
  if (n > (1u << 26)) throw FormatError("checkpoint header too large");
  std::string text(n, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(n))) throw FormatError("checkpoint header truncated");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fmt::format("checkpoint header: {}", e.what()));
  }
  Checkpoint ck;
  try {
    ck.model = build_model<float>(ModelConfig::from_json(header.at("model")));
    if (!header.at("adapters").is_null())
      insert_adapters(ck.model, AdapterConfig{header["adapters"].at("bottleneck").get<int>()});
    const auto& tensors = header.at("tensors");
    if (tensors.size() != ck.model.params.size()) throw FormatError("checkpoint tensor count mismatch");
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      const auto& p = ck.model.params[i];
      const auto shape = tensors[i].at("shape").get<std::vector<std::size_t>>();
      if (tensors[i].at("name").get<std::string>() != p.name || shape.size() != 2 ||
          shape[0] != p.rows || shape[1] != p.cols)
        throw FormatError(fmt::format("checkpoint tensor {} does not match the model layout", i));
    }
    ck.extra = header.value("extra", nlohmann::json());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fmt::format("checkpoint header: {}", e.what()));
  } catch (const ConfigError& e) {
    throw FormatError(fmt::format("checkpoint config: {}", e.what()));
  }
  for (auto& p : ck.model.params)
    if (!in.read(reinterpret_cast<char*>(p.value.data()),
                 static_cast<std::streamsize>(p.size() * sizeof(float))))
      throw FormatError(fmt::format("checkpoint values truncated at {}", p.name));
  for (const auto& p : ck.model.params) {
    std::vector<std::uint8_t> f(p.size());
    if (!in.read(reinterpret_cast<char*>(f.data()), static_cast<std::streamsize>(f.size())))
      throw FormatError(fmt::format("checkpoint mask truncated at {}", p.name));
    for (auto b : f)
      if (b > 1) throw FormatError("checkpoint mask flag is not 0 or 1");
    ck.mask.flags.push_back(std::move(f));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after checkpoint");
  return ck;
}

template <class T>
std::string frozen_digest(const ToyModel<T>& model, const TrainableMask& mask) {
  if (mask.flags.size() != model.params.size()) throw ConfigError("mask does not match the model");
  Sha256 h;
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    const auto& p = model.params[i];
    if (mask.flags[i].size() != p.size()) throw ConfigError("mask does not match the model");
    for (std::size_t k = 0; k < p.size(); ++k)
      if (!mask.flags[i][k]) h.update(&p.value[k], sizeof(T));
  }
  return h.hex();
}

template <class T>
std::string model_digest(const ToyModel<T>& model) {
  Sha256 h;
  for (const auto& p : model.params) h.update(p.value.data(), p.size() * sizeof(T));
  return h.hex();
}

template std::string frozen_digest(const ToyModel<float>&, const TrainableMask&);
template std::string frozen_digest(const ToyModel<double>&, const TrainableMask&);
template std::string model_digest(const ToyModel<float>&);
template std::string model_digest(const ToyModel<double>&);

}  // namespace mtsot::nn
