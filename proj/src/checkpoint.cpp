// Copyright 2026 The mst Authors
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

#include "mst/checkpoint.hpp"

#include <openssl/evp.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <random>

#include "mst/error.hpp"

namespace fs = std::filesystem;

namespace mst {

namespace {

using nlohmann::json;

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) throw Error("SHA-256 init failed");
  }
  void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_.get(), data, n); }
  void update(const std::string& s) {
    const std::uint64_t n = s.size();
    update(&n, sizeof(n));
    update(s.data(), s.size());
  }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), md, &len);
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out += digits[md[i] >> 4];
      out += digits[md[i] & 15];
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, void (*)(EVP_MD_CTX*)> ctx_;
};

json lora_json(const LoraConfig& l) {
  return {{"enabled", l.enabled}, {"rank", l.rank}, {"alpha", l.alpha}, {"targets", l.targets}, {"init_std", l.init_std}};
}

struct Component {
  const char* name;
  ParamList params;
};

std::vector<Component> components(SpeechTranslationModel& m) {
  return {{"encoder", m.encoder_parameters()},
          {"adapter", m.adapter_parameters()},
          {"llm", m.llm_parameters()},
          {"lora", m.lora_parameters()}};
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  f << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("checkpoint file missing: " + path.string());
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_component(const fs::path& dir, const ParamList& params) {
  fs::create_directories(dir);
  json tensors = json::array();
  std::ofstream bin(dir / "tensors.bin", std::ios::binary);
  if (!bin) throw Error("cannot write " + (dir / "tensors.bin").string());
  std::uint64_t offset = 0;
  for (const auto* p : params) {
    const Mat& v = p->value();
    tensors.push_back({{"name", p->name()}, {"shape", {v.rows(), v.cols()}}, {"offset", offset}, {"dtype", "f64"}});
    const std::size_t bytes = static_cast<std::size_t>(v.size()) * sizeof(double);
    bin.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(bytes));
    offset += bytes;
  }
  write_json(dir / "manifest.json", {{"tensors", tensors}});
}

void read_component(const fs::path& dir, const ParamList& params) {
  const json manifest = read_json(dir / "manifest.json");
  std::ifstream bin(dir / "tensors.bin", std::ios::binary);
  if (!bin) throw ValidationError("checkpoint file missing: " + (dir / "tensors.bin").string());
  std::map<std::string, json> entries;
  for (const auto& t : manifest.at("tensors")) entries[t.at("name").get<std::string>()] = t;
  if (entries.size() != params.size()) {
    throw ValidationError(dir.string() + ": expected " + std::to_string(params.size()) + " tensors, found " +
                          std::to_string(entries.size()));
  }
  for (auto* p : params) {
    auto it = entries.find(p->name());
    if (it == entries.end()) throw ValidationError(dir.string() + ": tensor " + p->name() + " missing");
    const auto& e = it->second;
    if (e.value("dtype", "") != "f64") throw ValidationError("tensor " + p->name() + ": unsupported dtype");
    const auto shape = e.at("shape").get<std::vector<Eigen::Index>>();
    Mat& v = p->mutable_value();
    if (shape.size() != 2 || shape[0] != v.rows() || shape[1] != v.cols()) {
      throw ValidationError("tensor " + p->name() + ": shape does not match the configured geometry");
    }
    bin.seekg(static_cast<std::streamoff>(e.at("offset").get<std::uint64_t>()));
    bin.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!bin) throw ValidationError("tensor " + p->name() + ": truncated data");
  }
}

}  // namespace

json to_json(const PhaseMeta& m) {
  return {{"phase", m.phase},   {"source_hash", m.source_hash}, {"state_hash", m.state_hash},
          {"steps", m.steps},   {"final_loss", m.final_loss},   {"extra", m.extra}};
}

PhaseMeta phase_meta_from_json(const json& j) {
  PhaseMeta m;
  m.phase = j.at("phase").get<std::string>();
  m.source_hash = j.value("source_hash", "");
  m.state_hash = j.at("state_hash").get<std::string>();
  m.steps = j.value("steps", 0);
  m.final_loss = j.value("final_loss", 0.0);
  m.extra = j.value("extra", json::object());
  return m;
}

std::string state_hash(SpeechTranslationModel& model) {
  Sha256 h;
  h.update(to_json(model.cfg).dump());
  h.update(lora_json(model.lora).dump());
  h.update(model.tokenizer.to_json().dump());
  for (const auto& c : components(model)) {
    h.update(std::string(c.name));
    for (const auto* p : c.params) {
      h.update(p->name());
      const std::int64_t shape[2] = {p->value().rows(), p->value().cols()};
      h.update(shape, sizeof(shape));
      h.update(p->value().data(), static_cast<std::size_t>(p->value().size()) * sizeof(double));
    }
  }
  return h.hex();
}

void save_checkpoint(const std::string& dir, const RunConfig& config, SpeechTranslationModel& model, PhaseMeta& meta,
                     bool force) {
  const fs::path target(dir);
  if (fs::exists(target) && !force) {
    throw ValidationError("output " + dir + " already exists (use --force to overwrite)");
  }
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  std::random_device rd;
  const fs::path tmp = target.string() + ".tmp-" + std::to_string(rd());
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  try {
    RunConfig stored = config;
    stored.pipeline = model.cfg;
    stored.lora = model.lora;
    write_json(tmp / "config.json", to_json(stored));
    model.tokenizer.save((tmp / "tokenizer.json").string());
    for (const auto& c : components(model)) write_component(tmp / c.name, c.params);
    meta.state_hash = state_hash(model);
    write_json(tmp / "phase_meta.json", to_json(meta));
    if (fs::exists(target)) fs::remove_all(target);
    fs::rename(tmp, target);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(tmp, ec);
    throw;
  }
}

Checkpoint load_checkpoint(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw ValidationError("checkpoint " + dir + " does not exist");
  Checkpoint ck;
  ck.config = run_config_from_json(read_json(root / "config.json"), /*apply_env=*/false);
  Tokenizer tok = Tokenizer::load((root / "tokenizer.json").string());
  ck.model = init_model(ck.config.pipeline, ck.config.lora, std::move(tok));
  for (const auto& c : components(ck.model)) read_component(root / c.name, c.params);
  ck.meta = phase_meta_from_json(read_json(root / "phase_meta.json"));
  const std::string actual = state_hash(ck.model);
  if (actual != ck.meta.state_hash) {
    throw ValidationError("checkpoint " + dir + ": content hash mismatch (stored " + ck.meta.state_hash +
                          ", computed " + actual + ")");
  }
  return ck;
}

}  // namespace mst
