// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

#include "relrot/common.hpp"
#include "relrot/netmodel.hpp"

// Layout: "RRCKPT\0\0" | u32 version | u64 header bytes | JSON header |
// float64 arrays in header order. Integers are little-endian.

namespace relrot {

namespace {

constexpr char kMagic[8] = {'R', 'R', 'C', 'K', 'P', 'T', '\0', '\0'};

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

const std::map<std::string, std::vector<NamedArray> Checkpoint::*> kGroups = {
    {"params", &Checkpoint::params},
    {"buffers", &Checkpoint::buffers},
    {"optimizer", &Checkpoint::optimizer}};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  nlohmann::json arrays = nlohmann::json::array();
  for (const auto& [group, member] : kGroups) {
    for (const auto& a : ck.*member) {
      arrays.push_back({{"group", group}, {"name", a.name}, {"size", a.values.size()}});
    }
  }
  const nlohmann::json header = {{"kind", ck.kind},
                                 {"header", ck.header},
                                 {"iteration", ck.iteration},
                                 {"seed", ck.seed},
                                 {"arrays", arrays}};
  const std::string text = header.dump();

  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw std::runtime_error("checkpoint: cannot write " + tmp.string());
    os.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(ck.version));
    put<std::uint64_t>(os, text.size());
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& [group, member] : kGroups) {
      for (const auto& a : ck.*member) {
        os.write(reinterpret_cast<const char*>(a.values.data()),
                 static_cast<std::streamsize>(a.values.size() * sizeof(double)));
      }
    }
    if (!os) throw std::runtime_error("checkpoint: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path.string());
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("checkpoint: not a relrot checkpoint: " + path.string());
  }
  const auto version = get<std::uint32_t>(is);
  if (version != kCheckpointVersion) {
    throw VersionMismatch("checkpoint " + path.string() + " has version " +
                          std::to_string(version) + ", expected " +
                          std::to_string(kCheckpointVersion));
  }
  const auto len = get<std::uint64_t>(is);
  std::string text(len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(len));
  if (!is) throw std::runtime_error("checkpoint: truncated header");
  const auto header = nlohmann::json::parse(text);

  Checkpoint ck;
  ck.version = static_cast<int>(version);
  ck.kind = header.at("kind").get<std::string>();
  ck.header = header.at("header");
  ck.iteration = header.at("iteration").get<std::int64_t>();
  ck.seed = header.at("seed").get<std::uint64_t>();
  for (const auto& a : header.at("arrays")) {
    const auto it = kGroups.find(a.at("group").get<std::string>());
    if (it == kGroups.end()) throw std::runtime_error("checkpoint: unknown array group");
    NamedArray arr{a.at("name").get<std::string>(),
                   std::vector<double>(a.at("size").get<std::size_t>())};
    is.read(reinterpret_cast<char*>(arr.values.data()),
            static_cast<std::streamsize>(arr.values.size() * sizeof(double)));
    if (!is) throw std::runtime_error("checkpoint: truncated array " + arr.name);
    (ck.*(it->second)).push_back(std::move(arr));
  }
  return ck;
}

std::vector<NamedArray> snapshot(std::span<nn::Param* const> params) {
  std::vector<NamedArray> out;
  for (const nn::Param* p : params) out.push_back({p->name, p->value});
  return out;
}

std::vector<NamedArray> snapshot(std::span<nn::Buffer* const> buffers) {
  std::vector<NamedArray> out;
  for (const nn::Buffer* b : buffers) out.push_back({b->name, b->value});
  return out;
}

namespace {

template <typename T>
void restore_into(std::span<T* const> targets, const std::vector<NamedArray>& values) {
  std::map<std::string, const NamedArray*> by_name;
  for (const auto& v : values) by_name[v.name] = &v;
  for (T* t : targets) {
    const auto it = by_name.find(t->name);
    if (it == by_name.end()) throw std::runtime_error("checkpoint: missing array " + t->name);
    if (it->second->values.size() != t->value.size()) {
      throw std::runtime_error("checkpoint: size mismatch for " + t->name);
    }
    t->value = it->second->values;
  }
}

}  // namespace

void restore(std::span<nn::Param* const> params, const std::vector<NamedArray>& values) {
  restore_into(params, values);
}

void restore(std::span<nn::Buffer* const> buffers, const std::vector<NamedArray>& values) {
  restore_into(buffers, values);
}

Checkpoint make_checkpoint(Trainable& model) {
  Checkpoint ck;
  ck.kind = model.kind();
  ck.header = model.describe();
  ck.seed = ck.header.at("model").value("seed", std::uint64_t{0});
  ck.params = snapshot(model.parameters());
  ck.buffers = snapshot(model.buffers());
  return ck;
}

RotationNet rotation_net_from_checkpoint(const Checkpoint& ck) {
  if (ck.kind != "rotation") {
    throw std::runtime_error("checkpoint holds a '" + ck.kind + "' model, not a rotation model");
  }
  RotationNet net(ck.header.at("model").get<ModelConfig>());
  net.set_normalization(ck.header.at("normalization").get<InputNormalization>());
  restore(net.parameters(), ck.params);
  restore(net.buffers(), ck.buffers);
  return net;
}

}  // namespace relrot
