#include "dygie/train/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace dygie::train {

using json = nlohmann::ordered_json;

namespace {

constexpr char kMagic[8] = {'D', 'Y', 'G', 'I', 'E', 'C', 'K', 'P'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<char*>(b), 4);
}

void write_u64(std::ostream& out, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<char*>(b), 8);
}

uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw CheckpointError("checkpoint truncated");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw CheckpointError("checkpoint truncated");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

void write_record(std::ostream& out, const std::string& name,
                  const numeric::Tensor<float>& tensor) {
  write_u32(out, static_cast<uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  write_u32(out, static_cast<uint32_t>(tensor.shape.size()));
  for (int d : tensor.shape) write_u64(out, static_cast<uint64_t>(d));
  static_assert(sizeof(float) == 4);
  out.write(reinterpret_cast<const char*>(tensor.data.data()),
            static_cast<std::streamsize>(tensor.data.size() * 4));
}

bool read_record(std::istream& in, std::string* name, numeric::Tensor<float>* tensor) {
  unsigned char probe;
  if (!in.read(reinterpret_cast<char*>(&probe), 1)) return false;  // clean EOF
  in.putback(static_cast<char>(probe));
  uint32_t name_len = read_u32(in);
  if (name_len > 4096) throw CheckpointError("checkpoint record name too long");
  name->resize(name_len);
  if (!in.read(name->data(), name_len)) throw CheckpointError("checkpoint truncated");
  uint32_t rank = read_u32(in);
  if (rank < 1 || rank > 8) throw CheckpointError("checkpoint record rank out of range");
  numeric::Shape shape;
  int64_t count = 1;
  for (uint32_t i = 0; i < rank; ++i) {
    uint64_t dim = read_u64(in);
    if (dim < 1 || dim > (1u << 30)) throw CheckpointError("checkpoint dimension out of range");
    shape.push_back(static_cast<int>(dim));
    count *= static_cast<int64_t>(dim);
  }
  tensor->shape = shape;
  tensor->data.resize(count);
  if (!in.read(reinterpret_cast<char*>(tensor->data.data()),
               static_cast<std::streamsize>(count * 4)))
    throw CheckpointError("checkpoint truncated: payload of " + *name +
                          " (expected " + std::to_string(count * 4) + " bytes)");
  return true;
}

std::string meta_json(const Checkpoint& ckpt) {
  json j;
  j["config"] = json::parse(ckpt.config.to_json_text(0));
  j["vocab"] = ckpt.vocab;
  json rng = json::array();
  for (uint64_t w : ckpt.rng_state) rng.push_back(std::to_string(w));
  j["state"] = {{"step", ckpt.step}, {"rng", std::move(rng)}};
  return j.dump();
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint: " + path);
  out.write(kMagic, 8);
  write_u32(out, kVersion);
  std::string meta = meta_json(ckpt);
  write_u64(out, meta.size());
  out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
  for (const auto& name : ckpt.params.names()) write_record(out, name, ckpt.params.get(name));
  for (const auto& name : ckpt.adam_m.names())
    write_record(out, "adam.m." + name, ckpt.adam_m.get(name));
  for (const auto& name : ckpt.adam_v.names())
    write_record(out, "adam.v." + name, ckpt.adam_v.get(name));
  if (!out) throw CheckpointError("write failure: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path);
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw CheckpointError(path + ": magic/version mismatch (not a checkpoint file)");
  uint32_t version = read_u32(in);
  if (version != kVersion)
    throw CheckpointError(path + ": magic/version mismatch (version " + std::to_string(version) +
                          ", expected " + std::to_string(kVersion) + ")");
  uint64_t meta_len = read_u64(in);
  if (meta_len > (1u << 28)) throw CheckpointError("checkpoint metadata too large");
  std::string meta(meta_len, '\0');
  if (!in.read(meta.data(), static_cast<std::streamsize>(meta_len)))
    throw CheckpointError("checkpoint truncated in metadata");

  Checkpoint ckpt;
  try {
    json j = json::parse(meta);
    ckpt.config = model::Config::from_json_text(j.at("config").dump());
    ckpt.vocab = j.at("vocab").get<std::vector<std::string>>();
    ckpt.step = j.at("state").at("step").get<int64_t>();
    auto rng = j.at("state").at("rng").get<std::vector<std::string>>();
    if (rng.size() != 4) throw CheckpointError("bad rng state");
    for (int i = 0; i < 4; ++i) ckpt.rng_state[i] = std::stoull(rng[i]);
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint metadata parse error: ") + e.what());
  }

  std::string name;
  numeric::Tensor<float> tensor;
  while (read_record(in, &name, &tensor)) {
    auto put = [&](model::ParamStore<float>& store, const std::string& key) {
      auto& slot = store.add(key, tensor.rows(), tensor.cols());
      slot = tensor;
    };
    if (name.rfind("adam.m.", 0) == 0)
      put(ckpt.adam_m, name.substr(7));
    else if (name.rfind("adam.v.", 0) == 0)
      put(ckpt.adam_v, name.substr(7));
    else
      put(ckpt.params, name);
  }
  return ckpt;
}

namespace {
template <class S>
constexpr model::Precision run_precision();
template <>
constexpr model::Precision run_precision<float>() {
  return model::Precision::kFloat32;
}
template <>
constexpr model::Precision run_precision<double>() {
  return model::Precision::kFloat64;
}

template <class S>
model::ParamStore<float> narrow(const model::ParamStore<S>& store) {
  model::ParamStore<float> out;
  for (const auto& name : store.names()) {
    const auto& t = store.get(name);
    auto& slot = out.add(name, t.rows(), t.cols());
    for (int64_t i = 0; i < t.size(); ++i) slot.data[i] = static_cast<float>(t.data[i]);
  }
  return out;
}
}  // namespace

template <class S>
Checkpoint make_checkpoint(const model::Config& config, const std::vector<std::string>& vocab,
                           const model::ParamStore<S>& params, const Adam<S>& adam,
                           const std::array<uint64_t, 4>& rng_state) {
  Checkpoint ckpt;
  ckpt.config = config;
  ckpt.vocab = vocab;
  ckpt.step = adam.step();
  ckpt.rng_state = rng_state;
  ckpt.params = narrow(params);
  ckpt.adam_m = narrow(adam.moments_m());
  ckpt.adam_v = narrow(adam.moments_v());
  return ckpt;
}

template <class S>
void restore_checkpoint(const Checkpoint& ckpt, model::ParamStore<S>* params, Adam<S>* adam) {
  if (ckpt.config.precision != run_precision<S>())
    throw CheckpointError("precision mismatch: checkpoint is " +
                          model::to_string(ckpt.config.precision) + ", run is " +
                          model::to_string(run_precision<S>()));
  auto widen = [](const model::ParamStore<float>& src, model::ParamStore<S>& dst) {
    for (const auto& name : src.names()) {
      auto& t = dst.get(name);  // throws on unknown tensor
      const auto& s = src.get(name);
      if (t.shape != s.shape)
        throw CheckpointError("checkpoint tensor " + name + " has shape " +
                              numeric::shape_str(s.shape) + ", expected " +
                              numeric::shape_str(t.shape));
      for (int64_t i = 0; i < t.size(); ++i) t.data[i] = static_cast<S>(s.data[i]);
    }
  };
  widen(ckpt.params, *params);
  if (adam) {
    widen(ckpt.adam_m, adam->moments_m());
    widen(ckpt.adam_v, adam->moments_v());
    adam->set_step(ckpt.step);
  }
}

template Checkpoint make_checkpoint<float>(const model::Config&, const std::vector<std::string>&,
                                           const model::ParamStore<float>&, const Adam<float>&,
                                           const std::array<uint64_t, 4>&);
template Checkpoint make_checkpoint<double>(const model::Config&, const std::vector<std::string>&,
                                            const model::ParamStore<double>&, const Adam<double>&,
                                            const std::array<uint64_t, 4>&);
template void restore_checkpoint<float>(const Checkpoint&, model::ParamStore<float>*,
                                        Adam<float>*);
template void restore_checkpoint<double>(const Checkpoint&, model::ParamStore<double>*,
                                         Adam<double>*);

}  // namespace dygie::train
