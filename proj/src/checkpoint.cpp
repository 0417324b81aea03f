#include "star/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace star {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

class Writer {
 public:
  void bytes(const void* data, std::size_t n) { out_.append(static_cast<const char*>(data), n); }
  void u32(std::uint32_t v) { bytes(&v, sizeof v); }
  void u64(std::uint64_t v) { bytes(&v, sizeof v); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}
  void bytes(void* data, std::size_t n) {
    if (pos_ + n > in_.size()) throw CheckpointError("checkpoint truncated");
    std::memcpy(data, in_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    bytes(&v, sizeof v);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    bytes(&v, sizeof v);
    return v;
  }
  std::string str() {
    const auto n = u32();
    if (pos_ + n > in_.size()) throw CheckpointError("checkpoint truncated");
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  const std::string& in_;
  std::size_t pos_ = 0;
};

}  // namespace

const Tensor& Checkpoint::tensor(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw CheckpointError("checkpoint has no tensor '" + name + "'");
  return it->second;
}

const std::string& Checkpoint::meta_value(const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end()) throw CheckpointError("checkpoint has no '" + key + "' entry");
  return it->second;
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kCheckpointMagic, sizeof kCheckpointMagic);
  w.u32(kCheckpointVersion);
  const bool wide = ckpt.precision == Precision::kF64;
  w.u32(wide ? 8 : 4);
  w.u32(static_cast<std::uint32_t>(ckpt.meta.size()));
  for (const auto& [k, v] : ckpt.meta) {
    w.str(k);
    w.str(v);
  }
  w.u32(static_cast<std::uint32_t>(ckpt.vocabulary.size()));
  for (const auto& name : ckpt.vocabulary) w.str(name);
  w.u32(static_cast<std::uint32_t>(ckpt.counters.size()));
  for (const auto& [k, v] : ckpt.counters) {
    w.str(k);
    w.u64(v);
  }
  w.u32(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (const auto dim : t.shape()) w.u64(dim);
  }
  for (const auto& [name, t] : ckpt.tensors) {
    for (const double v : t.data()) {
      if (wide) {
        w.bytes(&v, sizeof v);
      } else {
        const auto f = static_cast<float>(v);
        w.bytes(&f, sizeof f);
      }
    }
  }
  return w.take();
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  char magic[sizeof kCheckpointMagic];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) throw CheckpointError("not a checkpoint file");
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint ckpt;
  const auto width = r.u32();
  if (width != 4 && width != 8) throw CheckpointError("bad real width " + std::to_string(width));
  ckpt.precision = width == 8 ? Precision::kF64 : Precision::kF32;
  for (auto n = r.u32(); n > 0; --n) {
    auto k = r.str();
    ckpt.meta[k] = r.str();
  }
  for (auto n = r.u32(); n > 0; --n) ckpt.vocabulary.push_back(r.str());
  for (auto n = r.u32(); n > 0; --n) {
    auto k = r.str();
    ckpt.counters[k] = r.u64();
  }
  std::vector<std::pair<std::string, Shape>> directory;
  for (auto n = r.u32(); n > 0; --n) {
    auto name = r.str();
    Shape shape(r.u32());
    for (auto& dim : shape) dim = r.u64();
    directory.emplace_back(std::move(name), std::move(shape));
  }
  for (auto& [name, shape] : directory) {
    Tensor t(shape);
    for (auto& v : t.data()) {
      if (width == 8) {
        r.bytes(&v, sizeof v);
      } else {
        float f;
        r.bytes(&f, sizeof f);
        v = f;
      }
    }
    ckpt.tensors.emplace(name, std::move(t));
  }
  if (!r.done()) throw CheckpointError("trailing bytes after checkpoint data");
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("failed writing '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return decode_checkpoint(buffer.str());
}

void store_parameters(const ParameterStore& params, Checkpoint& ckpt, bool with_optimizer_state) {
  for (const auto& [name, p] : params) {
    ckpt.tensors[name] = p.value;
    if (!with_optimizer_state) continue;
    ckpt.tensors["adam.m/" + name] = p.adam_m;
    ckpt.tensors["adam.v/" + name] = p.adam_v;
    ckpt.counters["adam.step/" + name] = p.step;
  }
}

void restore_parameters(const Checkpoint& ckpt, ParameterStore& params, bool with_optimizer_state) {
  auto load = [&](const std::string& name, Tensor& into) {
    const auto& t = ckpt.tensor(name);
    if (t.shape() != into.shape()) {
      throw CheckpointError("tensor '" + name + "' has shape " + shape_string(t.shape()) + ", model expects " +
                            shape_string(into.shape()));
    }
    into = t;
  };
  for (auto& [name, p] : params) {
    load(name, p.value);
    if (!with_optimizer_state) continue;
    load("adam.m/" + name, p.adam_m);
    load("adam.v/" + name, p.adam_v);
    auto it = ckpt.counters.find("adam.step/" + name);
    if (it == ckpt.counters.end()) throw CheckpointError("checkpoint has no optimizer step for '" + name + "'");
    p.step = it->second;
  }
}

}  // namespace star
