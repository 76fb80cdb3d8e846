#include "nav/checkpoint.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

#include "nav/errors.hpp"

namespace nav::cli {

namespace {

constexpr char kMagic[7] = {'N', 'A', 'V', 'C', 'K', 'P', 'T'};

class ByteWriter {
 public:
  void u8(uint8_t v) { buf_.push_back(v); }
  void u16(uint16_t v) {
    for (int i = 0; i < 2; ++i) buf_.push_back(uint8_t(v >> (8 * i)));
  }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(uint8_t(v >> (8 * i)));
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(uint8_t(v >> (8 * i)));
  }
  void f32(float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  void bytes(const void* p, size_t n) {
    const uint8_t* b = static_cast<const uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  std::vector<uint8_t> take() { return std::move(buf_); }
  const std::vector<uint8_t>& view() const { return buf_; }

 private:
  std::vector<uint8_t> buf_;
};

class ByteReader {
 public:
  ByteReader(const std::vector<uint8_t>& buf, const std::string& origin)
      : buf_(buf), origin_(origin) {}

  uint8_t u8() { return take(1)[0]; }
  uint16_t u16() {
    const uint8_t* p = take(2);
    return uint16_t(p[0]) | uint16_t(p[1]) << 8;
  }
  uint32_t u32() {
    const uint8_t* p = take(4);
    return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 |
           uint32_t(p[3]) << 24;
  }
  uint64_t u64() {
    uint64_t v = 0;
    const uint8_t* p = take(8);
    for (int i = 0; i < 8; ++i) v |= uint64_t(p[i]) << (8 * i);
    return v;
  }
  float f32() {
    const uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::string str(size_t n) {
    const uint8_t* p = take(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }
  size_t pos() const { return pos_; }
  size_t remaining() const { return buf_.size() - pos_; }

 private:
  const uint8_t* take(size_t n) {
    if (pos_ + n > buf_.size())
      throw CheckpointError("checkpoint: " + origin_ + ": truncated file");
    const uint8_t* p = buf_.data() + pos_;
    pos_ += n;
    return p;
  }
  const std::vector<uint8_t>& buf_;
  std::string origin_;
  size_t pos_ = 0;
};

std::string shape_str(const std::vector<int>& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

}  // namespace

Checkpoint make_checkpoint(const policy::ParameterSet<float>& params,
                           const ppo::AdamOptimizer* opt,
                           const std::string& config_text, int64_t episode_counter,
                           int64_t update_counter, uint64_t master_seed) {
  Checkpoint ck;
  for (const auto& it : params.items()) ck.manifest.emplace_back(it.name, it.tensor.shape());
  ck.payload = params.to_flat();
  if (opt != nullptr) {
    ck.has_optimizer = true;
    ck.adam_step = opt->step_count();
    ck.moments = opt->flat_moments();
  }
  ck.config_text = config_text;
  ck.episode_counter = episode_counter;
  ck.update_counter = update_counter;
  ck.master_seed = master_seed;
  return ck;
}

void apply_checkpoint(const Checkpoint& ck, policy::ParameterSet<float>& params,
                      ppo::AdamOptimizer* opt) {
  const auto& items = params.items();
  if (ck.manifest.size() != items.size())
    throw CheckpointError("checkpoint: manifest has " +
                          std::to_string(ck.manifest.size()) + " entries, network has " +
                          std::to_string(items.size()));
  for (size_t i = 0; i < items.size(); ++i) {
    if (ck.manifest[i].first != items[i].name)
      throw CheckpointError("checkpoint: manifest entry '" + ck.manifest[i].first +
                            "' does not match parameter '" + items[i].name + "'");
    if (ck.manifest[i].second != items[i].tensor.shape())
      throw CheckpointError("checkpoint: shape mismatch for '" + items[i].name +
                            "': file " + shape_str(ck.manifest[i].second) +
                            " vs network " + shape_str(items[i].tensor.shape()));
  }
  params.from_flat(ck.payload);
  if (opt != nullptr && ck.has_optimizer) opt->restore(ck.adam_step, ck.moments);
}

std::vector<uint8_t> encode_checkpoint(const Checkpoint& ck) {
  ByteWriter w;
  w.u8(ck.version);
  w.bytes(kMagic, sizeof(kMagic));
  w.u32(uint32_t(ck.manifest.size()));
  int64_t expect = 0;
  for (const auto& [name, shape] : ck.manifest) {
    w.u16(uint16_t(name.size()));
    w.bytes(name.data(), name.size());
    w.u8(uint8_t(shape.size()));
    int64_t n = 1;
    for (int d : shape) {
      w.u32(uint32_t(d));
      n *= d;
    }
    expect += n;
  }
  if (expect != int64_t(ck.payload.size()))
    throw CheckpointError("checkpoint: payload length disagrees with manifest");
  w.u64(uint64_t(ck.payload.size()));
  for (float v : ck.payload) w.f32(v);
  w.u8(ck.has_optimizer ? 1 : 0);
  if (ck.has_optimizer) {
    w.u64(uint64_t(ck.adam_step));
    w.u64(uint64_t(ck.moments.size()));
    for (float v : ck.moments) w.f32(v);
  }
  w.u32(uint32_t(ck.config_text.size()));
  w.bytes(ck.config_text.data(), ck.config_text.size());
  w.u64(uint64_t(ck.episode_counter));
  w.u64(uint64_t(ck.update_counter));
  w.u64(ck.master_seed);
  const uint32_t crc =
      uint32_t(::crc32(0, w.view().data(), uInt(w.view().size())));
  w.u32(crc);
  return w.take();
}

Checkpoint decode_checkpoint(const std::vector<uint8_t>& bytes,
                             const std::string& origin) {
  if (bytes.size() < sizeof(kMagic) + 5)
    throw CheckpointError("checkpoint: " + origin + ": truncated file");
  const uint32_t stored_crc = uint32_t(bytes[bytes.size() - 4]) |
                              uint32_t(bytes[bytes.size() - 3]) << 8 |
                              uint32_t(bytes[bytes.size() - 2]) << 16 |
                              uint32_t(bytes[bytes.size() - 1]) << 24;
  const uint32_t crc =
      uint32_t(::crc32(0, bytes.data(), uInt(bytes.size() - 4)));
  if (crc != stored_crc)
    throw CheckpointError("checkpoint: " + origin + ": CRC mismatch (corrupt or truncated)");

  ByteReader r(bytes, origin);
  Checkpoint ck;
  ck.version = r.u8();
  if (ck.version != kCheckpointVersion)
    throw CheckpointError("checkpoint: " + origin + ": version " +
                          std::to_string(ck.version) + " unsupported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  if (r.str(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic)))
    throw CheckpointError("checkpoint: " + origin + ": bad magic");

  const uint32_t n_entries = r.u32();
  int64_t expect = 0;
  for (uint32_t i = 0; i < n_entries; ++i) {
    const uint16_t name_len = r.u16();
    std::string name = r.str(name_len);
    const uint8_t ndim = r.u8();
    std::vector<int> shape(ndim);
    int64_t n = 1;
    for (int d = 0; d < ndim; ++d) {
      shape[d] = int(r.u32());
      n *= shape[d];
    }
    expect += n;
    ck.manifest.emplace_back(std::move(name), std::move(shape));
  }
  const uint64_t count = r.u64();
  if (int64_t(count) != expect)
    throw CheckpointError("checkpoint: " + origin +
                          ": payload length disagrees with manifest");
  ck.payload.resize(count);
  for (uint64_t i = 0; i < count; ++i) ck.payload[i] = r.f32();
  ck.has_optimizer = r.u8() != 0;
  if (ck.has_optimizer) {
    ck.adam_step = int64_t(r.u64());
    const uint64_t mcount = r.u64();
    ck.moments.resize(mcount);
    for (uint64_t i = 0; i < mcount; ++i) ck.moments[i] = r.f32();
  }
  const uint32_t cfg_len = r.u32();
  ck.config_text = r.str(cfg_len);
  ck.episode_counter = int64_t(r.u64());
  ck.update_counter = int64_t(r.u64());
  ck.master_seed = r.u64();
  if (r.remaining() != 4)  // only the CRC should remain
    throw CheckpointError("checkpoint: " + origin + ": trailing bytes");
  return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  const std::vector<uint8_t> bytes = encode_checkpoint(ck);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("checkpoint: cannot open '" + path + "' for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!f) throw CheckpointError("checkpoint: short write to '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("checkpoint: cannot open '" + path + "'");
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes, path);
}

}  // namespace nav::cli
