#include "fns/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <iterator>

#include "fns/errors.hpp"

namespace fns {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int b = 0; b < 4; ++b) u8(static_cast<std::uint8_t>(v >> (8 * b)));
  }
  void u64(std::uint64_t v) {
    for (int b = 0; b < 8; ++b) u8(static_cast<std::uint8_t>(v >> (8 * b)));
  }
  void i32(int v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(const std::string& s) { out_ += s; }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& s) : s_(s) {}
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(s_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(u8()) << (8 * b);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(u8()) << (8 * b);
    return v;
  }
  int i32() { return static_cast<int>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string out = s_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::size_t remaining() const { return s_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (s_.size() - pos_ < n) throw CorruptCheckpoint("checkpoint is truncated");
  }
  const std::string& s_;
  std::size_t pos_ = 0;
};

template <class E>
E read_enum(Reader& r, int count, const char* what) {
  const int v = r.u8();
  if (v >= count) throw CorruptCheckpoint(std::string("checkpoint has an invalid ") + what + " tag");
  return static_cast<E>(v);
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& c) {
  Writer w;
  w.bytes("FNS1");
  w.u32(kCheckpointVersion);
  w.i32(c.grid.n);
  w.i32(c.grid.dim);
  const ModelSpec& s = c.spec;
  w.u8(static_cast<std::uint8_t>(s.variant));
  w.u8(static_cast<std::uint8_t>(s.mode));
  w.i32(s.kernel_size);
  w.i32(s.depth);
  w.u8(s.normalize_by_diagonal);
  w.u8(s.mask_input);
  w.i32(s.meta_input_channels);
  w.i32(s.lambda_hidden);
  w.i32(s.lambda_kernel);
  w.i32(s.t_hidden);
  w.i32(s.t_kernel);
  w.u64(c.epoch);
  w.f64(c.loss);
  w.u32(static_cast<std::uint32_t>(c.params.segments.size()));
  for (const auto& seg : c.params.segments) {
    w.u32(static_cast<std::uint32_t>(seg.name.size()));
    w.bytes(seg.name);
    w.u64(seg.length);
    for (double v : c.params.view(seg.name)) w.f64(v);
  }
  return w.take();
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (bytes.size() < 4 || r.bytes(4) != "FNS1") throw CorruptCheckpoint("not a checkpoint (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw VersionMismatch("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  Checkpoint c;
  const int n = r.i32();
  const int dim = r.i32();
  if (n < 1 || (dim != 1 && dim != 2)) throw CorruptCheckpoint("checkpoint has invalid grid dimensions");
  c.grid = Grid(n, dim);
  ModelSpec& s = c.spec;
  s.variant = read_enum<CorrectorVariant>(r, 3, "variant");
  s.mode = read_enum<TrainMode>(r, 2, "mode");
  s.kernel_size = r.i32();
  s.depth = r.i32();
  s.normalize_by_diagonal = r.u8() != 0;
  s.mask_input = r.u8() != 0;
  s.meta_input_channels = r.i32();
  s.lambda_hidden = r.i32();
  s.lambda_kernel = r.i32();
  s.t_hidden = r.i32();
  s.t_kernel = r.i32();
  c.epoch = r.u64();
  c.loss = r.f64();
  const std::uint32_t nseg = r.u32();
  for (std::uint32_t k = 0; k < nseg; ++k) {
    const std::string name = r.bytes(r.u32());
    const std::uint64_t len = r.u64();
    if (len > r.remaining() / 8) throw CorruptCheckpoint("checkpoint is truncated");
    if (c.params.has(name)) throw CorruptCheckpoint("checkpoint repeats segment '" + name + "'");
    c.params.add(name, len);
    for (double& v : c.params.view(name)) v = r.f64();
  }
  if (r.remaining() != 0) throw CorruptCheckpoint("checkpoint has trailing bytes");
  return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& c) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  const std::string bytes = encode_checkpoint(c);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed on '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace fns
