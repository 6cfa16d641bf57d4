#include "mrg/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <vector>

#include "mrg/util.hpp"

namespace mrg::nn {

namespace {

constexpr char kMagic[8] = {'M', 'R', 'G', 'C', 'K', 'P', 'T', '\0'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}
  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw DataError("checkpoint truncated");
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str() {
    const auto n = u32();
    need(n);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::string_view raw(std::size_t n) {
    need(n);
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  const auto& d = ckpt.params.dims();
  w.i32(d.vocab_size);
  w.i32(d.d_model);
  w.i32(d.heads);
  w.i32(d.ff_dim);
  w.i32(d.encoder_layers);
  w.i32(d.decoder_layers);
  w.u8(d.classifier ? 1 : 0);
  w.u8(d.decoder ? 1 : 0);
  w.f32(d.dropout);
  w.u64(ckpt.vocab_hash);
  w.str(ckpt.metadata_json);
  const auto& tensors = ckpt.params.tensors();
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(t.rows()));
    w.u32(static_cast<std::uint32_t>(t.cols()));
  }
  for (const auto& [name, t] : tensors) {
    for (Eigen::Index i = 0; i < t.size(); ++i) w.f32(t.data()[i]);
  }
  return w.take();
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (r.raw(sizeof kMagic) != std::string_view(kMagic, sizeof kMagic)) throw DataError("not a checkpoint file");
  const auto version = r.u32();
  if (version != kCheckpointVersion) throw DataError("unsupported checkpoint version " + std::to_string(version));
  ModelDims d;
  d.vocab_size = r.i32();
  d.d_model = r.i32();
  d.heads = r.i32();
  d.ff_dim = r.i32();
  d.encoder_layers = r.i32();
  d.decoder_layers = r.i32();
  d.classifier = r.u8() != 0;
  d.decoder = r.u8() != 0;
  d.dropout = r.f32();
  try {
    d.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("checkpoint dims: ") + e.what());
  }
  Checkpoint ckpt;
  ckpt.vocab_hash = r.u64();
  ckpt.metadata_json = r.str();
  const auto count = r.u32();
  struct Entry {
    std::string name;
    std::uint32_t rows;
    std::uint32_t cols;
  };
  std::vector<Entry> table;
  for (std::uint32_t i = 0; i < count; ++i) {
    Entry e;
    e.name = r.str();
    e.rows = r.u32();
    e.cols = r.u32();
    table.push_back(std::move(e));
  }
  ParameterStore<float> params(d);
  for (const auto& e : table) {
    Matrix<float> m(e.rows, e.cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = r.f32();
    params.set(e.name, std::move(m));
  }
  if (!r.done()) throw DataError("trailing bytes after checkpoint tensors");
  ckpt.params = std::move(params);
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(read_file(path)); }

}  // namespace mrg::nn
