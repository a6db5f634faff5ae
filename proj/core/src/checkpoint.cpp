#include "stylemux/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "stylemux/errors.hpp"

namespace stylemux::ckpt {

namespace {

constexpr char kMagic[8] = {'S', 'M', 'U', 'X', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

void put_u32(std::string& out, uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_f32(std::string& out, float f) {
  uint32_t v;
  std::memcpy(&v, &f, 4);
  put_u32(out, v);
}

void put_str(std::string& out, const std::string& s) {
  put_u32(out, static_cast<uint32_t>(s.size()));
  out += s;
}

class Reader {
 public:
  Reader(std::string bytes, std::string path)
      : bytes_(std::move(bytes)), path_(std::move(path)) {}

  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 3; i >= 0; --i) {
      v = (v << 8) | static_cast<unsigned char>(bytes_[pos_ + static_cast<size_t>(i)]);
    }
    pos_ += 4;
    return v;
  }

  float f32() {
    uint32_t v = u32();
    float f;
    std::memcpy(&f, &v, 4);
    return f;
  }

  std::string str() {
    uint32_t len = u32();
    need(len);
    std::string s = bytes_.substr(pos_, len);
    pos_ += len;
    return s;
  }

  void expect_magic() {
    need(8);
    if (std::memcmp(bytes_.data(), kMagic, 8) != 0) {
      throw DataError(path_ + " is not a checkpoint file");
    }
    pos_ = 8;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(size_t n) {
    if (pos_ + n > bytes_.size()) throw DataError("truncated checkpoint: " + path_);
  }
  std::string bytes_;
  std::string path_;
  size_t pos_ = 0;
};

}  // namespace

void Checkpoint::add(const std::string& name, const Shape& shape, std::vector<float> data) {
  if (shape_numel(shape) != static_cast<int64_t>(data.size())) {
    throw DimensionError("block " + name + " shape/data size mismatch");
  }
  if (index_.count(name)) throw DataError("duplicate checkpoint block: " + name);
  index_[name] = blocks_.size();
  blocks_.push_back({name, shape, std::move(data)});
}

const Checkpoint::Block& Checkpoint::block(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw DataError("checkpoint block missing: " + name);
  return blocks_[it->second];
}

bool Checkpoint::has_block(const std::string& name) const { return index_.count(name) > 0; }

void Checkpoint::save(const std::string& path) const {
  std::string out(kMagic, 8);
  put_u32(out, kVersion);
  put_u32(out, static_cast<uint32_t>(config.size()));
  for (const auto& [k, v] : config) put_str(out, k + "=" + v);
  put_u32(out, static_cast<uint32_t>(blocks_.size()));
  for (const auto& b : blocks_) {
    put_str(out, b.name);
    put_u32(out, static_cast<uint32_t>(b.shape.size()));
    for (int d : b.shape) put_u32(out, static_cast<uint32_t>(d));
    for (float f : b.data) put_f32(out, f);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("short write to " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Reader r(std::move(bytes), path);
  r.expect_magic();
  uint32_t version = r.u32();
  if (version != kVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version) + " in " + path);
  }
  Checkpoint c;
  uint32_t n_config = r.u32();
  for (uint32_t i = 0; i < n_config; ++i) {
    std::string kv = r.str();
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw DataError("bad config entry in " + path + ": " + kv);
    c.config[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  uint32_t n_blocks = r.u32();
  for (uint32_t i = 0; i < n_blocks; ++i) {
    std::string name = r.str();
    uint32_t rank = r.u32();
    Shape shape;
    for (uint32_t j = 0; j < rank; ++j) shape.push_back(static_cast<int>(r.u32()));
    int64_t numel = shape_numel(shape);
    std::vector<float> data(static_cast<size_t>(numel));
    for (auto& x : data) x = r.f32();
    c.add(name, shape, std::move(data));
  }
  if (!r.done()) throw DataError("trailing bytes in checkpoint " + path);
  return c;
}

}  // namespace stylemux::ckpt
