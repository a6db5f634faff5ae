#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stylemux/tensor.hpp"

namespace stylemux::ckpt {

// Binary parameter container: magic + format version, UTF-8 key=value config
// entries, then named blocks of little-endian float32 with explicit shapes.
// Save/load round-trips byte-exactly (config keys are written sorted, block
// order is preserved).
class Checkpoint {
 public:
  struct Block {
    std::string name;
    Shape shape;
    std::vector<float> data;
  };

  std::map<std::string, std::string> config;

  void add(const std::string& name, const Shape& shape, std::vector<float> data);
  const Block& block(const std::string& name) const;  // DataError when missing
  bool has_block(const std::string& name) const;
  const std::vector<Block>& blocks() const { return blocks_; }

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

 private:
  std::vector<Block> blocks_;
  std::map<std::string, size_t> index_;
};

}  // namespace stylemux::ckpt
