#include "catnet/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace catnet {

namespace {

constexpr char kMagic[4] = {'C', 'A', 'T', 'N'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  Reader(const std::string& bytes, const std::string& path) : bytes_(bytes), path_(path) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }

  std::uint32_t u32() {
    const char* p = take(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(p[i]);
    return v;
  }

  double f64() {
    const char* p = take(8);
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) bits = (bits << 8) | static_cast<std::uint8_t>(p[i]);
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }

  const char* take(std::size_t n) {
    if (pos_ + n > bytes_.size()) {
      throw std::runtime_error("checkpoint " + path_ + " truncated: expected at least " +
                               std::to_string(pos_ + n) + " bytes, found " +
                               std::to_string(bytes_.size()));
    }
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::string& bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_network(const Network& net, const std::string& path) {
  validate_network(net);
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(net.layers.size()));
  for (const DenseLayer& layer : net.layers) {
    out.push_back(static_cast<char>(layer.activation));
    put_u32(out, static_cast<std::uint32_t>(layer.weight.rows));
    put_u32(out, static_cast<std::uint32_t>(layer.weight.cols));
    for (double w : layer.weight.data) put_f64(out, w);
    for (double b : layer.bias) put_f64(out, b);
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw std::runtime_error("write failed for checkpoint: " + path);
}

Network load_network(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open checkpoint: " + path);
  std::string bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());

  Reader reader(bytes, path);
  const char* magic = reader.take(4);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("checkpoint " + path + " has wrong magic bytes");
  }
  const std::uint32_t version = reader.u32();
  if (version != kVersion) {
    throw std::runtime_error("checkpoint " + path + " has unsupported version " +
                             std::to_string(version));
  }
  const std::uint32_t layer_count = reader.u32();
  Network net;
  net.layers.reserve(layer_count);
  for (std::uint32_t i = 0; i < layer_count; ++i) {
    DenseLayer layer;
    const std::uint8_t tag = reader.u8();
    if (tag > 1) {
      throw std::runtime_error("checkpoint " + path + ": unknown activation tag " +
                               std::to_string(tag) + " in layer " + std::to_string(i));
    }
    layer.activation = static_cast<Activation>(tag);
    const std::uint32_t rows = reader.u32();
    const std::uint32_t cols = reader.u32();
    layer.weight = Tensor2(rows, cols);
    for (double& w : layer.weight.data) w = reader.f64();
    layer.bias.resize(rows);
    for (double& b : layer.bias) b = reader.f64();
    net.layers.push_back(std::move(layer));
  }
  if (reader.remaining() != 0) {
    throw std::runtime_error("checkpoint " + path + " has " +
                             std::to_string(reader.remaining()) + " trailing bytes");
  }
  validate_network(net);
  return net;
}

}  // namespace catnet
