#include <bit>
#include <fstream>
#include <iterator>

#include "json.hpp"
#include "mcgan/error.hpp"
#include "mcgan/models.hpp"

namespace mcgan::models {
namespace {

constexpr char kMagic[4] = {'M', 'C', 'G', 'P'};
constexpr std::uint32_t kVersion = 1;

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  Reader(std::string bytes, std::string origin)
      : bytes_(std::move(bytes)), origin_(std::move(origin)) {}

  std::uint64_t u64() { return uint(8); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(uint(4)); }
  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::uint64_t uint(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw IoError(origin_ + ": truncated checkpoint");
  }
  std::string bytes_;
  std::string origin_;
  std::size_t pos_ = 0;
};

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_all(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

void save_binary(const std::filesystem::path& path,
                 std::span<const Parameter> params) {
  std::string out(kMagic, 4);
  put_u32(out, kVersion);
  put_u64(out, params.size());
  for (const auto& p : params) {
    put_u64(out, p.name.size());
    out += p.name;
    put_u64(out, p.value.rank());
    for (auto s : p.value.shape()) put_u64(out, s);
    for (double v : p.value.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  write_all(path, out);
}

std::vector<Parameter> load_binary(const std::filesystem::path& path) {
  Reader in(read_all(path), path.string());
  if (in.str(4) != std::string(kMagic, 4)) {
    throw IoError(path.string() + ": not a parameter checkpoint");
  }
  if (const auto v = in.u32(); v != kVersion) {
    throw IoError(path.string() + ": unsupported checkpoint version " +
                  std::to_string(v));
  }
  const std::uint64_t count = in.u64();
  std::vector<Parameter> out;
  for (std::uint64_t k = 0; k < count; ++k) {
    Parameter p;
    p.name = in.str(in.u64());
    ndgrad::Shape shape(in.u64());
    std::size_t n = 1;
    for (auto& s : shape) {
      s = in.u64();
      n *= s;
    }
    std::vector<double> data(n);
    for (auto& v : data) v = std::bit_cast<double>(in.u64());
    p.value = ndgrad::Tensor(std::move(shape), std::move(data));
    out.push_back(std::move(p));
  }
  if (!in.done()) throw IoError(path.string() + ": trailing bytes");
  return out;
}

void save_json(const std::filesystem::path& path,
               std::span<const Parameter> params) {
  // nlohmann writes the shortest representation that round-trips, which is
  // at most 17 significant digits.
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& p : params) {
    doc.push_back({{"name", p.name},
                   {"shape", p.value.shape()},
                   {"data", p.value.to_vector()}});
  }
  write_all(path, doc.dump(1) + "\n");
}

std::vector<Parameter> load_json(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_all(path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  std::vector<Parameter> out;
  try {
    for (const auto& item : doc) {
      out.push_back({item.at("name").get<std::string>(),
                     ndgrad::Tensor(item.at("shape").get<ndgrad::Shape>(),
                                    item.at("data").get<std::vector<double>>())});
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return out;
}

void restore(std::span<Parameter> params, std::span<const Parameter> loaded) {
  for (auto& p : params) {
    const Parameter* match = nullptr;
    for (const auto& l : loaded) {
      if (l.name == p.name) match = &l;
    }
    if (match == nullptr) throw IoError("checkpoint lacks parameter '" + p.name + "'");
    if (match->value.shape() != p.value.shape()) {
      throw ShapeError("checkpoint shape for '" + p.name + "' is " +
                       ndgrad::shape_string(match->value.shape()) + ", model has " +
                       ndgrad::shape_string(p.value.shape()));
    }
    p.value = match->value.detach();
  }
}

std::uint64_t checksum(std::span<const Parameter> params) {
  std::string bytes;
  for (const auto& p : params) {
    bytes += p.name;
    bytes.push_back('\0');
    for (auto s : p.value.shape()) put_u64(bytes, s);
    for (double v : p.value.data()) put_u64(bytes, std::bit_cast<std::uint64_t>(v));
  }
  return fnv1a(bytes);
}

}  // namespace mcgan::models
