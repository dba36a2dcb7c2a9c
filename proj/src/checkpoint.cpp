#include "ksaqa/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unordered_set>

namespace ksaqa {

namespace {

constexpr std::size_t kMagicSize = sizeof(kCheckpointMagic) - 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  bool done() const { return pos_ == bytes_.size(); }
  std::size_t pos() const { return pos_; }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::string take(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n)
      throw CheckpointError(CheckpointError::Kind::truncated, pos_, std::string("truncated checkpoint reading ") + what);
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const NamedTensors& tensors) {
  std::string out(kCheckpointMagic, kMagicSize);
  std::unordered_set<std::string> seen;
  for (const auto& [name, t] : tensors) {
    if (!seen.insert(name).second)
      throw CheckpointError(CheckpointError::Kind::duplicate_name, out.size(), "duplicate tensor name " + name);
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : t.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

NamedTensors decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < kMagicSize || bytes.compare(0, kMagicSize, kCheckpointMagic) != 0)
    throw CheckpointError(CheckpointError::Kind::bad_magic, 0, "not a checkpoint file (bad magic)");
  Reader in(bytes);
  in.take(kMagicSize, "magic");
  NamedTensors out;
  std::unordered_set<std::string> seen;
  while (!in.done()) {
    const std::size_t entry_offset = in.pos();
    const std::uint32_t name_len = in.u32("name length");
    std::string name = in.take(name_len, "name");
    if (!seen.insert(name).second)
      throw CheckpointError(CheckpointError::Kind::duplicate_name, entry_offset, "duplicate tensor name " + name);
    const std::uint32_t rank = in.u32("rank");
    Shape shape;
    for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(in.u32("dimension"));
    std::vector<double> values(shape_size(shape));
    for (double& v : values) v = std::bit_cast<float>(in.u32("tensor payload"));
    out.emplace_back(std::move(name), Tensor(std::move(shape), std::move(values)));
  }
  return out;
}

void save_checkpoint(const NamedTensors& tensors, const std::filesystem::path& path) {
  const std::string bytes = encode_checkpoint(tensors);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CheckpointError(CheckpointError::Kind::io, 0, "cannot write " + path.string());
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw CheckpointError(CheckpointError::Kind::io, 0, "write failed for " + path.string());
}

NamedTensors load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError(CheckpointError::Kind::io, 0, "cannot read " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

void round_to_float(ParameterStore& params) {
  for (const auto& p : params)
    for (double& v : p->value.values()) v = static_cast<float>(v);
}

}  // namespace ksaqa
