#include "fuzzyppo/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace fuzzyppo {
namespace {

template <class U>
void put_le(std::ostream& out, U v) {
  char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, sizeof(U));
}

template <class U>
U get_le(std::istream& in) {
  unsigned char bytes[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U))) {
    throw CheckpointError("checkpoint truncated");
  }
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes[i]) << (8 * i);
  return v;
}

void put_doubles(std::ostream& out, const std::vector<double>& xs) {
  for (double x : xs) put_le(out, std::bit_cast<std::uint64_t>(x));
}

void get_doubles(std::istream& in, std::vector<double>& xs) {
  for (double& x : xs) x = std::bit_cast<double>(get_le<std::uint64_t>(in));
}

// Guards against absurd allocations from a corrupt header.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

}  // namespace

void write_checkpoint(const ParamStore& store, std::ostream& out) {
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, store.step_count);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(store.num_entries()));
  for (const auto& e : store.entries()) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.shape.size()));
    for (std::size_t d : e.shape) put_le<std::uint64_t>(out, d);
    put_doubles(out, e.value);
    put_doubles(out, e.adam_m);
    put_doubles(out, e.adam_v);
  }
  if (!out) throw CheckpointError("failed writing checkpoint");
}

ParamStore read_checkpoint(std::istream& in) {
  char magic[sizeof(kCheckpointMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw CheckpointError("not a checkpoint file (bad magic)");
  }
  const auto version = get_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  ParamStore store;
  store.step_count = get_le<std::uint64_t>(in);
  const auto count = get_le<std::uint32_t>(in);
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto name_len = get_le<std::uint32_t>(in);
    if (name_len > 4096) throw CheckpointError("corrupt checkpoint (name length)");
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw CheckpointError("checkpoint truncated");
    const auto rank = get_le<std::uint32_t>(in);
    if (rank > 8) throw CheckpointError("corrupt checkpoint (rank of '" + name + "')");
    std::vector<std::size_t> shape(rank);
    std::uint64_t elements = 1;
    for (auto& d : shape) {
      d = get_le<std::uint64_t>(in);
      elements *= d;
      if (elements > kMaxElements) throw CheckpointError("corrupt checkpoint (shape of '" + name + "')");
    }
    auto& e = store[store.add(name, shape)];
    get_doubles(in, e.value);
    get_doubles(in, e.adam_m);
    get_doubles(in, e.adam_v);
  }
  return store;
}

void save_checkpoint(const ParamStore& store, const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot open " + tmp.string() + " for writing");
    write_checkpoint(store, out);
  }
  std::filesystem::rename(tmp, path);
}

void load_checkpoint(ParamStore& store, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  ParamStore loaded = read_checkpoint(in);
  if (loaded.num_entries() != store.num_entries()) {
    throw CheckpointError("checkpoint has " + std::to_string(loaded.num_entries()) +
                          " entries, expected " + std::to_string(store.num_entries()));
  }
  for (std::size_t i = 0; i < store.num_entries(); ++i) {
    const auto& src = loaded.entries()[i];
    auto& dst = store.entries()[i];
    if (src.name != dst.name || src.shape != dst.shape) {
      throw CheckpointError("checkpoint entry '" + src.name + "' does not match expected '" +
                            dst.name + "' (name or shape)");
    }
  }
  for (std::size_t i = 0; i < store.num_entries(); ++i) {
    auto& src = loaded.entries()[i];
    auto& dst = store.entries()[i];
    dst.value = std::move(src.value);
    dst.adam_m = std::move(src.adam_m);
    dst.adam_v = std::move(src.adam_v);
    std::fill(dst.grad.begin(), dst.grad.end(), 0.0);
  }
  store.step_count = loaded.step_count;
}

}  // namespace fuzzyppo
