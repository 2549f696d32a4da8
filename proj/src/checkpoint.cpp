#include <cstring>
#include <fstream>

#include "bflow/fcsn.hpp"

namespace bflow {

namespace {

constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<char*>(b), 4);
}

void write_u64(std::ostream& out, uint64_t v) {
  write_u32(out, static_cast<uint32_t>(v));
  write_u32(out, static_cast<uint32_t>(v >> 32));
}

uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  BFLOW_CHECK(in.good(), "checkpoint: truncated file");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

uint64_t read_u64(std::istream& in) {
  const uint64_t lo = read_u32(in);
  const uint64_t hi = read_u32(in);
  return lo | (hi << 32);
}

void write_record(std::ostream& out, const std::string& name, const Tensor& t) {
  write_u32(out, static_cast<uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  write_u32(out, 4);
  write_u32(out, static_cast<uint32_t>(t.n));
  write_u32(out, static_cast<uint32_t>(t.c));
  write_u32(out, static_cast<uint32_t>(t.h));
  write_u32(out, static_cast<uint32_t>(t.w));
  out.write(reinterpret_cast<const char*>(t.data.data()),
            static_cast<std::streamsize>(t.size() * sizeof(float)));
}

std::pair<std::string, Tensor> read_record(std::istream& in) {
  const uint32_t name_len = read_u32(in);
  BFLOW_CHECK(name_len < 4096, "checkpoint: implausible record name length ", name_len);
  std::string name(name_len, '\0');
  in.read(name.data(), name_len);
  const uint32_t rank = read_u32(in);
  BFLOW_CHECK(rank == 4, "checkpoint: expected rank-4 record, got ", rank);
  const int n = static_cast<int>(read_u32(in));
  const int c = static_cast<int>(read_u32(in));
  const int h = static_cast<int>(read_u32(in));
  const int w = static_cast<int>(read_u32(in));
  Tensor t(n, c, h, w);
  in.read(reinterpret_cast<char*>(t.data.data()),
          static_cast<std::streamsize>(t.size() * sizeof(float)));
  BFLOW_CHECK(in.good(), "checkpoint: truncated tensor data for '", name, "'");
  return {std::move(name), std::move(t)};
}

}  // namespace

void save_checkpoint(const std::string& path, const Fcsn& net) {
  std::ofstream out(path, std::ios::binary);
  BFLOW_CHECK(out.good(), "checkpoint: cannot open ", path, " for writing");
  out.write("FCSN", 4);
  write_u32(out, kVersion);
  write_u64(out, net.store().step);
  const std::string cfg = net.config().to_kv();
  write_u32(out, static_cast<uint32_t>(cfg.size()));
  out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));

  const ParamStore& s = net.store();
  write_u32(out, static_cast<uint32_t>(3 * s.params.size()));
  for (const auto& [name, t] : s.params) write_record(out, name, t);
  for (const auto& [name, t] : s.m) write_record(out, "m:" + name, t);
  for (const auto& [name, t] : s.v) write_record(out, "v:" + name, t);
  BFLOW_CHECK(out.good(), "checkpoint: write failed for ", path);
}

Fcsn load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  BFLOW_CHECK(in.good(), "checkpoint: cannot open ", path);
  char magic[4];
  in.read(magic, 4);
  BFLOW_CHECK(in.good() && std::memcmp(magic, "FCSN", 4) == 0,
              "checkpoint: bad magic bytes in ", path);
  const uint32_t version = read_u32(in);
  BFLOW_CHECK(version == kVersion, "checkpoint: unsupported format version ", version,
              " (expected ", kVersion, ")");
  const uint64_t step = read_u64(in);
  const uint32_t cfg_len = read_u32(in);
  std::string cfg_text(cfg_len, '\0');
  in.read(cfg_text.data(), cfg_len);
  BFLOW_CHECK(in.good(), "checkpoint: truncated config blob");

  Fcsn net(FcsnConfig::from_kv(cfg_text), /*init_weights=*/false);
  net.store().step = step;
  const uint32_t count = read_u32(in);
  for (uint32_t i = 0; i < count; ++i) {
    auto [name, t] = read_record(in);
    std::map<std::string, Tensor>* dst = &net.store().params;
    std::string key = name;
    if (name.rfind("m:", 0) == 0) {
      dst = &net.store().m;
      key = name.substr(2);
    } else if (name.rfind("v:", 0) == 0) {
      dst = &net.store().v;
      key = name.substr(2);
    }
    auto it = dst->find(key);
    BFLOW_CHECK(it != dst->end(), "checkpoint: unexpected record '", name, "'");
    BFLOW_CHECK(it->second.same_shape(t), "checkpoint: shape mismatch for '", name, "': file ",
                t.shape_str(), " vs config ", it->second.shape_str());
    it->second = std::move(t);
  }
  return net;
}

}  // namespace bflow
