// Copyright 2026 The LSST Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lsst/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "lsst/blocks.hpp"
#include "lsst/errors.hpp"

namespace lsst::io {

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

namespace {

constexpr char kCubeMagic[4] = {'H', 'S', 'C', '1'};
constexpr char kCkptMagic[8] = {'L', 'S', 'S', 'T', 'C', 'K', 'P', 'T'};
constexpr char kAdamMagic[8] = {'L', 'S', 'S', 'T', 'A', 'D', 'A', 'M'};
constexpr std::size_t kCubeHeader = 20;
constexpr std::uint32_t kMaxRank = 8;
constexpr std::uint32_t kMaxName = 4096;

class Writer {
 public:
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::byte*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::byte*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }
  void put_u32(std::size_t v, const char* what) {
    if (v > std::numeric_limits<std::uint32_t>::max()) {
      throw ConfigError(std::string(what) + " does not fit in u32");
    }
    put(static_cast<std::uint32_t>(v));
  }
  std::vector<std::byte> take() { return std::move(buf_); }
  void reserve(std::size_t n) { buf_.reserve(n); }

 private:
  std::vector<std::byte> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::byte> bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw ParseError(std::string("truncated file: ") + what + " needs " + std::to_string(n) +
                           " bytes, " + std::to_string(remaining()) + " available",
                       pos_);
    }
  }

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  void expect_magic(const char* magic, std::size_t n, const char* format) {
    need(n, "magic");
    if (std::memcmp(bytes_.data(), magic, n) != 0) {
      throw ParseError(std::string("bad magic: not a ") + format + " file", 0);
    }
    pos_ += n;
  }

  std::string get_string(std::size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  void expect_end(const char* format) const {
    if (remaining() != 0) {
      throw ParseError(std::string(format) + ": " + std::to_string(remaining()) +
                           " unexpected trailing bytes",
                       pos_);
    }
  }

 private:
  std::span<const std::byte> bytes_;
  std::size_t pos_ = 0;
};

double checked_value(double v, std::size_t offset) {
  if (!std::isfinite(v)) throw ParseError("non-finite value", offset);
  return v;
}

}  // namespace

std::vector<std::byte> encode_cube(const Tensor& cube, DType dtype) {
  if (cube.rank() != 3) {
    throw DimensionError("encode_cube: expected [H,W,bands], got " + shape_str(cube.shape()));
  }
  if (!cube.all_finite()) throw NumericError("encode_cube: non-finite values");
  const std::size_t h = cube.dim(0), w = cube.dim(1), n = cube.dim(2);
  Writer out;
  out.reserve(kCubeHeader + cube.size() * static_cast<std::size_t>(dtype));
  out.put_bytes(kCubeMagic, 4);
  out.put_u32(h, "height");
  out.put_u32(w, "width");
  out.put_u32(n, "bands");
  out.put(static_cast<std::uint32_t>(dtype));
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) {
        const double v = cube.at(i, j, k);
        if (dtype == DType::kF32) {
          out.put(static_cast<float>(v));
        } else {
          out.put(v);
        }
      }
  return out.take();
}

Tensor decode_cube(std::span<const std::byte> bytes, DType* dtype_out) {
  Reader in(bytes);
  in.expect_magic(kCubeMagic, 4, "cube");
  const std::uint64_t h = in.get<std::uint32_t>("height");
  const std::uint64_t w = in.get<std::uint32_t>("width");
  const std::uint64_t n = in.get<std::uint32_t>("bands");
  if (h == 0 || w == 0 || n == 0) throw ParseError("cube dimensions must be positive", 4);
  const std::uint32_t tag = in.get<std::uint32_t>("dtype");
  if (tag != 4 && tag != 8) {
    throw ParseError("unknown dtype tag " + std::to_string(tag) + " (expected 4 or 8)", 16);
  }
  const auto dtype = static_cast<DType>(tag);
  // h, w, n < 2^32, so the product fits unless it exceeds 2^64; guard anyway.
  const std::uint64_t count = h * w * n;
  if (count / n / w != h || count > (std::numeric_limits<std::uint64_t>::max() / tag)) {
    throw ParseError("cube dimensions overflow", 4);
  }
  const std::uint64_t payload = count * tag;
  if (payload != in.remaining()) {
    throw ParseError("payload length mismatch: expected " + std::to_string(payload) +
                         " bytes for " + std::to_string(h) + "x" + std::to_string(w) + "x" +
                         std::to_string(n) + ", got " + std::to_string(in.remaining()),
                     kCubeHeader);
  }
  Tensor cube({static_cast<std::size_t>(h), static_cast<std::size_t>(w),
               static_cast<std::size_t>(n)});
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) {
        const std::size_t off = in.offset();
        const double v = dtype == DType::kF32 ? static_cast<double>(in.get<float>("value"))
                                              : in.get<double>("value");
        cube.at(i, j, k) = checked_value(v, off);
      }
  if (dtype_out) *dtype_out = dtype;
  return cube;
}

std::vector<std::byte> read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "' for reading");
  f.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(f.tellg());
  f.seekg(0);
  std::vector<std::byte> buf(size);
  if (size) f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(size));
  if (!f) throw IoError("failed reading '" + path.string() + "'");
  return buf;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + tmp.string() + "' for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::as_bytes(std::span(text.data(), text.size())));
}

void write_cube(const std::filesystem::path& path, const Tensor& cube, DType dtype) {
  write_file_atomic(path, encode_cube(cube, dtype));
}

Tensor read_cube(const std::filesystem::path& path, DType* dtype) {
  return decode_cube(read_file(path), dtype);
}

namespace {

Tensor read_single_band(const std::filesystem::path& path, const char* what) {
  Tensor c = read_cube(path);
  if (c.dim(2) != 1) {
    throw ParseError(std::string(what) + " file must hold one band, found " +
                         std::to_string(c.dim(2)),
                     12);
  }
  return c.reshaped({c.dim(0), c.dim(1)});
}

void write_single_band(const std::filesystem::path& path, const Tensor& t, const char* what) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(what) + " must be rank 2, got " + shape_str(t.shape()));
  }
  write_cube(path, t.reshaped({t.dim(0), t.dim(1), 1}));
}

}  // namespace

void write_mask(const std::filesystem::path& path, const Tensor& mask) {
  write_single_band(path, mask, "mask");
}
Tensor read_mask(const std::filesystem::path& path) { return read_single_band(path, "mask"); }
void write_measurement(const std::filesystem::path& path, const Tensor& y) {
  write_single_band(path, y, "measurement");
}
Tensor read_measurement(const std::filesystem::path& path) {
  return read_single_band(path, "measurement");
}

// --- checkpoints -----------------------------------------------------------

namespace {

std::uint32_t variant_code(Variant v) { return static_cast<std::uint32_t>(v); }

void put_config(Writer& out, const ModelConfig& c) {
  out.put_u32(c.channels, "channels");
  out.put_u32(c.groups, "groups");
  for (auto r : c.repeats) out.put_u32(r, "repeats");
  out.put_u32(c.dw_kernel, "dw_kernel");
  out.put_u32(c.fusion_kernel, "fusion_kernel");
  out.put_u32(c.ffn_expansion, "ffn_expansion");
  out.put_u32(c.bands, "bands");
  out.put_u32(c.step, "step");
  out.put(variant_code(c.variant));
  out.put(c.alpha);
}

ModelConfig get_config(Reader& in) {
  ModelConfig c;
  c.channels = in.get<std::uint32_t>("channels");
  c.groups = in.get<std::uint32_t>("groups");
  for (auto& r : c.repeats) r = in.get<std::uint32_t>("repeats");
  c.dw_kernel = in.get<std::uint32_t>("dw_kernel");
  c.fusion_kernel = in.get<std::uint32_t>("fusion_kernel");
  c.ffn_expansion = in.get<std::uint32_t>("ffn_expansion");
  c.bands = in.get<std::uint32_t>("bands");
  c.step = in.get<std::uint32_t>("step");
  const std::size_t voff = in.offset();
  const auto v = in.get<std::uint32_t>("variant");
  if (v > 3) throw ParseError("unknown variant code " + std::to_string(v), voff);
  c.variant = static_cast<Variant>(v);
  const std::size_t aoff = in.offset();
  c.alpha = checked_value(in.get<double>("alpha"), aoff);
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ParseError(std::string("invalid config block: ") + e.what(), 8);
  }
  return c;
}

std::string describe_mismatch(const ModelConfig& a, const ModelConfig& b) {
  std::string s;
  auto field = [&](const char* name, auto x, auto y) {
    if (x != y) s += std::string(name) + " " + std::to_string(x) + " vs " + std::to_string(y) + "; ";
  };
  field("channels", a.channels, b.channels);
  field("groups", a.groups, b.groups);
  for (std::size_t i = 0; i < 3; ++i) field("repeats", a.repeats[i], b.repeats[i]);
  field("dw_kernel", a.dw_kernel, b.dw_kernel);
  field("fusion_kernel", a.fusion_kernel, b.fusion_kernel);
  field("ffn_expansion", a.ffn_expansion, b.ffn_expansion);
  field("bands", a.bands, b.bands);
  field("step", a.step, b.step);
  field("variant", variant_code(a.variant), variant_code(b.variant));
  field("alpha", a.alpha, b.alpha);
  return s;
}

}  // namespace

std::vector<std::byte> encode_checkpoint(const ParameterStore& store, const ModelConfig& cfg) {
  Writer out;
  out.reserve(64 + store.total_parameters() * 4);
  out.put_bytes(kCkptMagic, 8);
  put_config(out, cfg);
  out.put_u32(store.size(), "entry count");
  for (const auto& e : store.entries()) {
    out.put_u32(e.name.size(), "name length");
    out.put_bytes(e.name.data(), e.name.size());
    out.put_u32(e.value.rank(), "rank");
    for (auto d : e.value.shape()) out.put_u32(d, "dimension");
    for (double v : e.value.data()) {
      if (!std::isfinite(v)) throw NumericError("checkpoint: non-finite value in '" + e.name + "'");
      out.put(static_cast<float>(v));
    }
  }
  return out.take();
}

Checkpoint decode_checkpoint(std::span<const std::byte> bytes) {
  Reader in(bytes);
  in.expect_magic(kCkptMagic, 8, "checkpoint");
  Checkpoint ck;
  ck.config = get_config(in);
  const auto count = in.get<std::uint32_t>("entry count");
  for (std::uint32_t e = 0; e < count; ++e) {
    const std::size_t entry_off = in.offset();
    const auto len = in.get<std::uint32_t>("name length");
    if (len == 0 || len > kMaxName) {
      throw ParseError("invalid parameter name length " + std::to_string(len), entry_off);
    }
    std::string name = in.get_string(len, "parameter name");
    const std::size_t rank_off = in.offset();
    const auto rank = in.get<std::uint32_t>("rank");
    if (rank == 0 || rank > kMaxRank) {
      throw ParseError("invalid rank " + std::to_string(rank) + " for '" + name + "'", rank_off);
    }
    Shape shape;
    std::uint64_t n = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      const std::size_t doff = in.offset();
      const std::uint64_t d = in.get<std::uint32_t>("dimension");
      if (d == 0) throw ParseError("zero dimension for '" + name + "'", doff);
      n *= d;
      if (n > in.remaining()) {
        throw ParseError("truncated file: '" + name + "' needs more data than remains", doff);
      }
      shape.push_back(static_cast<std::size_t>(d));
    }
    in.need(n * 4, "parameter data");
    std::vector<double> data(static_cast<std::size_t>(n));
    for (auto& v : data) {
      const std::size_t off = in.offset();
      v = checked_value(static_cast<double>(in.get<float>("value")), off);
    }
    if (ck.store.contains(name)) throw ParseError("duplicate parameter '" + name + "'", entry_off);
    ck.store.add(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  in.expect_end("checkpoint");
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& store,
                     const ModelConfig& cfg) {
  write_file_atomic(path, encode_checkpoint(store, cfg));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

ParameterStore load_checkpoint(std::span<const std::byte> bytes, const ModelConfig& cfg) {
  Checkpoint ck = decode_checkpoint(bytes);
  if (!(ck.config == cfg)) {
    throw ConfigError("checkpoint config mismatch: " + describe_mismatch(ck.config, cfg));
  }
  const ParameterStore expected = blocks::build_model(cfg, 0);
  const auto& have = ck.store.entries();
  for (const auto& e : have) {
    if (!expected.contains(e.name)) {
      throw ConfigError("checkpoint holds unknown parameter '" + e.name + "'");
    }
  }
  if (have.size() != expected.size()) {
    throw ConfigError("checkpoint holds " + std::to_string(have.size()) + " parameters, model needs " +
                      std::to_string(expected.size()));
  }
  for (std::size_t i = 0; i < have.size(); ++i) {
    const auto& want = expected.entries()[i];
    if (have[i].name != want.name) {
      throw ConfigError("checkpoint parameter order differs at '" + have[i].name + "' (expected '" +
                        want.name + "')");
    }
    if (!have[i].value.same_shape(want.value)) {
      throw ConfigError("checkpoint parameter '" + want.name + "' has shape " +
                        shape_str(have[i].value.shape()) + ", model needs " +
                        shape_str(want.value.shape()));
    }
  }
  return std::move(ck.store);
}

ParameterStore load_checkpoint(const std::filesystem::path& path, const ModelConfig& cfg) {
  return load_checkpoint(read_file(path), cfg);
}

// --- optimizer state -------------------------------------------------------

std::vector<std::byte> encode_optimizer(const OptimizerState& s) {
  Writer out;
  out.put_bytes(kAdamMagic, 8);
  out.put(s.step);
  out.put(s.config.lr);
  out.put(s.config.beta1);
  out.put(s.config.beta2);
  out.put(s.config.eps);
  out.put(static_cast<std::uint32_t>(s.config.single_precision ? 1 : 0));
  out.put_u32(s.names.size(), "entry count");
  for (std::size_t p = 0; p < s.names.size(); ++p) {
    out.put_u32(s.names[p].size(), "name length");
    out.put_bytes(s.names[p].data(), s.names[p].size());
    out.put<std::uint64_t>(s.m[p].size());
    out.put_u32(s.m[p].rank(), "rank");
    for (auto d : s.m[p].shape()) out.put_u32(d, "dimension");
    for (double v : s.m[p].data()) out.put(v);
    for (double v : s.v[p].data()) out.put(v);
  }
  return out.take();
}

OptimizerState decode_optimizer(std::span<const std::byte> bytes) {
  Reader in(bytes);
  in.expect_magic(kAdamMagic, 8, "optimizer state");
  OptimizerState s;
  s.step = in.get<std::uint64_t>("step");
  s.config.lr = in.get<double>("lr");
  s.config.beta1 = in.get<double>("beta1");
  s.config.beta2 = in.get<double>("beta2");
  s.config.eps = in.get<double>("eps");
  s.config.single_precision = in.get<std::uint32_t>("precision flag") != 0;
  const auto count = in.get<std::uint32_t>("entry count");
  for (std::uint32_t e = 0; e < count; ++e) {
    const std::size_t off = in.offset();
    const auto len = in.get<std::uint32_t>("name length");
    if (len == 0 || len > kMaxName) throw ParseError("invalid name length", off);
    s.names.push_back(in.get_string(len, "name"));
    const std::size_t szoff = in.offset();
    const auto n = in.get<std::uint64_t>("size");
    const auto rank = in.get<std::uint32_t>("rank");
    if (rank == 0 || rank > kMaxRank) throw ParseError("invalid rank", szoff);
    Shape shape;
    for (std::uint32_t r = 0; r < rank; ++r) shape.push_back(in.get<std::uint32_t>("dimension"));
    if (n == 0 || n > in.remaining() / 16 || shape_size(shape) != n) {
      throw ParseError("moment size mismatch for '" + s.names.back() + "'", szoff);
    }
    std::vector<double> m(n), v(n);
    for (auto& x : m) x = checked_value(in.get<double>("moment"), in.offset() - 8);
    for (auto& x : v) x = checked_value(in.get<double>("moment"), in.offset() - 8);
    s.m.emplace_back(shape, std::move(m));
    s.v.emplace_back(shape, std::move(v));
  }
  in.expect_end("optimizer state");
  return s;
}

void save_optimizer(const std::filesystem::path& path, const OptimizerState& state) {
  write_file_atomic(path, encode_optimizer(state));
}

OptimizerState load_optimizer(const std::filesystem::path& path) {
  return decode_optimizer(read_file(path));
}

// --- CSV -------------------------------------------------------------------

std::string csv_field(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_field(fields[i]);
  }
  out += "\r\n";
  return out;
}

}  // namespace lsst::io
