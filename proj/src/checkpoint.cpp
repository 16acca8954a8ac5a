// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#include "gnvp/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace gnvp {
namespace {

constexpr char kMagic[4] = {'G', 'N', 'V', 'P'};

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }
  void raw(std::string_view s) { out_.append(s); }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  std::uint32_t u32() {
    need(4, "integer");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8, "integer");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n, "string");
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) const {
    if (in_.size() - pos_ < n) {
      throw CheckpointError(CheckpointError::Kind::kTruncated,
                            std::string("checkpoint truncated while reading ") + what);
    }
  }

  std::string_view in_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

std::string spec_summary(const GraphSpec& s) {
  return "'" + s.name() + "' (N=" + std::to_string(s.num_nodes()) + ", M=" + std::to_string(s.num_atom_types()) +
         ", R=" + std::to_string(s.num_bond_types()) + ")";
}

// Whole file minus the CRC trailer; the 8 header bytes are already checked.
CheckpointContents parse_body(std::string_view body) {
  using Kind = CheckpointError::Kind;
  Reader r(body.substr(8));
  std::string name = r.str();
  const std::uint32_t n = r.u32();
  std::vector<std::string> atoms(r.u32());
  for (std::string& s : atoms) s = r.str();
  std::vector<std::string> bonds(r.u32());
  for (std::string& s : bonds) s = r.str();
  CheckpointContents c{GraphSpec(std::move(name), n, std::move(atoms), std::move(bonds)), {}, {}};
  const std::uint32_t meta_count = r.u32();
  for (std::uint32_t i = 0; i < meta_count; ++i) {
    std::string k = r.str();
    c.metadata[std::move(k)] = r.str();
  }
  const std::uint32_t tensor_count = r.u32();
  for (std::uint32_t i = 0; i < tensor_count; ++i) {
    std::string tname = r.str();
    const std::uint32_t rank = r.u32();
    if (rank > 16) throw CheckpointError(Kind::kChecksum, "checkpoint tensor '" + tname + "' has a corrupt rank");
    Shape shape(rank);
    for (std::size_t& d : shape) d = static_cast<std::size_t>(r.u64());
    const std::size_t count = shape_size(shape);
    if (count > r.remaining() / 8) throw CheckpointError(Kind::kTruncated, "checkpoint truncated in tensor '" + tname + "'");
    Tensor t(shape);
    for (Real& v : t.data()) v = static_cast<Real>(r.f64());
    c.tensors.emplace_back(std::move(tname), std::move(t));
  }
  if (r.remaining() != 0) throw CheckpointError(Kind::kChecksum, "checkpoint has unexpected trailing bytes");
  return c;
}

}  // namespace

const Tensor* CheckpointContents::find(std::string_view name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

const std::string& CheckpointContents::meta(const std::string& key) const {
  const auto it = metadata.find(key);
  if (it == metadata.end()) {
    throw CheckpointError(CheckpointError::Kind::kMissingTensor, "checkpoint has no metadata entry '" + key + "'");
  }
  return it->second;
}

std::string encode_checkpoint(const CheckpointContents& c) {
  Writer w;
  w.raw(std::string_view(kMagic, 4));
  w.u32(kCheckpointVersion);
  w.str(c.spec.name());
  w.u32(static_cast<std::uint32_t>(c.spec.num_nodes()));
  w.u32(static_cast<std::uint32_t>(c.spec.atom_vocab().size()));
  for (const std::string& s : c.spec.atom_vocab()) w.str(s);
  w.u32(static_cast<std::uint32_t>(c.spec.bond_vocab().size()));
  for (const std::string& s : c.spec.bond_vocab()) w.str(s);
  w.u32(static_cast<std::uint32_t>(c.metadata.size()));
  for (const auto& [k, v] : c.metadata) {
    w.str(k);
    w.str(v);
  }
  w.u32(static_cast<std::uint32_t>(c.tensors.size()));
  for (const auto& [name, t] : c.tensors) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) w.u64(d);
    for (Real v : t.data()) w.f64(static_cast<double>(v));
  }
  const std::uint32_t crc = crc32_of(w.bytes());
  w.u32(crc);
  return std::move(w.bytes());
}

CheckpointContents decode_checkpoint(std::string_view bytes) {
  using Kind = CheckpointError::Kind;
  if (bytes.size() < 4) throw CheckpointError(Kind::kTruncated, "checkpoint truncated before the magic bytes");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw CheckpointError(Kind::kBadMagic, "not a gnvp checkpoint");
  Reader header(bytes.substr(4));
  const std::uint32_t version = header.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError(Kind::kVersionMismatch, "checkpoint format version " + std::to_string(version) +
                                                      " is not supported (expected " +
                                                      std::to_string(kCheckpointVersion) + ")");
  }
  const bool crc_ok = bytes.size() >= 12 && Reader(bytes.substr(bytes.size() - 4)).u32() ==
                                                 crc32_of(bytes.substr(0, bytes.size() - 4));
  if (!crc_ok) {
    // A cut-off file has no trailer at all; report that before the checksum.
    try {
      (void)parse_body(bytes);
    } catch (const CheckpointError& e) {
      if (e.kind() == Kind::kTruncated) throw;
    }
    throw CheckpointError(Kind::kChecksum, "checkpoint CRC-32 mismatch");
  }
  return parse_body(bytes.substr(0, bytes.size() - 4));
}

void write_checkpoint_file(const std::filesystem::path& path, const CheckpointContents& contents) {
  const std::string bytes = encode_checkpoint(contents);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(CheckpointError::Kind::kIo, "cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError(CheckpointError::Kind::kIo, "failed writing '" + path.string() + "'");
}

CheckpointContents read_checkpoint_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointError::Kind::kIo, "cannot open checkpoint '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_checkpoint(buf.str());
}

CheckpointContents model_contents(const FlowModel& model) {
  const FlowConfig& cfg = model.config();
  CheckpointContents c{model.spec(), {}, {}};
  c.metadata["model.adjacency_layers"] = std::to_string(cfg.adjacency_layers);
  c.metadata["model.node_layers"] = std::to_string(cfg.node_layers);
  c.metadata["model.mlp_hidden"] = std::to_string(cfg.mlp_hidden);
  c.metadata["model.mlp_depth"] = std::to_string(cfg.mlp_depth);
  c.metadata["model.gcn_hidden"] = std::to_string(cfg.gcn_hidden);
  c.metadata["model.gcn_rounds"] = std::to_string(cfg.gcn_rounds);
  c.metadata["model.batch_norm"] = cfg.batch_norm ? "1" : "0";
  {
    std::ostringstream s;
    s.precision(17);
    s << static_cast<double>(cfg.scale_clamp);
    c.metadata["model.scale_clamp"] = s.str();
  }
  c.metadata["model.forward_order"] = "node-then-adjacency";
  for (const std::string& name : model.params().names()) c.tensors.emplace_back("param/" + name, model.params().get(name));
  for (const std::string& name : model.buffers().names()) {
    c.tensors.emplace_back("buffer/" + name, model.buffers().get(name));
  }
  return c;
}

namespace {

std::size_t meta_size(const CheckpointContents& c, const std::string& key) {
  const std::string& v = c.meta(key);
  try {
    std::size_t used = 0;
    const unsigned long long x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return static_cast<std::size_t>(x);
  } catch (const std::logic_error&) {
    throw CheckpointError(CheckpointError::Kind::kSpecMismatch, "checkpoint metadata '" + key + "' is not an integer");
  }
}

void restore(ParameterSet& set, const CheckpointContents& c, const std::string& prefix) {
  for (const std::string& name : set.names()) {
    const Tensor* t = c.find(prefix + name);
    if (t == nullptr) {
      throw CheckpointError(CheckpointError::Kind::kMissingTensor, "checkpoint is missing tensor '" + prefix + name + "'");
    }
    Tensor& dst = set.get(name);
    if (t->shape() != dst.shape()) {
      throw CheckpointError(CheckpointError::Kind::kSpecMismatch, "tensor '" + prefix + name + "' has shape " +
                                                                      shape_string(t->shape()) + ", model expects " +
                                                                      shape_string(dst.shape()));
    }
    dst = *t;
  }
}

}  // namespace

FlowModel model_from_contents(const CheckpointContents& c, const GraphSpec& expected) {
  if (!(c.spec == expected)) {
    throw CheckpointError(CheckpointError::Kind::kSpecMismatch,
                          "checkpoint spec " + spec_summary(c.spec) + " does not match requested spec " +
                              spec_summary(expected));
  }
  if (c.meta("model.forward_order") != "node-then-adjacency") {
    throw CheckpointError(CheckpointError::Kind::kSpecMismatch, "unsupported forward order '" +
                                                                    c.meta("model.forward_order") + "'");
  }
  FlowConfig cfg;
  cfg.adjacency_layers = meta_size(c, "model.adjacency_layers");
  cfg.node_layers = meta_size(c, "model.node_layers");
  cfg.mlp_hidden = meta_size(c, "model.mlp_hidden");
  cfg.mlp_depth = meta_size(c, "model.mlp_depth");
  cfg.gcn_hidden = meta_size(c, "model.gcn_hidden");
  cfg.gcn_rounds = meta_size(c, "model.gcn_rounds");
  cfg.batch_norm = meta_size(c, "model.batch_norm") != 0;
  cfg.scale_clamp = static_cast<Real>(std::stod(c.meta("model.scale_clamp")));
  FlowModel model(c.spec, cfg, 0);
  restore(model.params(), c, "param/");
  restore(model.buffers(), c, "buffer/");
  return model;
}

void save_checkpoint(const FlowModel& model, const std::filesystem::path& path) {
  write_checkpoint_file(path, model_contents(model));
}

FlowModel load_checkpoint(const std::filesystem::path& path, const GraphSpec& expected) {
  return model_from_contents(read_checkpoint_file(path), expected);
}

FlowModel load_checkpoint(const std::filesystem::path& path) {
  const CheckpointContents c = read_checkpoint_file(path);
  return model_from_contents(c, c.spec);
}

}  // namespace gnvp
