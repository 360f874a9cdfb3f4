#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "microgan/config_json.hpp"
#include "microgan/trainer.hpp"

namespace microgan {

// Container layout: 8-byte magic, little-endian u16 version, little-endian
// u32 JSON header length, the UTF-8 header, then raw little-endian float32
// tensor data at the offsets the header's directory lists. Tensors are
// stored as float32 regardless of the training scalar.
inline constexpr char kCheckpointMagic[8] = {'M', 'G', 'A', 'N',
                                             'C', 'K', 'P', 'T'};
inline constexpr uint16_t kCheckpointVersion = 1;

namespace detail {

template <typename S>
void append_f32_le(std::string& out, const Tensor<S>& t) {
  static_assert(sizeof(float) == 4);
  std::vector<float> f(static_cast<size_t>(t.numel()));
  for (int64_t i = 0; i < t.numel(); ++i) f[static_cast<size_t>(i)] =
      static_cast<float>(t[i]);
  if constexpr (std::endian::native == std::endian::little) {
    out.append(reinterpret_cast<const char*>(f.data()), f.size() * 4);
  } else {
    for (float v : f) {
      uint32_t u;
      std::memcpy(&u, &v, 4);
      out.push_back(static_cast<char>(u & 0xff));
      out.push_back(static_cast<char>((u >> 8) & 0xff));
      out.push_back(static_cast<char>((u >> 16) & 0xff));
      out.push_back(static_cast<char>((u >> 24) & 0xff));
    }
  }
}

template <typename S>
void read_f32_le(Tensor<S>& t, const char* data) {
  for (int64_t i = 0; i < t.numel(); ++i) {
    uint32_t u;
    if constexpr (std::endian::native == std::endian::little) {
      std::memcpy(&u, data + i * 4, 4);
    } else {
      const auto* b = reinterpret_cast<const unsigned char*>(data + i * 4);
      u = static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
          (static_cast<uint32_t>(b[2]) << 16) |
          (static_cast<uint32_t>(b[3]) << 24);
    }
    float f;
    std::memcpy(&f, &u, 4);
    t[i] = static_cast<S>(f);
  }
}

inline void push_u16_le(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline void push_u32_le(std::string& out, uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

// directory walk: model parameters and buffers in layer order, then the
// optimizer moments in name order
template <typename S, typename F>
void walk_state_tensors(const TrainerState<S>& st, F&& fn) {
  st.generator.for_each_param(
      [&](const std::string& n, const Tensor<S>& t) { fn("G." + n, t); });
  st.generator.for_each_buffer(
      [&](const std::string& n, const Tensor<S>& t) { fn("G." + n, t); });
  st.discriminator.for_each_param(
      [&](const std::string& n, const Tensor<S>& t) { fn("D." + n, t); });
  st.discriminator.for_each_buffer(
      [&](const std::string& n, const Tensor<S>& t) { fn("D." + n, t); });
  for (const auto& [n, t] : st.adam_g.m) fn("adam_g." + n + ".m", t);
  for (const auto& [n, t] : st.adam_g.v) fn("adam_g." + n + ".v", t);
  for (const auto& [n, t] : st.adam_d.m) fn("adam_d." + n + ".m", t);
  for (const auto& [n, t] : st.adam_d.v) fn("adam_d." + n + ".v", t);
}

}  // namespace detail

// Writes to "<path>.tmp" and renames, so a crash mid-save never leaves a
// half-written checkpoint at the target path.
template <typename S>
void save_checkpoint(const TrainerState<S>& st, const std::string& path) {
  Json dir = Json::array();
  std::string blob;
  detail::walk_state_tensors(st, [&](const std::string& name,
                                     const Tensor<S>& t) {
    Json e;
    e["name"] = name;
    e["shape"] = t.shape();
    e["offset"] = blob.size();
    dir.push_back(std::move(e));
    detail::append_f32_le(blob, t);
  });

  Json header;
  header["arch"] = model_scale_to_json(st.scale);
  header["config"] = train_config_to_json(st.config);
  header["progress"] = {
      {"iteration", st.iteration}, {"epoch", st.epoch}, {"cursor", st.cursor}};
  header["rng_state"] = st.rng_state;
  header["optim"] = {{"g_t", st.adam_g.t}, {"d_t", st.adam_d.t}};
  header["tensors"] = std::move(dir);
  const std::string header_text = header.dump();

  std::string out;
  out.reserve(14 + header_text.size() + blob.size());
  out.append(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::push_u16_le(out, kCheckpointVersion);
  detail::push_u32_le(out, static_cast<uint32_t>(header_text.size()));
  out += header_text;
  out += blob;

  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorKind::Io, "cannot open " + tmp + " for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) fail(ErrorKind::Io, "short write to " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec)
    fail(ErrorKind::Io, "cannot move " + tmp + " into place: " + ec.message());
}

// Validates the whole file (magic, version, header, directory names, shapes
// and extents) before building anything, so a bad checkpoint can never leave
// a partially loaded state behind.
template <typename S>
TrainerState<S> load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::Io, "cannot open checkpoint " + path);
  std::string raw((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());

  if (raw.size() < 14 ||
      std::memcmp(raw.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0)
    fail(ErrorKind::Load, path + " is not a checkpoint (bad magic)");
  const auto* u = reinterpret_cast<const unsigned char*>(raw.data());
  const uint16_t version = static_cast<uint16_t>(u[8] | (u[9] << 8));
  if (version != kCheckpointVersion)
    fail(ErrorKind::Load, path + " has unsupported version " +
                              std::to_string(version));
  const uint32_t header_len = static_cast<uint32_t>(u[10]) |
                              (static_cast<uint32_t>(u[11]) << 8) |
                              (static_cast<uint32_t>(u[12]) << 16) |
                              (static_cast<uint32_t>(u[13]) << 24);
  if (raw.size() < 14 + static_cast<size_t>(header_len))
    fail(ErrorKind::Load, path + " is truncated inside the header");

  Json header;
  try {
    header = Json::parse(raw.substr(14, header_len));
  } catch (const Json::exception& e) {
    fail(ErrorKind::Load, path + " header is not valid JSON: " + e.what());
  }
  check_keys(header, {"arch", "config", "progress", "rng_state", "optim",
                      "tensors"},
             "checkpoint header");

  TrainerState<S> st;
  try {
    st.scale = model_scale_from_json(header.at("arch"), "arch");
    st.config = train_config_from_json(header.at("config"), "config");
  } catch (const Error& e) {
    fail(ErrorKind::Load, path + ": " + e.what());
  }
  const Json& progress = header.at("progress");
  check_keys(progress, {"iteration", "epoch", "cursor"}, "progress");
  st.iteration = progress.at("iteration").get<int64_t>();
  st.epoch = progress.at("epoch").get<int64_t>();
  st.cursor = progress.at("cursor").get<int64_t>();
  if (st.iteration < 0 || st.epoch < 0 || st.cursor < 0)
    fail(ErrorKind::Load, path + " has negative progress counters");
  st.rng_state = header.at("rng_state").get<std::string>();
  const Json& optim = header.at("optim");
  check_keys(optim, {"g_t", "d_t"}, "optim");
  st.adam_g.t = optim.at("g_t").get<int64_t>();
  st.adam_d.t = optim.at("d_t").get<int64_t>();
  st.adam_g.cfg = st.config.adam_for_g();
  st.adam_d.cfg = st.config.adam_for_d();

  st.generator = build_generator<S>(st.scale);
  st.discriminator = build_discriminator<S>(st.scale);

  // index the destinations the directory is allowed to fill
  std::map<std::string, Tensor<S>*> dest;
  st.generator.for_each_param(
      [&](const std::string& n, Tensor<S>& t) { dest["G." + n] = &t; });
  st.generator.for_each_buffer(
      [&](const std::string& n, Tensor<S>& t) { dest["G." + n] = &t; });
  st.discriminator.for_each_param(
      [&](const std::string& n, Tensor<S>& t) { dest["D." + n] = &t; });
  st.discriminator.for_each_buffer(
      [&](const std::string& n, Tensor<S>& t) { dest["D." + n] = &t; });

  const size_t data_start = 14 + header_len;
  const Json& tensors = header.at("tensors");
  if (!tensors.is_array())
    fail(ErrorKind::Load, path + " tensor directory must be an array");

  std::map<std::string, bool> filled;
  for (const Json& e : tensors) {
    check_keys(e, {"name", "shape", "offset"}, "tensor entry");
    const std::string name = e.at("name").get<std::string>();
    const Shape shape = e.at("shape").get<Shape>();
    const int64_t offset = e.at("offset").get<int64_t>();

    Tensor<S>* target = nullptr;
    if (auto it = dest.find(name); it != dest.end()) {
      target = it->second;
      if (target->shape() != shape)
        fail(ErrorKind::Load, path + ": tensor " + name + " has shape " +
                                  shape_str(shape) + ", expected " +
                                  shape_str(target->shape()));
    } else if (name.rfind("adam_", 0) == 0) {
      // adam_g.<param>.m / .v; moments may be absent before the first step
      const bool is_g = name.rfind("adam_g.", 0) == 0;
      const bool is_d = name.rfind("adam_d.", 0) == 0;
      if ((!is_g && !is_d) || name.size() < 10 ||
          (name.substr(name.size() - 2) != ".m" &&
           name.substr(name.size() - 2) != ".v"))
        fail(ErrorKind::Load, path + " directory has unknown tensor " + name);
      const std::string param = name.substr(7, name.size() - 9);
      const bool is_m = name.substr(name.size() - 2) == ".m";
      auto& model = is_g ? st.generator : st.discriminator;
      Tensor<S>* pt = nullptr;
      model.for_each_param([&](const std::string& n, Tensor<S>& t) {
        if (n == param) pt = &t;
      });
      if (!pt)
        fail(ErrorKind::Load,
             path + " has moments for unknown parameter " + name);
      auto& state = is_g ? st.adam_g : st.adam_d;
      auto& side = is_m ? state.m : state.v;
      target = &side.emplace(param, Tensor<S>(pt->shape())).first->second;
      if (Shape(pt->shape()) != shape)
        fail(ErrorKind::Load, path + ": tensor " + name + " has shape " +
                                  shape_str(shape) + ", expected " +
                                  shape_str(pt->shape()));
    } else {
      fail(ErrorKind::Load, path + " directory has unknown tensor " + name);
    }

    if (filled.count(name))
      fail(ErrorKind::Load, path + " directory lists " + name + " twice");
    filled[name] = true;

    const int64_t bytes = target->numel() * 4;
    if (offset < 0 ||
        data_start + static_cast<size_t>(offset + bytes) > raw.size())
      fail(ErrorKind::Load, path + " is truncated: tensor " + name +
                                " overruns the file");
    detail::read_f32_le(*target, raw.data() + data_start + offset);
  }

  for (const auto& [name, ptr] : dest) {
    (void)ptr;
    if (!filled.count(name))
      fail(ErrorKind::Load, path + " is missing tensor " + name);
  }
  return st;
}

}  // namespace microgan
