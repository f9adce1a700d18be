// SPDX-License-Identifier: Apache-2.0
//
// Copyright 2026 The phasegen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "phasegen/coherence.hpp"
#include "phasegen/signalgen.hpp"

// PGD1 container, all integers little-endian:
//
//   "PGD1" | u32 header length | UTF-8 JSON header
//   | phases  B*K*M f32 (sample-major, then bin, then mic)
//   | labels  B i32
//   | params  JSON array of B records, header["params_bytes"] bytes
//
// Header keys: B, K, M, C, dtype ("f32"), seed, batch_index, config_hash
// (16 hex digits, FNV-1a 64 of config.dump()), params_bytes, config.
// Containers may be concatenated back to back.

namespace phasegen {

inline constexpr std::string_view kMagic = "PGD1";

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ContainerError : public std::runtime_error {
 public:
  enum class Kind { bad_magic, truncated_payload, length_mismatch, bad_header, invalid_label };

  ContainerError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<char>((v >> s) & 0xffu));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int s = 0; s < 64; s += 8) out.push_back(static_cast<char>((v >> s) & 0xffu));
}

inline std::uint32_t get_u32(const char* p) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[b])) << (8 * b);
  return v;
}

inline std::uint64_t get_u64(const char* p) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[b])) << (8 * b);
  return v;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::uint64_t parse_hex64(const std::string& s) {
  if (s.size() != 16 || s.find_first_not_of("0123456789abcdef") != std::string::npos) {
    throw ContainerError(ContainerError::Kind::bad_header, "config_hash must be 16 lowercase hex digits");
  }
  return std::stoull(s, nullptr, 16);
}

// Reads exactly n bytes or reports how many arrived.
inline std::size_t read_some(std::istream& in, char* dst, std::size_t n) {
  in.read(dst, static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(in.gcount());
}

inline void read_exact(std::istream& in, char* dst, std::size_t n, const char* what) {
  if (read_some(in, dst, n) != n) {
    throw ContainerError(ContainerError::Kind::truncated_payload, std::string("truncated payload: ") + what);
  }
}

inline std::string encode(std::string_view header, std::string_view payload) {
  std::string out;
  out.reserve(8 + header.size() + payload.size());
  out.append(kMagic);
  put_u32(out, static_cast<std::uint32_t>(header.size()));
  out.append(header);
  out.append(payload);
  return out;
}

inline std::size_t write_bytes(std::ostream& sink, const std::string& bytes) {
  sink.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!sink) throw IoError("write failed");
  return bytes.size();
}

// Returns the parsed header, or nullopt on a clean end of stream.
inline std::optional<nlohmann::json> read_header(std::istream& in) {
  char magic[4];
  const std::size_t got = read_some(in, magic, 4);
  if (got == 0) return std::nullopt;
  if (got < 4) throw ContainerError(ContainerError::Kind::truncated_payload, "truncated payload: magic");
  if (std::string_view(magic, 4) != kMagic) throw ContainerError(ContainerError::Kind::bad_magic, "bad magic");
  char len_bytes[4];
  read_exact(in, len_bytes, 4, "header length");
  std::string header(get_u32(len_bytes), '\0');
  read_exact(in, header.data(), header.size(), "header");
  try {
    auto j = nlohmann::json::parse(header);
    if (!j.is_object()) throw ContainerError(ContainerError::Kind::bad_header, "header is not a JSON object");
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw ContainerError(ContainerError::Kind::bad_header, std::string("header: ") + e.what());
  }
}

}  // namespace detail

/// Serializes one batch; returns the number of bytes written.
inline std::size_t write_batch(const DatasetBatch& batch, std::ostream& sink) {
  const std::size_t count = static_cast<std::size_t>(batch.num_samples);
  if (batch.phases.size() != count * batch.map_size() || batch.labels.size() != count ||
      batch.params.size() != count) {
    throw std::invalid_argument("write_batch: batch sizes are inconsistent");
  }
  for (const auto label : batch.labels) {
    if (label < 0 || label >= batch.num_classes) throw std::invalid_argument("write_batch: label out of range");
  }

  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : batch.params) params.push_back(p.to_json());
  const std::string params_text = params.dump();

  const nlohmann::json header = {{"B", batch.num_samples},
                                 {"K", batch.num_bins},
                                 {"M", batch.num_mics},
                                 {"C", batch.num_classes},
                                 {"dtype", "f32"},
                                 {"seed", batch.seed},
                                 {"batch_index", batch.batch_index},
                                 {"config_hash", detail::hex64(batch.config_hash)},
                                 {"params_bytes", params_text.size()},
                                 {"config", batch.config}};

  std::string payload;
  payload.reserve(4 * (batch.phases.size() + count) + params_text.size());
  for (const float v : batch.phases) detail::put_u32(payload, std::bit_cast<std::uint32_t>(v));
  for (const auto label : batch.labels) detail::put_u32(payload, static_cast<std::uint32_t>(label));
  payload.append(params_text);
  return detail::write_bytes(sink, detail::encode(header.dump(), payload));
}

/// Reads the next batch, or nullopt when the stream ends cleanly before a
/// new container starts.
inline std::optional<DatasetBatch> try_read_batch(std::istream& source) {
  using Kind = ContainerError::Kind;
  auto header = detail::read_header(source);
  if (!header) return std::nullopt;
  const nlohmann::json& h = *header;

  DatasetBatch batch;
  std::uint64_t params_bytes = 0;
  try {
    if (h.value("kind", std::string("batch")) != "batch") throw ContainerError(Kind::bad_header, "not a batch container");
    if (h.at("dtype").get<std::string>() != "f32") throw ContainerError(Kind::bad_header, "unsupported dtype");
    batch.num_samples = h.at("B").get<int>();
    batch.num_bins = h.at("K").get<int>();
    batch.num_mics = h.at("M").get<int>();
    batch.num_classes = h.at("C").get<int>();
    batch.seed = h.at("seed").get<std::uint64_t>();
    batch.batch_index = h.at("batch_index").get<std::uint64_t>();
    batch.config_hash = detail::parse_hex64(h.at("config_hash").get<std::string>());
    params_bytes = h.at("params_bytes").get<std::uint64_t>();
    batch.config = h.value("config", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw ContainerError(Kind::bad_header, std::string("header: ") + e.what());
  }
  if (batch.num_samples < 0 || batch.num_bins < 1 || batch.num_mics < 1 || batch.num_classes < 1) {
    throw ContainerError(Kind::bad_header, "header: invalid dimensions");
  }
  if (!batch.config.empty() && fnv1a64(batch.config.dump()) != batch.config_hash) {
    throw ContainerError(Kind::bad_header, "header: config_hash does not match embedded config");
  }

  const auto count = static_cast<std::size_t>(batch.num_samples);
  std::string raw(4 * count * batch.map_size(), '\0');
  detail::read_exact(source, raw.data(), raw.size(), "phases");
  batch.phases.resize(count * batch.map_size());
  for (std::size_t n = 0; n < batch.phases.size(); ++n) {
    batch.phases[n] = std::bit_cast<float>(detail::get_u32(raw.data() + 4 * n));
  }

  raw.assign(4 * count, '\0');
  detail::read_exact(source, raw.data(), raw.size(), "labels");
  batch.labels.resize(count);
  for (std::size_t b = 0; b < count; ++b) {
    batch.labels[b] = static_cast<std::int32_t>(detail::get_u32(raw.data() + 4 * b));
    if (batch.labels[b] < 0 || batch.labels[b] >= batch.num_classes) {
      throw ContainerError(Kind::invalid_label, "label out of range at sample " + std::to_string(b));
    }
  }

  raw.assign(params_bytes, '\0');
  detail::read_exact(source, raw.data(), raw.size(), "params");
  try {
    const auto params = nlohmann::json::parse(raw);
    if (!params.is_array() || params.size() != count) {
      throw ContainerError(Kind::length_mismatch, "params record count does not match B");
    }
    batch.params.reserve(count);
    for (const auto& p : params) batch.params.push_back(ScenarioParams::from_json(p));
  } catch (const nlohmann::json::exception& e) {
    throw ContainerError(Kind::length_mismatch, std::string("params: ") + e.what());
  }
  return batch;
}

inline DatasetBatch read_batch(std::istream& source) {
  auto batch = try_read_batch(source);
  if (!batch) throw ContainerError(ContainerError::Kind::truncated_payload, "truncated payload: empty stream");
  return std::move(*batch);
}

/// Every container in a concatenated stream, in order.
inline std::vector<DatasetBatch> read_all_batches(std::istream& source) {
  std::vector<DatasetBatch> out;
  while (auto batch = try_read_batch(source)) out.push_back(std::move(*batch));
  return out;
}

inline std::size_t write_batch_file(const DatasetBatch& batch, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const std::size_t n = write_batch(batch, out);
  out.close();
  if (!out) throw IoError("cannot finish writing " + path.string());
  return n;
}

/// Reads a file holding exactly one container; trailing bytes are a length
/// mismatch.
inline DatasetBatch read_batch_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  DatasetBatch batch = read_batch(in);
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ContainerError(ContainerError::Kind::length_mismatch, "trailing bytes after container payload");
  }
  return batch;
}

/// Coherence factors in the same container: header {"kind":
/// "coherence_factors", K, M, dtype: "f64"}, then K*M*M f64 (bin-major,
/// row-major L), then K f64 minimum eigenvalues.
inline std::size_t write_factors(const CoherenceFactors& factors, std::ostream& sink) {
  const int bins = factors.num_bins();
  const auto m = factors.num_mics();
  const nlohmann::json header = {{"kind", "coherence_factors"}, {"K", bins}, {"M", m}, {"dtype", "f64"}};
  std::string payload;
  payload.reserve(8 * static_cast<std::size_t>(bins) * static_cast<std::size_t>(m * m + 1));
  for (const auto& l : factors.factors) {
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) detail::put_u64(payload, std::bit_cast<std::uint64_t>(l(i, j)));
    }
  }
  for (const double v : factors.min_eigenvalues) detail::put_u64(payload, std::bit_cast<std::uint64_t>(v));
  return detail::write_bytes(sink, detail::encode(header.dump(), payload));
}

inline CoherenceFactors read_factors(std::istream& source) {
  using Kind = ContainerError::Kind;
  auto header = detail::read_header(source);
  if (!header) throw ContainerError(Kind::truncated_payload, "truncated payload: empty stream");
  int bins = 0;
  Eigen::Index m = 0;
  try {
    if (header->value("kind", std::string()) != "coherence_factors" || header->at("dtype") != "f64") {
      throw ContainerError(Kind::bad_header, "not a coherence factor container");
    }
    bins = header->at("K").get<int>();
    m = header->at("M").get<Eigen::Index>();
  } catch (const nlohmann::json::exception& e) {
    throw ContainerError(Kind::bad_header, std::string("header: ") + e.what());
  }
  if (bins < 1 || m < 1) throw ContainerError(Kind::bad_header, "header: invalid dimensions");
  std::string raw(8 * static_cast<std::size_t>(bins) * static_cast<std::size_t>(m * m + 1), '\0');
  detail::read_exact(source, raw.data(), raw.size(), "factors");
  CoherenceFactors out;
  const char* p = raw.data();
  for (int k = 0; k < bins; ++k) {
    RealMatrix l(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j, p += 8) l(i, j) = std::bit_cast<double>(detail::get_u64(p));
    }
    out.factors.push_back(std::move(l));
  }
  for (int k = 0; k < bins; ++k, p += 8) out.min_eigenvalues.push_back(std::bit_cast<double>(detail::get_u64(p)));
  return out;
}

}  // namespace phasegen
