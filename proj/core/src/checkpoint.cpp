// SPDX-License-Identifier: Apache-2.0
#include "geofno/checkpoint.hpp"

#include <cstring>
#include <map>

#include "geofno/blob.hpp"
#include "geofno/config.hpp"
#include "geofno/error.hpp"

namespace geofno {

namespace {

constexpr char kMagic[4] = {'G', 'F', 'N', 'C'};

Tensor modes_tensor(const ModeSet& modes) {
  std::vector<double> v(modes.flat().begin(), modes.flat().end());
  return Tensor({modes.size(), modes.dim()}, std::move(v));
}

Tensor vector_tensor(const std::vector<double>& v) { return Tensor({v.size()}, std::vector<double>(v)); }

}  // namespace

std::string encode_checkpoint(const Checkpoint& ck) {
  ck.config.validate();
  ConfigFile man;
  ck.config.write_to(man, "model");
  if (ck.train_config) ck.train_config->write_to(man, "train");
  if (ck.rng_state) man.set("rng", "state", *ck.rng_state);

  std::vector<std::pair<std::string, std::string>> entries;
  const auto names = GeoFnoModel::param_names(ck.config);
  if (names.size() != ck.params.size()) throw DimensionError("checkpoint parameter count does not match the config");
  for (std::size_t i = 0; i < names.size(); ++i) entries.emplace_back("param." + names[i], blob::encode(ck.params[i]));
  entries.emplace_back("modes", blob::encode(modes_tensor(ModeSet(ck.config.k_max))));
  if (ck.state) {
    const auto& s = *ck.state;
    man.set("state", "next_epoch", std::to_string(s.next_epoch));
    man.set("state", "adam_step", std::to_string(s.optimizer.step));
    man.set("state", "adam_buffers", std::to_string(s.optimizer.m.size()));
    man.set("state", "config_hash", s.report.config_hash);
    for (std::size_t i = 0; i < s.optimizer.m.size(); ++i) {
      entries.emplace_back("adam.m." + std::to_string(i), blob::encode(vector_tensor(s.optimizer.m[i])));
      entries.emplace_back("adam.v." + std::to_string(i), blob::encode(vector_tensor(s.optimizer.v[i])));
    }
    entries.emplace_back("initial_loss", blob::encode(Tensor({1}, std::vector<double>{s.initial_loss})));
    std::vector<double> rows;
    for (const auto& e : s.report.epochs) {
      rows.insert(rows.end(), {static_cast<double>(e.epoch), e.train_err, e.test_err, e.lr});
    }
    entries.emplace_back("report", blob::encode(Tensor({s.report.epochs.size(), 4}, std::move(rows))));
  }

  const std::string text = man.to_string();
  std::string out(kMagic, 4);
  blob::put_u32(out, kCheckpointVersion);
  blob::put_u64(out, text.size());
  out += text;
  blob::put_u32(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& [name, bytes] : entries) {
    blob::put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    blob::put_u64(out, bytes.size());
    out += bytes;
  }
  blob::put_u64(out, blob::fnv1a(out));
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bad checkpoint magic", 0);
  if (bytes.size() < 16) throw FormatError("truncated checkpoint", bytes.size());
  const std::size_t body = bytes.size() - 8;
  blob::Reader trailer(bytes.substr(body), body);
  if (trailer.u64() != blob::fnv1a(bytes.substr(0, body))) throw FormatError("checkpoint checksum mismatch", body);

  blob::Reader r(bytes.substr(0, body));
  r.take(4);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) throw VersionError(version, kCheckpointVersion);
  const std::uint64_t text_len = r.u64();
  const std::uint64_t text_at = r.offset();
  const ConfigFile man = [&] {
    try {
      return ConfigFile::parse(r.take(text_len));
    } catch (const ConfigError& e) {
      throw FormatError(std::string("unreadable checkpoint manifest: ") + e.what(), text_at);
    }
  }();
  std::map<std::string, std::pair<std::string_view, std::uint64_t>> entries;
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = r.u32();
    const std::string name(r.take(name_len));
    const std::uint64_t len = r.u64();
    const std::uint64_t at = r.offset();
    entries[name] = {r.take(len), at};
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after checkpoint entries", r.offset());

  auto entry = [&](const std::string& name) {
    const auto it = entries.find(name);
    if (it == entries.end()) throw FormatError("checkpoint entry '" + name + "' missing", body);
    return blob::decode(it->second.first, it->second.second);
  };

  Checkpoint ck;
  ck.config = ModelConfig::from_config(man, "model");
  const auto names = GeoFnoModel::param_names(ck.config);
  for (const auto& name : names) ck.params.push_back(entry("param." + name));
  if (!entry("modes").bitwise_equal(modes_tensor(ModeSet(ck.config.k_max)))) {
    throw FormatError("stored mode enumeration differs from the configured one", body);
  }
  if (man.sections().count("train")) ck.train_config = TrainConfig::from_config(man, "train");
  if (const auto* s = man.find("rng", "state")) ck.rng_state = *s;
  if (man.sections().count("state")) {
    TrainState st;
    st.next_epoch = static_cast<std::size_t>(man.get_int("state", "next_epoch", 0));
    st.optimizer.step = man.get_int("state", "adam_step", 0);
    const auto buffers = static_cast<std::size_t>(man.get_int("state", "adam_buffers", 0));
    st.report.config_hash = man.get_string("state", "config_hash", "");
    for (std::size_t i = 0; i < buffers; ++i) {
      st.optimizer.m.push_back(entry("adam.m." + std::to_string(i)).to_vector());
      st.optimizer.v.push_back(entry("adam.v." + std::to_string(i)).to_vector());
    }
    st.initial_loss = entry("initial_loss").real()[0];
    const Tensor rows = entry("report");
    if (rows.rank() != 2 || rows.dim(1) != 4) throw FormatError("malformed training report entry", body);
    const auto v = rows.real();
    for (std::size_t e = 0; e < rows.dim(0); ++e) {
      st.report.epochs.push_back({static_cast<std::size_t>(v[e * 4]), v[e * 4 + 1], v[e * 4 + 2], v[e * 4 + 3], 0.0});
    }
    ck.state = std::move(st);
  }
  ck.model();  // shape validation
  return ck;
}

void save_checkpoint(const GeoFnoModel& model, const std::optional<TrainState>& state,
                     const std::filesystem::path& path, const std::optional<TrainConfig>& train_config) {
  Checkpoint ck{model.config(), model.params(), train_config, state, std::nullopt};
  blob::write_file(path, encode_checkpoint(ck));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(blob::read_file(path)); }

}  // namespace geofno
