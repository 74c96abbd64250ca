// SPDX-License-Identifier: Apache-2.0
#include "geofno/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "geofno/blob.hpp"
#include "geofno/config.hpp"
#include "geofno/error.hpp"

namespace geofno {

namespace fs = std::filesystem;

namespace {

constexpr int kBundleVersion = 1;

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = s.find(',', pos);
    out.push_back(s.substr(pos, comma - pos));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

void check_names(const std::vector<std::string>& names, const char* what) {
  for (const auto& n : names) {
    if (n.empty() || n.find_first_of(",\n\r=#;") != std::string::npos) {
      throw ConfigError(std::string("invalid ") + what + " entry '" + n + "'");
    }
  }
}

std::string sample_stem(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sample_%05zu", i);
  return buf;
}

Shape field_shape(const Geometry& g, std::size_t channels) {
  Shape s = g.kind == GeometryKind::kPointCloud ? Shape{g.point_count()} : g.grid();
  s.push_back(channels);
  return s;
}

bool optional_equal(const std::optional<Tensor>& a, const std::optional<Tensor>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || a->bitwise_equal(*b);
}

}  // namespace

void DatasetBundle::validate() const {
  const auto& m = manifest;
  check_names(m.input_channels, "input channel");
  check_names(m.output_channels, "output channel");
  check_names(m.input_units, "input unit");
  check_names(m.output_units, "output unit");
  if (m.input_units.size() != m.input_channels.size() || m.output_units.size() != m.output_channels.size()) {
    throw ConfigError("manifest needs one unit per channel");
  }
  if (m.output_channels.empty()) throw ConfigError("manifest declares no output channels");
  const std::size_t ci = m.input_channels.size(), co = m.output_channels.size();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const std::string tag = "record " + std::to_string(i) + ": ";
    r.geometry.validate();
    if (r.geometry.dim() != m.dim) throw DimensionError(tag + "geometry dimension differs from manifest");
    if (m.io_mode != IoMode::kPointCloud && r.geometry.kind != GeometryKind::kStructuredMesh) {
      throw KindError(tag + to_string(m.io_mode) + " bundles need structured meshes");
    }
    if (r.input.is_complex() || r.output.is_complex()) throw DtypeError(tag + "fields must be real");
    if (r.input.shape() != field_shape(r.geometry, ci)) {
      throw DimensionError(tag + "input shape " + shape_string(r.input.shape()) + ", expected " +
                           shape_string(field_shape(r.geometry, ci)));
    }
    if (m.io_mode == IoMode::kSpatiotemporal) {
      const auto grid = r.geometry.grid();
      if (r.output.rank() != 4 || r.output.dim(0) != grid[0] || r.output.dim(1) != grid[1] || r.output.dim(3) != co ||
          r.output.dim(2) == 0) {
        throw DimensionError(tag + "spatiotemporal output must be [s_1 x s_2 x T x c_out]");
      }
    } else if (r.output.shape() != field_shape(r.geometry, co)) {
      throw DimensionError(tag + "output shape " + shape_string(r.output.shape()) + ", expected " +
                           shape_string(field_shape(r.geometry, co)));
    }
    if (r.mask && r.mask->size() != r.geometry.point_count()) throw DimensionError(tag + "mask length mismatch");
  }
}

bool bundles_equal(const DatasetBundle& a, const DatasetBundle& b) {
  if (!(a.manifest == b.manifest) || a.records.size() != b.records.size()) return false;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const auto& x = a.records[i];
    const auto& y = b.records[i];
    if (x.geometry.kind != y.geometry.kind || !x.geometry.points.bitwise_equal(y.geometry.points)) return false;
    if (!optional_equal(x.geometry.design_params, y.geometry.design_params)) return false;
    if (x.geometry.mask != y.geometry.mask) return false;
    if (!x.input.bitwise_equal(y.input) || !x.output.bitwise_equal(y.output) || x.mask != y.mask) return false;
  }
  return true;
}

void save_bundle(const DatasetBundle& bundle, const fs::path& dir) {
  bundle.validate();
  fs::create_directories(dir);
  const auto& m = bundle.manifest;
  std::ostringstream man;
  man << "format = gfno-bundle\n"
      << "version = " << kBundleVersion << "\n"
      << "problem = " << m.problem << "\n"
      << "io_mode = " << to_string(m.io_mode) << "\n"
      << "dim = " << m.dim << "\n"
      << "input_channels = " << join(m.input_channels) << "\n"
      << "input_units = " << join(m.input_units) << "\n"
      << "output_channels = " << join(m.output_channels) << "\n"
      << "output_units = " << join(m.output_units) << "\n"
      << "generator_hash = " << m.generator_hash << "\n"
      << "samples = " << bundle.records.size() << "\n";
  auto emit = [&](const std::string& name, const std::string& bytes) {
    blob::write_file(dir / name, bytes);
    man << "file." << name << " = " << blob::hex64(blob::fnv1a(bytes)) << "\n";
  };
  for (std::size_t i = 0; i < bundle.records.size(); ++i) {
    const auto& r = bundle.records[i];
    const std::string stem = sample_stem(i);
    man << stem << ".kind = " << (r.geometry.kind == GeometryKind::kPointCloud ? "point_cloud" : "structured_mesh")
        << "\n";
    emit(stem + ".points.gfno", blob::encode(r.geometry.points));
    emit(stem + ".input.gfno", blob::encode(r.input));
    emit(stem + ".output.gfno", blob::encode(r.output));
    if (r.geometry.design_params) emit(stem + ".design.gfno", blob::encode(*r.geometry.design_params));
    if (r.geometry.mask) {
      emit(stem + ".geometry_mask.gfno", blob::encode_mask(*r.geometry.mask, {r.geometry.mask->size()}));
    }
    if (r.mask) emit(stem + ".mask.gfno", blob::encode_mask(*r.mask, {r.mask->size()}));
  }
  blob::write_file(dir / "manifest.txt", man.str());
}

DatasetBundle load_bundle(const fs::path& dir) {
  const std::string text = blob::read_file(dir / "manifest.txt");
  const ConfigFile man = ConfigFile::parse(text);
  if (man.get_string("", "format", "") != "gfno-bundle") throw FormatError("not a gfno bundle manifest", 0);
  const auto version = static_cast<std::uint32_t>(man.get_int("", "version", 0));
  if (version != kBundleVersion) throw VersionError(version, kBundleVersion);

  DatasetBundle b;
  auto& m = b.manifest;
  m.problem = man.get_string("", "problem", "unnamed");
  m.io_mode = io_mode_from_string(man.get_string("", "io_mode", "point_cloud"));
  m.dim = static_cast<std::size_t>(man.get_int("", "dim", 2));
  m.input_channels = split(man.get_string("", "input_channels", ""));
  m.input_units = split(man.get_string("", "input_units", ""));
  m.output_channels = split(man.get_string("", "output_channels", ""));
  m.output_units = split(man.get_string("", "output_units", ""));
  m.generator_hash = man.get_string("", "generator_hash", "none");
  const auto count = man.get_int("", "samples", -1);
  if (count < 0) throw FormatError("manifest lacks a sample count", 0);

  auto read = [&](const std::string& name, bool required) -> std::optional<std::string> {
    const std::string* sum = man.find("", "file." + name);
    if (!sum) {
      if (required) throw FormatError("manifest does not list " + name, 0);
      return std::nullopt;
    }
    std::string bytes = blob::read_file(dir / name);
    if (blob::hex64(blob::fnv1a(bytes)) != *sum) throw FormatError("checksum mismatch in " + name, 0);
    return bytes;
  };
  for (long long i = 0; i < count; ++i) {
    const std::string stem = sample_stem(static_cast<std::size_t>(i));
    const std::string kind = man.get_string("", stem + ".kind", "");
    SampleRecord r;
    if (kind == "point_cloud") {
      r.geometry.kind = GeometryKind::kPointCloud;
    } else if (kind == "structured_mesh") {
      r.geometry.kind = GeometryKind::kStructuredMesh;
    } else {
      throw FormatError(stem + ": unknown geometry kind '" + kind + "'", 0);
    }
    r.geometry.points = blob::decode(*read(stem + ".points.gfno", true));
    r.input = blob::decode(*read(stem + ".input.gfno", true));
    r.output = blob::decode(*read(stem + ".output.gfno", true));
    if (auto d = read(stem + ".design.gfno", false)) r.geometry.design_params = blob::decode(*d);
    if (auto g = read(stem + ".geometry_mask.gfno", false)) r.geometry.mask = blob::decode_mask(*g);
    if (auto k = read(stem + ".mask.gfno", false)) r.mask = blob::decode_mask(*k);
    b.records.push_back(std::move(r));
  }
  b.validate();
  return b;
}

void export_sample_csv(const DatasetBundle& bundle, std::size_t index, const fs::path& path) {
  if (index >= bundle.records.size()) throw DimensionError("sample index out of range");
  const auto& r = bundle.records[index];
  const std::size_t n = r.geometry.point_count(), d = r.geometry.dim();
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  static constexpr const char* kAxes[] = {"x", "y", "z"};
  for (std::size_t a = 0; a < d; ++a) out << (a ? "," : "") << kAxes[a];
  for (const auto& c : bundle.manifest.input_channels) out << "," << c;
  const bool pointwise_output = r.output.numel() % n == 0 && r.output.numel() / n == bundle.manifest.output_channels.size();
  if (pointwise_output) {
    for (const auto& c : bundle.manifest.output_channels) out << "," << c;
  }
  out << "\n";
  out.precision(17);
  const auto p = r.geometry.points.real();
  const auto in = r.input.real();
  const auto o = r.output.real();
  const std::size_t ci = r.input.numel() / n, co = r.output.numel() / n;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < d; ++a) out << (a ? "," : "") << p[i * d + a];
    for (std::size_t c = 0; c < ci; ++c) out << "," << in[i * ci + c];
    if (pointwise_output) {
      for (std::size_t c = 0; c < co; ++c) out << "," << o[i * co + c];
    }
    out << "\n";
  }
}

}  // namespace geofno
