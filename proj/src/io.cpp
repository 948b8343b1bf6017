#include "tmhd/io.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "tmhd/rng.hpp"

#ifndef TMHD_BUILD_ID
#define TMHD_BUILD_ID "unknown"
#endif

namespace tmhd {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_real(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw ConfigError("config: '" + key + "' expects a real number, got '" + text + "'");
  }
  return v;
}

template <typename Int>
Int to_int(const std::string& key, const std::string& text) {
  Int v = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("config: '" + key + "' expects an integer, got '" + text + "'");
  }
  return v;
}

Wavevector to_wavevector(const std::string& key, const std::string& text) {
  Wavevector k{};
  std::stringstream in(text);
  std::string part;
  int i = 0;
  while (std::getline(in, part, ',')) {
    if (i == 3) throw ConfigError("config: '" + key + "' expects three comma-separated integers");
    k[i++] = to_int<int>(key, trim(part));
  }
  if (i != 3) throw ConfigError("config: '" + key + "' expects three comma-separated integers");
  return k;
}

const std::map<std::string, std::vector<std::string>>& schema() {
  static const std::map<std::string, std::vector<std::string>> s = {
      {"grid", {"n", "cutoff"}},
      {"taming", {"N", "c_taming", "c1"}},
      {"noise",
       {"family", "k_noise", "amplitude", "amplitude_bar", "sigma_mass", "sigma_modulation", "h_kind",
        "h_amplitude", "h_amplitude_bar"}},
      {"forcing", {"amplitude", "amplitude_b"}},
      {"integrator", {"dt", "horizon", "galerkin_n", "blowup_guard"}},
      {"experiment",
       {"seed", "stream", "ic", "ic_k", "ic_polarization", "ic_slot", "ic_amplitude", "ic_slope", "ic_seed"}},
      {"output", {"record_every", "snapshot_every"}},
  };
  return s;
}

std::string ic_kind_name(InitialCondition::Kind k) {
  switch (k) {
    case InitialCondition::Kind::zero:
      return "zero";
    case InitialCondition::Kind::single_mode:
      return "single_mode";
    case InitialCondition::Kind::random_decay:
      return "random_decay";
  }
  return "unknown";
}

std::string slot_name(FieldSlot s) {
  switch (s) {
    case FieldSlot::velocity:
      return "velocity";
    case FieldSlot::magnetic:
      return "magnetic";
    case FieldSlot::both:
      return "both";
  }
  return "unknown";
}

// Family parameter carried by a (section, key) pair.
std::string family_key(const std::string& section, const std::string& key) {
  if (section == "forcing") return key == "amplitude" ? "forcing" : "forcing_b";
  return key;
}

}  // namespace

// Configuration ---------------------------------------------------------------------

SimConfig parse_config(const std::string& text) {
  std::map<std::string, std::map<std::string, std::string>> values;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find_first_of("#;");
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const std::string where = "config line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!schema().count(section)) throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    std::string sec = section;
    if (const auto dot = key.find('.'); dot != std::string::npos && section.empty()) {
      sec = key.substr(0, dot);
      key = key.substr(dot + 1);
      if (!schema().count(sec)) throw ConfigError(where + "unknown section '" + sec + "'");
    }
    if (sec.empty()) throw ConfigError(where + "key '" + key + "' outside any section");
    const auto& keys = schema().at(sec);
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw ConfigError(where + "unknown key '" + sec + "." + key + "'");
    }
    if (value.empty()) throw ConfigError(where + "empty value for '" + sec + "." + key + "'");
    if (!values[sec].emplace(key, value).second) throw ConfigError(where + "repeated key '" + sec + "." + key + "'");
  }

  auto get = [&](const std::string& sec, const std::string& key) -> const std::string* {
    auto s = values.find(sec);
    if (s == values.end()) return nullptr;
    auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  };

  SimConfig cfg;
  if (auto v = get("grid", "n")) cfg.grid.n = to_int<int>("grid.n", *v);
  cfg.grid.cutoff = cfg.grid.n / 3;
  if (auto v = get("grid", "cutoff")) cfg.grid.cutoff = to_int<int>("grid.cutoff", *v);
  try {
    cfg.grid.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  if (auto v = get("taming", "N")) cfg.taming.N = to_real("taming.N", *v);
  if (auto v = get("taming", "c_taming")) cfg.taming.c_taming = to_real("taming.c_taming", *v);
  if (auto v = get("taming", "c1")) cfg.taming.c1 = to_real("taming.c1", *v);

  if (auto v = get("noise", "family")) cfg.family_name = *v;
  for (const auto& sec : {"noise", "forcing"}) {
    for (const auto& key : schema().at(sec)) {
      if (key == "family") continue;
      if (auto v = get(sec, key)) {
        const std::string name = std::string(sec) + "." + key;
        if (key == "k_noise") {
          (void)to_int<std::size_t>(name, *v);
        } else if (key != "h_kind") {
          (void)to_real(name, *v);
        }
        cfg.family_params[family_key(sec, key)] = *v;
      }
    }
  }

  if (auto v = get("integrator", "dt")) cfg.dt = to_real("integrator.dt", *v);
  if (auto v = get("integrator", "horizon")) cfg.horizon = to_real("integrator.horizon", *v);
  if (auto v = get("integrator", "galerkin_n")) cfg.galerkin_n = to_int<int>("integrator.galerkin_n", *v);
  if (auto v = get("integrator", "blowup_guard")) cfg.blowup_guard = to_real("integrator.blowup_guard", *v);

  if (auto v = get("experiment", "seed")) cfg.seed = to_int<std::uint64_t>("experiment.seed", *v);
  if (auto v = get("experiment", "stream")) cfg.stream = to_int<std::uint64_t>("experiment.stream", *v);
  if (auto v = get("experiment", "ic")) {
    if (*v == "zero") {
      cfg.ic.kind = InitialCondition::Kind::zero;
    } else if (*v == "single_mode") {
      cfg.ic.kind = InitialCondition::Kind::single_mode;
    } else if (*v == "random_decay") {
      cfg.ic.kind = InitialCondition::Kind::random_decay;
    } else {
      throw ConfigError("config: experiment.ic must be zero, single_mode or random_decay");
    }
  }
  if (auto v = get("experiment", "ic_k")) cfg.ic.k = to_wavevector("experiment.ic_k", *v);
  if (auto v = get("experiment", "ic_polarization")) {
    cfg.ic.polarization = to_int<int>("experiment.ic_polarization", *v);
    if (cfg.ic.polarization != 0 && cfg.ic.polarization != 1) {
      throw ConfigError("config: experiment.ic_polarization must be 0 or 1");
    }
  }
  if (auto v = get("experiment", "ic_slot")) {
    if (*v == "velocity") {
      cfg.ic.slot = FieldSlot::velocity;
    } else if (*v == "magnetic") {
      cfg.ic.slot = FieldSlot::magnetic;
    } else if (*v == "both") {
      cfg.ic.slot = FieldSlot::both;
    } else {
      throw ConfigError("config: experiment.ic_slot must be velocity, magnetic or both");
    }
  }
  if (auto v = get("experiment", "ic_amplitude")) cfg.ic.amplitude = to_real("experiment.ic_amplitude", *v);
  if (auto v = get("experiment", "ic_slope")) cfg.ic.slope = to_real("experiment.ic_slope", *v);
  if (auto v = get("experiment", "ic_seed")) cfg.ic.seed = to_int<std::uint64_t>("experiment.ic_seed", *v);

  if (auto v = get("output", "record_every")) cfg.record_every = to_int<int>("output.record_every", *v);
  if (auto v = get("output", "snapshot_every")) cfg.snapshot_every = to_int<int>("output.snapshot_every", *v);

  try {
    cfg.rebuild_family();
    cfg.validate();
    (void)cfg.steps();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

SimConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string serialize_config(const SimConfig& cfg) {
  std::ostringstream out;
  out << "[grid]\n"
      << "n = " << cfg.grid.n << "\n"
      << "cutoff = " << cfg.grid.cutoff << "\n\n";
  out << "[taming]\n"
      << "N = " << format_double(cfg.taming.N) << "\n"
      << "c_taming = " << format_double(cfg.taming.c_taming) << "\n"
      << "c1 = " << format_double(cfg.taming.c1) << "\n\n";
  out << "[noise]\n"
      << "family = " << cfg.family_name << "\n";
  for (const auto& key : schema().at("noise")) {
    if (auto it = cfg.family_params.find(key); it != cfg.family_params.end()) {
      out << key << " = " << it->second << "\n";
    }
  }
  const auto& f = cfg.family;
  const auto& m = f.metadata();
  out << "# resolved: k_noise " << f.k_noise << ", amplitude " << format_double(f.sigma_amplitude)
      << ", amplitude_bar " << format_double(f.sigma_bar_amplitude) << ", sigma_modulation "
      << format_double(f.sigma_modulation) << ", h_kind " << (f.h_kind == HKind::bounded ? "bounded" : "quadratic")
      << ", h_amplitude " << format_double(f.h_amplitude) << ", h_amplitude_bar " << format_double(f.h_bar_amplitude)
      << "\n# sigma mass " << format_double(m.sigma_mass) << "\n\n";
  out << "[forcing]\n";
  for (const auto& key : schema().at("forcing")) {
    if (auto it = cfg.family_params.find(family_key("forcing", key)); it != cfg.family_params.end()) {
      out << key << " = " << it->second << "\n";
    }
  }
  out << "# resolved: amplitude " << format_double(f.forcing_v) << ", amplitude_b " << format_double(f.forcing_B)
      << "\n\n";
  out << "[integrator]\n"
      << "dt = " << format_double(cfg.dt) << "\n"
      << "horizon = " << format_double(cfg.horizon) << "\n"
      << "galerkin_n = " << cfg.galerkin_n << "\n"
      << "blowup_guard = " << format_double(cfg.blowup_guard) << "\n\n";
  out << "[experiment]\n"
      << "seed = " << cfg.seed << "\n"
      << "stream = " << cfg.stream << "\n"
      << "ic = " << ic_kind_name(cfg.ic.kind) << "\n"
      << "ic_k = " << cfg.ic.k[0] << "," << cfg.ic.k[1] << "," << cfg.ic.k[2] << "\n"
      << "ic_polarization = " << cfg.ic.polarization << "\n"
      << "ic_slot = " << slot_name(cfg.ic.slot) << "\n"
      << "ic_amplitude = " << format_double(cfg.ic.amplitude) << "\n"
      << "ic_slope = " << format_double(cfg.ic.slope) << "\n"
      << "ic_seed = " << cfg.ic.seed << "\n\n";
  out << "[output]\n"
      << "record_every = " << cfg.record_every << "\n"
      << "snapshot_every = " << cfg.snapshot_every << "\n";
  return out.str();
}

// Snapshots -------------------------------------------------------------------------

namespace {

void put_u32(std::vector<unsigned char>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_f64(std::vector<unsigned char>& b, double d) {
  std::uint64_t v = 0;
  std::memcpy(&v, &d, sizeof v);
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

double get_f64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  double d = 0.0;
  std::memcpy(&d, &v, sizeof d);
  return d;
}

std::uint32_t crc32_of(const unsigned char* data, std::size_t size) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (size > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(size, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    size -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

constexpr std::size_t kHeaderBytes = 4 + 4 + 4 + 4 + 8 + 8;

int signed_index(int i, int n) { return i <= n / 2 ? i : i - n; }

}  // namespace

std::vector<unsigned char> encode_snapshot(const SnapshotData& s) {
  const GridSpec& g = s.y.grid();
  const auto n = static_cast<std::size_t>(g.n);
  std::vector<unsigned char> b;
  b.reserve(kHeaderBytes + 6 * n * n * n * 16 + 4);
  for (char c : {'S', 'T', 'M', 'H'}) b.push_back(static_cast<unsigned char>(c));
  put_u32(b, kSnapshotVersion);
  put_u32(b, static_cast<std::uint32_t>(g.n));
  put_u32(b, static_cast<std::uint32_t>(g.cutoff));
  put_f64(b, s.t);
  put_f64(b, s.taming_N);
  for (int f = 0; f < 2; ++f) {
    const auto& field = s.y.field(f);
    for (int c = 0; c < 3; ++c) {
      for (int i1 = 0; i1 < g.n; ++i1) {
        for (int i2 = 0; i2 < g.n; ++i2) {
          for (int i3 = 0; i3 < g.n; ++i3) {
            const Wavevector k{signed_index(i1, g.n), signed_index(i2, g.n), signed_index(i3, g.n)};
            const Complex z = in_cube(g, k) ? field.at(c, k) : Complex{};
            put_f64(b, z.real());
            put_f64(b, z.imag());
          }
        }
      }
    }
  }
  put_u32(b, crc32_of(b.data(), b.size()));
  return b;
}

SnapshotData decode_snapshot(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < kHeaderBytes + 4) throw FormatError("snapshot: file too short");
  const std::size_t payload = bytes.size() - 4;
  if (crc32_of(bytes.data(), payload) != get_u32(bytes.data() + payload)) {
    throw FormatError("snapshot: CRC mismatch (corrupt or truncated file)");
  }
  if (std::memcmp(bytes.data(), "STMH", 4) != 0) throw FormatError("snapshot: bad magic");
  const std::uint32_t version = get_u32(bytes.data() + 4);
  if (version != kSnapshotVersion) throw FormatError("snapshot: unsupported version " + std::to_string(version));
  GridSpec g{static_cast<int>(get_u32(bytes.data() + 8)), static_cast<int>(get_u32(bytes.data() + 12))};
  try {
    g.validate();
  } catch (const Error& e) {
    throw FormatError(std::string("snapshot: invalid grid header: ") + e.what());
  }
  const auto n = static_cast<std::size_t>(g.n);
  if (payload != kHeaderBytes + 6 * n * n * n * 16) throw FormatError("snapshot: size does not match the grid");
  SnapshotData s;
  s.t = get_f64(bytes.data() + 16);
  s.taming_N = get_f64(bytes.data() + 24);
  s.y = StatePair(g);
  const unsigned char* p = bytes.data() + kHeaderBytes;
  for (int f = 0; f < 2; ++f) {
    auto& field = s.y.field(f);
    for (int c = 0; c < 3; ++c) {
      for (int i1 = 0; i1 < g.n; ++i1) {
        for (int i2 = 0; i2 < g.n; ++i2) {
          for (int i3 = 0; i3 < g.n; ++i3, p += 16) {
            const Wavevector k{signed_index(i1, g.n), signed_index(i2, g.n), signed_index(i3, g.n)};
            const Complex z(get_f64(p), get_f64(p + 8));
            if (in_cube(g, k)) {
              field.at(c, k) = z;
            } else if (z != Complex{}) {
              throw FormatError("snapshot: nonzero coefficient outside the retained cube");
            }
          }
        }
      }
    }
  }
  return s;
}

void write_snapshot(const SnapshotData& s, const std::filesystem::path& path) {
  const auto bytes = encode_snapshot(s);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("snapshot: cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("snapshot: write failed for '" + path.string() + "'");
}

SnapshotData read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("snapshot: cannot open '" + path.string() + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_snapshot(bytes);
}

SnapshotData read_snapshot(const std::filesystem::path& path, const GridSpec& expected) {
  auto s = read_snapshot(path);
  if (!(s.y.grid() == expected)) {
    throw GridMismatch("snapshot: file grid " + std::to_string(s.y.grid().n) + "^3 (cutoff " +
                       std::to_string(s.y.grid().cutoff) + ") does not match the context grid " +
                       std::to_string(expected.n) + "^3 (cutoff " + std::to_string(expected.cutoff) + ")");
  }
  return s;
}

// CSV --------------------------------------------------------------------------------

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::string format_csv_double(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  return std::string(buf.data(), ptr);
}

std::string diagnostics_csv(const std::vector<DiagnosticsRecord>& records) {
  if (records.empty()) throw Error("diagnostics CSV: no records");
  std::string out(kDiagnosticsHeader);
  out += '\n';
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (i > 0 && !(r.t > records[i - 1].t)) throw Error("diagnostics CSV: t must be strictly increasing");
    const double row[] = {r.t,           r.E_kin,       r.E_mag,           r.h1_sq,        r.h2_sq,
                          r.l4_fourth,   r.grad_ysq_sq, r.taming_fraction, r.div_residual, r.cross_helicity};
    for (std::size_t c = 0; c < std::size(row); ++c) {
      if (c > 0) out += ',';
      out += format_csv_double(row[c]);
    }
    out += '\n';
  }
  return out;
}

void emit_diagnostics_csv(const std::vector<DiagnosticsRecord>& records, const std::filesystem::path& path) {
  const auto text = diagnostics_csv(records);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("diagnostics CSV: cannot open '" + path.string() + "'");
  out << text;
  if (!out) throw Error("diagnostics CSV: write failed for '" + path.string() + "'");
}

std::vector<DiagnosticsRecord> parse_diagnostics_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kDiagnosticsHeader) throw FormatError("diagnostics CSV: bad header");
  std::vector<DiagnosticsRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::array<double, 10> v{};
    std::stringstream row(line);
    std::string cell;
    std::size_t i = 0;
    while (std::getline(row, cell, ',')) {
      if (i == v.size()) throw FormatError("diagnostics CSV: too many columns");
      const char* end = cell.data() + cell.size();
      const auto [ptr, ec] = std::from_chars(cell.data(), end, v[i]);
      if (ec != std::errc() || ptr != end) throw FormatError("diagnostics CSV: bad number '" + cell + "'");
      ++i;
    }
    if (i != v.size()) throw FormatError("diagnostics CSV: too few columns");
    out.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9]});
  }
  return out;
}

// Metadata -----------------------------------------------------------------------------

std::string build_id() { return TMHD_BUILD_ID; }

void write_metadata(const std::filesystem::path& dir, const std::string& command, const SimConfig& cfg,
                    const std::string& extra_json) {
  using nlohmann::json;
  const auto& m = cfg.family.metadata();
  json doc;
  doc["command"] = command;
  doc["config"] = serialize_config(cfg);
  doc["seed"] = cfg.seed;
  doc["stream"] = cfg.stream;
  doc["rng_algorithm"] = std::string(kRngAlgorithm);
  doc["build_id"] = build_id();
  doc["initial_condition"] = cfg.ic.describe();
  doc["family"] = {{"name", cfg.family_name},
                   {"k_noise", cfg.family.k_noise},
                   {"sigma_mass", m.sigma_mass},
                   {"sigma_derivative", m.sigma_derivative},
                   {"C_H", m.C_H},
                   {"F_H", m.F_H},
                   {"C_f", m.C_f},
                   {"F_f", m.F_f}};
  doc["extra"] = json::parse(extra_json);
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "metadata.json", std::ios::trunc);
  if (!out) throw Error("metadata: cannot write into '" + dir.string() + "'");
  out << doc.dump(2) << "\n";
}

}  // namespace tmhd
