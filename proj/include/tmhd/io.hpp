#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tmhd/diagnostics.hpp"
#include "tmhd/integrator.hpp"

namespace tmhd {

class ConfigError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

// Configuration ------------------------------------------------------------------
//
// INI-style text: "[section]" headers, "key = value" lines, '#' or ';'
// comments. A top-level "section.key = value" line is accepted too. Sections:
// grid, taming, noise, forcing, integrator, experiment, output. Unknown
// sections or keys, repeated keys and malformed values are ConfigErrors.

SimConfig parse_config(const std::string& text);
SimConfig load_config(const std::filesystem::path& path);

/// Canonical text: every key of every section with its effective value;
/// family parameters appear only when given explicitly, and the resolved
/// family constants follow as comments. parse_config(serialize_config(c))
/// serializes to the same text.
std::string serialize_config(const SimConfig& cfg);

// Snapshots ---------------------------------------------------------------------
//
// Little-endian layout: "STMH", u32 version, u32 n, u32 cutoff, f64 time,
// f64 taming N, then v1 v2 v3 B1 B2 B3, each the full n^3 complex array in
// row-major FFT index order as (re, im) f64 pairs, then the CRC-32 of all
// preceding bytes.

inline constexpr std::uint32_t kSnapshotVersion = 1;

struct SnapshotData {
  double t = 0.0;
  double taming_N = 0.0;
  StatePair y;
};

std::vector<unsigned char> encode_snapshot(const SnapshotData& s);
/// Throws FormatError on bad magic, version, size or CRC.
SnapshotData decode_snapshot(const std::vector<unsigned char>& bytes);

void write_snapshot(const SnapshotData& s, const std::filesystem::path& path);
SnapshotData read_snapshot(const std::filesystem::path& path);
/// Also rejects files whose grid differs from `expected` (GridMismatch).
SnapshotData read_snapshot(const std::filesystem::path& path, const GridSpec& expected);

// Diagnostics CSV ------------------------------------------------------------------

/// Header plus one row per record, 17 significant digits. Throws when empty
/// or when t is not strictly increasing.
std::string diagnostics_csv(const std::vector<DiagnosticsRecord>& records);
void emit_diagnostics_csv(const std::vector<DiagnosticsRecord>& records, const std::filesystem::path& path);
std::vector<DiagnosticsRecord> parse_diagnostics_csv(const std::string& text);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
/// Fixed 17-significant-digit rendering used by every CSV writer.
std::string format_csv_double(double v);

// Metadata ------------------------------------------------------------------------

std::string build_id();

/// Writes metadata.json into dir: command, canonical config, seed, stream,
/// RNG algorithm, build id, family constants and `extra` (a JSON object text).
void write_metadata(const std::filesystem::path& dir, const std::string& command, const SimConfig& cfg,
                    const std::string& extra_json = "{}");

}  // namespace tmhd
