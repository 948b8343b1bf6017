#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "helpers.hpp"
#include "tmhd/io.hpp"

using namespace tmhd;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "tmhd_unit_io";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("empty config gives the documented defaults") {
  const auto cfg = parse_config("");
  CHECK(cfg.grid == GridSpec{16, 5});
  CHECK(cfg.taming.N == 100.0);
  CHECK(cfg.dt == 1e-3);
  CHECK(cfg.horizon == 1.0);
  CHECK(cfg.family_name == "default");
  CHECK(cfg.family.k_noise == 16);
  CHECK(cfg.family.forcing_v == 0.5);
}

TEST_CASE("config sections, dotted keys and comments") {
  const auto cfg = parse_config(
      "noise.amplitude = 0   # silence sigma\n"
      "[grid]\n"
      "n = 32\n"
      "; a comment\n"
      "[experiment]\n"
      "seed = 42\n"
      "ic = single_mode\n"
      "ic_k = 1, 2, 0\n"
      "ic_slot = magnetic\n");
  CHECK(cfg.grid == GridSpec{32, 10});
  CHECK(cfg.family.sigma_amplitude == 0.0);
  CHECK(cfg.seed == 42);
  CHECK(cfg.ic.kind == InitialCondition::Kind::single_mode);
  CHECK(cfg.ic.k == Wavevector{1, 2, 0});
  CHECK(cfg.ic.slot == FieldSlot::magnetic);
}

TEST_CASE("config errors are reported") {
  CHECK_THROWS_AS(parse_config("[grid]\nn = 12\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[grid]\nsize = 16\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[mesh]\nn = 16\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[grid]\nn = 16\nn = 32\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[integrator]\ndt = fast\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[grid]\nn = 16.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("n = 16\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[noise]\namplitude = 1\n"), ConfigError);  // sigma mass above 1/36
  CHECK_THROWS_AS(parse_config("[integrator]\ndt = 0.3\nhorizon = 1\n"), ConfigError);
  CHECK_THROWS_AS(load_config(scratch("does_not_exist.cfg")), ConfigError);
}

TEST_CASE("canonical config text round-trips") {
  const std::string text =
      "[grid]\nn = 8\n[noise]\nh_amplitude = 0.125\n[forcing]\namplitude_b = 0.1\n"
      "[integrator]\ndt = 0.005\nhorizon = 0.1\n[taming]\nN = 37.5\n";
  const auto cfg = parse_config(text);
  const auto canon = serialize_config(cfg);
  const auto again = parse_config(canon);
  CHECK(serialize_config(again) == canon);
  CHECK(again.dt == cfg.dt);
  CHECK(again.taming.N == 37.5);
  CHECK(again.family.forcing_B == 0.1);
  CHECK(again.family.h_amplitude == 0.125);
  CHECK(serialize_config(parse_config("")) == serialize_config(SimConfig::defaults()));
}

TEST_CASE("snapshot bytes round-trip exactly") {
  const GridSpec g{16, 5};
  SnapshotData s{0.375, 100.0, tmhd::testing::random_pair(g, 11, 3.0)};
  s.y.v.at(1, {5, -5, 0}) = Complex(std::numeric_limits<double>::denorm_min(), -0.0);
  const auto path = scratch("round.snap");
  write_snapshot(s, path);
  const auto back = read_snapshot(path, g);
  CHECK(back.t == s.t);
  CHECK(back.taming_N == s.taming_N);
  CHECK(back.y == s.y);
  CHECK(encode_snapshot(back) == encode_snapshot(s));
  CHECK(std::filesystem::file_size(path) == 4 * 4 + 2 * 8 + 6 * 16 * 16 * 16 * 16 + 4);
}

TEST_CASE("snapshot corruption and grid mismatch are detected") {
  const auto big = tmhd::testing::random_pair(GridSpec{32, 10}, 3);
  const auto path = scratch("big.snap");
  write_snapshot({1.0, 100.0, big}, path);
  CHECK_THROWS_AS(read_snapshot(path, GridSpec{16, 5}), GridMismatch);
  CHECK(read_snapshot(path).y == big);

  auto bytes = encode_snapshot({1.0, 100.0, big});
  auto truncated = bytes;
  truncated.resize(bytes.size() / 2);
  CHECK_THROWS_AS(decode_snapshot(truncated), FormatError);
  auto flipped = bytes;
  flipped[100] ^= 0x10;
  CHECK_THROWS_AS(decode_snapshot(flipped), FormatError);
  CHECK_THROWS_AS(decode_snapshot({}), FormatError);
}

TEST_CASE("CSV round-trips random doubles bitwise") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> mag(-300.0, 300.0);
  std::vector<DiagnosticsRecord> rows;
  double t = 0.0;
  for (int i = 0; i < 1000; ++i) {
    t += 1e-3 * (1 + (gen() % 7));
    auto draw = [&] { return std::pow(10.0, mag(gen) / 10.0) * ((gen() & 1) ? -1.0 : 1.0); };
    rows.push_back({t, draw(), draw(), draw(), draw(), draw(), draw(), draw(), draw(), draw()});
  }
  rows.push_back({t + 1.0, 0.0, -0.0, 5e-324, 1.7976931348623157e308, 0.1, 1.0 / 3.0, 0, 0, 0});
  const auto back = parse_diagnostics_csv(diagnostics_csv(rows));
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double a[] = {rows[i].t, rows[i].E_kin, rows[i].h2_sq, rows[i].cross_helicity, rows[i].grad_ysq_sq};
    const double b[] = {back[i].t, back[i].E_kin, back[i].h2_sq, back[i].cross_helicity, back[i].grad_ysq_sq};
    for (int j = 0; j < 5; ++j) CHECK(std::memcmp(&a[j], &b[j], sizeof(double)) == 0);
  }
}

TEST_CASE("CSV rejects bad input") {
  CHECK_THROWS_AS(diagnostics_csv({}), Error);
  DiagnosticsRecord a;
  CHECK_THROWS_AS(diagnostics_csv({a, a}), Error);
  const auto zero = diagnostics_csv({a});
  CHECK(zero.find('\n') == kDiagnosticsHeader.size());
  CHECK(parse_diagnostics_csv(zero).size() == 1);
  CHECK_THROWS_AS(parse_diagnostics_csv("t,x\n"), FormatError);
  CHECK_THROWS_AS(parse_diagnostics_csv(std::string(kDiagnosticsHeader) + "\n1,2,3\n"), FormatError);
}

TEST_CASE("shortest formatting parses back") {
  for (double v : {0.1, 1e-3, 1.0 / 3.0, 100.0, 2.5e-300}) CHECK(std::stod(format_double(v)) == v);
  CHECK(format_double(0.001) == "0.001");
  CHECK(format_csv_double(0.1) == "0.10000000000000001");
}

TEST_CASE("metadata file carries the run identity") {
  const auto dir = scratch("meta_run");
  auto cfg = SimConfig::defaults();
  cfg.seed = 9;
  write_metadata(dir, "run", cfg, R"({"note": 1})");
  std::ifstream in(dir / "metadata.json");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(text.find("\"seed\": 9") != std::string::npos);
  CHECK(text.find("philox4x32-10") != std::string::npos);
  CHECK(text.find("\"note\": 1") != std::string::npos);
  CHECK_THROWS(write_metadata(dir, "run", cfg, "not json"));
}
