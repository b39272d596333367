#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "hashrate/errors.hpp"
#include "hashrate/io.hpp"
#include "test_support.hpp"

namespace hashrate {
namespace {

using testing::header;

Digest256 random_digest(std::mt19937_64& rng) {
  Digest256 d;
  for (auto& b : d.bytes) b = static_cast<std::uint8_t>(rng());
  return d;
}

HashValue random_below(std::mt19937_64& rng, const HashValue& bound) {
  uint256 v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 64) | rng();
  if (bound == HashValue::max()) return HashValue(v);
  return HashValue(v % (bound.value() + 1));
}

std::vector<BlockHeader> random_headers(std::size_t count, std::mt19937_64& rng) {
  std::vector<BlockHeader> out;
  Digest256 parent = random_digest(rng);
  for (std::size_t i = 0; i < count; ++i) {
    BlockHeader h;
    h.id = random_digest(rng);
    h.parent_id = parent;
    h.timestamp = static_cast<std::int64_t>(1'600'000'000 + i * 13);
    h.target = Target::from_hash(HashValue(uint256(rng() | 1) << (rng() % 190)));
    h.pow_hash = random_below(rng, h.target.value());
    h.miner = "miner-" + std::to_string(rng() % 50);
    h.is_ommer = rng() % 9 == 0;
    if (!h.is_ommer) parent = h.id;
    out.push_back(h);
  }
  return out;
}

std::vector<StatusReport> random_reports(std::size_t count, std::mt19937_64& rng) {
  std::vector<StatusReport> out;
  std::uniform_real_distribution<double> sigma(0.001, 30.0);
  for (std::size_t i = 0; i < count; ++i) {
    StatusReport r;
    r.miner = "m\"" + std::to_string(rng() % 7); // quotes exercise JSON escaping
    r.interval_index = rng() % 100000;
    r.interval_seconds = sigma(rng);
    r.min_hash = random_below(rng, HashValue::max());
    r.report_nonce = random_digest(rng);
    r.chained_nonce = random_digest(rng);
    r.prior_block_id = random_digest(rng);
    out.push_back(r);
  }
  return out;
}

// Property: writing then parsing yields the same records.
TEST(Io, HeaderRoundTrip) {
  std::mt19937_64 rng(10);
  const auto hs = random_headers(1000, rng);
  std::stringstream ss;
  write_headers(ss, hs);
  const auto back = parse_headers(ss).headers;
  ASSERT_EQ(back.size(), hs.size());
  for (std::size_t i = 0; i < hs.size(); ++i) {
    EXPECT_EQ(back[i].id, hs[i].id);
    EXPECT_EQ(back[i].parent_id, hs[i].parent_id);
    EXPECT_EQ(back[i].timestamp, hs[i].timestamp);
    EXPECT_EQ(back[i].pow_hash, hs[i].pow_hash);
    EXPECT_EQ(back[i].target.value(), hs[i].target.value());
    EXPECT_EQ(back[i].miner, hs[i].miner);
    EXPECT_EQ(back[i].is_ommer, hs[i].is_ommer);
  }
}

TEST(Io, ReportRoundTrip) {
  std::mt19937_64 rng(11);
  const auto rs = random_reports(1000, rng);
  std::stringstream ss;
  write_reports(ss, rs);
  EXPECT_EQ(parse_reports(ss), rs);
}

TEST(Io, ChildrenBeforeParentsAreReordered) {
  std::vector<BlockHeader> hs{header("c", "b", 30, 1e-4), header("a", "", 10, 1e-4), header("b", "a", 20, 1e-4)};
  std::stringstream ss;
  write_headers(ss, hs);
  const auto back = parse_headers(ss).headers;
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[0].id, testing::id_of("a"));
  EXPECT_EQ(back[2].id, testing::id_of("c"));
}

std::string header_line(const std::string& extra) {
  const auto h = header("x", "y", 5, 1e-4);
  std::string base = R"({"id":")" + h.id.to_hex() + R"(","parent":")" + h.parent_id.to_hex() + R"(","ts":5)";
  return base + extra + "}\n";
}

std::size_t error_line(const std::string& text, ChainKind kind = ChainKind::bitcoin) {
  std::istringstream in(text);
  try {
    parse_headers(in, kind);
  } catch (const ParseError& e) {
    return e.line();
  }
  ADD_FAILURE() << "no ParseError for: " << text;
  return 0;
}

TEST(Io, ErrorsCarryLineNumbers) {
  const std::string good = header_line(R"(,"pow":"0x10","target":"0xffff","miner":"m")");
  EXPECT_EQ(error_line("# comment\n\n" + good + "{not json\n"), 4u);
  EXPECT_EQ(error_line(header_line(R"(,"pow":"0x10","miner":"m")")), 1u);
  EXPECT_EQ(error_line(good + header_line(R"(,"pow":"0x10","target":"0xffff")")), 2u);
  EXPECT_EQ(error_line(header_line(R"(,"pow":"0x10","target":"0x1","miner":"m")")), 1u); // pow above target
  EXPECT_EQ(error_line(good + good), 2u);                                                  // duplicate id
  EXPECT_EQ(error_line("[1,2]\n"), 1u);
  EXPECT_EQ(error_line(header_line(R"(,"target":"0xffff","miner":"m")"), ChainKind::ethereum), 1u);

  std::istringstream bad_report("{\"miner\":\"m\",\"idx\":-1}\n");
  try {
    parse_reports(bad_report);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
  }
}

TEST(Io, ExportFieldNames) {
  const auto h = header("x", "y", 5, 1e-4);
  std::istringstream btc(R"({"hash":"00000000000000000000000000000000000000000000000000000000000000ff",)"
                         R"("previousblockhash":")" + h.parent_id.to_hex() +
                         R"(","time":1700000000,"bits":"1d00ffff","pool":"P"})" "\n");
  const auto b = parse_headers(btc).headers.at(0);
  EXPECT_EQ(b.pow_hash.value(), 255); // pow defaults to the block hash
  EXPECT_EQ(b.target.value(), target_from_compact(0x1d00ffff));
  EXPECT_EQ(b.miner, "P");
  EXPECT_EQ(b.timestamp, 1700000000);

  std::istringstream eth(R"({"hash":"0x)" + h.id.to_hex() + R"(","parentHash":"0x)" + h.parent_id.to_hex() +
                         R"(","timestamp":"12","difficulty":"4096","miner":"0xabc","pow_hash":"0x05","uncle":true})"
                         "\n");
  const auto e = parse_headers(eth, ChainKind::ethereum).headers.at(0);
  EXPECT_TRUE(e.is_ommer);
  EXPECT_EQ(e.target.value().value(), uint256(1) << 212);
  EXPECT_EQ(e.timestamp, 12);
}

TEST(Io, CompactTargets) {
  EXPECT_EQ(target_from_compact(0x1d00ffff).value(), uint256(0xffff) << 208);
  EXPECT_EQ(target_from_compact(0x03123456).value(), 0x123456);
  EXPECT_EQ(target_from_compact(0x02123456).value(), 0x1234);
  EXPECT_THROW(target_from_compact(0x1d800000), InvalidArgument);
  EXPECT_THROW(target_from_compact(0x1d000000), InvalidArgument);
  EXPECT_THROW(target_from_compact(0x23010000), InvalidArgument);
}

TEST(Io, LargeReportFileParsesQuickly) {
  std::mt19937_64 rng(12);
  const auto rs = random_reports(100000, rng);
  std::stringstream ss;
  write_reports(ss, rs);
  const auto t0 = std::chrono::steady_clock::now();
  const auto back = parse_reports(ss);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_EQ(back.size(), rs.size());
  EXPECT_LT(secs, 5.0);
}

TEST(Io, SimConfigRoundTrip) {
  auto cfg = make_sim_config({{"a", 1e4, 2.0}, {"b", 3e4, 0.0}}, 13.0, 1300.0, 77, ChainKind::ethereum);
  cfg.report_sigma = 1.5;
  cfg.propagation_window_seconds = 1.2;
  cfg.attacker = AttackerSpec{"eve", 2e4, 0.5, 600.0, 1.0};
  const auto back = parse_sim_config(sim_config_json(cfg));
  EXPECT_EQ(sim_config_json(back), sim_config_json(cfg));
  EXPECT_THROW(parse_sim_config("{"), ParseError);
  EXPECT_THROW(parse_sim_config("[]"), ParseError);
  EXPECT_THROW(parse_sim_config(R"({"miners":[]})"), ParseError);
}

TEST(Tables, JsonAndCsvShapes) {
  Table t;
  t.columns = {"name", "x", "n", "ok"};
  t.add_row({std::string("a,b"), 0.1 + 0.2, std::int64_t{3}, true});
  t.add_row({std::string("c"), std::numeric_limits<double>::infinity(), std::int64_t{-1}, false});
  EXPECT_EQ(format_table(t, OutputFormat::csv), "name,x,n,ok\n\"a,b\",0.3,3,true\nc,inf,-1,false\n");
  const auto js = format_table(t, OutputFormat::json);
  EXPECT_NE(js.find("\"x\": null"), std::string::npos);
  EXPECT_THROW(t.add_row({std::string("short")}), InvalidArgument);

  Table empty;
  empty.columns = {"a", "b"};
  EXPECT_EQ(format_table(empty, OutputFormat::csv), "a,b\n");
  EXPECT_EQ(format_table(empty, OutputFormat::json), "[]\n");
}

TEST(Tables, EstimatesAndAssessmentsRoundTrip) {
  auto e = HashRateEstimate::from_theta(1.5e12, 2.0, EstimateMethod::combined, 42);
  e.set_bounds(1e12, 2e12);
  e.label = "network";
  const std::vector<HashRateEstimate> es{e};
  const auto back = estimates_from_json(format_table(estimates_table(es), OutputFormat::json));
  ASSERT_EQ(back.size(), 1u);
  EXPECT_DOUBLE_EQ(back[0].theta_point, e.theta_point);
  EXPECT_DOUBLE_EQ(back[0].rate_high, e.rate_high);
  EXPECT_EQ(back[0].method, EstimateMethod::combined);
  EXPECT_EQ(back[0].sample_size, 42u);

  RiskAssessment a;
  a.block_id = testing::id_of("z");
  a.depth = 6;
  a.q_i = 0.125;
  a.probability_point = 1e-4;
  a.release = true;
  const std::vector<RiskAssessment> as{a};
  EXPECT_EQ(assessments_from_json(format_table(assessments_table(as), OutputFormat::json)), as);
  EXPECT_THROW(estimates_from_json("[{}]"), ParseError);
}

TEST(Tables, ExportWritesFile) {
  const auto path = std::filesystem::temp_directory_path() / "hashrate_io_export.csv";
  Table t;
  t.columns = {"a"};
  t.add_row({std::int64_t{1}});
  export_results(t, OutputFormat::csv, path);
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), "a\n1\n");
  std::filesystem::remove(path);
  EXPECT_THROW(export_results(t, OutputFormat::csv, "/nonexistent-dir/x.csv"), Error);
  EXPECT_EQ(output_format_from_string("csv"), OutputFormat::csv);
  EXPECT_THROW(output_format_from_string("xml"), InvalidArgument);
}

TEST(Fixtures, ShippedFilesParse) {
  const std::filesystem::path dir = HASHRATE_FIXTURE_DIR;
  const auto btc = read_headers(dir / "bitcoin_headers.jsonl", ChainKind::bitcoin);
  const auto eth = read_headers(dir / "ethereum_headers.jsonl", ChainKind::ethereum);
  EXPECT_GT(btc.headers.size(), 500u);
  EXPECT_GT(eth.headers.size(), 500u);
  std::size_t ommers = 0;
  for (const auto& h : eth.headers) ommers += h.is_ommer ? 1 : 0;
  EXPECT_GT(ommers, 0u);
  EXPECT_THROW(read_headers(dir / "missing.jsonl"), Error);
}

} // namespace
} // namespace hashrate
