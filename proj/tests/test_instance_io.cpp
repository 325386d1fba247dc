#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "lipgraph/instance_io.hpp"

using namespace lipgraph;

namespace {

InstanceFile round_trip_text(const InstanceFile &f) {
  std::stringstream ss;
  write_instance(ss, f);
  return read_instance(ss);
}

std::size_t parse_error_line(const std::string &text) {
  std::istringstream in(text);
  try {
    (void)read_instance(in);
  } catch (const ParseError &e) {
    return e.line();
  }
  ADD_FAILURE() << "no parse error for:\n" << text;
  return 0;
}

} // namespace

TEST(InstanceText, RoundTripsGeneratedInstances) {
  RandomTape tape(21);
  for (int k = 0; k < 30; ++k) {
    auto ci = random_cut_instance(3 + k % 12, 0.3, tape, 3);
    InstanceFile cut{ci.graph, CutSides{ci.S, ci.T}};
    EXPECT_EQ(round_trip_text(cut), cut);
    EXPECT_EQ(instance_from_json(instance_to_json(cut)), cut);

    InstanceFile bip{random_bipartite_graph(3, 5, 0.4, 10, tape, 3), std::nullopt};
    EXPECT_EQ(round_trip_text(bip), bip);
    EXPECT_EQ(instance_from_json(instance_to_json(bip)), bip);
  }
  auto lb = lower_bound_instance(12, 1.0, 1.0);
  InstanceFile f{lb.instance.graph, CutSides{lb.instance.S, lb.instance.T}};
  EXPECT_EQ(round_trip_text(f), f);
}

TEST(InstanceText, ParsesCommentsCapacitiesAndCut) {
  std::istringstream in("# header comment\n"
                        "4 3 bipartite 2\n"
                        "0 2 1.5   # trailing\n"
                        "\n"
                        "0 3 0.25\n"
                        "1 3 2\n"
                        "cap 3 2\n"
                        "cut S: 0 / T: 3\n");
  auto f = read_instance(in);
  EXPECT_EQ(f.graph.num_vertices(), 4U);
  EXPECT_EQ(f.graph.num_edges(), 3U);
  EXPECT_EQ(f.graph.left_size(), std::optional<std::size_t>(2));
  EXPECT_EQ(f.graph.capacity(3), 2);
  EXPECT_EQ(f.graph.capacity(0), 1);
  EXPECT_EQ(f.graph.weight(1), 0.25);
  ASSERT_TRUE(f.cut);
  EXPECT_EQ(f.cut->S, std::vector<std::size_t>{0});
  EXPECT_EQ(f.cut->T, std::vector<std::size_t>{3});
}

TEST(InstanceText, ReportsLineNumbers) {
  EXPECT_EQ(parse_error_line("3 2\n0 1 1\n0 1 x\n"), 3U);
  EXPECT_EQ(parse_error_line("3 2\n0 1 1\n1 1 1\n"), 3U);
  EXPECT_EQ(parse_error_line("3 1\n0 1 0\n"), 2U);
  EXPECT_EQ(parse_error_line("3 1\n0 5 1\n"), 2U);
  EXPECT_EQ(parse_error_line("3\n"), 1U);
  EXPECT_EQ(parse_error_line(""), 1U);
  EXPECT_EQ(parse_error_line("3 2\n0 1 1\n"), 3U);
  EXPECT_EQ(parse_error_line("3 1\n0 1 1\ncut S: 0 / T: 0\n"), 3U);
  EXPECT_EQ(parse_error_line("3 1\n0 1 1\nbogus\n"), 3U);
  EXPECT_EQ(parse_error_line("3 1\n# c\n\n0 1 -2\n"), 4U);
}

TEST(InstanceText, ParseErrorMessageNamesLine) {
  std::istringstream in("2 1\n0 1 nope\n");
  try {
    (void)read_instance(in);
    FAIL();
  } catch (const ParseError &e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(InstanceJson, RejectsMalformedDocuments) {
  EXPECT_THROW((void)instance_from_json(nlohmann::json::parse(R"({"n": 2})")), ValidationError);
  EXPECT_THROW((void)instance_from_json(nlohmann::json::parse(R"({"n": 2, "edges": [[0, 1]]})")), ValidationError);
  EXPECT_THROW((void)instance_from_json(nlohmann::json::parse(R"({"n": 2, "m": 2, "edges": [[0, 1, 1]]})")),
               ValidationError);
  EXPECT_THROW((void)instance_from_json(nlohmann::json::parse(R"({"n": 2, "edges": [[0, 1, 0]]})")),
               ValidationError);
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.25), "0.25");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(format_double(0.1), "0.1");
  for (double x : {1.0 / 3.0, 1e-9, 2.0 / 7.0 * 1e5, 123456789.123}) EXPECT_EQ(std::stod(format_double(x)), x);
}

TEST(InstanceFiles, SaveAndLoadBothFormats) {
  const auto dir = std::filesystem::temp_directory_path() / "lipgraph_io_test";
  std::filesystem::create_directories(dir);
  RandomTape tape(22);
  auto ci = random_cut_instance(7, 0.4, tape, 2);
  InstanceFile f{ci.graph, CutSides{ci.S, ci.T}};
  for (const char *name : {"inst.txt", "inst.json"}) {
    const auto path = (dir / name).string();
    save_instance(path, f);
    EXPECT_EQ(load_instance(path), f);
  }
  EXPECT_THROW((void)load_instance((dir / "missing.txt").string()), ValidationError);
  std::filesystem::remove_all(dir);
}

TEST(InstanceFile, CutInstanceNeedsCutLine) {
  InstanceFile f{WeightedGraph(2, {{0, 1}}, {1.0}), std::nullopt};
  EXPECT_THROW((void)f.cut_instance(), ValidationError);
}
