#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lsmfg/grid.hpp"

#include <sstream>

using namespace lsmfg;

TEST_CASE("one-dimensional grid places 2N nodes on [-1, 1)") {
  const PeriodicGrid g = build_grid(1, {2}, 4, 1.0);
  CHECK(g.node_count() == 4);
  CHECK(g.nodes_per_dim(0) == 4);
  CHECK(g.dx(0) == doctest::Approx(0.5));
  CHECK(g.dt() == doctest::Approx(0.25));
  CHECK(g.time_levels() == 5);
  CHECK(g.coordinate(0, 0) == -1.0);
  CHECK(g.coordinate(3, 0) == doctest::Approx(0.5));
  CHECK(g.time(4) == doctest::Approx(1.0));
  CHECK(g.cell_volume() == doctest::Approx(0.5));
}

TEST_CASE("neighbors wrap periodically") {
  const PeriodicGrid g = build_grid(1, {3}, 1, 1.0);
  CHECK(g.neighbor(0, 0, -1) == 5);
  CHECK(g.neighbor(5, 0, +1) == 0);
  CHECK(g.neighbor(2, 0, +1) == 3);
  CHECK(g.neighbor(2, 0, 7) == 3);
  CHECK(g.neighbor(2, 0, -8) == 0);
}

TEST_CASE("multi-dimensional numbering is lexicographic, first axis slowest") {
  const PeriodicGrid g = build_grid(2, {2, 3}, 1, 1.0);
  CHECK(g.node_count() == 24);
  const std::vector<int> k{1, 4};
  const Index node = g.flat_index(k);
  CHECK(node == 1 * 6 + 4);
  CHECK(g.multi_index(node) == k);
  CHECK(g.coordinate(node, 0) == doctest::Approx(-0.5));
  CHECK(g.coordinate(node, 1) == doctest::Approx(-1.0 + 4.0 / 3.0));
  CHECK(g.neighbor(node, 1, +1) == g.flat_index(std::vector<int>{1, 5}));
  CHECK(g.neighbor(node, 1, +2) == g.flat_index(std::vector<int>{1, 0}));
  CHECK(g.neighbor(node, 0, -2) == g.flat_index(std::vector<int>{3, 4}));

  for (Index i = 0; i < g.node_count(); ++i)
    CHECK(g.flat_index(g.multi_index(i)) == i);
}

TEST_CASE("invalid grids are rejected") {
  CHECK_THROWS_AS(build_grid(1, {0}, 10, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(1, {4}, 0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(1, {4}, 10, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(2, {4}, 10, 1.0), std::invalid_argument);
}

TEST_CASE("fields store one contiguous column per level") {
  const PeriodicGrid g = build_grid(1, {2}, 2, 1.0);
  Field f(g);
  CHECK(f.values().rows() == 4);
  CHECK(f.values().cols() == 3);
  f(2, 1) = 7.0;
  CHECK(f.slice(1)[2] == 7.0);
  CHECK(&f(1, 1) == &f(0, 1) + 1);
  CHECK(f.all_finite());
  f(0, 0) = std::nan("");
  CHECK_FALSE(f.all_finite());

  Field other(build_grid(1, {3}, 2, 1.0));
  CHECK_THROWS_AS(require_same_grid(f, other, "test"), std::invalid_argument);
}

TEST_CASE("export levels cover the first and last level") {
  const PeriodicGrid g = build_grid(1, {2}, 25, 1.0);
  CHECK(export_levels(g, 10) == std::vector<int>{0, 10, 20, 25});
  CHECK(export_levels(g, 5) == std::vector<int>{0, 5, 10, 15, 20, 25});
  CHECK(export_levels(g, 100) == std::vector<int>{0, 25});
}

TEST_CASE("field CSV carries a header, coordinates and full precision") {
  const PeriodicGrid g = build_grid(1, {1}, 2, 1.0);
  Field f(g);
  f.values() << 0.1, 0.2, 0.3, 1.0 / 3.0, 0.5, 0.6;
  std::ostringstream out;
  const std::vector<int> levels{0, 2};
  write_field_csv(out, f, levels, "m");
  const std::string expected =
      "x1,t,m\n"
      "-1,0,0.10000000000000001\n"
      "0,0,0.33333333333333331\n"
      "-1,1,0.29999999999999999\n"
      "0,1,0.59999999999999998\n";
  CHECK(out.str() == expected);
}

TEST_CASE("multi-column CSV writes one column per component") {
  const PeriodicGrid g = build_grid(2, {1, 1}, 1, 1.0);
  Field a(g), b(g);
  a.values().setConstant(1.0);
  b.values().setConstant(2.0);
  std::ostringstream out;
  const std::vector<Field> comps{a, b};
  const std::vector<std::string> names{"a1", "a2"};
  const std::vector<int> levels{1};
  write_fields_csv(out, comps, levels, names);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "x1,x2,t,a1,a2");
  std::getline(in, line);
  CHECK(line == "-1,-1,1,1,2");
  int rows = 1;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 4);
}
