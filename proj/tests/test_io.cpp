#include "doctest.h"

#include "support.hpp"

#include "diffnet/io.hpp"

#include <fstream>

using namespace diffnet;

namespace {

void write_text(const std::filesystem::path& p, const std::string& text)
{
    std::ofstream out(p);
    out << text;
}

} // namespace

TEST_CASE("matrix csv reading")
{
    const auto dir = testing::temp_dir("io_read");
    write_text(dir / "a.csv", "1,-1,1\n-1 -1\t1\n\n+1;1;-1\r\n");
    const Matrix m = read_matrix_csv(dir / "a.csv");
    REQUIRE(m.rows() == 3);
    REQUIRE(m.cols() == 3);
    CHECK(m(1, 1) == -1.0);
    CHECK(m(2, 0) == 1.0);

    write_text(dir / "ragged.csv", "1,2,3\n4,5\n");
    CHECK_THROWS_AS(read_matrix_csv(dir / "ragged.csv"), DataError);
    write_text(dir / "text.csv", "1,x,3\n");
    CHECK_THROWS_AS(read_matrix_csv(dir / "text.csv"), DataError);
    write_text(dir / "empty.csv", "\n\n");
    CHECK_THROWS_AS(read_matrix_csv(dir / "empty.csv"), DataError);
    CHECK_THROWS_AS(read_matrix_csv(dir / "missing.csv"), DataError);
}

TEST_CASE("matrix csv round trip")
{
    const auto dir = testing::temp_dir("io_rt");
    Matrix m(2, 3);
    m << 1, -1, 0.1,
         1.0 / 3.0, -2.5e-17, 12345678;
    write_matrix_csv(dir / "m.csv", m);
    CHECK(read_matrix_csv(dir / "m.csv") == m);
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(std::nan("")) == "nan");
}

TEST_CASE("sidecars and sufficient statistics")
{
    const auto dir = testing::temp_dir("io_sidecar");
    write_text(dir / "x.csv", "1,-1,1\n-1,-1,1\n");
    CHECK_THROWS_AS(sidecar_path(dir / "x.csv"), DataError);

    write_sidecar(dir / "x.json", {3, Encoding::ising});
    CHECK(sidecar_path(dir / "x.csv") == dir / "x.json");
    const Matrix psi = load_sufficient_stats(dir / "x.csv");
    CHECK(psi.row(0) == Eigen::RowVector3d(-1, 1, -1));

    // "<csv>.json" takes precedence
    write_sidecar(dir / "x.csv.json", {3, Encoding::raw_psi});
    CHECK(sidecar_path(dir / "x.csv") == dir / "x.csv.json");
    CHECK(load_sufficient_stats(dir / "x.csv") == read_matrix_csv(dir / "x.csv"));

    write_sidecar(dir / "x.csv.json", {4, Encoding::ising});
    CHECK_THROWS_AS(load_sufficient_stats(dir / "x.csv"), DataError);
    write_sidecar(dir / "x.csv.json", {4, Encoding::raw_psi});
    CHECK_THROWS_AS(load_sufficient_stats(dir / "x.csv"), DataError);

    write_text(dir / "bad.json", R"({"m": 3, "encoding": "dense"})");
    CHECK_THROWS_AS(read_sidecar(dir / "bad.json"), DataError);
    write_text(dir / "broken.json", "{m: 3");
    CHECK_THROWS_AS(read_sidecar(dir / "broken.json"), DataError);

    write_text(dir / "half.csv", "1,0.5,1\n");
    write_sidecar(dir / "half.json", {3, Encoding::ising});
    CHECK_THROWS_AS(load_sufficient_stats(dir / "half.csv"), DataError);
}

TEST_CASE("graph json")
{
    const auto dir = testing::temp_dir("io_graph");
    Vector g = Vector::Zero(6);
    g[0] = 0.5;
    g[5] = -0.25;
    write_graph_json(dir / "g.json", IsingModel(4, g));
    const IsingModel back = read_graph_json(dir / "g.json");
    CHECK(back.nodes() == 4);
    CHECK(back.gamma() == g);

    write_text(dir / "dup.json", R"({"m": 3, "edges": [{"u":1,"v":2,"weight":1},{"u":2,"v":1,"weight":2}]})");
    CHECK_THROWS_AS(read_graph_json(dir / "dup.json"), DataError);
    write_text(dir / "range.json", R"({"m": 3, "edges": [{"u":1,"v":4,"weight":1}]})");
    CHECK_THROWS_AS(read_graph_json(dir / "range.json"), DataError);
    write_text(dir / "self.json", R"({"m": 3, "edges": [{"u":2,"v":2,"weight":1}]})");
    CHECK_THROWS_AS(read_graph_json(dir / "self.json"), DataError);
    write_text(dir / "noweight.json", R"({"m": 3, "edges": [{"u":1,"v":2}]})");
    CHECK_THROWS_AS(read_graph_json(dir / "noweight.json"), DataError);
}

TEST_CASE("csv table")
{
    CsvTable t;
    t.header = {"a", "b"};
    t.rows = {{"1", "x"}, {"2", "y"}};
    CHECK(t.str() == "a,b\n1,x\n2,y\n");
}
