#pragma once

#include "diffnet/common.hpp"
#include "diffnet/ising.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace diffnet {

/// Header-less numeric CSV (comma or whitespace separated); rows must agree in width.
Matrix read_matrix_csv(const std::filesystem::path& path);

/// Writes with 17 significant digits; integral values are written without a fraction.
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

enum class Encoding { ising, raw_psi };

struct DataSidecar {
    int nodes = 0;
    Encoding encoding = Encoding::ising;
};

/// Sidecar next to `csv`: "<csv>.json" if present, else the same stem with ".json".
std::filesystem::path sidecar_path(const std::filesystem::path& csv);
DataSidecar read_sidecar(const std::filesystem::path& path);
void write_sidecar(const std::filesystem::path& path, const DataSidecar& s);

/// Sufficient statistics of a data file: Ising spins are expanded, raw_psi rows are checked for width.
Matrix load_sufficient_stats(const std::filesystem::path& csv);

/// Graph JSON {m, edges: [{u, v, weight}]} with 1-based nodes; absent edges are 0.
IsingModel read_graph_json(const std::filesystem::path& path);
void write_graph_json(const std::filesystem::path& path, const IsingModel& g);

/// Minimal CSV table with already-formatted cells.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void write(const std::filesystem::path& path) const;
    std::string str() const;
};

/// Shortest round-trippable decimal form of a double ("nan", "inf" for specials).
std::string format_double(double v);

} // namespace diffnet
