#include "diffnet/io.hpp"

#include "diffnet/model.hpp"

#include "json.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace diffnet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ifstream open_in(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    return in;
}

std::ofstream open_out(const fs::path& path)
{
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    return out;
}

json read_json(const fs::path& path)
{
    auto in = open_in(path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw DataError("malformed JSON in '" + path.string() + "': " + e.what());
    }
}

} // namespace

std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

Matrix read_matrix_csv(const fs::path& path)
{
    auto in = open_in(path);
    std::vector<double> values;
    Eigen::Index cols = -1, rows = 0;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        for (char& c : line)
            if (c == ',' || c == '\t' || c == ';' || c == '\r') c = ' ';
        std::istringstream ss(line);
        Eigen::Index count = 0;
        std::string tok;
        while (ss >> tok) {
            double v = 0.0;
            const char* first = tok.data();
            if (*first == '+') ++first;
            auto [ptr, ec] = std::from_chars(first, tok.data() + tok.size(), v);
            if (ec != std::errc() || ptr != tok.data() + tok.size())
                throw DataError(path.string() + ":" + std::to_string(lineno) + ": not a number: '" + tok + "'");
            values.push_back(v);
            ++count;
        }
        if (count == 0) continue;
        if (cols < 0) cols = count;
        else if (count != cols)
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(cols) +
                            " fields, found " + std::to_string(count));
        ++rows;
    }
    if (rows == 0) throw DataError("'" + path.string() + "' contains no data");
    return Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(values.data(), rows, cols);
}

void write_matrix_csv(const fs::path& path, const Matrix& m)
{
    auto out = open_out(path);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            const double v = m(i, j);
            if (v == std::trunc(v) && std::abs(v) < 1e15) out << static_cast<long long>(v);
            else out << format_double(v);
        }
        out << '\n';
    }
}

fs::path sidecar_path(const fs::path& csv)
{
    fs::path direct = csv;
    direct += ".json";
    if (fs::exists(direct)) return direct;
    fs::path stem = csv;
    stem.replace_extension(".json");
    if (fs::exists(stem)) return stem;
    throw DataError("no sidecar for '" + csv.string() + "' (looked for '" + direct.string() + "' and '" +
                    stem.string() + "')");
}

DataSidecar read_sidecar(const fs::path& path)
{
    const json j = read_json(path);
    DataSidecar s;
    try {
        s.nodes = j.at("m").get<int>();
        const std::string enc = j.value("encoding", std::string("ising"));
        if (enc == "ising") s.encoding = Encoding::ising;
        else if (enc == "raw_psi") s.encoding = Encoding::raw_psi;
        else throw DataError("unknown encoding '" + enc + "' in '" + path.string() + "'");
    } catch (const json::exception& e) {
        throw DataError("bad sidecar '" + path.string() + "': " + e.what());
    }
    if (s.nodes < 2) throw DataError("sidecar '" + path.string() + "': m must be >= 2");
    return s;
}

void write_sidecar(const fs::path& path, const DataSidecar& s)
{
    auto out = open_out(path);
    out << json{{"m", s.nodes}, {"encoding", s.encoding == Encoding::ising ? "ising" : "raw_psi"}}.dump(2) << '\n';
}

Matrix load_sufficient_stats(const fs::path& csv)
{
    const DataSidecar side = read_sidecar(sidecar_path(csv));
    const Matrix data = read_matrix_csv(csv);
    if (side.encoding == Encoding::ising) {
        if (data.cols() != side.nodes)
            throw DataError("'" + csv.string() + "' has " + std::to_string(data.cols()) + " columns, sidecar says m = " +
                            std::to_string(side.nodes));
        return ising_suff_stats(data);
    }
    if (data.cols() != edge_count(side.nodes))
        throw DataError("'" + csv.string() + "' has " + std::to_string(data.cols()) + " columns, expected m(m-1)/2 = " +
                        std::to_string(edge_count(side.nodes)));
    if (!data.allFinite()) throw DataError("'" + csv.string() + "' contains non-finite values");
    return data;
}

IsingModel read_graph_json(const fs::path& path)
{
    const json j = read_json(path);
    try {
        const int m = j.at("m").get<int>();
        if (m < 2) throw DataError("graph '" + path.string() + "': m must be >= 2");
        const EdgeMap edges(m);
        Vector gamma = Vector::Zero(edges.edges());
        std::vector<char> seen(static_cast<std::size_t>(edges.edges()), 0);
        for (const auto& e : j.at("edges")) {
            int u = e.at("u").get<int>(), v = e.at("v").get<int>();
            if (u < 1 || v < 1 || u > m || v > m || u == v)
                throw DataError("graph '" + path.string() + "': bad edge (" + std::to_string(u) + ", " +
                                std::to_string(v) + ")");
            if (u > v) std::swap(u, v);
            const int k = edges.index(u - 1, v - 1);
            if (seen[static_cast<std::size_t>(k)])
                throw DataError("graph '" + path.string() + "': duplicate edge (" + std::to_string(u) + ", " +
                                std::to_string(v) + ")");
            seen[static_cast<std::size_t>(k)] = 1;
            gamma[k] = e.at("weight").get<double>();
        }
        return IsingModel(m, std::move(gamma));
    } catch (const json::exception& e) {
        throw DataError("bad graph '" + path.string() + "': " + e.what());
    }
}

void write_graph_json(const fs::path& path, const IsingModel& g)
{
    const EdgeMap edges(g.nodes());
    json list = json::array();
    for (int k = 0; k < edges.edges(); ++k) {
        if (g.gamma()[k] == 0.0) continue;
        const auto [u, v] = edges.edge(k);
        list.push_back({{"u", u + 1}, {"v", v + 1}, {"weight", g.gamma()[k]}});
    }
    auto out = open_out(path);
    out << json{{"m", g.nodes()}, {"edges", list}}.dump(2) << '\n';
}

std::string CsvTable::str() const
{
    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out << ',';
            out << cells[i];
        }
        out << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out.str();
}

void CsvTable::write(const fs::path& path) const
{
    auto out = open_out(path);
    out << str();
}

} // namespace diffnet
