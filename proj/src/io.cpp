#include "gridtree/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace gridtree {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << content;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void save_measurements(const MeasurementSet& ms, const std::vector<int>& bus_ids,
                       const std::string& path) {
    std::ostringstream os;
    os << "t,bus,v_re,v_im,i_re,i_im\n";
    for (Index t = 0; t < ms.n_samples(); ++t) {
        for (int bus : bus_ids) {
            const auto it =
                std::find(ms.bus_order.begin(), ms.bus_order.end(), bus);
            require(it != ms.bus_order.end(), "bus id not in measurement set");
            const Index c = it - ms.bus_order.begin();
            os << t << ',' << bus << ',' << format_double(ms.v(t, c).real())
               << ',' << format_double(ms.v(t, c).imag()) << ','
               << format_double(ms.i(t, c).real()) << ','
               << format_double(ms.i(t, c).imag()) << '\n';
        }
    }
    write_text_file(path, os.str());
}

MeasurementSet load_measurements(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open measurement file: " + path);
    std::string line;
    std::getline(in, line);  // header
    struct Row {
        long t;
        int bus;
        Complex v, i;
    };
    std::vector<Row> rows;
    std::map<int, long> bus_counts;
    long max_t = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string field;
        double vals[6];
        for (int f = 0; f < 6; ++f) {
            if (!std::getline(ls, field, ',')) {
                throw std::runtime_error("malformed measurement row: " + line);
            }
            vals[f] = std::stod(field);
        }
        Row r{static_cast<long>(vals[0]), static_cast<int>(vals[1]),
              Complex(vals[2], vals[3]), Complex(vals[4], vals[5])};
        rows.push_back(r);
        ++bus_counts[r.bus];
        max_t = std::max(max_t, r.t);
    }
    require(!rows.empty(), "measurement file is empty");
    const long n = max_t + 1;
    for (const auto& [bus, count] : bus_counts) {
        require(count == n, "measurement file has missing samples for a bus");
    }
    MeasurementSet ms;
    for (const auto& [bus, count] : bus_counts) ms.bus_order.push_back(bus);
    ms.v = ComplexMatrix::Zero(n, static_cast<Index>(ms.bus_order.size()));
    ms.i = ms.v;
    for (const auto& r : rows) {
        const Index c = std::lower_bound(ms.bus_order.begin(), ms.bus_order.end(),
                                         r.bus) -
                        ms.bus_order.begin();
        ms.v(r.t, c) = r.v;
        ms.i(r.t, c) = r.i;
    }
    return ms;
}

void save_matrix_csv(const ComplexMatrix& m, const std::vector<int>& bus_order,
                     const std::string& path) {
    require(m.rows() == m.cols() &&
                m.rows() == static_cast<Index>(bus_order.size()),
            "matrix/bus order mismatch");
    std::ostringstream os;
    os << "bus";
    for (int b : bus_order) os << ',' << b << "_re," << b << "_im";
    os << '\n';
    for (Index r = 0; r < m.rows(); ++r) {
        os << bus_order[r];
        for (Index c = 0; c < m.cols(); ++c) {
            os << ',' << format_double(m(r, c).real()) << ','
               << format_double(m(r, c).imag());
        }
        os << '\n';
    }
    write_text_file(path, os.str());
}

void save_distance_matrix(const DistanceMatrix& d, const std::string& path) {
    save_matrix_csv(d.d, d.active, path);
}

void save_assignments(const std::vector<int>& assignment, const std::string& path) {
    std::ostringstream os;
    os << "t,cluster\n";
    for (std::size_t t = 0; t < assignment.size(); ++t) {
        os << t << ',' << assignment[t] << '\n';
    }
    write_text_file(path, os.str());
}

std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace gridtree
