#include "sdsforge/certio.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace sdsforge {

namespace {

std::vector<uint32_t> parse_u32_list(const std::string& s) {
    std::istringstream in(s);
    std::vector<uint32_t> out;
    uint32_t x;
    while (in >> x) out.push_back(x);
    if (!in.eof()) throw Error("malformed number list: " + s);
    return out;
}

SdsParams parse_params(const std::string& s) {
    // v;k1,k2,k3,k4;lambda
    SdsParams p;
    std::istringstream in(s);
    std::string part;
    if (!std::getline(in, part, ';')) throw Error("params line missing v");
    p.v = uint32_t(std::stoul(part));
    if (!std::getline(in, part, ';')) throw Error("params line missing block sizes");
    {
        std::istringstream ks(part);
        std::string item;
        for (int i = 0; i < 4; ++i) {
            if (!std::getline(ks, item, ','))
                throw Error("params line needs four block sizes");
            p.k[i] = uint32_t(std::stoul(item));
        }
        if (std::getline(ks, item, ','))
            throw Error("params line has more than four block sizes");
    }
    if (!std::getline(in, part, ';')) throw Error("params line missing lambda");
    p.lambda = uint32_t(std::stoul(part));
    return p;
}

} // namespace

SdsCertificate read_certificate(std::istream& in) {
    SdsCertificate cert;
    bool have_v = false, have_params = false;
    std::array<bool, 4> have_set{};
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw Error("malformed certificate line: " + line);
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        if (key == "v") {
            cert.v = uint32_t(std::stoul(val));
            have_v = true;
        } else if (key == "H") {
            cert.generators = parse_u32_list(val);
        } else if (key == "params") {
            cert.params = parse_params(val);
            have_params = true;
        } else if (key == "skew") {
            cert.skew = std::stoi(val) != 0;
        } else if (key == "J" || key == "K" || key == "L" || key == "M") {
            const int idx = key == "J" ? 0 : key == "K" ? 1 : key == "L" ? 2 : 3;
            cert.index_sets[idx] = parse_u32_list(val);
            have_set[idx] = true;
        } else {
            throw Error("unknown certificate key: " + key);
        }
    }
    if (!have_v || !have_params)
        throw Error("certificate missing v= or params= line");
    for (int i = 0; i < 4; ++i)
        if (!have_set[i])
            throw Error(std::string("certificate missing ") + "JKLM"[i] + "= line");
    if (cert.params.v != cert.v)
        throw Error("certificate v= disagrees with params= modulus");
    return cert;
}

SdsCertificate read_certificate_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open certificate: " + path);
    return read_certificate(in);
}

void write_certificate(std::ostream& out, const SdsCertificate& cert) {
    out << "v=" << cert.v << '\n';
    out << "H=";
    for (size_t i = 0; i < cert.generators.size(); ++i)
        out << (i ? " " : "") << cert.generators[i];
    out << '\n';
    out << "params=" << cert.params.v << ';';
    for (int i = 0; i < 4; ++i) out << (i ? "," : "") << cert.params.k[i];
    out << ';' << cert.params.lambda << '\n';
    static constexpr const char* names[4] = {"J", "K", "L", "M"};
    for (int i = 0; i < 4; ++i) {
        out << names[i] << '=';
        for (size_t j = 0; j < cert.index_sets[i].size(); ++j)
            out << (j ? " " : "") << cert.index_sets[i][j];
        out << '\n';
    }
    if (cert.skew.has_value()) out << "skew=" << (*cert.skew ? 1 : 0) << '\n';
}

void write_matrix_text(std::ostream& out, const SignMatrix& m) {
    const uint32_t n = m.order();
    std::string line(n, '+');
    for (uint32_t r = 0; r < n; ++r) {
        for (uint32_t c = 0; c < n; ++c) line[c] = m.at(r, c) > 0 ? '+' : '-';
        out << line << '\n';
    }
}

SignMatrix read_matrix_text(std::istream& in) {
    std::vector<std::string> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        rows.push_back(line);
    }
    if (rows.empty()) throw Error("matrix file has no rows");
    const size_t n = rows.size();
    if (rows[0].size() != n)
        throw DimensionMismatch("matrix is " + std::to_string(n) + " rows of " +
                                std::to_string(rows[0].size()) + " columns");
    SignMatrix m{uint32_t(n)};
    for (uint32_t r = 0; r < n; ++r) {
        if (rows[r].size() != n)
            throw DimensionMismatch("row " + std::to_string(r + 1) +
                                    " has wrong length");
        for (uint32_t c = 0; c < n; ++c) {
            const char ch = rows[r][c];
            if (ch != '+' && ch != '-')
                throw Error(std::string("invalid matrix character '") + ch + "'");
            m.set(r, c, ch == '+' ? int8_t{1} : int8_t{-1});
        }
    }
    return m;
}

void write_matrix_packed(std::ostream& out, const SignMatrix& m) {
    out.write(kMatrixMagic, 8);
    const uint64_t order = m.order();
    char hdr[8];
    for (int i = 0; i < 8; ++i) hdr[i] = char((order >> (8 * i)) & 0xFF);
    out.write(hdr, 8);
    const uint32_t n = m.order();
    const size_t row_bytes = (n + 7) / 8;
    std::vector<char> buf(row_bytes);
    for (uint32_t r = 0; r < n; ++r) {
        std::fill(buf.begin(), buf.end(), 0);
        for (uint32_t c = 0; c < n; ++c)
            if (m.at(r, c) < 0) buf[c >> 3] |= char(1 << (c & 7));
        out.write(buf.data(), std::streamsize(row_bytes));
    }
}

SignMatrix read_matrix_packed(std::istream& in) {
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, kMatrixMagic, 8) != 0)
        throw Error("not a packed matrix file (bad magic)");
    char hdr[8];
    if (!in.read(hdr, 8)) throw Error("truncated packed matrix header");
    uint64_t order = 0;
    for (int i = 0; i < 8; ++i)
        order |= uint64_t(uint8_t(hdr[i])) << (8 * i);
    if (order == 0 || order > (1ull << 22))
        throw Error("packed matrix order " + std::to_string(order) +
                    " out of range");
    const uint32_t n = uint32_t(order);
    const size_t row_bytes = (n + 7) / 8;
    SignMatrix m(n);
    std::vector<char> buf(row_bytes);
    for (uint32_t r = 0; r < n; ++r) {
        if (!in.read(buf.data(), std::streamsize(row_bytes)))
            throw Error("truncated packed matrix row " + std::to_string(r + 1));
        for (uint32_t c = 0; c < n; ++c)
            m.set(r, c,
                  (uint8_t(buf[c >> 3]) >> (c & 7)) & 1 ? int8_t{-1} : int8_t{1});
    }
    return m;
}

} // namespace sdsforge
