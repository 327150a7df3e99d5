#include "daniel/dataset_io.hpp"

#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>

#include "daniel/wire.hpp"

namespace daniel {

namespace {

constexpr char kTextTag[] = "ISING-DATA";
constexpr char kBinMagic[4] = {'I', 'S', 'D', '1'};
constexpr char kThetaMagic[4] = {'D', 'T', 'H', '1'};

Bytes slurp(std::istream& in) {
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

BinaryDataset parse_binary(const Bytes& b) {
    if (b.size() < 16)
        throw IoError("dataset: truncated binary header");
    const std::uint32_t p = get_u32(b.data() + 4);
    const std::uint64_t n = get_u64(b.data() + 8);
    if (p == 0 || n == 0)
        throw IoError("dataset: empty binary dataset");
    if (n > (b.size() - 16) / p || b.size() - 16 != n * p)
        throw IoError("dataset: binary payload size does not match header");
    SpinMatrix s(static_cast<Index>(n), static_cast<Index>(p));
    std::memcpy(s.data(), b.data() + 16, n * p);
    try {
        return BinaryDataset(std::move(s));
    } catch (const ContractError& e) {
        throw IoError(std::string("dataset: ") + e.what());
    }
}

BinaryDataset parse_text(std::istream& in) {
    std::string line;
    if (!std::getline(in, line))
        throw IoError("dataset: empty file");
    std::istringstream hs(line);
    std::string tag, version, pfield, nfield;
    hs >> tag >> version >> pfield >> nfield;
    if (tag != kTextTag || version != "v1" || pfield.rfind("p=", 0) != 0 || nfield.rfind("n=", 0) != 0)
        throw IoError("dataset: bad header '" + line + "'");
    long long p = 0, n = 0;
    try {
        p = std::stoll(pfield.substr(2));
        n = std::stoll(nfield.substr(2));
    } catch (const std::exception&) {
        throw IoError("dataset: bad header '" + line + "'");
    }
    if (p <= 0 || n <= 0)
        throw IoError("dataset: header needs p >= 1 and n >= 1");

    SpinMatrix s(n, p);
    for (long long l = 0; l < n; ++l) {
        if (!std::getline(in, line))
            throw IoError("dataset: expected " + std::to_string(n) + " rows, got " + std::to_string(l));
        std::istringstream rs(line);
        std::string tok;
        long long j = 0;
        while (rs >> tok) {
            if (j >= p)
                throw IoError("dataset: row " + std::to_string(l + 1) + " has more than p values");
            if (tok == "1" || tok == "+1")
                s(l, j) = 1;
            else if (tok == "-1")
                s(l, j) = -1;
            else
                throw IoError("dataset: row " + std::to_string(l + 1) + " has non-spin value '" + tok + "'");
            ++j;
        }
        if (j != p)
            throw IoError("dataset: row " + std::to_string(l + 1) + " has " + std::to_string(j) + " values, want " +
                          std::to_string(p));
    }
    while (std::getline(in, line))
        if (line.find_first_not_of(" \t\r") != std::string::npos)
            throw IoError("dataset: trailing content after " + std::to_string(n) + " rows");
    return BinaryDataset(std::move(s));
}

} // namespace

void write_dataset(std::ostream& out, const BinaryDataset& data, DatasetFormat fmt) {
    const SpinMatrix& s = data.spins();
    if (fmt == DatasetFormat::Binary) {
        Bytes head(std::begin(kBinMagic), std::end(kBinMagic));
        put_u32(head, static_cast<std::uint32_t>(data.p()));
        put_u64(head, static_cast<std::uint64_t>(data.n()));
        out.write(reinterpret_cast<const char*>(head.data()), static_cast<std::streamsize>(head.size()));
        out.write(reinterpret_cast<const char*>(s.data()), static_cast<std::streamsize>(s.size()));
        return;
    }
    out << kTextTag << " v1 p=" << data.p() << " n=" << data.n() << '\n';
    std::string row;
    for (Index l = 0; l < data.n(); ++l) {
        row.clear();
        for (Index j = 0; j < data.p(); ++j) {
            if (j > 0)
                row += ' ';
            row += s(l, j) > 0 ? "1" : "-1";
        }
        row += '\n';
        out << row;
    }
}

void write_dataset(const std::filesystem::path& path, const BinaryDataset& data, DatasetFormat fmt) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw IoError("cannot open " + path.string() + " for writing");
    write_dataset(f, data, fmt);
    if (!f)
        throw IoError("write failed: " + path.string());
}

BinaryDataset read_dataset(std::istream& in) {
    char head[4] = {};
    in.read(head, 4);
    const auto got = in.gcount();
    if (got == 4 && std::memcmp(head, kBinMagic, 4) == 0) {
        Bytes b(head, head + 4);
        const Bytes rest = slurp(in);
        b.insert(b.end(), rest.begin(), rest.end());
        return parse_binary(b);
    }
    std::string prefix(head, static_cast<std::size_t>(got));
    std::stringstream joined;
    joined << prefix << in.rdbuf();
    return parse_text(joined);
}

BinaryDataset read_dataset(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open " + path.string());
    return read_dataset(f);
}

void write_theta(const std::filesystem::path& path, const MatrixXd& theta) {
    require(theta.rows() == theta.cols(), "write_theta: matrix must be square");
    Bytes b(std::begin(kThetaMagic), std::end(kThetaMagic));
    put_u32(b, static_cast<std::uint32_t>(theta.rows()));
    for (Index i = 0; i < theta.rows(); ++i)
        for (Index j = 0; j < theta.cols(); ++j)
            put_f64(b, theta(i, j));
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw IoError("cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
    if (!f)
        throw IoError("write failed: " + path.string());
}

MatrixXd read_theta(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open " + path.string());
    const Bytes b = slurp(f);
    if (b.size() < 8 || std::memcmp(b.data(), kThetaMagic, 4) != 0)
        throw IoError("theta: bad magic in " + path.string());
    const std::uint64_t p = get_u32(b.data() + 4);
    if (b.size() != 8 + 8 * p * p)
        throw IoError("theta: size does not match header in " + path.string());
    MatrixXd m(p, p);
    const std::uint8_t* q = b.data() + 8;
    for (Index i = 0; i < static_cast<Index>(p); ++i)
        for (Index j = 0; j < static_cast<Index>(p); ++j, q += 8)
            m(i, j) = get_f64(q);
    return m;
}

} // namespace daniel
