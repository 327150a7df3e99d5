#include "daniel/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace daniel {

const char* method_name(Method m) noexcept {
    switch (m) {
    case Method::Daniel: return "DANIEL";
    case Method::SvSoft: return "SvSoft";
    case Method::SvHard: return "SvHard";
    case Method::SvTopd: return "SvTopd";
    case Method::PsdCvx: return "PsdCvx";
    }
    return "?";
}

Method parse_method(const std::string& name) {
    std::string key;
    for (char c : name)
        if (c != '-' && c != '_')
            key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    for (Method m : kAllMethods) {
        std::string canon;
        for (const char* c = method_name(m); *c; ++c)
            canon += static_cast<char>(std::tolower(static_cast<unsigned char>(*c)));
        if (key == canon)
            return m;
    }
    throw ContractError("unknown method '" + name + "'");
}

std::uint64_t method_id(Method m) noexcept { return static_cast<std::uint64_t>(m); }

Index ExperimentConfig::d_for(Index p) const {
    if (d)
        return *d;
    return std::max<Index>(1, static_cast<Index>(std::llround(d_ratio * static_cast<double>(p))));
}

void ExperimentConfig::validate() const {
    require(!p_list.empty() && !n_list.empty() && !x_list.empty(), "config: p_list, n_list and x_list must be non-empty");
    require(!methods.empty(), "config: methods must be non-empty");
    require(reps >= 1, "config: reps must be >= 1");
    require(burn_in >= 1, "config: burn_in must be >= 1");
    require(sv_tau >= 0.0, "config: sv_tau must be >= 0");
    for (Index p : p_list)
        require(p >= 2, "config: every p must be >= 2");
    for (Index n : n_list)
        require(n >= 1, "config: every n must be >= 1");
    for (double x : x_list)
        require(x >= 0.0 && x <= 1.0, "config: every x must lie in [0, 1]");
    for (double e : eta_grid)
        require(e > 0.0, "config: eta_grid entries must be > 0");
    if (d)
        for (Index p : p_list)
            require(*d >= 1 && *d <= p, "config: d must lie in [1, p]");
    else
        require(d_ratio > 0.0 && d_ratio <= 1.0, "config: d_ratio must lie in (0, 1]");
    OptimizerConfig o = optimizer;
    o.d = 1;
    o.validate();
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double to_double(const std::string& key, const std::string& s) {
    if (s == "inf")
        return std::numeric_limits<double>::infinity();
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size())
            return v;
    } catch (const std::exception&) {
    }
    throw ContractError("config: '" + key + "' expects a number, got '" + s + "'");
}

template <typename Int>
Int to_int(const std::string& key, const std::string& s) {
    Int v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ContractError("config: '" + key + "' expects an integer, got '" + s + "'");
    return v;
}

std::vector<std::string> to_list(const std::string& key, const std::string& s) {
    if (s.size() < 2 || s.front() != '[' || s.back() != ']')
        throw ContractError("config: '" + key + "' expects a list like [a, b]");
    std::vector<std::string> out;
    std::stringstream ss(s.substr(1, s.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty())
            throw ContractError("config: empty element in '" + key + "'");
        out.push_back(item);
    }
    return out;
}

template <typename T, typename F>
std::string join(const std::vector<T>& v, F&& f) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0)
            out += ", ";
        out += f(v[i]);
    }
    return out + "]";
}

} // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
    ExperimentConfig c;
    std::map<std::string, std::string> seen;
    std::stringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ContractError("config: line " + std::to_string(lineno) + " is not key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (!seen.emplace(key, val).second)
            throw ContractError("config: duplicate key '" + key + "'");

        if (key == "p_list") {
            c.p_list.clear();
            for (const auto& s : to_list(key, val))
                c.p_list.push_back(to_int<Index>(key, s));
        } else if (key == "n_list") {
            c.n_list.clear();
            for (const auto& s : to_list(key, val))
                c.n_list.push_back(to_int<Index>(key, s));
        } else if (key == "x_list") {
            c.x_list.clear();
            for (const auto& s : to_list(key, val))
                c.x_list.push_back(to_double(key, s));
        } else if (key == "d") {
            c.d = to_int<Index>(key, val);
        } else if (key == "d_ratio") {
            c.d_ratio = to_double(key, val);
        } else if (key == "methods") {
            c.methods.clear();
            for (const auto& s : to_list(key, val))
                c.methods.push_back(parse_method(s));
        } else if (key == "reps") {
            c.reps = to_int<int>(key, val);
        } else if (key == "base_seed") {
            c.base_seed = to_int<std::uint64_t>(key, val);
        } else if (key == "eta") {
            c.optimizer.eta = to_double(key, val);
        } else if (key == "gamma_max") {
            c.optimizer.gamma_max = to_int<int>(key, val);
        } else if (key == "tol") {
            c.optimizer.tol = to_double(key, val);
        } else if (key == "lambda") {
            c.optimizer.lambda = to_double(key, val);
        } else if (key == "init_steps") {
            c.optimizer.init_steps = to_int<int>(key, val);
        } else if (key == "ball_radius") {
            c.optimizer.ball_radius = to_double(key, val);
        } else if (key == "eta_grid") {
            c.eta_grid.clear();
            if (val != "[]")
                for (const auto& s : to_list(key, val))
                    c.eta_grid.push_back(to_double(key, s));
        } else if (key == "sv_tau") {
            c.sv_tau = to_double(key, val);
        } else if (key == "burn_in") {
            c.burn_in = to_int<int>(key, val);
        } else if (key == "output_path") {
            c.output_path = val;
        } else {
            throw ContractError("config: unknown key '" + key + "'");
        }
    }
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f)
        throw IoError("cannot open config " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
}

std::string ExperimentConfig::serialize() const {
    std::ostringstream out;
    auto idx = [](Index v) { return std::to_string(v); };
    out << "p_list = " << join(p_list, idx) << '\n';
    out << "n_list = " << join(n_list, idx) << '\n';
    out << "x_list = " << join(x_list, fmt_double) << '\n';
    if (d)
        out << "d = " << *d << '\n';
    out << "d_ratio = " << fmt_double(d_ratio) << '\n';
    out << "methods = " << join(methods, [](Method m) { return std::string(method_name(m)); }) << '\n';
    out << "reps = " << reps << '\n';
    out << "base_seed = " << base_seed << '\n';
    out << "eta = " << fmt_double(optimizer.eta) << '\n';
    out << "gamma_max = " << optimizer.gamma_max << '\n';
    out << "tol = " << fmt_double(optimizer.tol) << '\n';
    if (optimizer.lambda)
        out << "lambda = " << fmt_double(*optimizer.lambda) << '\n';
    out << "init_steps = " << optimizer.init_steps << '\n';
    out << "ball_radius = " << fmt_double(optimizer.ball_radius) << '\n';
    out << "eta_grid = " << join(eta_grid, fmt_double) << '\n';
    out << "sv_tau = " << fmt_double(sv_tau) << '\n';
    out << "burn_in = " << burn_in << '\n';
    out << "output_path = " << output_path << '\n';
    return out.str();
}

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
    const auto& a = optimizer;
    const auto& b = o.optimizer;
    return p_list == o.p_list && n_list == o.n_list && x_list == o.x_list && d == o.d && d_ratio == o.d_ratio &&
           methods == o.methods && reps == o.reps && base_seed == o.base_seed && eta_grid == o.eta_grid &&
           sv_tau == o.sv_tau && burn_in == o.burn_in && output_path == o.output_path && a.eta == b.eta &&
           a.gamma_max == b.gamma_max && a.tol == b.tol && a.lambda == b.lambda && a.init_steps == b.init_steps &&
           a.ball_radius == b.ball_radius;
}

} // namespace daniel
