#include "rmpa/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "rmpa/rng.hpp"

namespace rmpa {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    for (auto& f : out) f = trim(f);
    return out;
}

double parse_double(const std::string& s, const std::string& where) {
    const std::string t = trim(s);
    if (t.empty()) throw DataError(where + ": empty numeric field");
    char* end = nullptr;
    double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || !std::isfinite(v))
        throw DataError(where + ": cannot parse number '" + t + "'");
    return v;
}

//! Reads a CSV file: skips blank and '#' lines, checks the exact header,
//! hands each data row (split fields, 1-based line number) to row_fn.
template <typename RowFn>
void read_csv(const std::string& path, const std::string& header, size_t n_fields,
              RowFn&& row_fn) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::string line;
    size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (!header_seen) {
            if (t != header)
                throw DataError(path + ":" + std::to_string(line_no) + ": expected header '" +
                                header + "', got '" + t + "'");
            header_seen = true;
            continue;
        }
        std::vector<std::string> fields = split_csv(t);
        if (fields.size() != n_fields)
            throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(n_fields) + " fields, got " +
                            std::to_string(fields.size()));
        row_fn(fields, line_no);
    }
    if (!header_seen) throw DataError(path + ": missing header '" + header + "'");
}

std::string row_id(const std::string& path, size_t line_no) {
    return path + ":" + std::to_string(line_no);
}

}  // namespace

std::vector<Plant> load_plants(const std::string& path, std::vector<std::string>* warnings) {
    (void)warnings;
    std::vector<Plant> plants;
    std::set<std::string> ids;
    read_csv(path, "id,name,lat,lon,emissions_t_per_yr", 5,
             [&](const std::vector<std::string>& f, size_t line_no) {
                 const std::string where = row_id(path, line_no);
                 Plant p;
                 p.id = f[0];
                 p.name = f[1];
                 p.latitude = parse_double(f[2], where);
                 p.longitude = parse_double(f[3], where);
                 p.emissions = parse_double(f[4], where);
                 if (p.id.empty()) throw DataError(where + ": empty plant id");
                 if (!ids.insert(p.id).second)
                     throw DataError(where + ": duplicate plant id '" + p.id + "'");
                 if (p.latitude < -90.0 || p.latitude > 90.0)
                     throw DataError(where + ": latitude " + f[2] + " out of [-90, 90]");
                 if (p.longitude < -180.0 || p.longitude > 180.0)
                     throw DataError(where + ": longitude " + f[3] + " out of [-180, 180]");
                 if (!(p.emissions > 0.0))
                     throw DataError(where + ": emissions must be positive, got " + f[4]);
                 plants.push_back(std::move(p));
             });
    return plants;
}

std::vector<Boiler> load_boilers(const std::string& path, std::vector<std::string>* warnings) {
    std::vector<Boiler> boilers;
    std::set<std::string> ids;
    read_csv(path, "id,site,energy_mj_per_yr", 3,
             [&](const std::vector<std::string>& f, size_t line_no) {
                 const std::string where = row_id(path, line_no);
                 Boiler b;
                 b.id = f[0];
                 b.site = f[1];
                 b.demand = parse_double(f[2], where);
                 if (b.id.empty()) throw DataError(where + ": empty boiler id");
                 if (!ids.insert(b.id).second)
                     throw DataError(where + ": duplicate boiler id '" + b.id + "'");
                 if (!(b.demand > 0.0))
                     throw DataError(where + ": energy must be positive, got " + f[2]);
                 if (b.demand < 1e4 && warnings)
                     warnings->push_back(where + ": energy " + f[2] +
                                         " MJ/yr is suspiciously small; GWh value pasted in?");
                 boilers.push_back(std::move(b));
             });
    return boilers;
}

namespace {

std::string fmt6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string padded_id(const char* prefix, int i, int n) {
    int width = 3;
    for (int scale = 1000; n >= scale; scale *= 10) ++width;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%0*d", prefix, width, i);
    return buf;
}

}  // namespace

void generate_synthetic(const std::string& model, int n, uint64_t seed, const std::string& path,
                        const SyntheticRanges& ranges) {
    if (model != "tech" && model != "fuel")
        throw DataError("generate_synthetic: model must be tech or fuel, got '" + model + "'");
    if (n < 1) throw DataError("generate_synthetic: n must be >= 1");

    std::ofstream out(path, std::ios::binary);  // '\n' endings on every platform
    if (!out) throw DataError("cannot write " + path);

    Rng rng(seed);
    out << "# synthetic dataset, not survey data\n";
    out << "# model=" << model << " n=" << n << " seed=" << seed << "\n";
    if (model == "tech") {
        out << "# emissions ~ U[" << fmt6(ranges.emissions_lo) << ", "
            << fmt6(ranges.emissions_hi) << "] t/yr; coordinates ~ EU bounding box\n";
        out << "# pair with scalar defaults (config model.*): C0=88 $/t, eta=0.63, Lr=0.07, "
               "A0=1e+05 t/yr (synthetic)\n";
        out << "id,name,lat,lon,emissions_t_per_yr\n";
        for (int i = 1; i <= n; ++i) {
            double lat = rng.uniform(ranges.lat_lo, ranges.lat_hi);
            double lon = rng.uniform(ranges.lon_lo, ranges.lon_hi);
            double emissions = rng.uniform(ranges.emissions_lo, ranges.emissions_hi);
            out << padded_id("P", i, n) << ",Plant " << padded_id("", i, n) << "," << fmt6(lat)
                << "," << fmt6(lon) << "," << fmt6(emissions) << "\n";
        }
    } else {
        out << "# energy ~ U[" << fmt6(ranges.demand_lo) << ", " << fmt6(ranges.demand_hi)
            << "] MJ/yr\n";
        out << "# pair with scalar defaults (config model.*): C0=1800 GBP/t, LHV_F2=120, "
               "LHV_F1=42, C_F1=292, eta_F2=0.9, Lr=0.07, A0=1e+04 t/yr (synthetic)\n";
        out << "id,site,energy_mj_per_yr\n";
        for (int j = 1; j <= n; ++j) {
            double demand = rng.uniform(ranges.demand_lo, ranges.demand_hi);
            out << padded_id("B", j, n) << ",Site " << padded_id("", j, n) << ","
                << fmt6(demand) << "\n";
        }
    }
    if (!out) throw DataError("write failed: " + path);
}

namespace {

const std::set<std::string>& known_config_keys() {
    static const std::set<std::string> keys = {
        "set.kind", "set.level", "set.omega",
        "robust.tol", "robust.max_iter", "robust.workers", "robust.seed",
        "solver.starts", "solver.starts_upper", "solver.seed",
        "solver.feas_tol", "solver.stat_tol", "solver.max_outer",
        "model.eta", "model.c0", "model.a0", "model.lr", "model.mu", "model.t_max",
        "model.cost_basis", "model.mu_direction",
        "model.lhv_f1", "model.lhv_f2", "model.c_f1", "model.eta_f2", "model.g_max",
    };
    return keys;
}

constexpr const char* kLevelPrefix = "set.level.";

}  // namespace

ConfigTable ConfigTable::from_string(const std::string& text, const std::string& origin) {
    ConfigTable table;
    table.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::string t = trim(line);
        if (t.empty()) continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(line_no) +
                              ": expected 'key = value', got '" + t + "'");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key or value");
        bool known = known_config_keys().count(key) != 0 ||
                     (key.rfind(kLevelPrefix, 0) == 0 && key.size() > std::strlen(kLevelPrefix));
        if (!known)
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": unknown key '" + key +
                              "'");
        if (!table.entries_.emplace(key, value).second)
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" + key +
                              "'");
    }
    return table;
}

ConfigTable ConfigTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return from_string(text.str(), path);
}

double ConfigTable::get_double(const std::string& key, double fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    char* end = nullptr;
    double v = std::strtod(it->second.c_str(), &end);
    if (end != it->second.c_str() + it->second.size() || !std::isfinite(v))
        throw ConfigError(origin_ + ": key '" + key + "': cannot parse number '" + it->second +
                          "'");
    return v;
}

int ConfigTable::get_int(const std::string& key, int fallback) const {
    double v = get_double(key, static_cast<double>(fallback));
    if (v != std::floor(v))
        throw ConfigError(origin_ + ": key '" + key + "' must be an integer");
    return static_cast<int>(v);
}

uint64_t ConfigTable::get_seed(const std::string& key, uint64_t fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    char* end = nullptr;
    unsigned long long v = std::strtoull(it->second.c_str(), &end, 10);
    if (end != it->second.c_str() + it->second.size())
        throw ConfigError(origin_ + ": key '" + key + "': cannot parse seed '" + it->second + "'");
    return v;
}

std::string ConfigTable::get_string(const std::string& key, const std::string& fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

std::string ConfigTable::get_enum(const std::string& key, const std::vector<std::string>& allowed,
                                  const std::string& fallback) const {
    std::string v = get_string(key, fallback);
    if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
        std::string list;
        for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
        throw ConfigError(origin_ + ": key '" + key + "': value '" + v + "' not allowed (" + list +
                          ")");
    }
    return v;
}

std::map<std::string, double> ConfigTable::prefixed_doubles(const std::string& prefix) const {
    std::map<std::string, double> out;
    for (const auto& [key, value] : entries_) {
        if (key.rfind(prefix, 0) != 0) continue;
        char* end = nullptr;
        double v = std::strtod(value.c_str(), &end);
        if (end != value.c_str() + value.size() || !std::isfinite(v))
            throw ConfigError(origin_ + ": key '" + key + "': cannot parse number '" + value +
                              "'");
        out.emplace(key.substr(prefix.size()), v);
    }
    return out;
}

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    uint64_t h = 1469598103934665603ull;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
        if (!in) break;
    }
    char hex[24];
    std::snprintf(hex, sizeof(hex), "fnv1a:%016llx", static_cast<unsigned long long>(h));
    return hex;
}

}  // namespace rmpa
