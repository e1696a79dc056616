#ifndef RMPA_DATA_IO_HPP
#define RMPA_DATA_IO_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rmpa/models.hpp"

namespace rmpa {

struct DataError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

//! CSV schema: `id,name,lat,lon,emissions_t_per_yr`. Lines starting with
//! '#' are comments. Errors carry the offending line number.
std::vector<Plant> load_plants(const std::string& path,
                               std::vector<std::string>* warnings = nullptr);

//! CSV schema: `id,site,energy_mj_per_yr`. Rows whose energy looks like it
//! was left in GWh (value < 1e4) are accepted with a recorded warning.
std::vector<Boiler> load_boilers(const std::string& path,
                                 std::vector<std::string>* warnings = nullptr);

struct SyntheticRanges {
    // tech: plant emissions, t/yr
    double emissions_lo = 1e6;
    double emissions_hi = 1e7;
    // fuel: boiler thermal demand, MJ/yr (10..500 GWh/yr)
    double demand_lo = 3.6e7;
    double demand_hi = 1.8e9;
    // plant coordinates, roughly EU
    double lat_lo = 36.0, lat_hi = 60.0;
    double lon_lo = -10.0, lon_hi = 25.0;
};

//! Deterministic synthetic dataset standing in for the unpublished survey
//! data. Same (model, n, seed, ranges) gives byte-identical files: fixed
//! row order, 6 significant digits, '\n' line endings. Generated files are
//! stamped with `# synthetic` comments.
void generate_synthetic(const std::string& model, int n, uint64_t seed, const std::string& path,
                        const SyntheticRanges& ranges = {});

//! Flat `key = value` config with '#' comments. Unknown keys are an error;
//! missing keys fall back to the documented defaults at access time.
class ConfigTable {
public:
    static ConfigTable load(const std::string& path);
    static ConfigTable from_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    uint64_t get_seed(const std::string& key, uint64_t fallback) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    //! Value must be one of `allowed`; the error lists them.
    std::string get_enum(const std::string& key, const std::vector<std::string>& allowed,
                         const std::string& fallback) const;

    //! Keys matching `prefix` + suffix, mapped suffix -> numeric value
    //! (per-family uncertainty levels).
    std::map<std::string, double> prefixed_doubles(const std::string& prefix) const;

    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    std::map<std::string, std::string> entries_;
    std::string origin_;
};

//! FNV-1a 64 over the file bytes, as "fnv1a:<hex>"; the dataset digest
//! recorded in run manifests.
std::string file_digest(const std::string& path);

}  // namespace rmpa

#endif
