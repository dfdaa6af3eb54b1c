#pragma once

// Seeded synthetic incident export for end-to-end tests.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

namespace trendlens::testing {

struct SyntheticCategory {
    std::string description;
    double before_rate;  // mean monthly count before Nov 2014
    double after_rate;
};

struct SyntheticOptions {
    std::uint64_t seed = 1;
    std::vector<SyntheticCategory> categories{
        {"LARCENY - PETTY THEFT", 40.0, 55.0},
        {"FRAUD", 6.0, 7.0},
        {"AGGRAVATED ASSAULT WITH HANDS", 30.0, 24.0},
        {"ARSON", 1.0, 1.0},
    };
    bool constant = false;  // exact rate every month, no noise
    int corrupt_rows = 5;
};

/// Points scatter within about 300 m of downtown so every station filter and the
/// Downtown neighborhood box see records.
inline void write_synthetic_export(const std::filesystem::path& path, const SyntheticOptions& opts) {
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> jitter(-0.0025, 0.0025);
    std::uniform_int_distribution<int> day(1, 28);
    std::ofstream out(path, std::ios::binary);
    out << "date,ucr_code,description,latitude,longitude\n";
    for (int year = 2006; year <= 2019; ++year) {
        for (int month = 1; month <= 12; ++month) {
            const bool after = year > 2014 || (year == 2014 && month >= 11);
            for (const auto& c : opts.categories) {
                const double rate = after ? c.after_rate : c.before_rate;
                int count = static_cast<int>(rate);
                if (!opts.constant) count = std::poisson_distribution<int>(rate)(rng);
                for (int k = 0; k < count; ++k) {
                    out << fmt::format("{:04d}-{:02d}-{:02d},100,{},{:.6f},{:.6f}\n", year, month, day(rng),
                                       c.description, 34.0140 + jitter(rng), -118.4912 + jitter(rng));
                }
            }
        }
    }
    for (int k = 0; k < opts.corrupt_rows; ++k) out << "2010-02-30,100,LARCENY,34.01,-118.49\n";
}

}  // namespace trendlens::testing
