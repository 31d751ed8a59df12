#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fedfilter/lms.hpp"

namespace fedfilter {

// Reads a whitespace/tab separated numeric log (MHEALTH layout) and returns
// one series per requested 1-based column, in request order. Blank lines are
// skipped. Throws DataError naming the file and line on any problem.
std::vector<SampleSeries> load_dataset(const std::filesystem::path& path,
                                       std::span<const std::size_t> columns);

// Concatenates `series` in order and cuts the result into n_devices
// contiguous chunks of equal length; leftover samples at the tail are
// dropped. Device ids are 0..n_devices-1.
std::vector<SampleSeries> partition_devices(const std::vector<SampleSeries>& series,
                                            std::size_t n_devices,
                                            std::size_t min_len = 1);

// x_t = mean + phi (x_{t-1} - mean) + noise_sigma * N(0,1), started from the
// stationary distribution.
std::vector<double> synthetic_ar1(std::size_t length, double phi, double noise_sigma,
                                  double mean, std::uint64_t seed);

}  // namespace fedfilter
