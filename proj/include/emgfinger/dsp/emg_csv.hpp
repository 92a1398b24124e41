#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "emgfinger/types.hpp"

namespace emgfinger::dsp {

// Raw EMG CSV: header `t,flexor,extensor`, seconds and volts, LF line endings.
std::vector<EmgFrame> read_emg_csv(std::istream& in);
std::vector<EmgFrame> read_emg_csv(const std::filesystem::path& path);
void write_emg_csv(std::ostream& out, const std::vector<EmgFrame>& frames);
void write_emg_csv(const std::filesystem::path& path, const std::vector<EmgFrame>& frames);

}  // namespace emgfinger::dsp
