#include "emgfinger/dsp/emg_csv.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>

namespace emgfinger::dsp {

std::vector<EmgFrame> read_emg_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "t,flexor,extensor") {
    throw std::runtime_error("EMG CSV must start with header 't,flexor,extensor'");
  }
  std::vector<EmgFrame> frames;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    EmgFrame f;
    char c1 = 0, c2 = 0;
    if (!(row >> f.t >> c1 >> f.channels[0] >> c2 >> f.channels[1]) || c1 != ',' || c2 != ',') {
      throw std::runtime_error("malformed EMG CSV row at line " + std::to_string(lineno));
    }
    if (!frames.empty() && !(f.t > frames.back().t)) {
      throw std::runtime_error("EMG timestamps must be strictly increasing (line " +
                               std::to_string(lineno) + ")");
    }
    frames.push_back(f);
  }
  return frames;
}

std::vector<EmgFrame> read_emg_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_emg_csv(in);
}

void write_emg_csv(std::ostream& out, const std::vector<EmgFrame>& frames) {
  out << "t,flexor,extensor\n" << std::setprecision(17);
  for (const EmgFrame& f : frames) {
    out << f.t << ',' << f.channels[0] << ',' << f.channels[1] << '\n';
  }
}

void write_emg_csv(const std::filesystem::path& path, const std::vector<EmgFrame>& frames) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_emg_csv(out, frames);
}

}  // namespace emgfinger::dsp
