#include "emgfinger/estimators/dataset.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace emgfinger::estimators {

void Dataset::validate() const {
  if (features.size() != force.size()) throw std::invalid_argument("dataset length mismatch");
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& x = features[i];
    if (!std::isfinite(x.flexor) || !std::isfinite(x.extensor) || !std::isfinite(force[i]) ||
        x.flexor < 0.0 || x.extensor < 0.0 || force[i] < 0.0) {
      throw std::invalid_argument("dataset row " + std::to_string(i) +
                                  " is not finite and non-negative");
    }
    if (i > 0 && !(x.t > features[i - 1].t)) {
      throw std::invalid_argument("dataset timestamps must increase (row " + std::to_string(i) + ")");
    }
  }
}

Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "t,flexor_rms,extensor_rms,force_norm") {
    throw std::runtime_error("dataset CSV must start with header 't,flexor_rms,extensor_rms,force_norm'");
  }
  Dataset data;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    FeatureVector x;
    double y = 0.0;
    char c1 = 0, c2 = 0, c3 = 0;
    if (!(row >> x.t >> c1 >> x.flexor >> c2 >> x.extensor >> c3 >> y) || c1 != ',' ||
        c2 != ',' || c3 != ',') {
      throw std::runtime_error("malformed dataset CSV row at line " + std::to_string(lineno));
    }
    data.push_back(x, y);
  }
  data.validate();
  return data;
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  Dataset d = read_dataset_csv(in);
  d.trial = path.stem().string();
  return d;
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  out << "t,flexor_rms,extensor_rms,force_norm\n" << std::setprecision(17);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& x = data.features[i];
    out << x.t << ',' << x.flexor << ',' << x.extensor << ',' << data.force[i] << '\n';
  }
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_dataset_csv(out, data);
}

}  // namespace emgfinger::estimators
