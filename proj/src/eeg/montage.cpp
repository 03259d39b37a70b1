#include "statenet/eeg/montage.hpp"

#include <set>
#include <stdexcept>

namespace statenet::eeg {

void Montage::validate() const {
  if (channels.empty()) throw std::invalid_argument("montage '" + name + "' has no channels");
  std::set<std::string> seen;
  for (const auto& label : channels) {
    if (!seen.insert(label).second) {
      throw std::invalid_argument("montage '" + name + "' repeats channel " + label);
    }
  }
}

Montage bipolar_18() {
  return {"bipolar18",
          {"Fp2-F4", "F4-C4", "C4-P4", "P4-O2", "Fp1-F3", "F3-C3", "C3-P3", "P3-O1", "Fp2-T4",
           "T4-T6", "T6-O2", "Fp1-T3", "T3-T5", "T5-O1", "Fz-Cz", "Cz-Pz", "T4-C4", "C3-T3"}};
}

Montage bipolar_3() { return {"bipolar3", {"C3-P3", "C4-P4", "P3-P4"}}; }

Montage montage_by_name(const std::string& name) {
  if (name == "18" || name == "bipolar18") return bipolar_18();
  if (name == "3" || name == "bipolar3") return bipolar_3();
  throw std::invalid_argument("unknown montage '" + name + "' (expected 18 or 3)");
}

const std::vector<std::string>& electrode_names() {
  static const std::vector<std::string> names{"Fp1", "Fp2", "F3", "F4", "C3", "C4",
                                              "P3",  "P4",  "O1", "O2", "T3", "T4",
                                              "T5",  "T6",  "Fz", "Cz", "Pz"};
  return names;
}

std::pair<std::string, std::string> split_bipolar(const std::string& label) {
  const auto dash = label.find('-');
  if (dash == std::string::npos || dash == 0 || dash + 1 >= label.size() ||
      label.find('-', dash + 1) != std::string::npos) {
    throw std::invalid_argument("not a bipolar channel label: '" + label + "'");
  }
  return {label.substr(0, dash), label.substr(dash + 1)};
}

}  // namespace statenet::eeg
