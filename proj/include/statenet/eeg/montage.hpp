#pragma once

#include <string>
#include <utility>
#include <vector>

#include "statenet/core.hpp"

namespace statenet::eeg {

// Ordered list of bipolar derivations such as "C3-P3". Carries no learned
// state; the channel count of every window follows from it.
struct Montage {
  std::string name;
  std::vector<std::string> channels;

  Index size() const { return static_cast<Index>(channels.size()); }

  // Throws std::invalid_argument on an empty list or duplicate labels.
  void validate() const;

  bool operator==(const Montage&) const = default;
};

// Neonatal double-banana plus two transverse derivations.
Montage bipolar_18();

// C3-P3, C4-P4, P3-P4.
Montage bipolar_3();

// Accepts "18", "3", "bipolar18", "bipolar3".
Montage montage_by_name(const std::string& name);

// Electrodes of the 10-20 subset the synthetic generator simulates.
const std::vector<std::string>& electrode_names();

// "C3-P3" -> {"C3", "P3"}. Throws std::invalid_argument if the label is not of
// the form A-B.
std::pair<std::string, std::string> split_bipolar(const std::string& label);

}  // namespace statenet::eeg
