#include "statenet/core.hpp"

#include <iostream>

namespace statenet {

void warn(const std::string& message) { std::cerr << "warning: " << message << '\n'; }

}  // namespace statenet
