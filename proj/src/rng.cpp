#include "fdrl/rng.hpp"

#include <sstream>

#include "fdrl/errors.hpp"

namespace fdrl {

std::string Rng::serialize() const {
    std::ostringstream out;
    out << engine_;
    return out.str();
}

void Rng::deserialize(const std::string& text) {
    std::istringstream in(text);
    in >> engine_;
    if (!in) throw FormatError("invalid rng state");
}

}  // namespace fdrl
