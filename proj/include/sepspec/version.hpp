#ifndef SEPSPEC_VERSION_HPP
#define SEPSPEC_VERSION_HPP

namespace sepspec {

inline constexpr const char* kVersion = "0.1.0";

}

#endif
