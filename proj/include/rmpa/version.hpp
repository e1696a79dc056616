#ifndef RMPA_VERSION_HPP
#define RMPA_VERSION_HPP

namespace rmpa {
inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kResultSchemaVersion = 1;
}  // namespace rmpa

#endif
