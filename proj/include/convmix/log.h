#pragma once

#include <string>

namespace convmix {

// Warnings go to stderr unless silenced (the test suites silence them).
void warn(const std::string& message);
void set_warnings_enabled(bool enabled);

}  // namespace convmix
