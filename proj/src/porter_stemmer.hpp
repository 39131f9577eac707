#pragma once

#include <string>
#include <string_view>

namespace clarq::detail {

/// The original Porter (1980) suffix-stripping algorithm over lowercase
/// ASCII words. Words shorter than three characters are returned unchanged.
std::string porter_stem(std::string_view word);

}  // namespace clarq::detail
