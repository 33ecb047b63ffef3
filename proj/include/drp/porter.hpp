#pragma once

#include <string>
#include <string_view>

namespace drp {

// Porter (1980) suffix-stripping stemmer, following the reference C
// implementation including its two documented departures (bli->ble,
// logi->log). Words containing anything other than a-z are returned as-is.
[[nodiscard]] std::string porter_stem(std::string_view word);

}  // namespace drp
