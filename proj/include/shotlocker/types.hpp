#pragma once

#include <cstdint>

namespace shotlocker {

using RecordId = std::uint64_t;

enum class Split { train, test };

}  // namespace shotlocker
