#pragma once

namespace twoflow {

// Serial kernels are the reference; parallel kernels must reproduce them bit for bit.
enum class Exec { Serial, Parallel };

}  // namespace twoflow
