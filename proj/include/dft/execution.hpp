#pragma once

namespace dft {

/// Selects between the OpenMP kernel and the serial reference path. Both must
/// produce identical results; the serial path is kept for testing and for
/// environments built without OpenMP.
enum class Execution { serial, parallel };

} // namespace dft
