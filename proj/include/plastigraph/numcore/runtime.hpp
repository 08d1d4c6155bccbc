#pragma once

namespace plastigraph::num {

/// Keeps large temporaries on the heap instead of fresh mappings. Training
/// allocates and frees multi-megabyte matrices every step, and returning them
/// to the kernel each time costs more than the arithmetic. Call once at startup.
void tune_allocator();

}  // namespace plastigraph::num
