#pragma once

namespace mcgan {

/// Keep freed tensor buffers on the heap instead of returning them to the
/// kernel. Training allocates and frees the same large temporaries every
/// step; with glibc's default mmap threshold each one costs page faults.
/// No-op off glibc. Call once at program start.
void tune_allocator();

}  // namespace mcgan
