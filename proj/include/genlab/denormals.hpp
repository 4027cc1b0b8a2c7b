#pragma once

#if defined(__SSE__) || defined(_M_X64)
#include <xmmintrin.h>
#define GENLAB_HAVE_MXCSR 1
#endif

namespace genlab {

/// Flushes denormal results and operands to zero while alive, restoring the
/// previous floating-point mode on exit. Long training runs drive optimizer
/// moments and dead-unit gradients into the denormal range, where x86 float
/// arithmetic is many times slower. No-op on targets without MXCSR.
class ScopedFlushDenormals {
   public:
    ScopedFlushDenormals() noexcept {
#ifdef GENLAB_HAVE_MXCSR
        saved_ = _mm_getcsr();
        _mm_setcsr(saved_ | kFlushToZero | kDenormalsAreZero);
#endif
    }
    ~ScopedFlushDenormals() {
#ifdef GENLAB_HAVE_MXCSR
        _mm_setcsr(saved_);
#endif
    }
    ScopedFlushDenormals(const ScopedFlushDenormals&) = delete;
    ScopedFlushDenormals& operator=(const ScopedFlushDenormals&) = delete;

   private:
#ifdef GENLAB_HAVE_MXCSR
    static constexpr unsigned kFlushToZero = 0x8000;
    static constexpr unsigned kDenormalsAreZero = 0x0040;
    unsigned saved_ = 0;
#endif
};

}  // namespace genlab
