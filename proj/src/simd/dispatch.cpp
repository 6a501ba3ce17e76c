#include "branchtrace/simd/kernels.hpp"

#include "branchtrace/errors.hpp"

#include <cstdlib>
#include <string>

namespace branchtrace::simd {

std::string_view to_string(Backend b) {
    switch (b) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
    case Backend::Neon: return "neon";
    }
    return "unknown";
}

bool available(Backend b) {
    switch (b) {
    case Backend::Scalar: return true;
    case Backend::Avx2:
#if defined(__x86_64__) || defined(__i386__)
        return detail::avx2_kernels() != nullptr && __builtin_cpu_supports("avx2");
#else
        return false;
#endif
    case Backend::Neon: return detail::neon_kernels() != nullptr;
    }
    return false;
}

const FluxKernels& kernels(Backend b) {
    if (!available(b))
        throw Error(ErrorKind::Unsupported, "SIMD backend '" + std::string(to_string(b)) + "' unavailable");
    switch (b) {
    case Backend::Avx2: return *detail::avx2_kernels();
    case Backend::Neon: return *detail::neon_kernels();
    case Backend::Scalar: break;
    }
    return detail::scalar_kernels();
}

std::vector<Backend> available_backends() {
    std::vector<Backend> out;
    for (Backend b : {Backend::Scalar, Backend::Avx2, Backend::Neon})
        if (available(b)) out.push_back(b);
    return out;
}

const FluxKernels& active() {
    static const FluxKernels& chosen = [&]() -> const FluxKernels& {
        const char* env = std::getenv("BRANCHTRACE_SIMD");
        if (env && std::string(env) == "scalar") return detail::scalar_kernels();
        if (available(Backend::Avx2)) return *detail::avx2_kernels();
        if (available(Backend::Neon)) return *detail::neon_kernels();
        return detail::scalar_kernels();
    }();
    return chosen;
}

} // namespace branchtrace::simd
