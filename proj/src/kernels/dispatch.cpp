#include <atomic>
#include <cstdlib>
#include <string>

#include "byzsim/errors.hpp"
#include "kernel_impl.hpp"

namespace byzsim::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(BYZSIM_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

const KernelSet* select(Backend backend) {
    switch (backend) {
        case Backend::scalar:
            return &scalar();
        case Backend::avx2:
            return avx2();
        case Backend::automatic:
            break;
    }
    if (const char* env = std::getenv("BYZSIM_KERNELS")) {
        const std::string choice(env);
        if (choice == "scalar") return &scalar();
        if (choice == "avx2" && avx2() != nullptr) return avx2();
    }
    const KernelSet* best = avx2();
    return best != nullptr ? best : &scalar();
}

std::atomic<const KernelSet*>& current() {
    static std::atomic<const KernelSet*> set{select(Backend::automatic)};
    return set;
}

}  // namespace

const KernelSet* avx2() {
#if defined(BYZSIM_HAVE_AVX2)
    static const bool supported = cpu_has_avx2();
    return supported ? &avx2_kernels() : nullptr;
#else
    return nullptr;
#endif
}

const KernelSet& active() { return *current().load(std::memory_order_acquire); }

void set_backend(Backend backend) {
    const KernelSet* chosen = select(backend);
    if (chosen == nullptr) throw InputError("kernel backend not available on this CPU/build");
    current().store(chosen, std::memory_order_release);
}

}  // namespace byzsim::kernels
