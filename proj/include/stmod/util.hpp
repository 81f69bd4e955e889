#pragma once

#include <cstdint>
#include <gmpxx.h>
#include <json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

namespace stmod {

using Int = mpz_class;
using json = nlohmann::json;

// Raised when a documented invariant of the implementation itself fails.
struct internal_invariant_error : std::logic_error {
    using std::logic_error::logic_error;
};

// Raised when an enumeration or matrix exceeds a configured resource cap.
struct cap_exceeded_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised for operations unsupported over the given coefficient ring.
struct unsupported_operation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline Int factorial(long n) {
    Int r = 1;
    for (long i = 2; i <= n; ++i) r *= i;
    return r;
}

inline Int binomial(long n, long k) {
    if (k < 0 || k > n) return 0;
    Int r;
    mpz_bin_uiui(r.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
    return r;
}

inline long ipow(long b, long e) {
    long r = 1;
    for (long i = 0; i < e; ++i) r *= b;
    return r;
}

inline int perm_sign(std::vector<int> p) {
    int s = 1;
    for (size_t i = 0; i < p.size(); ++i)
        while (p[i] != static_cast<int>(i)) {
            std::swap(p[i], p[p[i]]);
            s = -s;
        }
    return s;
}

// FNV-1a over bytes; cache keys compare the full input as well, so collisions are harmless.
inline uint64_t fnv1a(const std::string& s, uint64_t h = 1469598103934665603ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string to_hex(uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[i] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

}  // namespace stmod
