#pragma once
// Deterministic text embedding: character 3-grams of "^" + text + "$" are
// feature-hashed into 256 signed dimensions and L2-normalized. It is a
// reproducible stand-in for a sentence embedder: distinct strings land on
// distinct directions with high probability, identical strings collide
// exactly. The empty string maps to the zero vector (the one exemption from
// the unit-norm rule).

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aura/util.hpp"

namespace aura {

inline constexpr std::size_t kTextEmbedDim = 256;

inline std::vector<float> embed_text(std::string_view text) {
    std::vector<float> v(kTextEmbedDim, 0.0f);
    if (text.empty()) return v;
    std::string padded;
    padded.reserve(text.size() + 2);
    padded += '^';
    padded += text;
    padded += '$';
    std::string_view pv(padded);
    for (std::size_t i = 0; i + 3 <= pv.size(); ++i) {
        std::uint64_t h = fnv1a64(pv.substr(i, 3));
        v[h % kTextEmbedDim] += (h >> 63) ? 1.0f : -1.0f;
    }
    double norm = 0.0;
    for (float x : v) norm += (double)x * x;
    if (norm > 0.0) {
        float inv = (float)(1.0 / std::sqrt(norm));
        for (float& x : v) x *= inv;
    }
    return v;
}

inline double dot(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (double)a[i] * b[i];
    return s;
}

inline double l2_norm(std::span<const float> a) { return std::sqrt(dot(a, a)); }

inline double l2_distance(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = (double)a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

// Cosine similarity; zero vectors have no direction, so similarity is 0.
inline double cosine(std::span<const float> a, std::span<const float> b) {
    double na = l2_norm(a), nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / (na * nb);
}

}  // namespace aura
